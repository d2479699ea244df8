#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "sonarmark_test_cli";

int run(const std::string& args, const std::string& env = {}) {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" SONARMARK_CLI_PATH "\" " + args + " > \"" +
                          (kDir / "stdout.txt").string() + "\" 2> \"" + (kDir / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

struct Workspace {
  Workspace() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
    std::ofstream scenes(kDir / "scenes.json");
    scenes << R"({"seed": 9, "scenes": [)";
    const char* labels[] = {"None", "R35", "R70"};
    for (int l = 0; l < 3; ++l) {
      for (int i = 0; i < 6; ++i) {
        scenes << (l || i ? "," : "") << R"({"label": ")" << labels[l] << R"(", "range": )" << 0.8 + 0.3 * i << "}";
      }
    }
    scenes << "]}";
  }
};

}  // namespace

TEST_CASE("full CLI workflow") {
  Workspace ws;
  CHECK(run("simulate --scenes " + q(kDir / "scenes.json") + " --out " + q(kDir / "corpus")) == 0);
  CHECK(fs::exists(kDir / "corpus" / "manifest.json"));
  CHECK(run("featurize --manifest " + q(kDir / "corpus" / "manifest.json") + " --out " + q(kDir / "features.csv")) == 0);
  CHECK(run("train --features " + q(kDir / "features.csv") + " --cv-folds 3 --out " + q(kDir / "out" / "model.json")) == 0);
  CHECK(slurp(kDir / "stdout.txt").find("detection") != std::string::npos);
  CHECK(fs::exists(kDir / "out" / "folds" / "fold_02.csv"));

  CHECK(run("evaluate --model " + q(kDir / "out" / "model.json") + " --features " + q(kDir / "features.csv")) == 0);
  CHECK(slurp(kDir / "stdout.txt").find("overall accuracy") != std::string::npos);

  const auto wav = kDir / "corpus" / "rec_00007.wav";
  CHECK(run("classify --model " + q(kDir / "out" / "model.json") + " --audio " + q(wav) + " --range 1.1") == 0);
  CHECK(slurp(kDir / "stdout.txt").find("class: ") == 0);
  CHECK(run("classify --model " + q(kDir / "out" / "model.json") + " --audio " + q(wav) + " --scan") == 0);
  CHECK(slurp(kDir / "stdout.txt").find("margin: ") != std::string::npos);

  CHECK(run("report --folds " + q(kDir / "out" / "folds") + " --out " + q(kDir / "report.txt")) == 0);
  CHECK(slurp(kDir / "report.txt").find("overall") != std::string::npos);

  CHECK(run("pipeline --manifest " + q(kDir / "corpus" / "manifest.json") + " --out " + q(kDir / "pipe") +
            " --cv-folds 3") == 0);
  CHECK(slurp(kDir / "pipe" / "model.json") == slurp(kDir / "out" / "model.json"));
}

TEST_CASE("exit codes") {
  Workspace ws;
  CHECK(run("") == 2);
  CHECK(run("bogus") == 2);
  CHECK(run("train --features " + q(kDir / "nope.csv")) == 2);
  REQUIRE(run("simulate --scenes " + q(kDir / "scenes.json") + " --out " + q(kDir / "corpus")) == 0);
  REQUIRE(run("featurize --manifest " + q(kDir / "corpus" / "manifest.json") + " --out " + q(kDir / "f.csv")) == 0);
  CHECK(run("train --features " + q(kDir / "f.csv") + " --cv-scheme sideways") == 2);
  CHECK(run("train --features " + q(kDir / "f.csv") + " --cv-folds 3 --c -1 --out " + q(kDir / "m.json")) == 2);

  std::ofstream(kDir / "broken.csv") << "f00,label\nxyz,R35\n";
  CHECK(run("train --features " + q(kDir / "broken.csv")) == 3);
  CHECK(run("train --features " + q(kDir / "f.csv") + " --cv-folds 50 --out " + q(kDir / "m.json")) == 3);

  CHECK(run("train --features " + q(kDir / "f.csv") + " --cv-folds 3 --max-passes 0 --out " + q(kDir / "slow" / "m.json")) ==
        4);
  CHECK(fs::exists(kDir / "slow" / "m.json"));

  REQUIRE(run("train --features " + q(kDir / "f.csv") + " --cv-folds 3 --out " + q(kDir / "m.json")) == 0);
  const auto wav = q(kDir / "corpus" / "rec_00001.wav");
  CHECK(run("classify --model " + q(kDir / "m.json") + " --audio " + wav) == 2);
  CHECK(run("classify --model " + q(kDir / "m.json") + " --audio " + wav + " --range 1 --scan") == 2);
  CHECK(run("classify --model " + q(kDir / "m.json") + " --audio " + wav + " --range 9.5") == 3);

  std::string stale = slurp(kDir / "m.json");
  stale.replace(stale.find("sonarmark-features-1"), 20, "sonarmark-features-0");
  std::ofstream(kDir / "stale.json") << stale;
  CHECK(run("classify --model " + q(kDir / "stale.json") + " --audio " + wav + " --range 1") == 3);
  CHECK(slurp(kDir / "stderr.txt").find("pipeline") != std::string::npos);

  CHECK(run("simulate --scenes " + q(kDir / "scenes.json") + " --out " + q(kDir / "x"), "SONAR_SEED=abc") == 2);
}

TEST_CASE("SONAR_SEED overrides seeds") {
  Workspace ws;
  REQUIRE(run("simulate --scenes " + q(kDir / "scenes.json") + " --seed 1 --out " + q(kDir / "a"), "SONAR_SEED=77") == 0);
  REQUIRE(run("simulate --scenes " + q(kDir / "scenes.json") + " --seed 2 --out " + q(kDir / "b"), "SONAR_SEED=77") == 0);
  REQUIRE(run("simulate --scenes " + q(kDir / "scenes.json") + " --seed 2 --out " + q(kDir / "c")) == 0);
  CHECK(slurp(kDir / "a" / "rec_00003.wav") == slurp(kDir / "b" / "rec_00003.wav"));
  CHECK(slurp(kDir / "c" / "rec_00003.wav") != slurp(kDir / "b" / "rec_00003.wav"));
}

TEST_CASE("bundled default scene file parses") {
  Workspace ws;
  std::ifstream in(SONARMARK_DATA_DIR "/default_corpus.json");
  CHECK(in.good());
}
