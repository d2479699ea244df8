#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include <sonarmark/corpus.hpp>
#include <sonarmark/error.hpp>
#include <sonarmark/model_io.hpp>
#include <sonarmark/pipeline.hpp>
#include <sonarmark/rng.hpp>
#include <sonarmark/wav.hpp>

using namespace sonarmark;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sonarmark_test_app_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

// Hand-built RIFF file, independent of write_wav.
void raw_wav(const fs::path& p, std::uint16_t format, std::uint16_t channels, std::uint16_t bits,
             const std::vector<std::int16_t>& samples, std::uint32_t rate = 450000) {
  std::string data;
  for (const auto s : samples) put(data, s);
  std::string body = "WAVE";
  body += "fmt ";
  put<std::uint32_t>(body, 16);
  put<std::uint16_t>(body, format);
  put<std::uint16_t>(body, channels);
  put<std::uint32_t>(body, rate);
  put<std::uint32_t>(body, rate * channels * bits / 8);
  put<std::uint16_t>(body, static_cast<std::uint16_t>(channels * bits / 8));
  put<std::uint16_t>(body, bits);
  body += "LIST";  // an unrelated chunk the reader must skip
  put<std::uint32_t>(body, 4);
  body += "INFO";
  body += "data";
  put<std::uint32_t>(body, static_cast<std::uint32_t>(data.size()));
  body += data;
  std::string file = "RIFF";
  put<std::uint32_t>(file, static_cast<std::uint32_t>(body.size()));
  file += body;
  std::ofstream(p, std::ios::binary) << file;
}

Waveform random_waveform(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<double> s(n);
  for (auto& v : s) v = rng.uniform(-1.0, 1.0);
  return Waveform(std::move(s));
}

SceneBatch small_batch(std::uint64_t seed, std::vector<Label> labels, int per_label) {
  SceneBatch b;
  b.seed = seed;
  for (const Label l : labels) {
    for (int i = 0; i < per_label; ++i) {
      SceneSpec s;
      s.label = l;
      s.range = 0.6 + 0.2 * (i % 8);
      s.off_axis_angle = (i % 3) * 5.0;
      b.scenes.push_back(s);
    }
  }
  return b;
}

}  // namespace

TEST_CASE("WAV round trips") {
  const auto dir = scratch("wav");
  std::vector<double> s(1024);
  Rng rng(1);
  for (auto& v : s) v = static_cast<double>(static_cast<std::int32_t>(rng.below(1ull << 32) - (1ull << 31))) / 2147483648.0;
  const Waveform w(s);
  write_wav(dir / "a.wav", w, WavEncoding::pcm32);
  const auto back = read_wav(dir / "a.wav");
  CHECK(back == w);
  CHECK(back.sample_rate() == 450000.0);

  const auto f = random_waveform(2, 777);
  write_wav(dir / "f.wav", f);
  const auto fb = read_wav(dir / "f.wav");
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(fb[i] == static_cast<double>(static_cast<float>(f[i])));

  write_wav(dir / "p16.wav", f, WavEncoding::pcm16);
  const auto p16 = load_recording(dir / "p16.wav");
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(p16[i] - f[i]) <= 1.0 / 32768.0);
}

TEST_CASE("hand-built WAV files") {
  const auto dir = scratch("rawwav");
  raw_wav(dir / "half.wav", 1, 1, 16, {16384, -32768, 0, 32767});
  const auto w = read_wav(dir / "half.wav");
  REQUIRE(w.size() == 4);
  CHECK(w[0] == 0.5);
  CHECK(w[1] == -1.0);
  CHECK(w[2] == 0.0);

  raw_wav(dir / "stereo.wav", 1, 2, 16, {1, 2, 3, 4});
  try {
    (void)read_wav(dir / "stereo.wav");
    FAIL("stereo accepted");
  } catch (const error& e) {
    CHECK(e.code() == errc::multichannel_rejected);
  }

  raw_wav(dir / "alaw.wav", 6, 1, 8, {1, 2});
  CHECK_THROWS_AS((void)read_wav(dir / "alaw.wav"), error);

  const std::string junk("RIFF\x10\0\0\0WAVEfmt \x20\0\0\0", 20);
  std::ofstream(dir / "junk.wav", std::ios::binary) << junk;
  try {
    (void)read_wav(dir / "junk.wav");
    FAIL("truncated file accepted");
  } catch (const error& e) {
    CHECK(e.code() == errc::corrupt_file);
  }
  std::ofstream(dir / "text.wav") << "hello";
  CHECK_THROWS_AS((void)read_wav(dir / "text.wav"), error);
  CHECK_THROWS_AS((void)read_wav(dir / "missing.wav"), error);
}

TEST_CASE("CSV recordings") {
  const auto dir = scratch("csv");
  std::ofstream(dir / "plain.csv") << "0.5\n-0.25\n1e-3\n";
  const auto plain = load_recording(dir / "plain.csv");
  CHECK(plain == Waveform({0.5, -0.25, 1e-3}));
  CHECK(plain.sample_rate() == 450000.0);

  std::ofstream(dir / "rate.csv") << "sample_rate=250000\n1\n2\n";
  const auto rated = load_recording(dir / "rate.csv");
  CHECK(rated.sample_rate() == 250000.0);
  CHECK(rated.size() == 2);

  std::ofstream(dir / "named.csv") << "amplitude\n1\n2\n";
  CHECK(load_recording(dir / "named.csv").sample_rate() == 450000.0);

  std::ofstream(dir / "two.csv") << "1,2\n3,4\n";
  try {
    (void)load_recording(dir / "two.csv");
    FAIL("two columns accepted");
  } catch (const error& e) {
    CHECK(e.code() == errc::multichannel_rejected);
  }
  std::ofstream(dir / "bad.csv") << "1\nfoo\n";
  CHECK_THROWS_AS((void)load_recording(dir / "bad.csv"), error);
  std::ofstream(dir / "x.flac") << "fLaC";
  try {
    (void)load_recording(dir / "x.flac");
    FAIL("flac accepted");
  } catch (const error& e) {
    CHECK(e.code() == errc::unsupported_format);
  }
}

TEST_CASE("default corpus template") {
  const auto b = default_corpus_template(42);
  CHECK(b.scenes.size() == 1140);
  std::size_t none = 0;
  double lo = 10.0, hi = 0.0;
  for (const auto& s : b.scenes) {
    none += s.label == Label::None;
    lo = std::min(lo, s.range);
    hi = std::max(hi, s.range);
  }
  CHECK(none == 228);
  CHECK(lo == doctest::Approx(0.6));
  CHECK(hi == doctest::Approx(4.2));
  CHECK(echo_scene(b, 0).seed != echo_scene(b, 1).seed);
  CHECK(echo_scene(b, 7).seed == echo_scene(default_corpus_template(42), 7).seed);
  CHECK(echo_scene(b, 7).seed != echo_scene(default_corpus_template(43), 7).seed);
}

TEST_CASE("scene batch JSON") {
  const auto doc = nlohmann::json::parse(R"({
    "seed": 5, "snr_db": 15, "chirp": {"f_start": 170000, "f_end": 40000, "duration": 0.002},
    "model": {"depth_ratio": 0.35, "taper": 0.1},
    "scenes": [{"label": "R48", "range": 1.5, "off_axis_angle": 10},
               {"label": "None", "range": 2.0, "clutter_count": 0, "environment_tag": "lab"}]})");
  const auto b = parse_scene_batch(doc);
  REQUIRE(b.scenes.size() == 2);
  CHECK(b.seed == 5);
  CHECK(b.chirp.f_start == 170000.0);
  CHECK(b.chirp.duration == 0.002);
  CHECK(b.depth_ratio == 0.35);
  CHECK(b.scenes[0].snr_db == 15.0);
  CHECK(b.scenes[1].clutter_count == 0);
  CHECK(b.scenes[1].environment_tag == "lab");
  const auto scene = echo_scene(b, 0);
  REQUIRE(scene.landmark);
  CHECK(scene.landmark->aperture_radius == 0.048);
  CHECK(scene.landmark->depth_ratio == 0.35);
  CHECK(!echo_scene(b, 1).landmark);

  const auto templated = parse_scene_batch(nlohmann::json::parse(R"({"template": "default", "seed": 1,
    "scenes": [{"label": "R35", "range": 1.0}]})"));
  CHECK(templated.scenes.size() == 1141);

  for (const char* bad : {R"({"scenes": []})", R"({"template": "other"})", R"({"scenes": [{"label": "R99"}]})",
                          R"({"scenes": [{"label": "R35", "range": 50}]})", R"([1, 2])"}) {
    CHECK_THROWS_AS((void)parse_scene_batch(nlohmann::json::parse(bad)), error);
  }
}

TEST_CASE("corpus generation and manifests") {
  const auto dir = scratch("corpus");
  auto batch = small_batch(11, {Label::None, Label::R35, Label::R70}, 1);
  batch.scenes[0].clutter_count = 4;
  const auto m = generate_corpus(batch, dir / "a");
  REQUIRE(m.entries.size() == 3);
  for (const auto& e : m.entries) CHECK(fs::exists(m.resolve(e)));
  CHECK(fs::exists(dir / "a" / "manifest.json"));

  const auto loaded = load_manifest(dir / "a" / "manifest.json");
  REQUIRE(loaded.entries.size() == 3);
  CHECK(loaded.entries[1].label == Label::R35);
  CHECK(loaded.entries[2].range_m == m.entries[2].range_m);

  // Same seed, byte-identical corpus.
  (void)generate_corpus(batch, dir / "b", execution::serial);
  CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));
  for (const auto& e : m.entries) CHECK(slurp(dir / "a" / e.audio_path) == slurp(dir / "b" / e.audio_path));

  // None scenes hold clutter but nothing inside the landmark window.
  auto quiet = batch;
  quiet.scenes[0].snr_db = std::numeric_limits<double>::infinity();
  const auto rec = simulate_scene(quiet, 0);
  const auto window = crop_window(quiet.scenes[0].range, rec.sample_rate(), CropSpec{});
  double inside = 0.0, total = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    total += std::abs(rec[i]);
    if (static_cast<std::int64_t>(i) >= window.first && static_cast<std::int64_t>(i) <= window.last) inside += std::abs(rec[i]);
  }
  CHECK(total > 0.0);
  CHECK(inside == 0.0);

  std::ofstream(dir / "bad_range.json") << R"({"format_version": 1, "entries": [{"audio_path": "a/rec_00000.wav", "label": "R35", "range_m": 0.1}]})";
  CHECK_THROWS_AS((void)load_manifest(dir / "bad_range.json"), error);
  std::ofstream(dir / "missing.json") << R"({"format_version": 1, "entries": [{"audio_path": "nope.wav", "label": "R35", "range_m": 1.0}]})";
  CHECK_THROWS_AS((void)load_manifest(dir / "missing.json"), error);
  std::ofstream(dir / "label.json") << R"({"format_version": 1, "entries": [{"audio_path": "a/rec_00000.wav", "label": "big", "range_m": 1.0}]})";
  CHECK_THROWS_AS((void)load_manifest(dir / "label.json"), error);
}

TEST_CASE("model artifact persistence") {
  const auto dir = scratch("model");
  Rng rng(4);
  ModelArtifact art;
  art.ensemble.class_list = {0, 1, 2};
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      LinearModel m;
      m.classes = {a, b};
      for (int k = 0; k < 20; ++k) m.weights.push_back(rng.normal() * 1e3 / (k + 1));
      m.bias = rng.normal() / 3.0;
      art.ensemble.models.push_back(m);
    }
  }
  save_model(dir / "m.json", art);
  const auto back = load_model(dir / "m.json");
  CHECK(back.ensemble.class_list == art.ensemble.class_list);
  REQUIRE(back.ensemble.models.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.ensemble.models[i].weights == art.ensemble.models[i].weights);
    CHECK(back.ensemble.models[i].bias == art.ensemble.models[i].bias);
    CHECK(back.ensemble.models[i].classes == art.ensemble.models[i].classes);
  }
  CHECK(serialize_model(back) == serialize_model(art));
  CHECK_NOTHROW(require_compatible(back));

  const auto doc = nlohmann::json::parse(slurp(dir / "m.json"));
  for (const char* key : {"format_version", "class_list", "bin_spec", "crop_spec", "models", "pipeline_version"}) {
    CHECK(doc.contains(key));
  }
  CHECK(doc["models"][0]["class_a"] == "None");
  CHECK(doc["models"][0]["weights"].size() == 20);

  auto stale = art;
  stale.pipeline_version = "sonarmark-features-0";
  try {
    require_compatible(stale);
    FAIL("stale model accepted");
  } catch (const error& e) {
    CHECK(e.code() == errc::version_mismatch);
  }
  auto broken = doc;
  broken["models"].erase(0);
  CHECK_THROWS_AS((void)model_from_json(broken), error);
  broken = doc;
  broken["models"][0]["weights"].erase(0);
  CHECK_THROWS_AS((void)model_from_json(broken), error);
  broken = doc;
  broken["format_version"] = 99;
  CHECK_THROWS_AS((void)model_from_json(broken), error);
}

TEST_CASE("end-to-end pipeline") {
  const auto dir = scratch("pipeline");
  const auto batch = small_batch(3, {Label::None, Label::R35, Label::R70}, 8);
  const auto manifest = generate_corpus(batch, dir / "corpus");
  PipelineConfig cfg;
  cfg.cv.folds = 4;
  cfg.cv.seed = 1;
  const auto outcome = run_pipeline(manifest, cfg, dir / "run1");
  CHECK(outcome.samples == 24);
  CHECK(outcome.reports.size() == 3);
  CHECK(outcome.cv.folds.size() == 4);
  for (const char* f : {"model.json", "report.txt", "features.csv", "confusion_overall.csv", "confusion_detection.csv",
                        "confusion_classification.csv", "folds/fold_00.csv", "folds/fold_03.csv"}) {
    CHECK(fs::exists(dir / "run1" / f));
  }
  const auto report = slurp(dir / "run1" / "report.txt");
  for (const char* word : {"detection", "classification", "overall"}) CHECK(report.find(word) != std::string::npos);

  (void)run_pipeline(manifest, cfg, dir / "run2");
  CHECK(slurp(dir / "run1" / "model.json") == slurp(dir / "run2" / "model.json"));
  CHECK(report == slurp(dir / "run2" / "report.txt"));

  const auto folds = read_fold_directory(dir / "run1" / "folds");
  CHECK(folds == outcome.cv.folds);
  CHECK(render_report(folds).find("overall") != std::string::npos);

  // classify on a training recording reproduces the stored decisions after save/load.
  const auto model = load_model(dir / "run1" / "model.json");
  const auto features = featurize_manifest(manifest, model.features);
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto audio = load_recording(manifest.resolve(manifest.entries[i]));
    const auto c = classify_at_range(model, audio, manifest.entries[i].range_m);
    CHECK(c.prediction.decisions == predict_ovo(outcome.artifact.ensemble, features[i].values).decisions);
  }
  const auto audio = load_recording(manifest.resolve(manifest.entries[9]));
  const auto scan = classify_scan(model, audio);
  CHECK(scan.window_start % 256 == 0);
  CHECK_THROWS_AS((void)classify_scan(model, audio, 0), error);

  auto one_class = small_batch(3, {Label::R48}, 3);
  const auto single = generate_corpus(one_class, dir / "single");
  try {
    (void)run_pipeline(single, cfg, dir / "run3");
    FAIL("single class accepted");
  } catch (const error& e) {
    CHECK(std::string(e.what()).find("need >= 2 classes") != std::string::npos);
  }
}
