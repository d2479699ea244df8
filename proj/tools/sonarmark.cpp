// Command-line front end: simulate -> featurize -> train -> evaluate / classify / report.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "sonarmark/corpus.hpp"
#include "sonarmark/error.hpp"
#include "sonarmark/pipeline.hpp"
#include "sonarmark/wav.hpp"

namespace fs = std::filesystem;
using namespace sonarmark;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitConvergence = 4;

int exit_code_for(errc code) {
  switch (code) {
    case errc::invalid_config:
    case errc::invalid_spec:
    case errc::invalid_scene:
      return kExitUsage;
    default:
      return kExitData;
  }
}

/// SONAR_SEED, when set, replaces every seed given on the command line or in config files.
std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("SONAR_SEED");
  if (!raw || !*raw) return std::nullopt;
  try {
    std::size_t used = 0;
    const auto value = std::stoull(raw, &used);
    if (raw[used] != '\0') throw std::invalid_argument(raw);
    return value;
  } catch (const std::exception&) {
    throw error(errc::invalid_config, std::string("SONAR_SEED is not an unsigned integer: ") + raw);
  }
}

std::vector<FeatureVector> read_features(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::io_failure, "cannot open " + path.string());
  return read_feature_csv(in);
}

void print_classification(const Classification& c, const OvOEnsemble& ensemble) {
  std::cout << fmt::format("class: {}\nwindow_start: {}\nrange_m: {:.4f}\nmargin: {:.6g}\n", class_name(c.label),
                           c.window_start, c.range_m, c.margin);
  std::cout << "votes:";
  for (std::size_t i = 0; i < ensemble.class_list.size(); ++i) {
    std::cout << fmt::format(" {}={}", class_name(ensemble.class_list[i]), c.prediction.votes[i]);
  }
  std::cout << "\ndecisions:\n";
  for (std::size_t m = 0; m < ensemble.models.size(); ++m) {
    const auto& pair = ensemble.models[m].classes;
    std::cout << fmt::format("  {} vs {}: {:.17g}\n", class_name(pair.first), class_name(pair.second),
                             c.prediction.decisions[m]);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dish-landmark sonar detection and classification with linear one-vs-one SVMs"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Synthesize a WAV corpus and manifest from a scene list");
  std::string scenes_path;
  std::string sim_out;
  std::optional<std::uint64_t> sim_seed;
  simulate->add_option("--scenes", scenes_path, "Scene-list JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim_out, "Output directory")->required();
  simulate->add_option("--seed", sim_seed, "Global corpus seed (overrides the file)");

  // featurize
  auto* featurize = app.add_subcommand("featurize", "Crop, window, filter and bin every manifest recording");
  std::string manifest_path;
  std::string features_out = "features.csv";
  featurize->add_option("--manifest", manifest_path, "Recording manifest JSON")->required()->check(CLI::ExistingFile);
  featurize->add_option("--out", features_out, "Feature CSV to write");

  // train
  auto* train = app.add_subcommand("train", "Cross-validate and fit the one-vs-one SVM ensemble");
  std::string train_features;
  std::string model_out = "model.json";
  std::string report_dir;
  std::size_t cv_folds = 20;
  double c_value = 1.0;
  double tolerance = 1e-4;
  std::size_t max_passes = TrainConfig{}.max_passes;
  std::uint64_t train_seed = 0;
  std::string cv_scheme = "kfold";
  bool unstratified = false;
  train->add_option("--features", train_features, "Feature CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--cv-folds", cv_folds, "Number of folds (or repeats)")->capture_default_str();
  train->add_option("--c", c_value, "Soft-margin regularization C")->capture_default_str();
  train->add_option("--tolerance", tolerance, "KKT tolerance")->capture_default_str();
  train->add_option("--max-passes", max_passes, "Solver iteration cap, in multiples of the sample count")
      ->capture_default_str();
  train->add_option("--seed", train_seed, "Fold-assignment and solver seed")->capture_default_str();
  train->add_option("--cv-scheme", cv_scheme, "kfold or repeated")
      ->check(CLI::IsMember({"kfold", "repeated"}))
      ->capture_default_str();
  train->add_flag("--unstratified", unstratified, "Disable class stratification");
  train->add_option("--out", model_out, "Model JSON to write")->capture_default_str();
  train->add_option("--report-dir", report_dir, "Where fold and report files go (default: next to the model)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a trained model on a feature CSV");
  std::string eval_model;
  std::string eval_features;
  evaluate->add_option("--model", eval_model, "Model JSON")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--features", eval_features, "Feature CSV")->required()->check(CLI::ExistingFile);

  // classify
  auto* classify = app.add_subcommand("classify", "Classify one recording");
  std::string cls_model;
  std::string cls_audio;
  std::optional<double> cls_range;
  bool cls_scan = false;
  std::size_t cls_stride = 256;
  classify->add_option("--model", cls_model, "Model JSON")->required()->check(CLI::ExistingFile);
  classify->add_option("--audio", cls_audio, "WAV or CSV recording")->required()->check(CLI::ExistingFile);
  auto* range_opt = classify->add_option("--range", cls_range, "Known landmark range in metres");
  auto* scan_opt = classify->add_flag("--scan", cls_scan, "Slide the crop window across the recording");
  classify->add_option("--stride", cls_stride, "Scan stride in samples")->capture_default_str();
  range_opt->excludes(scan_opt);
  scan_opt->excludes(range_opt);

  // report
  auto* report = app.add_subcommand("report", "Aggregate fold confusion matrices into a text report");
  std::string folds_dir;
  std::string report_out = "report.txt";
  report->add_option("--folds", folds_dir, "Directory of fold_NN.csv files")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", report_out, "Report file")->capture_default_str();

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "featurize + train in one go, writing everything to --out");
  std::string pipe_manifest;
  std::string pipe_out;
  pipeline->add_option("--manifest", pipe_manifest, "Recording manifest JSON")->required()->check(CLI::ExistingFile);
  pipeline->add_option("--out", pipe_out, "Output directory")->required();
  pipeline->add_option("--cv-folds", cv_folds, "Number of folds")->capture_default_str();
  pipeline->add_option("--c", c_value, "Soft-margin regularization C")->capture_default_str();
  pipeline->add_option("--seed", train_seed, "Fold-assignment and solver seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const auto seed_override = env_seed();

    auto pipeline_config = [&] {
      PipelineConfig cfg;
      cfg.train.c = c_value;
      cfg.train.tolerance = tolerance;
      cfg.train.max_passes = max_passes;
      cfg.train.seed = seed_override.value_or(train_seed);
      cfg.cv.folds = cv_folds;
      cfg.cv.seed = seed_override.value_or(train_seed);
      cfg.cv.stratified = !unstratified;
      cfg.cv.scheme = cv_scheme == "repeated" ? CvScheme::repeated_holdout : CvScheme::k_fold;
      return cfg;
    };

    if (*simulate) {
      SceneBatch batch = load_scene_batch(scenes_path);
      if (sim_seed) batch.seed = *sim_seed;
      if (seed_override) batch.seed = *seed_override;
      const RecordingManifest manifest = generate_corpus(batch, sim_out);
      std::cout << fmt::format("wrote {} recordings and {}\n", manifest.entries.size(),
                               (fs::path(sim_out) / "manifest.json").string());
      return kExitOk;
    }

    if (*featurize) {
      const RecordingManifest manifest = load_manifest(manifest_path);
      const auto features = featurize_manifest(manifest, FeatureConfig{});
      std::ofstream out(features_out, std::ios::binary | std::ios::trunc);
      if (!out) throw error(errc::io_failure, "cannot write " + features_out);
      write_feature_csv(out, features);
      std::cout << fmt::format("wrote {} feature rows to {}\n", features.size(), features_out);
      return kExitOk;
    }

    if (*train) {
      const auto features = read_features(train_features);
      const PipelineConfig cfg = pipeline_config();
      const TrainingOutcome outcome = train_and_evaluate(features, cfg);
      const fs::path model_path(model_out);
      const fs::path dir = report_dir.empty() ? (model_path.has_parent_path() ? model_path.parent_path() : fs::path("."))
                                              : fs::path(report_dir);
      write_outputs(outcome, model_path, dir);
      std::cout << render_report(outcome);
      if (!outcome.converged) {
        std::cerr << "warning: SVM solver hit its iteration cap before meeting the KKT tolerance\n";
        return kExitConvergence;
      }
      return kExitOk;
    }

    if (*evaluate) {
      const ModelArtifact model = load_model(eval_model);
      require_compatible(model);
      const LabeledDataset data = to_dataset(read_features(eval_features));
      std::vector<int> predicted;
      for (std::size_t i = 0; i < data.x.rows(); ++i) predicted.push_back(predict_ovo(model.ensemble, data.x.row(i)).label);
      const ConfusionMatrix m = confusion(data.y, predicted, model.ensemble.class_list);
      std::cout << fmt::format("samples: {}\n", m.total());
      if (m.contains(class_id(Label::None)) && m.size() >= 2) {
        std::cout << fmt::format("detection accuracy: {:.4f}\n", accuracy(collapse_detection(m)));
        std::cout << fmt::format("classification accuracy: {:.4f}\n", classification_accuracy(m));
      }
      std::cout << fmt::format("overall accuracy: {:.4f}\n\n", accuracy(m));
      std::cout << render_grid(m, "confusion");
      return kExitOk;
    }

    if (*classify) {
      if (!cls_range && !cls_scan) throw error(errc::invalid_config, "classify needs --range or --scan");
      const ModelArtifact model = load_model(cls_model);
      const Waveform audio = load_recording(cls_audio);
      const Classification c = cls_scan ? classify_scan(model, audio, cls_stride)
                                        : classify_at_range(model, audio, *cls_range);
      print_classification(c, model.ensemble);
      return kExitOk;
    }

    if (*report) {
      const auto folds = read_fold_directory(folds_dir);
      const std::string text = render_report(folds);
      std::ofstream out(report_out, std::ios::binary | std::ios::trunc);
      if (!out) throw error(errc::io_failure, "cannot write " + report_out);
      out << text;
      std::cout << text;
      return kExitOk;
    }

    if (*pipeline) {
      const RecordingManifest manifest = load_manifest(pipe_manifest);
      const TrainingOutcome outcome = run_pipeline(manifest, pipeline_config(), pipe_out);
      std::cout << render_report(outcome);
      return outcome.converged ? kExitOk : kExitConvergence;
    }
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
