#include "sonarmark/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "sonarmark/error.hpp"
#include "sonarmark/wav.hpp"

namespace sonarmark {

namespace {

/// Re-throws library errors with the pipeline stage prefixed to the message.
template <typename F>
auto staged(const char* stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const error& e) {
    throw error(e.code(), std::string(stage) + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error(errc::io_failure, "cannot write " + path.string());
  out << text;
}

std::string format_ratio(double v) { return std::isnan(v) ? "   n/a" : fmt::format("{:6.4f}", v); }

double winner_margin(const OvOEnsemble& ensemble, const OvOPrediction& p) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < ensemble.models.size(); ++m) {
    const auto& classes = ensemble.models[m].classes;
    if (classes.first == p.label) margin = std::min(margin, p.decisions[m]);
    if (classes.second == p.label) margin = std::min(margin, -p.decisions[m]);
  }
  return margin;
}

}  // namespace

LabeledDataset to_dataset(std::span<const FeatureVector> features) {
  LabeledDataset data;
  for (const FeatureVector& fv : features) {
    if (!fv.label) throw error(errc::too_few_samples, "training rows must carry a label");
    data.x.append_row(fv.values);
    data.y.push_back(class_id(*fv.label));
  }
  auto classes = data.y;
  std::sort(classes.begin(), classes.end());
  if (std::unique(classes.begin(), classes.end()) - classes.begin() < 2) {
    throw error(errc::too_few_samples, "need >= 2 classes");
  }
  return data;
}

std::vector<FeatureVector> featurize_manifest(const RecordingManifest& manifest, const FeatureConfig& config,
                                              execution policy) {
  std::vector<FeatureVector> out(manifest.entries.size());
  for_each_index(policy, manifest.entries.size(), [&](std::size_t i) {
    const ManifestEntry& entry = manifest.entries[i];
    const auto path = manifest.resolve(entry);
    try {
      const Waveform audio = load_recording(path);
      const Waveform crop = crop_to_range(audio, entry.range_m, config.crop, config.speed_of_sound);
      out[i] = extract_features(crop, config);
      out[i].label = entry.label;
    } catch (const error& e) {
      throw error(e.code(), path.string() + ": " + e.what());
    }
  });
  return out;
}

TrainingOutcome train_and_evaluate(std::span<const FeatureVector> features, const PipelineConfig& config,
                                   double sample_rate) {
  TrainingOutcome outcome;
  outcome.config = config;
  const LabeledDataset data = staged("dataset", [&] { return to_dataset(features); });
  outcome.samples = data.y.size();
  outcome.cv = staged("cross-validate", [&] { return cross_validate(data.x, data.y, config.cv, config.train, config.policy); });
  outcome.reports = staged("aggregate", [&] { return aggregate_folds(outcome.cv.folds); });
  outcome.artifact.ensemble = staged("train", [&] { return train_ovo(data.x, data.y, config.train, config.policy); });
  outcome.artifact.features = config.features;
  outcome.artifact.sample_rate = sample_rate;
  outcome.converged = outcome.cv.converged && outcome.artifact.ensemble.converged;
  return outcome;
}

std::string render_report(std::span<const ConfusionMatrix> folds, const std::vector<std::string>& preamble) {
  const auto reports = aggregate_folds(folds);
  const ConfusionMatrix pooled = sum_matrices(folds);
  std::string out = "sonarmark cross-validation report\n";
  for (const auto& line : preamble) out += line + '\n';
  out += fmt::format("folds: {}  samples: {}\n\n", folds.size(), pooled.total());
  out += fmt::format("{:<16}{:>8}{:>8}{:>8}{:>8}\n", "task", "mean", "std", "min", "max");
  for (const MetricReport& r : reports) {
    const auto [lo, hi] = std::minmax_element(r.fold_accuracies.begin(), r.fold_accuracies.end());
    out += fmt::format("{:<16}{:>8.4f}{:>8.4f}{:>8.4f}{:>8.4f}\n", to_string(r.task), r.accuracy_mean,
                       r.accuracy_std, *lo, *hi);
  }
  const ConfusionMatrix block = landmark_submatrix(pooled);
  if (block.total() > 0) {
    out += fmt::format("size accuracy among detected landmarks (pooled, 4-class block): {:.4f}\n", accuracy(block));
  }
  out += "\nper-class recall (pooled)\n";
  for (const MetricReport& r : reports) {
    out += fmt::format("  {:<14}", to_string(r.task));
    for (std::size_t i = 0; i < r.class_list.size(); ++i) {
      out += fmt::format(" {}={}", class_name(r.class_list[i]), format_ratio(r.per_class_recall[i]));
    }
    out += '\n';
  }
  out += "\nfold accuracies (detection / classification / overall)\n";
  for (std::size_t f = 0; f < folds.size(); ++f) {
    out += fmt::format("  fold {:02d}: {:.4f} {:.4f} {:.4f}\n", f, reports[0].fold_accuracies[f],
                       reports[1].fold_accuracies[f], reports[2].fold_accuracies[f]);
  }
  out += '\n' + render_grid(collapse_detection(pooled), "detection confusion (pooled over folds)");
  out += '\n' + render_grid(pooled, "5-class confusion (pooled over folds)");
  if (block.total() > 0) out += '\n' + render_grid(block, "4-class landmark block (pooled over folds)");
  return out;
}

std::string render_report(const TrainingOutcome& outcome) {
  const PipelineConfig& c = outcome.config;
  std::vector<std::string> preamble{
      fmt::format("pipeline: {}", kPipelineVersion),
      fmt::format("cv: {} {} x{} seed={}", c.cv.stratified ? "stratified" : "unstratified",
                  c.cv.scheme == CvScheme::k_fold ? "k-fold" : "repeated-holdout", c.cv.folds, c.cv.seed),
      fmt::format("solver: C={} tolerance={} seed={} converged={}", c.train.c, c.train.tolerance, c.train.seed,
                  outcome.converged ? "yes" : "no")};
  return render_report(outcome.cv.folds, preamble);
}

void write_outputs(const TrainingOutcome& outcome, const std::filesystem::path& model_path,
                   const std::filesystem::path& report_dir) {
  std::error_code ec;
  std::filesystem::create_directories(report_dir / "folds", ec);
  if (ec) throw error(errc::io_failure, "cannot create " + report_dir.string() + ": " + ec.message());
  if (model_path.has_parent_path()) std::filesystem::create_directories(model_path.parent_path(), ec);
  save_model(model_path, outcome.artifact);

  auto write_matrix = [](const std::filesystem::path& path, const ConfusionMatrix& m) {
    std::ostringstream ss;
    write_confusion_csv(ss, m);
    write_text(path, ss.str());
  };
  for (std::size_t f = 0; f < outcome.cv.folds.size(); ++f) {
    write_matrix(report_dir / "folds" / fmt::format("fold_{:02d}.csv", f), outcome.cv.folds[f]);
  }
  const ConfusionMatrix pooled = sum_matrices(outcome.cv.folds);
  write_matrix(report_dir / "confusion_overall.csv", pooled);
  write_matrix(report_dir / "confusion_detection.csv", collapse_detection(pooled));
  write_matrix(report_dir / "confusion_classification.csv", landmark_submatrix(pooled));
  write_text(report_dir / "report.txt", render_report(outcome));
}

std::vector<ConfusionMatrix> read_fold_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw error(errc::io_failure, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ConfusionMatrix> folds;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw error(errc::io_failure, "cannot open " + file.string());
    try {
      folds.push_back(read_confusion_csv(in));
    } catch (const error& e) {
      throw error(e.code(), file.string() + ": " + e.what());
    }
  }
  if (folds.empty()) throw error(errc::too_few_folds, "no fold CSV files in " + dir.string());
  return folds;
}

TrainingOutcome run_pipeline(const RecordingManifest& manifest, const PipelineConfig& config,
                             const std::filesystem::path& out_dir) {
  if (manifest.entries.empty()) throw error(errc::too_few_samples, "manifest is empty");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw error(errc::io_failure, "cannot create " + out_dir.string() + ": " + ec.message());

  const auto features = staged("featurize", [&] { return featurize_manifest(manifest, config.features, config.policy); });
  {
    std::ostringstream ss;
    write_feature_csv(ss, features);
    write_text(out_dir / "features.csv", ss.str());
  }
  const double fs = staged("featurize", [&] { return load_recording(manifest.resolve(manifest.entries.front())).sample_rate(); });
  TrainingOutcome outcome = train_and_evaluate(features, config, fs);
  staged("write", [&] {
    write_outputs(outcome, out_dir / "model.json", out_dir);
    return 0;
  });
  return outcome;
}

Classification classify_at_range(const ModelArtifact& model, const Waveform& audio, double range_m) {
  require_compatible(model);
  const FeatureConfig& cfg = model.features;
  const SampleWindow window = crop_window(range_m, audio.sample_rate(), cfg.crop, cfg.speed_of_sound);
  const Waveform crop = crop_at(audio, window.first, cfg.crop.crop_length);
  Classification out;
  out.prediction = predict_ovo(model.ensemble, extract_features(crop, cfg).values);
  out.label = out.prediction.label;
  out.window_start = window.first;
  out.range_m = range_m;
  out.margin = winner_margin(model.ensemble, out.prediction);
  return out;
}

Classification classify_scan(const ModelArtifact& model, const Waveform& audio, std::size_t stride) {
  require_compatible(model);
  if (stride == 0) throw error(errc::invalid_config, "scan stride must be positive");
  const FeatureConfig& cfg = model.features;
  const std::size_t length = cfg.crop.crop_length;
  if (audio.size() < length) throw error(errc::out_of_bounds, "recording shorter than one crop window");

  std::vector<std::int64_t> starts;
  for (std::size_t s = 0; s + length <= audio.size(); s += stride) starts.push_back(static_cast<std::int64_t>(s));
  std::vector<Classification> windows(starts.size());
  for_each_index(execution::parallel, starts.size(), [&](std::size_t i) {
    const Waveform crop = crop_at(audio, starts[i], length);
    Classification& c = windows[i];
    c.prediction = predict_ovo(model.ensemble, extract_features(crop, cfg).values);
    c.label = c.prediction.label;
    c.window_start = starts[i];
    c.range_m = sample_to_range(static_cast<double>(starts[i]) + static_cast<double>(length / 2),
                                audio.sample_rate(), cfg.speed_of_sound);
    c.margin = winner_margin(model.ensemble, c.prediction);
  });

  const int none = class_id(Label::None);
  const Classification* best = nullptr;
  for (const Classification& c : windows) {
    const bool c_landmark = c.label != none;
    if (!best) {
      best = &c;
      continue;
    }
    const bool best_landmark = best->label != none;
    if ((c_landmark && !best_landmark) || (c_landmark == best_landmark && c.margin > best->margin)) best = &c;
  }
  return *best;
}

}  // namespace sonarmark
