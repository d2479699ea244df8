#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sonarmark/corpus.hpp"
#include "sonarmark/eval.hpp"
#include "sonarmark/features.hpp"
#include "sonarmark/model_io.hpp"
#include "sonarmark/svm.hpp"

namespace sonarmark {

struct PipelineConfig {
  FeatureConfig features{};
  TrainConfig train{};
  CvConfig cv{};
  execution policy = execution::parallel;
};

struct LabeledDataset {
  FeatureMatrix x;
  std::vector<int> y;
};

/// Throws error(too_few_samples) for unlabeled rows or a single class.
[[nodiscard]] LabeledDataset to_dataset(std::span<const FeatureVector> features);

[[nodiscard]] std::vector<FeatureVector> featurize_manifest(const RecordingManifest& manifest,
                                                            const FeatureConfig& config,
                                                            execution policy = execution::parallel);

struct TrainingOutcome {
  ModelArtifact artifact;
  CvResult cv;
  std::vector<MetricReport> reports;  // detection, classification, overall
  bool converged = true;
  PipelineConfig config;
  std::size_t samples = 0;
};

/// Cross-validates, aggregates, then fits the final ensemble on all samples.
[[nodiscard]] TrainingOutcome train_and_evaluate(std::span<const FeatureVector> features,
                                                 const PipelineConfig& config,
                                                 double sample_rate = kDefaultSampleRate);

/// Text report for a set of fold matrices; `preamble` lines go first.
[[nodiscard]] std::string render_report(std::span<const ConfusionMatrix> folds,
                                        const std::vector<std::string>& preamble = {});
[[nodiscard]] std::string render_report(const TrainingOutcome& outcome);

/// model.json, report.txt, confusion_{overall,detection,classification}.csv and folds/fold_NN.csv.
void write_outputs(const TrainingOutcome& outcome, const std::filesystem::path& model_path,
                   const std::filesystem::path& report_dir);

[[nodiscard]] std::vector<ConfusionMatrix> read_fold_directory(const std::filesystem::path& dir);

/// Featurize -> features.csv -> train_and_evaluate -> write_outputs, all under out_dir.
TrainingOutcome run_pipeline(const RecordingManifest& manifest, const PipelineConfig& config,
                             const std::filesystem::path& out_dir);

struct Classification {
  int label = 0;
  OvOPrediction prediction;
  std::int64_t window_start = 0;
  double range_m = 0.0;
  double margin = 0.0;  // smallest pairwise decision in favour of the winner
};

[[nodiscard]] Classification classify_at_range(const ModelArtifact& model, const Waveform& audio, double range_m);

/// Slides crop windows across the recording; picks the landmark window with the largest
/// margin, or the best None window when no window shows a landmark.
[[nodiscard]] Classification classify_scan(const ModelArtifact& model, const Waveform& audio,
                                           std::size_t stride = 256);

}  // namespace sonarmark
