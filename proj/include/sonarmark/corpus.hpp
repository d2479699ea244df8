#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sonarmark/echo.hpp"
#include "sonarmark/labels.hpp"
#include "sonarmark/parallel.hpp"

namespace sonarmark {

/// One scene of a batch. The per-scene noise/clutter seed is derived from the batch seed and
/// the scene's index.
struct SceneSpec {
  Label label = Label::None;
  double range = 1.0;
  double off_axis_angle = 0.0;
  int clutter_count = 3;
  double snr_db = 20.0;
  std::string environment_tag = "synthetic";
};

struct SceneBatch {
  ChirpSpec chirp = ChirpSpec::short_call();
  double sample_rate = kDefaultSampleRate;
  std::uint64_t seed = 0;
  EchoModelParams model{};
  double depth_ratio = 0.30;
  double taper = 0.2;
  std::vector<SceneSpec> scenes;
};

/// 5 labels x ranges 0.6..4.2 m (0.2 m steps) x angles {0, 10, 20} deg x 4 noise repeats.
[[nodiscard]] SceneBatch default_corpus_template(std::uint64_t seed, double snr_db = 20.0,
                                                 int clutter_count = 3);

/// Scene-list JSON (see README for the schema). `"template": "default"` expands the default
/// corpus; explicit `scenes` are appended after it.
[[nodiscard]] SceneBatch parse_scene_batch(const nlohmann::json& doc);
[[nodiscard]] SceneBatch load_scene_batch(const std::filesystem::path& path);

[[nodiscard]] EchoScene echo_scene(const SceneBatch& batch, std::size_t index);
[[nodiscard]] Waveform simulate_scene(const SceneBatch& batch, std::size_t index);

struct ManifestEntry {
  std::string audio_path;  // relative to the manifest's directory unless absolute
  Label label = Label::None;
  double range_m = 1.0;
  std::string environment_tag;
};

struct RecordingManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  [[nodiscard]] std::filesystem::path resolve(const ManifestEntry& entry) const;
};

[[nodiscard]] nlohmann::ordered_json manifest_to_json(const RecordingManifest& manifest);
void save_manifest(const std::filesystem::path& path, const RecordingManifest& manifest);
/// Validates labels, ranges within 0.3..10 m and that every audio path exists.
[[nodiscard]] RecordingManifest load_manifest(const std::filesystem::path& path);

/// Writes rec_NNNNN.wav (32-bit float) per scene and manifest.json into out_dir.
RecordingManifest generate_corpus(const SceneBatch& batch, const std::filesystem::path& out_dir,
                                  execution policy = execution::parallel);

}  // namespace sonarmark
