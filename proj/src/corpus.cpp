#include "sonarmark/corpus.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "sonarmark/error.hpp"
#include "sonarmark/rng.hpp"
#include "sonarmark/wav.hpp"

namespace sonarmark {

namespace {

using nlohmann::json;

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw error(errc::invalid_config, fmt::format("field '{}': {}", key, e.what()));
  }
}

Label label_field(const json& obj) {
  const auto text = get_or<std::string>(obj, "label", "None");
  const auto label = parse_label(text);
  if (!label) throw error(errc::unknown_label, "unknown label '" + text + "'");
  return *label;
}

ChirpSpec parse_chirp(const json& node) {
  if (node.is_string()) {
    const auto name = node.get<std::string>();
    if (name == "short_call") return ChirpSpec::short_call();
    if (name == "long_sweep") return ChirpSpec::long_sweep();
    throw error(errc::invalid_config, "unknown chirp preset '" + name + "'");
  }
  ChirpSpec spec = ChirpSpec::short_call();
  spec.f_start = get_or(node, "f_start", spec.f_start);
  spec.f_end = get_or(node, "f_end", spec.f_end);
  spec.duration = get_or(node, "duration", spec.duration);
  spec.amplitude = get_or(node, "amplitude", spec.amplitude);
  return spec;
}

}  // namespace

SceneBatch default_corpus_template(std::uint64_t seed, double snr_db, int clutter_count) {
  SceneBatch batch;
  batch.seed = seed;
  for (const Label label : kAllLabels) {
    for (int r = 0; r <= 18; ++r) {
      const double range = (6 + 2 * r) / 10.0;
      for (const double angle : {0.0, 10.0, 20.0}) {
        for (int repeat = 0; repeat < 4; ++repeat) {
          SceneSpec scene;
          scene.label = label;
          scene.range = range;
          scene.off_axis_angle = angle;
          scene.clutter_count = clutter_count;
          scene.snr_db = snr_db;
          scene.environment_tag = fmt::format("synthetic-angle{:.0f}-rep{}", angle, repeat);
          batch.scenes.push_back(std::move(scene));
        }
      }
    }
  }
  return batch;
}

SceneBatch parse_scene_batch(const json& doc) {
  if (!doc.is_object()) throw error(errc::invalid_config, "scene file must be a JSON object");
  const auto seed = get_or<std::uint64_t>(doc, "seed", 0);
  const double snr = get_or(doc, "snr_db", 20.0);
  const int clutter = get_or(doc, "clutter_count", 3);

  SceneBatch batch;
  if (doc.contains("template")) {
    const auto name = get_or<std::string>(doc, "template", "");
    if (name != "default") throw error(errc::invalid_config, "unknown scene template '" + name + "'");
    batch = default_corpus_template(seed, snr, clutter);
  }
  batch.seed = seed;
  batch.sample_rate = get_or(doc, "sample_rate", kDefaultSampleRate);
  batch.model.speed_of_sound = get_or(doc, "speed_of_sound", kDefaultSpeedOfSound);
  if (doc.contains("chirp")) batch.chirp = parse_chirp(doc.at("chirp"));
  if (doc.contains("model")) {
    const json& m = doc.at("model");
    batch.depth_ratio = get_or(m, "depth_ratio", batch.depth_ratio);
    batch.taper = get_or(m, "taper", batch.taper);
    batch.model.secondary_decay = get_or(m, "secondary_decay", batch.model.secondary_decay);
    batch.model.secondary_count = get_or(m, "secondary_count", batch.model.secondary_count);
    batch.model.reference_amplitude = get_or(m, "reference_amplitude", batch.model.reference_amplitude);
    batch.model.clutter_min = get_or(m, "clutter_min", batch.model.clutter_min);
    batch.model.clutter_max = get_or(m, "clutter_max", batch.model.clutter_max);
  }
  if (doc.contains("scenes")) {
    for (const json& s : doc.at("scenes")) {
      SceneSpec scene;
      scene.label = label_field(s);
      scene.range = get_or(s, "range", scene.range);
      scene.off_axis_angle = get_or(s, "off_axis_angle", scene.off_axis_angle);
      scene.clutter_count = get_or(s, "clutter_count", clutter);
      scene.snr_db = get_or(s, "snr_db", snr);
      scene.environment_tag = get_or<std::string>(s, "environment_tag", scene.environment_tag);
      batch.scenes.push_back(std::move(scene));
    }
  }
  if (batch.scenes.empty()) throw error(errc::invalid_config, "scene file defines no scenes");
  for (std::size_t i = 0; i < batch.scenes.size(); ++i) echo_scene(batch, i).validate();
  return batch;
}

SceneBatch load_scene_batch(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::io_failure, "cannot open " + path.string());
  try {
    return parse_scene_batch(json::parse(in));
  } catch (const json::parse_error& e) {
    throw error(errc::invalid_config, path.string() + ": " + e.what());
  }
}

EchoScene echo_scene(const SceneBatch& batch, std::size_t index) {
  const SceneSpec& spec = batch.scenes.at(index);
  EchoScene scene;
  if (auto dish = landmark_for(spec.label)) {
    dish->depth_ratio = batch.depth_ratio;
    dish->taper = batch.taper;
    scene.landmark = dish;
  }
  scene.range = spec.range;
  scene.off_axis_angle = spec.off_axis_angle;
  scene.clutter_count = spec.clutter_count;
  scene.snr_db = spec.snr_db;
  scene.seed = mix_seed(batch.seed, index);
  return scene;
}

Waveform simulate_scene(const SceneBatch& batch, std::size_t index) {
  const EchoScene scene = echo_scene(batch, index);
  const Waveform chirp = generate_chirp(batch.chirp, batch.sample_rate);
  const ImpulseResponse ir = scene.landmark ? impulse_response(scene, batch.model) : ImpulseResponse{};
  return synthesize_echo(chirp, ir, scene, batch.model);
}

std::filesystem::path RecordingManifest::resolve(const ManifestEntry& entry) const {
  const std::filesystem::path p(entry.audio_path);
  return p.is_absolute() ? p : base_dir / p;
}

nlohmann::ordered_json manifest_to_json(const RecordingManifest& manifest) {
  nlohmann::ordered_json doc;
  doc["format_version"] = 1;
  auto& entries = doc["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back({{"audio_path", e.audio_path},
                       {"label", std::string(to_string(e.label))},
                       {"range_m", e.range_m},
                       {"environment_tag", e.environment_tag}});
  }
  return doc;
}

void save_manifest(const std::filesystem::path& path, const RecordingManifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw error(errc::io_failure, "cannot write " + path.string());
  out << manifest_to_json(manifest).dump(2) << '\n';
}

RecordingManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::io_failure, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw error(errc::corrupt_file, path.string() + ": " + e.what());
  }
  RecordingManifest manifest;
  manifest.base_dir = path.parent_path();
  if (!doc.contains("entries") || !doc.at("entries").is_array()) {
    throw error(errc::corrupt_file, path.string() + ": manifest needs an 'entries' array");
  }
  for (const json& e : doc.at("entries")) {
    ManifestEntry entry;
    entry.audio_path = get_or<std::string>(e, "audio_path", "");
    entry.label = label_field(e);
    entry.range_m = get_or(e, "range_m", 0.0);
    entry.environment_tag = get_or<std::string>(e, "environment_tag", "");
    if (!(entry.range_m >= 0.3 && entry.range_m <= 10.0)) {
      throw error(errc::invalid_config, fmt::format("{}: range {} m outside 0.3..10 m", entry.audio_path, entry.range_m));
    }
    if (entry.audio_path.empty() || !std::filesystem::exists(manifest.resolve(entry))) {
      throw error(errc::io_failure, "manifest audio not found: " + manifest.resolve(entry).string());
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

RecordingManifest generate_corpus(const SceneBatch& batch, const std::filesystem::path& out_dir,
                                  execution policy) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw error(errc::io_failure, "cannot create " + out_dir.string() + ": " + ec.message());

  RecordingManifest manifest;
  manifest.base_dir = out_dir;
  manifest.entries.resize(batch.scenes.size());
  const Waveform chirp = generate_chirp(batch.chirp, batch.sample_rate);
  for_each_index(policy, batch.scenes.size(), [&](std::size_t i) {
    const EchoScene scene = echo_scene(batch, i);
    const ImpulseResponse ir = scene.landmark ? impulse_response(scene, batch.model) : ImpulseResponse{};
    const Waveform audio = synthesize_echo(chirp, ir, scene, batch.model);
    const std::string file = fmt::format("rec_{:05d}.wav", i);
    write_wav(out_dir / file, audio, WavEncoding::float32);
    const SceneSpec& spec = batch.scenes[i];
    manifest.entries[i] = {file, spec.label, spec.range, spec.environment_tag};
  });
  save_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace sonarmark
