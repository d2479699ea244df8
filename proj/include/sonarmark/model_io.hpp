#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sonarmark/features.hpp"
#include "sonarmark/svm.hpp"

namespace sonarmark {

/// Bumped whenever feature extraction changes in a way that invalidates trained weights.
inline constexpr const char* kPipelineVersion = "sonarmark-features-1";
inline constexpr int kModelFormatVersion = 1;

struct ModelArtifact {
  OvOEnsemble ensemble;
  FeatureConfig features{};
  double sample_rate = kDefaultSampleRate;
  std::string pipeline_version = kPipelineVersion;
};

[[nodiscard]] nlohmann::ordered_json model_to_json(const ModelArtifact& artifact);
[[nodiscard]] ModelArtifact model_from_json(const nlohmann::json& doc);

/// Serialized text is deterministic; doubles are written in shortest round-trip form, so
/// weights and biases survive save -> load bit-exactly.
[[nodiscard]] std::string serialize_model(const ModelArtifact& artifact);
void save_model(const std::filesystem::path& path, const ModelArtifact& artifact);
[[nodiscard]] ModelArtifact load_model(const std::filesystem::path& path);

/// Throws error(version_mismatch) unless the artifact was produced by this pipeline version.
void require_compatible(const ModelArtifact& artifact);

}  // namespace sonarmark
