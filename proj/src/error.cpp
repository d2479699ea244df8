#include "sonarmark/error.hpp"

namespace sonarmark {

const char* to_string(errc code) noexcept {
  switch (code) {
    case errc::invalid_spec: return "invalid-spec";
    case errc::invalid_scene: return "invalid-scene";
    case errc::no_secondary_path: return "no-secondary-path";
    case errc::out_of_bounds: return "out-of-bounds";
    case errc::dimension_mismatch: return "dimension-mismatch";
    case errc::unknown_label: return "unknown-label";
    case errc::missing_none_class: return "missing-None-class";
    case errc::empty_matrix: return "empty-matrix";
    case errc::too_few_folds: return "too-few-folds";
    case errc::too_few_samples: return "too-few-samples";
    case errc::unsupported_format: return "unsupported-format";
    case errc::corrupt_file: return "corrupt-file";
    case errc::multichannel_rejected: return "multichannel-rejected";
    case errc::io_failure: return "io-failure";
    case errc::invalid_config: return "invalid-config";
    case errc::version_mismatch: return "version-mismatch";
  }
  return "unknown";
}

error::error(errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace sonarmark
