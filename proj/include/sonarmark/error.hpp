#pragma once

#include <stdexcept>
#include <string>

namespace sonarmark {

/// Failure categories surfaced by the library. The CLI maps these to exit codes.
enum class errc {
  invalid_spec,
  invalid_scene,
  no_secondary_path,
  out_of_bounds,
  dimension_mismatch,
  unknown_label,
  missing_none_class,
  empty_matrix,
  too_few_folds,
  too_few_samples,
  unsupported_format,
  corrupt_file,
  multichannel_rejected,
  io_failure,
  invalid_config,
  version_mismatch,
};

const char* to_string(errc code) noexcept;

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& message);

  [[nodiscard]] errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace sonarmark
