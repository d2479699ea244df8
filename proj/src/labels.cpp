#include "sonarmark/labels.hpp"

#include <charconv>

#include "sonarmark/error.hpp"

namespace sonarmark {

std::string_view to_string(Label label) noexcept {
  switch (label) {
    case Label::None: return "None";
    case Label::R35: return "R35";
    case Label::R48: return "R48";
    case Label::R58: return "R58";
    case Label::R70: return "R70";
  }
  return "?";
}

std::optional<Label> parse_label(std::string_view text) noexcept {
  for (const Label label : kAllLabels) {
    if (to_string(label) == text) return label;
  }
  return std::nullopt;
}

std::string class_name(int id) {
  if (id == kPresentClass) return "Present";
  if (id >= 0 && id < static_cast<int>(kAllLabels.size())) {
    return std::string(to_string(static_cast<Label>(id)));
  }
  return std::to_string(id);
}

int parse_class(std::string_view text) {
  if (text == "Present") return kPresentClass;
  if (const auto label = parse_label(text)) return class_id(*label);
  int value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw error(errc::unknown_label, "unrecognized class '" + std::string(text) + "'");
  }
  return value;
}

std::optional<double> aperture_radius_for(Label label) noexcept {
  switch (label) {
    case Label::R35: return 0.035;
    case Label::R48: return 0.048;
    case Label::R58: return 0.058;
    case Label::R70: return 0.070;
    case Label::None: break;
  }
  return std::nullopt;
}

}  // namespace sonarmark
