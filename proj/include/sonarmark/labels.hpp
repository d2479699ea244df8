#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace sonarmark {

/// Recording classes: no landmark, or one of the four printed dish sizes.
enum class Label : int { None = 0, R35 = 1, R48 = 2, R58 = 3, R70 = 4 };

inline constexpr std::array<Label, 5> kAllLabels{Label::None, Label::R35, Label::R48, Label::R58,
                                                 Label::R70};

/// Class id used for the merged "landmark present" row/column of a detection matrix.
inline constexpr int kPresentClass = -1;

[[nodiscard]] constexpr int class_id(Label label) noexcept { return static_cast<int>(label); }

[[nodiscard]] std::string_view to_string(Label label) noexcept;
[[nodiscard]] std::optional<Label> parse_label(std::string_view text) noexcept;

/// Human-readable name for a class id (labels, kPresentClass, or the bare number).
[[nodiscard]] std::string class_name(int id);
/// Inverse of class_name. Throws error(unknown_label) on anything unrecognized.
[[nodiscard]] int parse_class(std::string_view text);

/// Aperture radius in metres of the printed reflector for a landmark label.
[[nodiscard]] std::optional<double> aperture_radius_for(Label label) noexcept;

}  // namespace sonarmark
