#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "sonarmark/labels.hpp"
#include "sonarmark/signal.hpp"

namespace sonarmark {

/// Spherical-cap reflector. Depth is measured rim-to-apex and given relative to the
/// aperture diameter, so depth = depth_ratio * 2 * aperture_radius.
struct DishLandmark {
  double aperture_radius = 0.035;  // m
  double depth_ratio = 0.30;
  double taper = 0.2;  // rim-echo amplitude relative to the central echo

  [[nodiscard]] double depth() const noexcept { return depth_ratio * 2.0 * aperture_radius; }
  /// Throws error(invalid_spec) unless radius > 0, depth_ratio in (0, 0.5], taper in [0, 1].
  void validate() const;
};

/// Printed reflector for a landmark label (None has no reflector).
[[nodiscard]] std::optional<DishLandmark> landmark_for(Label label);

struct EchoScene {
  std::optional<DishLandmark> landmark;
  double range = 1.0;           // m, transducer to dish apex
  double off_axis_angle = 0.0;  // degrees the dish is turned away from the sonar
  int clutter_count = 0;
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;

  /// Throws error(invalid_scene) outside 0.1..10 m, 0..90 degrees, or negative clutter.
  void validate() const;
};

/// Amplitude model shared by impulse_response and synthesize_echo.
struct EchoModelParams {
  double reference_amplitude = 1.0;  // central echo amplitude at 1 m, on axis
  double secondary_decay = 0.6;      // amplitude ratio between successive secondary peaks
  int secondary_count = 2;
  double speed_of_sound = kDefaultSpeedOfSound;
  double crop_margin = 0.20;      // m; clutter never lands within range +- margin
  double clutter_min = 0.01;      // clutter amplitudes are log-uniform in [min, max]
  double clutter_max = 1.0;
  double tail_range = 1.0;        // m recorded beyond the landmark range
  FilterSpec snr_band{};          // band in which snr_db is measured
};

struct Tap {
  double delay = 0.0;      // s
  double amplitude = 0.0;  // signed
  friend bool operator==(const Tap&, const Tap&) = default;
};

enum class TapKind { edge, central, secondary };

struct ImpulseResponse {
  std::vector<Tap> taps;  // strictly increasing delay
  std::vector<TapKind> kinds;
};

/// Radius of the sphere through the rim and the apex: (a^2 + h^2) / (2 h).
[[nodiscard]] double sphere_radius(const DishLandmark& landmark);

/// Polar half-angle (radians) of the cap seen from the sphere centre.
[[nodiscard]] double cap_half_angle(const DishLandmark& landmark);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// A double-bounce path that leaves the cap heading straight back at the source.
struct SecondaryPath {
  double excess_length = 0.0;  // m, round trip beyond the central (apex) echo
  double entry_offset = 0.0;   // m, lateral offset of the incoming ray from the sphere centre
  std::array<Point2, 2> bounces{};
};

/// 2-D specular ray tracer. The sphere centre sits at the origin, the cap opens towards +x and
/// the source lies at angle `incidence` (radians) from the dish axis. Entry rays are swept across
/// the aperture and refined by bisection on the exit-direction error; returns the shortest path.
[[nodiscard]] std::optional<SecondaryPath> trace_secondary_path(const DishLandmark& landmark,
                                                                double incidence = 0.0);

/// Excess two-way delay (s) of the shortest returning double-bounce path at normal incidence.
/// Throws error(no_secondary_path) when the cap is too shallow to support one.
[[nodiscard]] double secondary_path_delay(const DishLandmark& landmark,
                                          double speed_of_sound = kDefaultSpeedOfSound);

/// Largest off-axis angle (degrees) for which a returning double-bounce path still exists.
[[nodiscard]] double max_secondary_angle(const DishLandmark& landmark);

/// Edge, central and secondary-path taps for a scene containing a landmark.
[[nodiscard]] ImpulseResponse impulse_response(const EchoScene& scene,
                                               const EchoModelParams& params = {});

/// Number of samples synthesize_echo produces for a scene.
[[nodiscard]] std::size_t recording_length(const Waveform& chirp, const EchoScene& scene,
                                           const EchoModelParams& params = {});

/// Chirp convolved with the tap train, plus clutter echoes outside the crop window, plus white
/// Gaussian noise sized so the in-band SNR over the crop window equals scene.snr_db.
/// Deterministic in scene.seed.
[[nodiscard]] Waveform synthesize_echo(const Waveform& chirp, const ImpulseResponse& ir,
                                       const EchoScene& scene, const EchoModelParams& params = {});

}  // namespace sonarmark
