#include "sonarmark/echo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sonarmark/error.hpp"
#include "sonarmark/rng.hpp"

namespace sonarmark {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kEntryScanSteps = 720;
constexpr int kBisectionSteps = 200;
constexpr int kAngleBisectionSteps = 60;

double dot(Point2 a, Point2 b) noexcept { return a.x * b.x + a.y * b.y; }
double cross(Point2 a, Point2 b) noexcept { return a.x * b.y - a.y * b.x; }
Point2 operator+(Point2 a, Point2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
Point2 operator-(Point2 a, Point2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
Point2 operator*(double s, Point2 a) noexcept { return {s * a.x, s * a.y}; }

Point2 reflect(Point2 d, Point2 unit_normal) noexcept {
  return d - (2.0 * dot(d, unit_normal)) * unit_normal;
}

/// Sphere of radius R centred at the origin; the cap is the arc within `half_angle` of the
/// apex direction (-1, 0).
struct CapGeometry {
  double radius;
  double half_angle;

  [[nodiscard]] bool on_cap(Point2 p) const noexcept {
    // cos of the polar angle from the apex direction, with a little slack for rounding.
    return -p.x / radius >= std::cos(half_angle) - 1e-12;
  }

  /// Parameters t1 <= t2 where the line o + t d (|d| = 1) crosses the full circle.
  [[nodiscard]] std::optional<std::pair<double, double>> crossings(Point2 o, Point2 d) const noexcept {
    const double b = dot(o, d);
    const double c = dot(o, o) - radius * radius;
    const double disc = b * b - c;
    if (disc < 0.0) return std::nullopt;
    const double root = std::sqrt(disc);
    return std::pair{-b - root, -b + root};
  }
};

struct Ray {
  Point2 origin;
  Point2 direction;
};

Ray entry_ray(const CapGeometry& cap, double incidence, double offset) noexcept {
  const Point2 toward_source{std::cos(incidence), std::sin(incidence)};
  const Point2 lateral{-std::sin(incidence), std::cos(incidence)};
  const double standoff = 4.0 * cap.radius;
  return {standoff * toward_source + offset * lateral, -1.0 * toward_source};
}

/// Two inner reflections on the full circle, ignoring where the cap ends. Smooth in the entry
/// offset, which makes it suitable for bracketing.
struct FullCircleTrace {
  Point2 first;
  Point2 second;
  Point2 exit_direction;
  double length_to_second;  // entry point -> first -> second
};

std::optional<FullCircleTrace> trace_full_circle(const CapGeometry& cap, const Ray& ray) noexcept {
  const auto hit1 = cap.crossings(ray.origin, ray.direction);
  if (!hit1) return std::nullopt;
  const double t1 = hit1->second;  // far side: the concave inner surface
  const Point2 p1 = ray.origin + t1 * ray.direction;
  const Point2 d1 = reflect(ray.direction, (1.0 / cap.radius) * p1);
  // Leaving p1 inwards, the other crossing of the chord is at t = -2 (p1 . d1).
  const double t2 = -2.0 * dot(p1, d1);
  if (!(t2 > 0.0)) return std::nullopt;
  const Point2 p2 = p1 + t2 * d1;
  const Point2 d2 = reflect(d1, (1.0 / cap.radius) * p2);
  return FullCircleTrace{p1, p2, d2, t1 + t2};
}

/// Cap-aware tracer: follows the ray through up to `max_hits` reflections off the arc and
/// reports each hit. Escapes when no further intersection lies on the cap.
struct CapHit {
  Point2 point;
  bool concave;
};

std::vector<CapHit> trace_on_cap(const CapGeometry& cap, Ray ray, int max_hits) {
  std::vector<CapHit> hits;
  const double eps = 1e-9 * cap.radius;
  for (int bounce = 0; bounce < max_hits; ++bounce) {
    const auto cross_at = cap.crossings(ray.origin, ray.direction);
    if (!cross_at) break;
    std::optional<double> next;
    for (const double t : {cross_at->first, cross_at->second}) {
      if (t > eps && cap.on_cap(ray.origin + t * ray.direction)) {
        next = t;
        break;
      }
    }
    if (!next) break;
    const Point2 p = ray.origin + *next * ray.direction;
    const Point2 normal = (1.0 / cap.radius) * p;
    hits.push_back({p, dot(ray.direction, normal) > 0.0});
    ray = {p, reflect(ray.direction, normal)};
  }
  return hits;
}

CapGeometry geometry_of(const DishLandmark& landmark) {
  return {sphere_radius(landmark), cap_half_angle(landmark)};
}

}  // namespace

void DishLandmark::validate() const {
  if (!(aperture_radius > 0.0) || !std::isfinite(aperture_radius)) {
    throw error(errc::invalid_spec, "aperture radius must be positive");
  }
  if (!(depth_ratio > 0.0 && depth_ratio <= 0.5)) {
    throw error(errc::invalid_spec, "depth ratio must be in (0, 0.5]");
  }
  if (!(taper >= 0.0 && taper <= 1.0)) throw error(errc::invalid_spec, "taper must be in [0, 1]");
}

std::optional<DishLandmark> landmark_for(Label label) {
  const auto radius = aperture_radius_for(label);
  if (!radius) return std::nullopt;
  DishLandmark landmark;
  landmark.aperture_radius = *radius;
  return landmark;
}

void EchoScene::validate() const {
  if (!(range >= 0.1 && range <= 10.0)) throw error(errc::invalid_scene, "range must be within 0.1..10 m");
  if (!(off_axis_angle >= 0.0 && off_axis_angle <= 90.0)) {
    throw error(errc::invalid_scene, "off-axis angle must be within 0..90 degrees");
  }
  if (clutter_count < 0) throw error(errc::invalid_scene, "clutter count must be non-negative");
  if (std::isnan(snr_db)) throw error(errc::invalid_scene, "snr must be a number");
  if (landmark) landmark->validate();
}

double sphere_radius(const DishLandmark& landmark) {
  landmark.validate();
  const double a = landmark.aperture_radius;
  const double h = landmark.depth();
  return (a * a + h * h) / (2.0 * h);
}

double cap_half_angle(const DishLandmark& landmark) {
  const double r = sphere_radius(landmark);
  // Rim sits at distance R - h from the centre along the axis (negative past the equator).
  return std::acos(std::clamp((r - landmark.depth()) / r, -1.0, 1.0));
}

std::optional<SecondaryPath> trace_secondary_path(const DishLandmark& landmark, double incidence) {
  const CapGeometry cap = geometry_of(landmark);
  const Point2 toward_source{std::cos(incidence), std::sin(incidence)};

  // Signed exit error; only meaningful when the ray leaves heading back at the source.
  auto exit_error = [&](double offset) -> std::optional<double> {
    const auto trace = trace_full_circle(cap, entry_ray(cap, incidence, offset));
    if (!trace || dot(trace->exit_direction, toward_source) <= 0.0) return std::nullopt;
    return cross(trace->exit_direction, toward_source);
  };

  std::optional<SecondaryPath> best;
  auto consider_root = [&](double offset) {
    const Ray ray = entry_ray(cap, incidence, offset);
    const auto full = trace_full_circle(cap, ray);
    if (!full) return;
    const auto hits = trace_on_cap(cap, ray, 3);
    if (hits.size() != 2 || !hits[0].concave || !hits[1].concave) return;
    // Cap-aware path must coincide with the smooth full-circle one.
    const double tol = 1e-9 * cap.radius;
    if (std::hypot(hits[0].point.x - full->first.x, hits[0].point.y - full->first.y) > tol ||
        std::hypot(hits[1].point.x - full->second.x, hits[1].point.y - full->second.y) > tol) {
      return;
    }
    const double standoff = dot(ray.origin, toward_source);
    const double total = full->length_to_second + (standoff - dot(full->second, toward_source));
    const double central = 2.0 * (standoff + cap.radius);
    const double excess = total - central;
    if (!best || excess < best->excess_length) {
      best = SecondaryPath{excess, offset, {full->first, full->second}};
    }
  };

  const double span = cap.radius * (1.0 - 1e-9);
  double prev_offset = -span;
  auto prev_error = exit_error(prev_offset);
  for (std::size_t step = 1; step <= kEntryScanSteps; ++step) {
    const double offset = -span + 2.0 * span * static_cast<double>(step) / kEntryScanSteps;
    const auto err = exit_error(offset);
    if (prev_error && err && (*prev_error == 0.0 || (*prev_error < 0.0) != (*err < 0.0))) {
      double lo = prev_offset;
      double hi = offset;
      double f_lo = *prev_error;
      bool bracket_ok = true;
      for (int it = 0; it < kBisectionSteps && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const auto f_mid = exit_error(mid);
        if (!f_mid) {
          bracket_ok = false;
          break;
        }
        if ((*f_mid < 0.0) == (f_lo < 0.0) && *f_mid != 0.0) {
          lo = mid;
          f_lo = *f_mid;
        } else {
          hi = mid;
        }
      }
      if (bracket_ok) consider_root(0.5 * (lo + hi));
    }
    prev_offset = offset;
    prev_error = err;
  }
  return best;
}

double secondary_path_delay(const DishLandmark& landmark, double speed_of_sound) {
  const auto path = trace_secondary_path(landmark, 0.0);
  if (!path) {
    throw error(errc::no_secondary_path, "cap too shallow for a returning double-bounce ray");
  }
  return path->excess_length / speed_of_sound;
}

double max_secondary_angle(const DishLandmark& landmark) {
  landmark.validate();
  if (!trace_secondary_path(landmark, 0.0)) return 0.0;
  double lo = 0.0;
  double hi = kPi / 2.0;
  if (trace_secondary_path(landmark, hi)) return 90.0;
  for (int it = 0; it < kAngleBisectionSteps; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (trace_secondary_path(landmark, mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo * 180.0 / kPi;
}

ImpulseResponse impulse_response(const EchoScene& scene, const EchoModelParams& params) {
  if (!scene.landmark) throw error(errc::invalid_scene, "impulse response needs a landmark");
  scene.validate();
  const DishLandmark& dish = *scene.landmark;
  const double c = params.speed_of_sound;
  const double spreading = 1.0 / (scene.range * scene.range);
  const double central_amplitude = params.reference_amplitude * spreading;

  ImpulseResponse ir;
  if (dish.taper > 0.0) {
    ir.taps.push_back({2.0 * (scene.range - dish.depth()) / c, dish.taper * central_amplitude});
    ir.kinds.push_back(TapKind::edge);
  }

  const double t_central = 2.0 * scene.range / c;
  const bool has_secondary = scene.off_axis_angle <= max_secondary_angle(dish) &&
                             trace_secondary_path(dish, 0.0).has_value();
  if (scene.off_axis_angle > 0.0 && !has_secondary) {
    const double attenuation = std::cos(scene.off_axis_angle * kPi / 180.0);
    ir.taps.push_back({t_central, central_amplitude * attenuation});
  } else {
    ir.taps.push_back({t_central, central_amplitude});
  }
  ir.kinds.push_back(TapKind::central);

  if (has_secondary) {
    const double delta = secondary_path_delay(dish, c);
    double amplitude = central_amplitude;
    for (int k = 1; k <= params.secondary_count; ++k) {
      amplitude *= params.secondary_decay;
      ir.taps.push_back({t_central + k * delta, amplitude});
      ir.kinds.push_back(TapKind::secondary);
    }
  }
  return ir;
}

std::size_t recording_length(const Waveform& chirp, const EchoScene& scene,
                             const EchoModelParams& params) {
  const auto tail = range_to_sample(scene.range + params.tail_range, chirp.sample_rate(),
                                    params.speed_of_sound);
  return static_cast<std::size_t>(tail) + chirp.size();
}

namespace {

void add_delayed(std::vector<double>& out, std::span<const double> chirp, std::int64_t start,
                 double amplitude) {
  const auto len = static_cast<std::int64_t>(out.size());
  for (std::size_t j = 0; j < chirp.size(); ++j) {
    const std::int64_t n = start + static_cast<std::int64_t>(j);
    if (n < 0) continue;
    if (n >= len) break;
    out[static_cast<std::size_t>(n)] += amplitude * chirp[j];
  }
}

}  // namespace

Waveform synthesize_echo(const Waveform& chirp, const ImpulseResponse& ir, const EchoScene& scene,
                         const EchoModelParams& params) {
  scene.validate();
  const double fs = chirp.sample_rate();
  const double c = params.speed_of_sound;
  const std::size_t length = recording_length(chirp, scene, params);
  std::vector<double> out(length, 0.0);
  for (const Tap& tap : ir.taps) add_delayed(out, chirp.samples(), std::llround(tap.delay * fs), tap.amplitude);

  const auto window_lo = std::max<std::int64_t>(
      0, std::llround(2.0 * (scene.range - params.crop_margin) / c * fs));
  const auto window_hi = std::min<std::int64_t>(
      static_cast<std::int64_t>(length) - 1, std::llround(2.0 * (scene.range + params.crop_margin) / c * fs));

  Rng rng(scene.seed);

  // Clutter starts are drawn from [0, window_lo - chirp) U (window_hi, length - chirp], so no
  // clutter energy reaches the crop window.
  if (scene.clutter_count > 0) {
    const auto chirp_len = static_cast<std::int64_t>(chirp.size());
    const std::int64_t before = std::max<std::int64_t>(0, window_lo - chirp_len);
    const std::int64_t after_first = window_hi + 1;
    const std::int64_t after_last = static_cast<std::int64_t>(length) - chirp_len;
    const std::int64_t after = std::max<std::int64_t>(0, after_last - after_first + 1);
    const std::int64_t slots = before + after;
    if (slots > 0) {
      const double log_min = std::log(params.clutter_min);
      const double log_max = std::log(params.clutter_max);
      for (int i = 0; i < scene.clutter_count; ++i) {
        auto slot = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(slots)));
        const std::int64_t start = slot < before ? slot : after_first + (slot - before);
        const double amplitude = std::exp(rng.uniform(log_min, log_max));
        add_delayed(out, chirp.samples(), start, amplitude);
      }
    }
  }

  if (std::isfinite(scene.snr_db)) {
    // Reference echo: the landmark taps, or an on-axis unit reflector at the same range.
    std::vector<double> reference(length, 0.0);
    if (!ir.taps.empty()) {
      for (const Tap& tap : ir.taps) {
        add_delayed(reference, chirp.samples(), std::llround(tap.delay * fs), tap.amplitude);
      }
    } else {
      add_delayed(reference, chirp.samples(), range_to_sample(scene.range, fs, c),
                  params.reference_amplitude / (scene.range * scene.range));
    }
    const auto band = design_bandpass(params.snr_band, fs);
    const auto guard = static_cast<std::int64_t>(band.size());
    const std::int64_t seg_lo = std::max<std::int64_t>(0, window_lo - guard);
    const std::int64_t seg_hi = std::min<std::int64_t>(static_cast<std::int64_t>(length) - 1, window_hi + guard);
    std::vector<double> segment(reference.begin() + seg_lo, reference.begin() + seg_hi + 1);
    double signal_power = 0.0;
    if (segment.size() >= band.size()) {
      const auto filtered = filter_waveform(Waveform(std::move(segment), fs), band, execution::serial);
      for (std::int64_t n = window_lo; n <= window_hi; ++n) {
        const double v = filtered[static_cast<std::size_t>(n - seg_lo)];
        signal_power += v * v;
      }
      signal_power /= static_cast<double>(window_hi - window_lo + 1);
    }
    double noise_gain = 0.0;
    for (const double h : band) noise_gain += h * h;
    const double sigma = std::sqrt(signal_power / (std::pow(10.0, scene.snr_db / 10.0) * noise_gain));
    if (sigma > 0.0) {
      for (double& v : out) v += sigma * rng.normal();
    }
  }
  return Waveform(std::move(out), fs);
}

}  // namespace sonarmark
