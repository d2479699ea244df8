#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sonarmark/parallel.hpp"

namespace sonarmark {

inline constexpr double kDefaultSampleRate = 450'000.0;  // Hz
inline constexpr double kDefaultSpeedOfSound = 343.0;    // m/s, dry air at 20 degC

/// Uniformly sampled real pressure signal. Construction validates: non-empty, finite
/// samples, positive sample rate. Immutable afterwards.
class Waveform {
 public:
  explicit Waveform(std::vector<double> samples, double sample_rate = kDefaultSampleRate);

  [[nodiscard]] std::span<const double> samples() const noexcept { return samples_; }
  [[nodiscard]] double sample_rate() const noexcept { return sample_rate_; }
  [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const noexcept { return samples_[i]; }
  [[nodiscard]] double duration() const noexcept {
    return static_cast<double>(samples_.size()) / sample_rate_;
  }

  /// Moves the sample buffer out; the waveform is left empty and must not be used.
  [[nodiscard]] std::vector<double> release() && noexcept { return std::move(samples_); }

  friend bool operator==(const Waveform&, const Waveform&) = default;

 private:
  std::vector<double> samples_;
  double sample_rate_;
};

/// Linear frequency sweep.
struct ChirpSpec {
  double f_start = 180'000.0;  // Hz
  double f_end = 30'000.0;     // Hz
  double duration = 1.0e-3;    // s
  double amplitude = 1.0;

  /// Broadband 180 -> 30 kHz call in 1 ms.
  static constexpr ChirpSpec short_call() { return {180'000.0, 30'000.0, 1.0e-3, 1.0}; }
  /// Higher-energy 160 -> 10 kHz sweep over 6 ms.
  static constexpr ChirpSpec long_sweep() { return {160'000.0, 10'000.0, 6.0e-3, 1.0}; }
};

struct FilterSpec {
  double low_cut = 30'000.0;    // Hz
  double high_cut = 100'000.0;  // Hz
  std::size_t num_taps = 257;   // odd
};

/// One-sided magnitude spectrum; magnitudes.size() == n_fft / 2 + 1.
struct Spectrum {
  std::vector<double> magnitudes;
  double bin_width = 0.0;  // Hz
  std::size_t n_fft = 0;

  [[nodiscard]] double frequency(std::size_t bin) const noexcept {
    return static_cast<double>(bin) * bin_width;
  }
};

[[nodiscard]] Waveform generate_chirp(const ChirpSpec& spec, double sample_rate = kDefaultSampleRate);

/// f(t) = f_start + (f_end - f_start) t / duration.
[[nodiscard]] double instantaneous_frequency(const ChirpSpec& spec, double t) noexcept;

/// Tukey (tapered-cosine) window of length n. taper_fraction 0 is rectangular, 1 is Hann.
[[nodiscard]] std::vector<double> tukey_window(std::size_t n, double taper_fraction);
[[nodiscard]] Waveform apply_window(const Waveform& w, double taper_fraction);

/// Linear-phase Hamming-windowed-sinc band-pass, normalized to unit gain at the passband centre.
[[nodiscard]] std::vector<double> design_bandpass(const FilterSpec& spec,
                                                  double sample_rate = kDefaultSampleRate);

/// Convolution aligned by the (num_taps - 1) / 2 group delay; output has the input's length
/// and treats samples outside the input as zero.
[[nodiscard]] Waveform filter_waveform(const Waveform& w, std::span<const double> coeffs,
                                       execution policy = execution::parallel);

/// Full complex DFT. Radix-2 FFT for power-of-two lengths, direct evaluation otherwise.
[[nodiscard]] std::vector<std::complex<double>> dft(std::span<const double> x);

[[nodiscard]] Spectrum fft_magnitude(const Waveform& w);

/// Two-way travel time to range_m expressed in (unrounded) samples.
[[nodiscard]] double range_to_sample_exact(double range_m, double sample_rate = kDefaultSampleRate,
                                           double speed_of_sound = kDefaultSpeedOfSound);
[[nodiscard]] std::int64_t range_to_sample(double range_m, double sample_rate = kDefaultSampleRate,
                                           double speed_of_sound = kDefaultSpeedOfSound);
[[nodiscard]] double sample_to_range(double sample, double sample_rate = kDefaultSampleRate,
                                     double speed_of_sound = kDefaultSpeedOfSound) noexcept;

}  // namespace sonarmark
