#include "sonarmark/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sonarmark/error.hpp"

namespace sonarmark {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

double sinc(double x) noexcept {
  if (x == 0.0) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

void require_nyquist(double f, double sample_rate, const char* what) {
  if (!(f > 0.0) || !(f < sample_rate / 2.0)) {
    throw error(errc::invalid_spec, std::string(what) + " must lie in (0, fs/2), got " +
                                        std::to_string(f) + " Hz");
  }
}

void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  // Twiddles evaluated directly (no recurrence) to keep rounding error O(log n).
  std::vector<std::complex<double>> twiddle(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    twiddle[k] = std::polar(1.0, -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n));
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const auto u = a[start + k];
        const auto v = a[start + k + half] * twiddle[k * stride];
        a[start + k] = u + v;
        a[start + k + half] = u - v;
      }
    }
  }
}

}  // namespace

Waveform::Waveform(std::vector<double> samples, double sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_)) {
    throw error(errc::invalid_spec, "sample rate must be positive and finite");
  }
  if (samples_.empty()) throw error(errc::invalid_spec, "waveform must contain at least one sample");
  for (const double s : samples_) {
    if (!std::isfinite(s)) throw error(errc::invalid_spec, "waveform samples must be finite");
  }
}

double instantaneous_frequency(const ChirpSpec& spec, double t) noexcept {
  return spec.f_start + (spec.f_end - spec.f_start) * t / spec.duration;
}

Waveform generate_chirp(const ChirpSpec& spec, double sample_rate) {
  if (!(spec.duration > 0.0)) throw error(errc::invalid_spec, "chirp duration must be positive");
  require_nyquist(spec.f_start, sample_rate, "chirp start frequency");
  require_nyquist(spec.f_end, sample_rate, "chirp end frequency");
  const auto n = static_cast<std::size_t>(std::llround(spec.duration * sample_rate));
  if (n == 0) throw error(errc::invalid_spec, "chirp shorter than one sample");

  const double sweep_rate = (spec.f_end - spec.f_start) / spec.duration;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double phase = 2.0 * kPi * (spec.f_start * t + 0.5 * sweep_rate * t * t);
    out[i] = spec.amplitude * std::sin(phase);
  }
  return Waveform(std::move(out), sample_rate);
}

std::vector<double> tukey_window(std::size_t n, double taper_fraction) {
  if (!(taper_fraction >= 0.0 && taper_fraction <= 1.0)) {
    throw error(errc::invalid_spec, "taper fraction must be in [0, 1]");
  }
  std::vector<double> w(n, 1.0);
  if (n < 2 || taper_fraction == 0.0) return w;

  const double last = static_cast<double>(n - 1);
  // Evaluate the rising half and mirror it so the window is exactly symmetric.
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    const double x = static_cast<double>(i) / last;
    double value = 1.0;
    if (x < taper_fraction / 2.0) value = 0.5 * (1.0 - std::cos(2.0 * kPi * x / taper_fraction));
    w[i] = value;
    w[n - 1 - i] = value;
  }
  return w;
}

Waveform apply_window(const Waveform& w, double taper_fraction) {
  const auto window = tukey_window(w.size(), taper_fraction);
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = w[i] * window[i];
  return Waveform(std::move(out), w.sample_rate());
}

std::vector<double> design_bandpass(const FilterSpec& spec, double sample_rate) {
  require_nyquist(spec.low_cut, sample_rate, "low cut");
  require_nyquist(spec.high_cut, sample_rate, "high cut");
  if (!(spec.low_cut < spec.high_cut)) throw error(errc::invalid_spec, "low cut must be below high cut");
  if (spec.num_taps == 0 || spec.num_taps % 2 == 0) {
    throw error(errc::invalid_spec, "band-pass tap count must be odd");
  }

  const std::size_t n = spec.num_taps;
  const auto centre = static_cast<std::ptrdiff_t>(n / 2);
  const double lo = spec.low_cut / sample_rate;
  const double hi = spec.high_cut / sample_rate;
  std::vector<double> h(n);
  for (std::size_t i = 0; i <= n / 2; ++i) {
    const auto m = static_cast<double>(static_cast<std::ptrdiff_t>(i) - centre);
    const double ideal = 2.0 * hi * sinc(2.0 * hi * m) - 2.0 * lo * sinc(2.0 * lo * m);
    const double hamming =
        n == 1 ? 1.0 : 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1));
    h[i] = ideal * hamming;
    h[n - 1 - i] = h[i];
  }

  const double omega = 2.0 * kPi * 0.5 * (lo + hi);
  std::complex<double> response{};
  for (std::size_t i = 0; i < n; ++i) response += h[i] * std::polar(1.0, -omega * static_cast<double>(i));
  const double gain = std::abs(response);
  for (double& c : h) c /= gain;
  return h;
}

Waveform filter_waveform(const Waveform& w, std::span<const double> coeffs, execution policy) {
  if (coeffs.empty()) throw error(errc::invalid_spec, "filter needs at least one coefficient");
  if (coeffs.size() > w.size()) {
    throw error(errc::invalid_spec, "filter longer than the waveform it is applied to");
  }
  const auto x = w.samples();
  const auto len = static_cast<std::ptrdiff_t>(x.size());
  const auto taps = static_cast<std::ptrdiff_t>(coeffs.size());
  const std::ptrdiff_t delay = (taps - 1) / 2;
  std::vector<double> y(x.size());

  auto output_sample = [&](std::ptrdiff_t n) {
    // y[n] = sum_k h[k] x[n + delay - k], restricted to valid input indices.
    const std::ptrdiff_t k_lo = std::max<std::ptrdiff_t>(0, n + delay - (len - 1));
    const std::ptrdiff_t k_hi = std::min<std::ptrdiff_t>(taps - 1, n + delay);
    double acc = 0.0;
    for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k) acc += coeffs[k] * x[n + delay - k];
    return acc;
  };

  if (policy == execution::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t n = 0; n < len; ++n) y[n] = output_sample(n);
  } else {
    for (std::ptrdiff_t n = 0; n < len; ++n) y[n] = output_sample(n);
  }
  return Waveform(std::move(y), w.sample_rate());
}

std::vector<std::complex<double>> dft(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(x.begin(), x.end());
  if (n < 2) return out;
  if (is_power_of_two(n)) {
    fft_radix2(out);
    return out;
  }
  std::vector<std::complex<double>> roots(n);
  for (std::size_t k = 0; k < n; ++k) {
    roots[k] = std::polar(1.0, -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n));
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{};
    std::size_t index = 0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += x[i] * roots[index];
      index += k;
      if (index >= n) index -= n;
    }
    out[k] = acc;
  }
  return out;
}

Spectrum fft_magnitude(const Waveform& w) {
  if (w.size() < 2) throw error(errc::invalid_spec, "spectrum needs at least two samples");
  const auto full = dft(w.samples());
  Spectrum s;
  s.n_fft = w.size();
  s.bin_width = w.sample_rate() / static_cast<double>(s.n_fft);
  s.magnitudes.resize(s.n_fft / 2 + 1);
  for (std::size_t k = 0; k < s.magnitudes.size(); ++k) s.magnitudes[k] = std::abs(full[k]);
  return s;
}

double range_to_sample_exact(double range_m, double sample_rate, double speed_of_sound) {
  if (!(range_m > 0.0)) throw error(errc::invalid_spec, "range must be positive");
  if (!(speed_of_sound > 0.0)) throw error(errc::invalid_spec, "speed of sound must be positive");
  return 2.0 * range_m / speed_of_sound * sample_rate;
}

std::int64_t range_to_sample(double range_m, double sample_rate, double speed_of_sound) {
  return std::llround(range_to_sample_exact(range_m, sample_rate, speed_of_sound));
}

double sample_to_range(double sample, double sample_rate, double speed_of_sound) noexcept {
  return sample / sample_rate * speed_of_sound / 2.0;
}

}  // namespace sonarmark
