#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "sonarmark/labels.hpp"
#include "sonarmark/parallel.hpp"
#include "sonarmark/signal.hpp"

namespace sonarmark {

struct CropSpec {
  double margin = 0.20;            // m either side of the labelled range
  std::size_t crop_length = 1024;  // samples
};

struct BinSpec {
  double f_low = 30'000.0;   // Hz
  double f_high = 100'000.0; // Hz
  std::size_t n_bins = 20;
};

/// Everything needed to turn a recording plus a range into a feature vector.
struct FeatureConfig {
  CropSpec crop{};
  BinSpec bins{};
  double taper_fraction = 0.25;
  FilterSpec filter{};
  double speed_of_sound = kDefaultSpeedOfSound;
};

struct FeatureVector {
  std::vector<double> values;
  std::optional<Label> label;
};

/// Inclusive sample interval [first, last].
struct SampleWindow {
  std::int64_t first = 0;
  std::int64_t last = 0;
};

/// [lo, hi) frequency interval; the final bin of a BinSpec is closed at hi.
struct FrequencyBin {
  double lo = 0.0;
  double hi = 0.0;
  bool closed = false;

  [[nodiscard]] bool contains(double f) const noexcept { return f >= lo && (f < hi || (closed && f == hi)); }
};

/// crop_length samples centred on range_to_sample(range): [centre - L/2, centre + L/2 - 1].
[[nodiscard]] SampleWindow crop_window(double range_m, double sample_rate, const CropSpec& spec,
                                       double speed_of_sound = kDefaultSpeedOfSound);

/// Throws error(out_of_bounds) when the window does not fit inside w.
[[nodiscard]] Waveform crop_to_range(const Waveform& w, double range_m, const CropSpec& spec,
                                     double speed_of_sound = kDefaultSpeedOfSound);
[[nodiscard]] Waveform crop_at(const Waveform& w, std::int64_t first, std::size_t length);

[[nodiscard]] std::vector<FrequencyBin> bin_edges(const BinSpec& spec);

/// Window -> band-pass -> magnitude spectrum -> mean magnitude per frequency bin, before
/// normalization. FFT bins are assigned to intervals by their centre frequency.
[[nodiscard]] std::vector<double> binned_spectrum(const Waveform& cropped, const BinSpec& bins,
                                                  double taper_fraction, const FilterSpec& filter);

/// binned_spectrum divided by its maximum; all-zero vectors pass through unchanged.
[[nodiscard]] FeatureVector extract_features(const Waveform& cropped, const BinSpec& bins,
                                             double taper_fraction, const FilterSpec& filter);

/// As above, additionally checking cropped.size() == config.crop.crop_length.
[[nodiscard]] FeatureVector extract_features(const Waveform& cropped, const FeatureConfig& config);

struct RangedRecording {
  Waveform audio;
  double range_m = 0.0;
  std::optional<Label> label;
};

/// crop_to_range followed by extract_features for every recording.
[[nodiscard]] std::vector<FeatureVector> extract_batch(std::span<const RangedRecording> recordings,
                                                       const FeatureConfig& config,
                                                       execution policy = execution::parallel);

/// Header f00..fNN,label; one row per vector; 17 significant digits.
void write_feature_csv(std::ostream& out, std::span<const FeatureVector> features);
[[nodiscard]] std::vector<FeatureVector> read_feature_csv(std::istream& in);

}  // namespace sonarmark
