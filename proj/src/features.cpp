#include "sonarmark/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "sonarmark/error.hpp"

namespace sonarmark {

SampleWindow crop_window(double range_m, double sample_rate, const CropSpec& spec,
                         double speed_of_sound) {
  if (spec.crop_length == 0) throw error(errc::invalid_spec, "crop length must be positive");
  if (!(spec.margin > 0.0)) throw error(errc::invalid_spec, "crop margin must be positive");
  const std::int64_t centre = range_to_sample(range_m, sample_rate, speed_of_sound);
  const auto half = static_cast<std::int64_t>(spec.crop_length / 2);
  const std::int64_t first = centre - half;
  return {first, first + static_cast<std::int64_t>(spec.crop_length) - 1};
}

Waveform crop_at(const Waveform& w, std::int64_t first, std::size_t length) {
  const std::int64_t last = first + static_cast<std::int64_t>(length) - 1;
  if (length == 0 || first < 0 || last >= static_cast<std::int64_t>(w.size())) {
    throw error(errc::out_of_bounds, fmt::format("crop window [{}, {}] outside recording of {} samples",
                                                 first, last, w.size()));
  }
  const auto samples = w.samples().subspan(static_cast<std::size_t>(first), length);
  return Waveform(std::vector<double>(samples.begin(), samples.end()), w.sample_rate());
}

Waveform crop_to_range(const Waveform& w, double range_m, const CropSpec& spec, double speed_of_sound) {
  const SampleWindow window = crop_window(range_m, w.sample_rate(), spec, speed_of_sound);
  return crop_at(w, window.first, spec.crop_length);
}

std::vector<FrequencyBin> bin_edges(const BinSpec& spec) {
  if (spec.n_bins == 0) throw error(errc::invalid_spec, "need at least one frequency bin");
  if (!(spec.f_low < spec.f_high)) throw error(errc::invalid_spec, "f_low must be below f_high");
  std::vector<FrequencyBin> bins(spec.n_bins);
  const double width = (spec.f_high - spec.f_low) / static_cast<double>(spec.n_bins);
  for (std::size_t i = 0; i < spec.n_bins; ++i) {
    bins[i].lo = spec.f_low + static_cast<double>(i) * width;
    bins[i].hi = i + 1 == spec.n_bins ? spec.f_high : spec.f_low + static_cast<double>(i + 1) * width;
  }
  bins.back().closed = true;
  return bins;
}

std::vector<double> binned_spectrum(const Waveform& cropped, const BinSpec& bins,
                                    double taper_fraction, const FilterSpec& filter) {
  const auto intervals = bin_edges(bins);
  const Waveform windowed = apply_window(cropped, taper_fraction);
  const auto coeffs = design_bandpass(filter, cropped.sample_rate());
  const Waveform filtered = filter_waveform(windowed, coeffs, execution::serial);
  const Spectrum spectrum = fft_magnitude(filtered);

  std::vector<double> sums(intervals.size(), 0.0);
  std::vector<std::size_t> counts(intervals.size(), 0);
  for (std::size_t k = 0; k < spectrum.magnitudes.size(); ++k) {
    const double f = spectrum.frequency(k);
    if (f < bins.f_low || f > bins.f_high) continue;
    const auto guess = static_cast<std::size_t>(
        std::min<double>(static_cast<double>(intervals.size() - 1),
                         std::floor((f - bins.f_low) / (bins.f_high - bins.f_low) * intervals.size())));
    // The closed-form guess can land one off at interval boundaries; settle by containment.
    std::size_t index = guess;
    if (!intervals[index].contains(f) && index > 0 && intervals[index - 1].contains(f)) --index;
    if (!intervals[index].contains(f) && index + 1 < intervals.size() && intervals[index + 1].contains(f)) ++index;
    if (!intervals[index].contains(f)) continue;
    sums[index] += spectrum.magnitudes[k];
    ++counts[index];
  }
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (counts[i] == 0) {
      throw error(errc::invalid_spec,
                  fmt::format("frequency bin {} holds no FFT bins; widen bins or lengthen the crop", i));
    }
    sums[i] /= static_cast<double>(counts[i]);
  }
  return sums;
}

FeatureVector extract_features(const Waveform& cropped, const BinSpec& bins, double taper_fraction,
                               const FilterSpec& filter) {
  FeatureVector fv;
  fv.values = binned_spectrum(cropped, bins, taper_fraction, filter);
  const double peak = *std::max_element(fv.values.begin(), fv.values.end());
  if (peak > 0.0) {
    for (double& v : fv.values) v /= peak;
  }
  return fv;
}

FeatureVector extract_features(const Waveform& cropped, const FeatureConfig& config) {
  if (cropped.size() != config.crop.crop_length) {
    throw error(errc::dimension_mismatch, fmt::format("expected a {}-sample crop, got {}",
                                                      config.crop.crop_length, cropped.size()));
  }
  return extract_features(cropped, config.bins, config.taper_fraction, config.filter);
}

std::vector<FeatureVector> extract_batch(std::span<const RangedRecording> recordings,
                                         const FeatureConfig& config, execution policy) {
  std::vector<FeatureVector> out(recordings.size());
  for_each_index(policy, recordings.size(), [&](std::size_t i) {
    const RangedRecording& rec = recordings[i];
    const Waveform crop = crop_to_range(rec.audio, rec.range_m, config.crop, config.speed_of_sound);
    out[i] = extract_features(crop, config);
    out[i].label = rec.label;
  });
  return out;
}

void write_feature_csv(std::ostream& out, std::span<const FeatureVector> features) {
  const std::size_t dim = features.empty() ? 0 : features.front().values.size();
  for (std::size_t i = 0; i < dim; ++i) out << fmt::format("f{:02d},", i);
  out << "label\n";
  for (const FeatureVector& fv : features) {
    if (fv.values.size() != dim) throw error(errc::dimension_mismatch, "feature vectors differ in length");
    for (const double v : fv.values) out << fmt::format("{:.17g},", v);
    out << (fv.label ? to_string(*fv.label) : std::string_view{}) << '\n';
  }
}

std::vector<FeatureVector> read_feature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw error(errc::corrupt_file, "feature CSV is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header.back() != "label") {
    throw error(errc::corrupt_file, "feature CSV header must end with a 'label' column");
  }
  const std::size_t dim = header.size() - 1;
  std::vector<FeatureVector> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    FeatureVector fv;
    fv.values.reserve(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      if (!std::getline(ss, cell, ',')) {
        throw error(errc::corrupt_file, fmt::format("line {}: expected {} feature columns", line_no, dim));
      }
      try {
        std::size_t used = 0;
        fv.values.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw error(errc::corrupt_file, fmt::format("line {}: bad number '{}'", line_no, cell));
      }
    }
    std::getline(ss, cell);
    if (!cell.empty()) {
      fv.label = parse_label(cell);
      if (!fv.label) throw error(errc::unknown_label, fmt::format("line {}: unknown label '{}'", line_no, cell));
    }
    rows.push_back(std::move(fv));
  }
  return rows;
}

}  // namespace sonarmark
