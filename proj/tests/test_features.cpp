#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <sonarmark/echo.hpp>
#include <sonarmark/error.hpp>
#include <sonarmark/features.hpp>
#include <sonarmark/rng.hpp>

using namespace sonarmark;

namespace {

Waveform tones(std::initializer_list<std::pair<double, double>> parts, std::size_t n = 1024) {
  std::vector<double> s(n, 0.0);
  for (const auto& [f, a] : parts) {
    for (std::size_t i = 0; i < n; ++i) s[i] += a * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / kDefaultSampleRate);
  }
  return Waveform(std::move(s));
}

Waveform noise(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<double> s(n);
  for (auto& v : s) v = rng.normal();
  return Waveform(std::move(s));
}

}  // namespace

TEST_CASE("crop windows") {
  const CropSpec spec{};
  const auto w1 = crop_window(1.0, kDefaultSampleRate, spec);
  CHECK(w1.first == 2112);
  CHECK(w1.last == 3135);
  const auto w06 = crop_window(0.6, kDefaultSampleRate, spec);
  CHECK(w06.first == 1062);
  CHECK(w06.last == 2085);
  // The window spans roughly +-margin of range.
  const double span = sample_to_range(static_cast<double>(w1.last - w1.first + 1));
  CHECK(span == doctest::Approx(2.0 * spec.margin).epsilon(0.03));

  const auto rec = noise(1, 6000);
  const auto crop = crop_to_range(rec, 1.0, spec);
  REQUIRE(crop.size() == 1024);
  CHECK(crop[0] == rec[2112]);
  CHECK(crop[1023] == rec[3135]);
  CHECK_THROWS_AS((void)crop_to_range(noise(1, 3000), 1.0, spec), error);
  CHECK_THROWS_AS((void)crop_at(rec, -1, 10), error);
  CHECK_THROWS_AS((void)crop_at(rec, 5995, 10), error);
  CHECK(crop_at(crop, 0, 1024) == crop);
}

TEST_CASE("bin edges") {
  const auto bins = bin_edges({});
  REQUIRE(bins.size() == 20);
  CHECK(bins.front().lo == 30'000.0);
  CHECK(bins.front().hi == 33'500.0);
  CHECK(!bins.front().closed);
  CHECK(bins.back().lo == 96'500.0);
  CHECK(bins.back().hi == 100'000.0);
  CHECK(bins.back().closed);
  double width_sum = 0.0;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    CHECK(bins[i].hi - bins[i].lo == doctest::Approx(3'500.0).epsilon(1e-12));
    if (i > 0) CHECK(bins[i].lo == bins[i - 1].hi);
    width_sum += bins[i].hi - bins[i].lo;
  }
  CHECK(std::abs(width_sum - 70'000.0) <= 1e-9);
  CHECK(bins.back().contains(100'000.0));
  CHECK(!bins.front().contains(33'500.0));

  const auto one = bin_edges({30'000.0, 100'000.0, 1});
  REQUIRE(one.size() == 1);
  CHECK(one[0].lo == 30'000.0);
  CHECK(one[0].hi == 100'000.0);
  CHECK(one[0].closed);
  CHECK_THROWS_AS((void)bin_edges({30'000.0, 100'000.0, 0}), error);
}

TEST_CASE("integer-bin tone lands in feature bin 6") {
  const double f = 120.0 * kDefaultSampleRate / 1024.0;
  const auto fv = extract_features(tones({{f, 1.0}}), BinSpec{}, 0.25, FilterSpec{});
  REQUIRE(fv.values.size() == 20);
  const auto peak = static_cast<std::size_t>(std::max_element(fv.values.begin(), fv.values.end()) - fv.values.begin());
  CHECK(peak == static_cast<std::size_t>(std::floor((f - 30'000.0) / 3'500.0)));
  CHECK(peak == 6);
  CHECK(fv.values[6] == 1.0);
  for (const double v : fv.values) CHECK(v >= 0.0);
}

TEST_CASE("feature normalization") {
  const auto zero = extract_features(Waveform(std::vector<double>(1024, 0.0)), BinSpec{}, 0.25, FilterSpec{});
  for (const double v : zero.values) CHECK(v == 0.0);

  const auto base = noise(4, 1024);
  const auto fv = extract_features(base, BinSpec{}, 0.25, FilterSpec{});
  CHECK(*std::max_element(fv.values.begin(), fv.values.end()) == 1.0);
  for (const double scale : {10.0, 0.003, 7.25}) {
    std::vector<double> s(base.samples().begin(), base.samples().end());
    for (auto& v : s) v *= scale;
    const auto scaled = extract_features(Waveform(s), BinSpec{}, 0.25, FilterSpec{});
    for (std::size_t i = 0; i < 20; ++i) CHECK(scaled.values[i] == doctest::Approx(fv.values[i]).epsilon(1e-12));
  }
  // Power-of-two scale is exact in floating point.
  std::vector<double> s(base.samples().begin(), base.samples().end());
  for (auto& v : s) v *= 8.0;
  CHECK(extract_features(Waveform(s), BinSpec{}, 0.25, FilterSpec{}).values == fv.values);
}

TEST_CASE("out-of-band energy barely reaches the bins") {
  const auto in_band = binned_spectrum(tones({{65'000.0, 1.0}}), BinSpec{}, 0.25, FilterSpec{});
  const auto out_band = binned_spectrum(tones({{15'000.0, 1.0}, {150'000.0, 1.0}}), BinSpec{}, 0.25, FilterSpec{});
  const double ref = *std::max_element(in_band.begin(), in_band.end());
  for (const double v : out_band) CHECK(v <= 0.01 * ref);
}

TEST_CASE("feature determinism and config checks") {
  const auto w = noise(8, 1024);
  CHECK(extract_features(w, FeatureConfig{}).values == extract_features(w, FeatureConfig{}).values);
  CHECK_THROWS_AS((void)extract_features(noise(8, 1000), FeatureConfig{}), error);
  // More bins than the FFT resolution allows leaves some interval empty.
  CHECK_THROWS_AS((void)binned_spectrum(noise(8, 64), BinSpec{30'000.0, 100'000.0, 20}, 0.25, FilterSpec{30e3, 100e3, 31}),
                  error);
}

TEST_CASE("extract_batch crops at each recording's range") {
  std::vector<RangedRecording> recs;
  recs.push_back({noise(1, 8000), 1.0, Label::R35});
  recs.push_back({noise(2, 8000), 1.6, Label::None});
  recs.push_back({noise(3, 8000), 0.7, std::nullopt});
  const auto batch = extract_batch(recs, FeatureConfig{});
  REQUIRE(batch.size() == 3);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto expect = extract_features(crop_to_range(recs[i].audio, recs[i].range_m, CropSpec{}), FeatureConfig{});
    CHECK(batch[i].values == expect.values);
    CHECK(batch[i].label == recs[i].label);
  }
}

TEST_CASE("feature CSV round trip") {
  std::vector<FeatureVector> fvs;
  Rng rng(21);
  for (int i = 0; i < 6; ++i) {
    FeatureVector fv;
    for (int k = 0; k < 20; ++k) fv.values.push_back(rng.uniform());
    if (i % 3 != 2) fv.label = kAllLabels[static_cast<std::size_t>(i) % kAllLabels.size()];
    fvs.push_back(fv);
  }
  std::stringstream ss;
  write_feature_csv(ss, fvs);
  std::string header;
  std::getline(std::stringstream(ss.str()), header);
  CHECK(header.rfind("f00,f01,", 0) == 0);
  CHECK(header.substr(header.size() - 9) == "f19,label");
  const auto back = read_feature_csv(ss);
  REQUIRE(back.size() == fvs.size());
  for (std::size_t i = 0; i < fvs.size(); ++i) {
    CHECK(back[i].values == fvs[i].values);
    CHECK(back[i].label == fvs[i].label);
  }

  std::stringstream no_header("0.1,0.2,R35\n");
  CHECK_THROWS_AS((void)read_feature_csv(no_header), error);
  std::stringstream bad_label("f00,label\n0.5,R99\n");
  CHECK_THROWS_AS((void)read_feature_csv(bad_label), error);
  std::stringstream bad_number("f00,label\nabc,R35\n");
  CHECK_THROWS_AS((void)read_feature_csv(bad_number), error);
  std::stringstream ragged("f00,f01,label\n0.5,R35\n");
  CHECK_THROWS_AS((void)read_feature_csv(ragged), error);
}

TEST_CASE("landmark echoes differ in spectrum by size") {
  const auto chirp = generate_chirp(ChirpSpec::short_call());
  std::vector<std::vector<double>> feats;
  for (const Label l : {Label::R35, Label::R70}) {
    EchoScene s;
    s.landmark = landmark_for(l);
    s.range = 1.2;
    const auto rec = synthesize_echo(chirp, impulse_response(s), s);
    feats.push_back(extract_features(crop_to_range(rec, 1.2, CropSpec{}), FeatureConfig{}).values);
  }
  double diff = 0.0;
  for (std::size_t i = 0; i < 20; ++i) diff += std::abs(feats[0][i] - feats[1][i]);
  CHECK(diff > 0.5);
}
