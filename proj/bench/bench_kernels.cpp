// Serial reference vs OpenMP kernel timings. Arg 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include <filesystem>

#include <sonarmark/corpus.hpp>
#include <sonarmark/pipeline.hpp>
#include <sonarmark/rng.hpp>

using namespace sonarmark;

namespace {

execution policy_of(const benchmark::State& state) {
  return state.range(0) ? execution::parallel : execution::serial;
}

const std::vector<RangedRecording>& recordings() {
  static const std::vector<RangedRecording> recs = [] {
    const auto batch = default_corpus_template(5);
    std::vector<RangedRecording> out;
    for (std::size_t i = 0; i < batch.scenes.size(); i += 5) {
      out.push_back({simulate_scene(batch, i), batch.scenes[i].range, batch.scenes[i].label});
    }
    return out;
  }();
  return recs;
}

const LabeledDataset& dataset() {
  static const LabeledDataset data = [] {
    const auto fv = extract_batch(recordings(), FeatureConfig{});
    return to_dataset(fv);
  }();
  return data;
}

void BM_filter(benchmark::State& state) {
  Rng rng(1);
  std::vector<double> s(1 << 16);
  for (auto& v : s) v = rng.normal();
  const Waveform w(s);
  const auto h = design_bandpass({});
  for (auto _ : state) benchmark::DoNotOptimize(filter_waveform(w, h, policy_of(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.size()));
}

void BM_extract_batch(benchmark::State& state) {
  const auto& recs = recordings();
  for (auto _ : state) benchmark::DoNotOptimize(extract_batch(recs, FeatureConfig{}, policy_of(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(recs.size()));
}

void BM_train_ovo(benchmark::State& state) {
  const auto& data = dataset();
  for (auto _ : state) benchmark::DoNotOptimize(train_ovo(data.x, data.y, TrainConfig{}, policy_of(state)));
}

void BM_cross_validate(benchmark::State& state) {
  const auto& data = dataset();
  CvConfig cv;
  cv.folds = 10;
  for (auto _ : state) benchmark::DoNotOptimize(cross_validate(data.x, data.y, cv, TrainConfig{}, policy_of(state)));
}

void BM_generate_corpus(benchmark::State& state) {
  SceneBatch batch = default_corpus_template(9);
  batch.scenes.resize(48);
  const auto dir = std::filesystem::temp_directory_path() / "sonarmark_bench_corpus";
  for (auto _ : state) benchmark::DoNotOptimize(generate_corpus(batch, dir, policy_of(state)));
  std::filesystem::remove_all(dir);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.scenes.size()));
}

}  // namespace

BENCHMARK(BM_filter)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_extract_batch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_train_ovo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_cross_validate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_generate_corpus)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
