#include <benchmark/benchmark.h>

#include <fedsentry/aggregate.hpp>
#include <fedsentry/compression.hpp>
#include <fedsentry/fusion.hpp>
#include <fedsentry/model.hpp>
#include <fedsentry/protocol.hpp>
#include <fedsentry/rng.hpp>

#include <cstdint>
#include <vector>

using namespace fedsentry;

namespace {

LabeledBatch random_batch(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows(n);
  std::vector<std::uint8_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = rng.next_bernoulli(0.5) ? 1 : 0;
    rows[i].resize(dim);
    for (double& v : rows[i]) v = rng.next_gaussian();
  }
  return LabeledBatch::from_rows(rows, labels);
}

ParamVector random_params(std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(dim);
  for (double& x : v) x = rng.next_gaussian();
  return ParamVector::from_values(v);
}

void bm_local_gradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const LabeledBatch batch = random_batch(n, 8, 1);
  const ParamVector theta = random_params(9, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(local_gradient(theta, batch));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(n));
}
BENCHMARK(bm_local_gradient)->Arg(100)->Arg(1000)->Arg(10000);

void bm_aggregate(benchmark::State& state) {
  const auto clients = static_cast<std::size_t>(state.range(0));
  std::vector<ParamVector> updates;
  for (std::size_t i = 0; i < clients; ++i)
    updates.push_back(random_params(9, 10 + i));
  const std::vector<double> weights = uniform_weights(clients);
  for (auto _ : state) {
    benchmark::DoNotOptimize(aggregate(updates, weights));
  }
}
BENCHMARK(bm_aggregate)->Arg(10)->Arg(100)->Arg(1000);

void bm_fuse(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  std::vector<ModalityFeature> features;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> v(8);
    for (double& x : v) x = rng.next_gaussian();
    features.push_back({static_cast<std::uint32_t>(i), v});
  }
  const FusionWeights weights = FusionWeights::uniform(m);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fuse(features, weights));
  }
}
BENCHMARK(bm_fuse)->Arg(2)->Arg(6)->Arg(16);

void bm_codec_round_trip(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  ClientUpdate update;
  update.client_id = 3;
  update.round = 17;
  update.update = random_params(dim, 4);
  update.n_samples = 700;
  update.train_seconds = 0.125;
  const RoundMessage msg{update};
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode_message(encode_message(msg)));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(encode_message(msg).size()));
}
BENCHMARK(bm_codec_round_trip)->Arg(9)->Arg(128)->Arg(4096);

void bm_compress_topk(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const ParamVector v = random_params(dim, 5);
  const auto k = static_cast<std::uint32_t>(dim / 10 + 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(compress_topk(v, k));
  }
}
BENCHMARK(bm_compress_topk)->Arg(100)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
