// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "fedagg/data.hpp"
#include "fedagg/models.hpp"

namespace {

using namespace fedagg;

void BM_SgdEpoch(benchmark::State& state) {
  const auto data = generate_blobs(100, 4, 20, 1.8, 7);
  ModelSpec spec{20, {}, Activation::kRelu, 4};
  if (state.range(0) > 0) spec.hidden_dims.push_back(static_cast<std::size_t>(state.range(0)));
  const auto params = init_params(spec, 0);
  const TrainConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(sgd_train(params, spec, data, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.size()));
}
BENCHMARK(BM_SgdEpoch)->Arg(0)->Arg(32);

void BM_Evaluate(benchmark::State& state) {
  const auto data = generate_blobs(400, 4, 20, 1.8, 7);
  const ModelSpec spec{20, {}, Activation::kRelu, 4};
  const auto params = init_params(spec, 0);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(params, spec, data));
}
BENCHMARK(BM_Evaluate);

}  // namespace
