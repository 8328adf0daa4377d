#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "llm3dti/fusion_net.hpp"
#include "llm3dti/graph_features.hpp"
#include "llm3dti/numkit.hpp"
#include "llm3dti/random.hpp"
#include "llm3dti/training.hpp"

using namespace llm3dti;

namespace {

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RandomStream s(1);
  const Matrix a = s.gaussian_matrix(n, n), b = s.gaussian_matrix(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_Eigh(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RandomStream s(2);
  const Matrix x = s.gaussian_matrix(n, n);
  const Matrix sym = symmetrize(matmul_nt(x, x));
  for (auto _ : state) benchmark::DoNotOptimize(eigh(sym));
}
BENCHMARK(BM_Eigh)->Arg(50)->Arg(100)->Arg(150)->Unit(benchmark::kMillisecond);

void BM_Rwr(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RandomStream s(3);
  AssociationNetwork net;
  net.kind = NetworkKind::drug_disease;
  for (std::size_t i = 0; i < n; ++i) net.row_ids.push_back("D" + std::to_string(i));
  for (std::size_t i = 0; i < n / 2; ++i) net.col_ids.push_back("X" + std::to_string(i));
  net.adjacency = Matrix(n, n / 2);
  for (auto& v : net.adjacency.data()) v = s.uniform() < 0.1 ? 1.0 : 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(rwr(net, 0.5));
}
BENCHMARK(BM_Rwr)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const std::size_t n = 64;
  RandomStream s(4);
  ModelInputs in;
  std::vector<std::string> d, p;
  for (std::size_t i = 0; i < n; ++i) {
    d.push_back("D" + std::to_string(i));
    p.push_back("P" + std::to_string(i));
  }
  in.drugs = EntityIndex(d);
  in.proteins = EntityIndex(p);
  in.drug_struct = s.gaussian_matrix(n, 100);
  in.protein_struct = s.gaussian_matrix(n, 100);
  in.drug_text = s.gaussian_matrix(n, 32);
  in.protein_text = s.gaussian_matrix(n, 32);
  ModelParams params = init_params(s, in.dims(hidden));
  auto opt = make_optimizer(params);
  std::vector<PairRows> batch;
  std::vector<double> y;
  for (std::size_t i = 0; i < n; ++i) {
    batch.push_back({i, (7 * i) % n});
    y.push_back(static_cast<double>(i % 2));
  }
  TrainConfig cfg;
  std::uint64_t t = 0;
  for (auto _ : state) {
    const auto acts = forward(batch, in, params);
    const auto g = backward(acts, y, params, LossSpec{});
    adamw_step(params, g.params, opt, ++t, cfg);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
