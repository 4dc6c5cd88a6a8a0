#include "dpgan/baselines.hpp"
#include "dpgan/datasets.hpp"
#include "dpgan/discriminator.hpp"
#include "dpgan/generator.hpp"
#include "dpgan/layers.hpp"
#include "dpgan/losses.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace dpgan;

Graph bench_graph(int nodes, int features) {
  SyntheticSpec spec;
  spec.num_graphs = 1;
  spec.num_nodes = nodes;
  spec.num_features = features;
  return make_smooth_signal_graphs(spec, 1).front();
}

void BM_GcnForward(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const Graph g = bench_graph(n, 64);
  const Topology t = Topology::from_adjacency(g.adjacency);
  SplitRng rng(1);
  const GcnParams p = GcnParams::init(64, 64, rng);
  const ad::Var x = ad::constant(g.node_features);
  ad::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(gcn_forward(x, t, p).value().data());
}
BENCHMARK(BM_GcnForward)->Arg(20)->Arg(100)->Arg(500);

void BM_GraphPool(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const Graph g = bench_graph(n, 64);
  const Topology t = Topology::from_adjacency(g.adjacency);
  SplitRng rng(2);
  const LeConvParams p = LeConvParams::init(64, rng);
  const ad::Var x = ad::constant(g.node_features);
  ad::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(graph_pool(x, t, 0.5, p).pooled_features.value().data());
}
BENCHMARK(BM_GraphPool)->Arg(20)->Arg(100)->Arg(500);

void BM_NodeMix(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  SplitRng rng(3);
  const MixerParams p = MixerParams::init(n, 64, n, 0.2, rng);
  const ad::Var x = ad::constant(Matrix::Random(n, 64));
  const Vector valid = validity(n, n);
  ad::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(node_mix_forward(x, valid, p).value().data());
}
BENCHMARK(BM_NodeMix)->Arg(20)->Arg(126);

void BM_GeneratorForward(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const Graph g = bench_graph(n, 8);
  const Topology t = Topology::from_adjacency(g.adjacency);
  GeneratorConfig c;
  c.feature_dim = 8;
  c.node_capacity = n;
  c.graph.hidden_dim = 64;
  c.mlp.hidden_dim = 64;
  const Generator gen(c, SplitRng(4));
  const MaskMatrix r = sample_mask(n, 8, 0.3, 5);
  ad::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(gen.forward(g.node_features, r, t).value().data());
}
BENCHMARK(BM_GeneratorForward)->Arg(20)->Arg(100);

void BM_GradientPenalty(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const Graph g = bench_graph(n, 8);
  const Topology t = Topology::from_adjacency(g.adjacency);
  DiscriminatorConfig c;
  c.input_dim = 8;
  c.node_capacity = n;
  c.hidden_dim = 64;
  const Discriminator disc(c, SplitRng(6));
  const CriticFn critic = [&](const ad::Var& x) { return critic_value(disc.forward(x, t)); };
  const Matrix fake = Matrix::Random(n, 8);
  for (auto _ : state) {
    const ad::Var gp = gradient_penalty(critic, g.node_features, fake, 0.5);
    benchmark::DoNotOptimize(ad::grad(gp, disc.parameters().vars()).size());
  }
}
BENCHMARK(BM_GradientPenalty)->Arg(20)->Arg(100);

void BM_KnnImpute(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const Graph g = bench_graph(n, 8);
  const MaskMatrix r = sample_mask(n, 8, 0.3, 7);
  const FeatureMeans means = FeatureMeans::fit(g.node_features, r);
  for (auto _ : state) benchmark::DoNotOptimize(knn_impute(g.node_features, r, KnnConfig{}, means).data());
}
BENCHMARK(BM_KnnImpute)->Arg(20)->Arg(200)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
