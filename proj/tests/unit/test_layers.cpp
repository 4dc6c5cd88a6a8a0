#include "oracles.hpp"

#include "dpgan/errors.hpp"
#include "dpgan/layers.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace dpgan {
namespace {

using testing::dense;
using testing::gradient_relative_error;
using testing::random_graph;
using testing::random_matrix;

Topology topo_of(const Graph& g) { return Topology::from_adjacency(g.adjacency); }

GcnParams identity_gcn(Eigen::Index d) {
  return {ad::parameter(Matrix::Identity(d, d)), ad::parameter(Matrix::Zero(1, d))};
}

MixerParams identity_mixer(Eigen::Index n) {
  MixerParams p;
  p.w1 = ad::parameter(Matrix::Identity(n, n));
  p.b1 = ad::parameter(Matrix::Zero(1, n));
  p.w2 = ad::parameter(Matrix::Identity(n, n));
  p.b2 = ad::parameter(Matrix::Zero(1, n));
  p.leaky_slope = 1.0;
  return p;
}

MixerParams random_mixer(Eigen::Index in, Eigen::Index hidden, Eigen::Index out, SplitRng& rng) {
  MixerParams p;
  p.w1 = ad::parameter(random_matrix(in, hidden, rng));
  p.b1 = ad::parameter(random_matrix(1, hidden, rng));
  p.w2 = ad::parameter(random_matrix(hidden, out, rng));
  p.b2 = ad::parameter(random_matrix(1, out, rng));
  p.leaky_slope = 0.2;
  return p;
}

LeConvParams random_leconv(Eigen::Index d, SplitRng& rng) {
  return {ad::parameter(random_matrix(d, 1, rng)), ad::parameter(random_matrix(d, 1, rng)),
          ad::parameter(random_matrix(d, 1, rng)), ad::parameter(random_matrix(1, 1, rng))};
}

Matrix permutation_matrix(const std::vector<int>& perm) {
  const auto n = static_cast<Eigen::Index>(perm.size());
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) p(i, perm[static_cast<std::size_t>(i)]) = 1.0;
  return p;
}

Graph permute(const Graph& g, const Matrix& p) {
  std::vector<std::pair<int, int>> edges;
  const Matrix a = p * dense(g.adjacency) * p.transpose();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
      if (a(i, j) != 0.0) edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return Graph::from_edges(p * g.node_features, edges);
}

// GCN

TEST(Layers, GcnSingleNodeIsIdentity) {
  const Graph g = Graph::from_edges((Matrix(1, 3) << 1.5, -2.0, 0.25).finished(), {});
  const Matrix y = gcn_forward(ad::constant(g.node_features), topo_of(g), identity_gcn(3)).value();
  EXPECT_EQ(y, g.node_features);
}

TEST(Layers, GcnTwoNodePathEqualFeatures) {
  const std::vector<std::pair<int, int>> e{{0, 1}};
  const Graph g = Graph::from_edges(Matrix::Constant(2, 2, 0.7), e);
  const Matrix y = gcn_forward(ad::constant(g.node_features), topo_of(g), identity_gcn(2)).value();
  EXPECT_NEAR((y - g.node_features).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(Layers, GcnMatchesDenseOracle) {
  SplitRng rng(1);
  for (int t = 0; t < 5; ++t) {
    const Graph g = random_graph(4, 0.5, 3, 100 + static_cast<std::uint64_t>(t));
    const GcnParams p = GcnParams::init(3, 5, rng);
    const Matrix y = gcn_forward(ad::constant(g.node_features), topo_of(g), p).value();
    const Matrix expected =
        testing::gcn_oracle(g.node_features, dense(g.adjacency), p.weight.value(), p.bias.value());
    EXPECT_LT((y - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Layers, GcnShapeMismatchThrows) {
  const Graph g = random_graph(4, 0.5, 3, 1);
  SplitRng rng(1);
  EXPECT_THROW(gcn_forward(ad::constant(g.node_features), topo_of(g), GcnParams::init(2, 2, rng)), ValidationError);
}

TEST(LayersProperty, GcnPermutationEquivariance) {
  SplitRng rng(2);
  for (int t = 0; t < 10; ++t) {
    const Graph g = random_graph(9, 0.35, 4, 200 + static_cast<std::uint64_t>(t));
    const GcnParams p = GcnParams::init(4, 6, rng);
    const Matrix perm = permutation_matrix(rng.permutation(9));
    const Graph pg = permute(g, perm);
    const Matrix lhs = gcn_forward(ad::constant(pg.node_features), topo_of(pg), p).value();
    const Matrix rhs = perm * gcn_forward(ad::constant(g.node_features), topo_of(g), p).value();
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);
  }
}

// LEConv

TEST(Layers, LeConvIsolatedNode) {
  SplitRng rng(3);
  const Graph g = Graph::from_edges(random_matrix(1, 4, rng), {});
  const LeConvParams p = random_leconv(4, rng);
  const double y = leconv_score(ad::constant(g.node_features), topo_of(g), p).value()(0, 0);
  EXPECT_NEAR(y, (g.node_features * p.w_self.value())(0, 0) + p.bias.value()(0, 0), 1e-14);
}

TEST(Layers, LeConvNeighbourTermCancels) {
  SplitRng rng(4);
  const Graph g = random_graph(6, 0.6, 3, 5);
  Graph same = g;
  same.node_features = random_matrix(1, 3, rng).replicate(6, 1);
  LeConvParams p = random_leconv(3, rng);
  p.w_dst = ad::parameter(p.w_src.value());
  const Matrix y = leconv_score(ad::constant(same.node_features), topo_of(same), p).value();
  const double self = (same.node_features.row(0) * p.w_self.value())(0, 0) + p.bias.value()(0, 0);
  for (Eigen::Index i = 0; i < 6; ++i) EXPECT_NEAR(y(i, 0), self, 1e-13);
}

TEST(Layers, LeConvTriangleMatchesLoopOracle) {
  SplitRng rng(5);
  const std::vector<std::pair<int, int>> e{{0, 1}, {1, 2}, {0, 2}};
  const Graph g = Graph::from_edges(random_matrix(3, 4, rng), e);
  const LeConvParams p = random_leconv(4, rng);
  const Matrix y = leconv_score(ad::constant(g.node_features), topo_of(g), p).value();
  const auto expected = testing::leconv_oracle(g.node_features, dense(g.adjacency), p.w_self.value(),
                                               p.w_src.value(), p.w_dst.value(), p.bias.value()(0, 0));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(y(i, 0), expected[static_cast<std::size_t>(i)], 1e-13);
}

// top-k

TEST(Layers, TopkExamples) {
  const std::vector<double> ten{9, 8, 7, 6, 5, 4, 3, 2, 1, 0};
  EXPECT_EQ(topk_select(ten, 0.5).size(), 5u);
  EXPECT_EQ(topk_select(std::vector<double>{-3.0}, 0.1), std::vector<int>{0});
  EXPECT_EQ(topk_select(std::vector<double>{3, 1, 3, 2}, 0.5), (std::vector<int>{0, 2}));
  EXPECT_EQ(topk_select(std::vector<double>{1, 2, 2, 2}, 0.5), (std::vector<int>{1, 2}));
  EXPECT_THROW(topk_select(ten, 0.0), ValidationError);
  EXPECT_THROW(topk_select(ten, -0.5), ValidationError);
}

TEST(LayersProperty, TopkMatchesOracleWithTies) {
  SplitRng rng(6);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(rng.below(30));
    std::vector<double> s(static_cast<std::size_t>(n));
    for (auto& v : s) v = static_cast<double>(rng.below(5));
    const double ratio = rng.uniform(0.05, 1.0);
    const auto idx = topk_select(s, ratio);
    EXPECT_EQ(idx, testing::topk_oracle(s, ratio));
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
  }
}

// Pooling

TEST(LayersProperty, PoolSizeLaw) {
  SplitRng rng(7);
  for (int n = 1; n <= 64; ++n) {
    const Graph g = random_graph(n, 0.2, 3, static_cast<std::uint64_t>(n));
    for (int h = 0; h <= 4; ++h) {
      Topology topo = topo_of(g);
      ad::Var x = ad::constant(g.node_features);
      for (int l = 0; l < h; ++l) {
        PoolResult r = graph_pool(x, topo, 0.5, random_leconv(3, rng));
        x = r.pooled_features;
        topo = std::move(r.pooled);
      }
      const int expected = static_cast<int>(std::ceil(n * std::pow(0.5, h)));
      EXPECT_EQ(x.rows(), expected) << "n=" << n << " h=" << h;
      EXPECT_EQ(topo.num_nodes(), expected);
    }
  }
}

TEST(Layers, PoolFullRetention) {
  SplitRng rng(8);
  const Graph g = random_graph(7, 0.4, 3, 8);
  const LeConvParams p = random_leconv(3, rng);
  const PoolResult r = graph_pool(ad::constant(g.node_features), topo_of(g), 1.0, p);
  const Matrix y = r.scores.value();
  const Matrix expected = g.node_features.array().colwise() * y.col(0).array().tanh();
  EXPECT_EQ(r.pooled_features.value(), expected);
  EXPECT_EQ(dense(r.pooled_adjacency()), dense(g.adjacency));
}

TEST(Layers, PoolZeroParamsAnnihilates) {
  const Graph g = random_graph(6, 0.5, 3, 9);
  const LeConvParams p{ad::parameter(Matrix::Zero(3, 1)), ad::parameter(Matrix::Zero(3, 1)),
                       ad::parameter(Matrix::Zero(3, 1)), ad::parameter(Matrix::Zero(1, 1))};
  const PoolResult r = graph_pool(ad::constant(g.node_features), topo_of(g), 0.5, p);
  EXPECT_TRUE(r.pooled_features.value().isZero());
  EXPECT_EQ(r.idx, (std::vector<int>{0, 1, 2}));
}

TEST(Layers, PoolMatchesCompositionOracle) {
  SplitRng rng(10);
  for (int t = 0; t < 5; ++t) {
    const Graph g = random_graph(6, 0.5, 4, 300 + static_cast<std::uint64_t>(t));
    const LeConvParams p = random_leconv(4, rng);
    const PoolResult r = graph_pool(ad::constant(g.node_features), topo_of(g), 0.5, p);
    const Matrix a = dense(g.adjacency);
    const auto y = testing::leconv_oracle(g.node_features, a, p.w_self.value(), p.w_src.value(), p.w_dst.value(),
                                          p.bias.value()(0, 0));
    const auto idx = testing::topk_oracle(y, 0.5);
    ASSERT_EQ(r.idx, idx);
    for (std::size_t s = 0; s < idx.size(); ++s) {
      for (Eigen::Index c = 0; c < 4; ++c) {
        const double expected = g.node_features(idx[s], c) * std::tanh(y[static_cast<std::size_t>(idx[s])]);
        EXPECT_NEAR(r.pooled_features.value()(static_cast<Eigen::Index>(s), c), expected, 1e-13);
      }
      for (std::size_t u = 0; u < idx.size(); ++u) {
        EXPECT_EQ(dense(r.pooled_adjacency())(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(u)),
                  a(idx[s], idx[u]));
      }
    }
  }
}

TEST(LayersProperty, PoolRestrictionConsistency) {
  SplitRng rng(11);
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + static_cast<int>(rng.below(20));
    const Graph g = random_graph(n, 0.3, 2, 400 + static_cast<std::uint64_t>(t));
    const PoolResult r = graph_pool(ad::constant(g.node_features), topo_of(g), 0.5, random_leconv(2, rng));
    const Matrix a = dense(g.adjacency);
    const Matrix ap = dense(r.pooled_adjacency());
    for (std::size_t s = 0; s < r.idx.size(); ++s) {
      EXPECT_LT(r.idx[s], n);
      if (s > 0) EXPECT_LT(r.idx[s - 1], r.idx[s]);
      for (std::size_t u = 0; u < r.idx.size(); ++u) {
        EXPECT_EQ(ap(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(u)), a(r.idx[s], r.idx[u]));
      }
    }
  }
}

TEST(Layers, AugmentedConnectivityAddsTwoHopEdges) {
  const std::vector<std::pair<int, int>> e{{0, 1}, {1, 2}};
  const Topology t = Topology::from_adjacency(Graph::from_edges(Matrix::Zero(3, 1), e).adjacency);
  const std::vector<int> keep{0, 2};
  EXPECT_EQ(dense(t.restrict_to(keep).adjacency).sum(), 0.0);
  EXPECT_EQ(dense(t.restrict_augmented(keep).adjacency).sum(), 2.0);
}

// Unpooling

TEST(Layers, UnpoolExamples) {
  SplitRng rng(12);
  const Matrix x = random_matrix(4, 3, rng);
  const std::vector<int> all{0, 1, 2, 3};
  EXPECT_EQ(graph_unpool(ad::constant(x), all, 4).value(), x);
  const Matrix row = random_matrix(1, 3, rng);
  const std::vector<int> two{2};
  const Matrix y = graph_unpool(ad::constant(row), two, 4).value();
  EXPECT_TRUE(y.row(0).isZero());
  EXPECT_TRUE(y.row(1).isZero());
  EXPECT_TRUE(y.row(3).isZero());
  EXPECT_EQ(Matrix(y.row(2)), row);
  const std::vector<int> bad{4};
  EXPECT_THROW(graph_unpool(ad::constant(row), bad, 4), ValidationError);
}

TEST(LayersProperty, UnpoolSliceInverseBitExact) {
  SplitRng rng(13);
  for (int t = 0; t < 100; ++t) {
    const int l = 1 + static_cast<int>(rng.below(40));
    auto perm = rng.permutation(l);
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(l)));
    std::vector<int> idx(perm.begin(), perm.begin() + k);
    std::sort(idx.begin(), idx.end());
    const Matrix small = random_matrix(k, 3, rng, -1e6, 1e6);
    const ad::Var big = graph_unpool(ad::constant(small), idx, l);
    EXPECT_EQ(ad::gather_rows(big, idx).value(), small);
  }
}

// Mixers

TEST(Layers, NodeMixIdentityAndZero) {
  SplitRng rng(14);
  const Matrix x = random_matrix(5, 3, rng);
  const Vector valid = Vector::Ones(5);
  EXPECT_EQ(node_mix_forward(ad::constant(x), valid, identity_mixer(5)).value(), x);
  MixerParams p = random_mixer(5, 4, 5, rng);
  p.b1 = ad::parameter(Matrix::Zero(1, 4));
  p.b2 = ad::parameter(Matrix::Zero(1, 5));
  EXPECT_TRUE(node_mix_forward(ad::constant(Matrix::Zero(5, 3)), valid, p).value().isZero());
}

TEST(Layers, NodeMixMatchesColumnOracle) {
  SplitRng rng(15);
  const Matrix x = random_matrix(5, 3, rng);
  const MixerParams p = random_mixer(5, 7, 5, rng);
  const Vector valid = Vector::Ones(5);
  const Matrix y = node_mix_forward(ad::constant(x), valid, p).value();
  EXPECT_LT((y - testing::node_mix_oracle(x, valid, p)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Layers, NodeMixMasksPaddedRows) {
  SplitRng rng(16);
  Matrix x = random_matrix(6, 2, rng);
  const Vector valid = validity(4, 6);
  const MixerParams p = random_mixer(6, 6, 6, rng);
  const Matrix y = node_mix_forward(ad::constant(x), valid, p).value();
  EXPECT_TRUE(y.bottomRows(2).isZero());
  // Garbage in padded rows does not leak into valid rows.
  x.bottomRows(2).setConstant(1e3);
  EXPECT_EQ(node_mix_forward(ad::constant(x), valid, p).value(), y);
  EXPECT_LT((y - testing::node_mix_oracle(x, valid, p)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LayersProperty, NodeMixIsNotPermutationEquivariant) {
  SplitRng rng(17);
  const Matrix x = random_matrix(6, 3, rng);
  const MixerParams p = random_mixer(6, 8, 6, rng);
  const Vector valid = Vector::Ones(6);
  const Matrix perm = permutation_matrix({1, 0, 3, 2, 5, 4});
  const Matrix lhs = node_mix_forward(ad::constant(perm * x), valid, p).value();
  const Matrix rhs = perm * node_mix_forward(ad::constant(x), valid, p).value();
  EXPECT_GT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Layers, FeatureMixExamples) {
  SplitRng rng(18);
  const Matrix x = random_matrix(4, 6, rng);
  EXPECT_EQ(feature_mix_forward(ad::constant(x), identity_mixer(6)).value(), x);
  const MixerParams p = random_mixer(6, 5, 6, rng);
  const Matrix y = feature_mix_forward(ad::constant(x), p).value();
  EXPECT_LT((y - testing::feature_mix_oracle(x, p)).cwiseAbs().maxCoeff(), 1e-13);
  const Matrix one = x.topRows(1);
  const Matrix y1 = feature_mix_forward(ad::constant(one), p).value();
  EXPECT_LT((y1 - testing::mixer_row_oracle(one.row(0), p)).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_THROW(feature_mix_forward(ad::constant(random_matrix(2, 5, rng)), p), ValidationError);
}

// Gradients

TEST(LayersGradient, Gcn) {
  SplitRng rng(20);
  const Graph g = random_graph(6, 0.5, 3, 20);
  const Topology t = topo_of(g);
  ad::Var x = ad::parameter(g.node_features);
  const GcnParams p = GcnParams::init(3, 4, rng);
  const Matrix proj = random_matrix(6, 4, rng);
  const auto f = [&] { return ad::sum(ad::mul(ad::tanh(gcn_forward(x, t, p)), ad::constant(proj))); };
  EXPECT_LT(gradient_relative_error(f, {x, p.weight, p.bias}), 1e-4);
}

TEST(LayersGradient, LeConv) {
  SplitRng rng(21);
  const Graph g = random_graph(6, 0.5, 3, 21);
  const Topology t = topo_of(g);
  ad::Var x = ad::parameter(g.node_features);
  const LeConvParams p = random_leconv(3, rng);
  const auto f = [&] { return ad::sum(ad::tanh(leconv_score(x, t, p))); };
  EXPECT_LT(gradient_relative_error(f, {x, p.w_self, p.w_src, p.w_dst, p.bias}), 1e-4);
}

TEST(LayersGradient, GraphPoolThroughGate) {
  SplitRng rng(22);
  const Graph g = random_graph(8, 0.5, 3, 22);
  const Topology t = topo_of(g);
  ad::Var x = ad::parameter(g.node_features);
  const LeConvParams p = random_leconv(3, rng);
  const Matrix proj = random_matrix(4, 3, rng);
  const auto f = [&] { return ad::sum(ad::mul(graph_pool(x, t, 0.5, p).pooled_features, ad::constant(proj))); };
  EXPECT_LT(gradient_relative_error(f, {x, p.w_self, p.w_src, p.w_dst, p.bias}), 1e-4);
}

TEST(LayersGradient, FeatureMix) {
  SplitRng rng(23);
  ad::Var x = ad::parameter(random_matrix(4, 6, rng));
  const MixerParams p = random_mixer(6, 5, 6, rng);
  const Matrix proj = random_matrix(4, 6, rng);
  const auto f = [&] { return ad::sum(ad::mul(feature_mix_forward(x, p), ad::constant(proj))); };
  EXPECT_LT(gradient_relative_error(f, {x, p.w1, p.b1, p.w2, p.b2}), 1e-4);
}

TEST(LayersGradient, NodeMix) {
  SplitRng rng(24);
  ad::Var x = ad::parameter(random_matrix(5, 3, rng));
  const MixerParams p = random_mixer(5, 4, 5, rng);
  const Vector valid = validity(4, 5);
  const Matrix proj = random_matrix(5, 3, rng);
  const auto f = [&] { return ad::sum(ad::mul(node_mix_forward(x, valid, p), ad::constant(proj))); };
  EXPECT_LT(gradient_relative_error(f, {x, p.w1, p.b1, p.w2, p.b2}), 1e-4);
}

}  // namespace
}  // namespace dpgan
