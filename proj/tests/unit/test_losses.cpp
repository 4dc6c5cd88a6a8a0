#include "oracles.hpp"

#include "dpgan/discriminator.hpp"
#include "dpgan/generator.hpp"
#include "dpgan/losses.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace dpgan {
namespace {

using testing::random_graph;
using testing::random_matrix;

/// Scores s_i = tanh(x_i . w): a critic whose input gradient has a closed form.
struct TanhCritic {
  Matrix w;  // D x 1

  CriticFn fn() const {
    const ad::Var wv = ad::constant(w);
    return [wv](const ad::Var& x) { return ad::tanh(ad::matmul(x, wv)); };
  }
  double value(const Matrix& x) const { return (x * w).array().tanh().mean(); }
  double penalty(const Matrix& x_hat) const {
    const Eigen::ArrayXd t = (x_hat * w).array().tanh();
    // d/dx_ij mean_k tanh(x_k w) = (1 - t_i^2) w_j / N
    const double n = static_cast<double>(x_hat.rows());
    double sq = 0.0;
    for (Eigen::Index i = 0; i < x_hat.rows(); ++i) {
      for (Eigen::Index j = 0; j < x_hat.cols(); ++j) {
        const double gij = (1.0 - t(i) * t(i)) * w(j, 0) / n;
        sq += gij * gij;
      }
    }
    return (std::sqrt(sq) - 1.0) * (std::sqrt(sq) - 1.0);
  }
};

CriticFn unit_gradient_critic() {
  // Row sums scaled by N / sqrt(N D): the mean score is sum(x) / sqrt(N D).
  return [](const ad::Var& x) {
    const double n = static_cast<double>(x.rows());
    const double d = static_cast<double>(x.cols());
    return ad::scale(ad::row_sums(x), n / std::sqrt(n * d));
  };
}

CriticFn constant_critic(double c) {
  return [c](const ad::Var& x) { return ad::constant(Matrix::Constant(x.rows(), 1, c)); };
}

struct Fixture {
  std::vector<Matrix> real;
  std::vector<Matrix> fake;
  std::vector<MaskMatrix> masks;
};

Fixture three_graphs(std::uint64_t seed) {
  SplitRng rng(seed);
  Fixture f;
  for (int g = 0; g < 3; ++g) {
    const int n = 3 + g * 2;
    f.real.push_back(random_matrix(n, 4, rng, 0.0, 1.0));
    f.fake.push_back(random_matrix(n, 4, rng, 0.0, 1.0));
    f.masks.push_back(sample_mask(n, 4, 0.4, seed * 10 + static_cast<std::uint64_t>(g)));
  }
  return f;
}

// Reconstruction

TEST(LossOracle, ReconstructionExamples) {
  const Matrix x = (Matrix(1, 2) << 1, 0).finished();
  const Matrix xt = (Matrix(1, 2) << 3, 0).finished();
  const MaskMatrix r((Matrix(1, 2) << 0, 1).finished());
  EXPECT_EQ(reconstruction_loss(x, xt, r, ReconNorm::L2), 2.0);
  EXPECT_EQ(reconstruction_loss(x, xt, r, ReconNorm::L1), 2.0);
  EXPECT_EQ(reconstruction_loss(x, x, r, ReconNorm::L2), 0.0);
  EXPECT_EQ(reconstruction_loss(x, xt, MaskMatrix::ones(1, 2), ReconNorm::L2), 0.0);
  EXPECT_EQ(reconstruction_loss(x, xt, MaskMatrix::ones(1, 2), ReconNorm::L1), 0.0);
}

TEST(LossOracle, ReconstructionMatchesLoopOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Fixture f = three_graphs(seed);
    for (std::size_t g = 0; g < 3; ++g) {
      const Matrix& x = f.real[g];
      const Matrix& xt = f.fake[g];
      const Matrix& r = f.masks[g].entries();
      double abs_sum = 0.0;
      int n = 0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (r.data()[i] == 0.0) {
          abs_sum += std::abs(x.data()[i] - xt.data()[i]);
          ++n;
        }
      }
      const double l1 = n == 0 ? 0.0 : abs_sum / n;
      EXPECT_NEAR(reconstruction_loss(x, xt, f.masks[g], ReconNorm::L2), testing::masked_rms_oracle(x, xt, r), 1e-10);
      EXPECT_NEAR(reconstruction_loss(x, xt, f.masks[g], ReconNorm::L1), l1, 1e-10);
    }
  }
}

TEST(LossProperty, ReconstructionNonNegativeAndZeroIffResidualVanishes) {
  SplitRng rng(3);
  for (int t = 0; t < 30; ++t) {
    const Matrix x = random_matrix(5, 3, rng);
    Matrix xt = random_matrix(5, 3, rng);
    const MaskMatrix r = sample_mask(5, 3, 0.5, static_cast<std::uint64_t>(t));
    for (auto norm : {ReconNorm::L1, ReconNorm::L2}) {
      EXPECT_GE(reconstruction_loss(x, xt, r, norm), 0.0);
      const Matrix exact_on_missing = compose_imputation(xt, r, x);
      EXPECT_EQ(reconstruction_loss(x, exact_on_missing, r, norm), 0.0);
      if (r.missing_count() > 0) EXPECT_GT(reconstruction_loss(x, xt, r, norm), 0.0);
    }
  }
}

// Gradient penalty

TEST(GradientPenalty, UnitGradientLinearCritic) {
  SplitRng rng(4);
  for (int t = 0; t < 5; ++t) {
    const Matrix real = random_matrix(6, 4, rng);
    const Matrix fake = random_matrix(6, 4, rng);
    EXPECT_NEAR(gradient_penalty(unit_gradient_critic(), real, fake, rng.uniform()).scalar(), 0.0, 1e-8);
  }
}

TEST(GradientPenalty, ConstantCritic) {
  SplitRng rng(5);
  const Matrix real = random_matrix(6, 4, rng);
  const Matrix fake = random_matrix(6, 4, rng);
  EXPECT_NEAR(gradient_penalty(constant_critic(0.3), real, fake, 0.25).scalar(), 1.0, 1e-8);
}

TEST(GradientPenalty, MatchesClosedFormTanhCritic) {
  SplitRng rng(6);
  for (int t = 0; t < 10; ++t) {
    const TanhCritic c{random_matrix(4, 1, rng, -3.0, 3.0)};
    const Matrix real = random_matrix(5, 4, rng);
    const Matrix fake = random_matrix(5, 4, rng);
    const double eps = rng.uniform();
    const Matrix x_hat = eps * real + (1.0 - eps) * fake;
    EXPECT_NEAR(gradient_penalty(c.fn(), real, fake, eps).scalar(), c.penalty(x_hat), 1e-10);
  }
}

TEST(GradientPenalty, SymmetricUnderSwapAtHalf) {
  SplitRng rng(7);
  const Discriminator disc(
      [] {
        DiscriminatorConfig c;
        c.input_dim = 3;
        c.node_capacity = 8;
        c.hidden_dim = 4;
        return c;
      }(),
      SplitRng(7));
  const Graph g = random_graph(8, 0.5, 3, 7);
  const Topology t = Topology::from_adjacency(g.adjacency);
  const CriticFn critic = [&](const ad::Var& x) { return disc.forward(x, t); };
  const Matrix fake = random_matrix(8, 3, rng);
  EXPECT_EQ(gradient_penalty(critic, g.node_features, fake, 0.5).scalar(),
            gradient_penalty(critic, fake, g.node_features, 0.5).scalar());
}

TEST(GradientPenaltyGradient, NormMatchesFiniteDifferences) {
  DiscriminatorConfig cfg;
  cfg.input_dim = 3;
  cfg.node_capacity = 7;
  cfg.hidden_dim = 4;
  const Discriminator disc(cfg, SplitRng(8));
  const Graph g = random_graph(7, 0.5, 3, 8);
  const Topology t = Topology::from_adjacency(g.adjacency);
  const CriticFn critic = [&](const ad::Var& x) { return disc.forward(x, t); };
  SplitRng rng(9);
  const Matrix fake = random_matrix(7, 3, rng);
  const double eps = 0.3;
  const Matrix x_hat = eps * g.node_features + (1.0 - eps) * fake;

  ad::NoGradGuard no_grad;
  Matrix probe = x_hat;
  double sq = 0.0;
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < probe.size(); ++i) {
    const double saved = probe.data()[i];
    probe.data()[i] = saved + h;
    const double up = critic_value(critic(ad::constant(probe))).scalar();
    probe.data()[i] = saved - h;
    const double down = critic_value(critic(ad::constant(probe))).scalar();
    probe.data()[i] = saved;
    sq += ((up - down) / (2 * h)) * ((up - down) / (2 * h));
  }
  const double expected = (std::sqrt(sq) - 1.0) * (std::sqrt(sq) - 1.0);
  const double got = gradient_penalty(critic, g.node_features, fake, eps).scalar();
  EXPECT_LT(std::abs(got - expected), 1e-3 * std::max(1.0, std::abs(expected)));
}

TEST(GradientPenaltyGradient, SecondOrderWrtCriticParameters) {
  DiscriminatorConfig cfg;
  cfg.input_dim = 3;
  cfg.node_capacity = 7;
  cfg.hidden_dim = 4;
  cfg.hops = 1;
  const Discriminator disc(cfg, SplitRng(10));
  const Graph g = random_graph(7, 0.5, 3, 10);
  const Topology t = Topology::from_adjacency(g.adjacency);
  const CriticFn critic = [&](const ad::Var& x) { return disc.forward(x, t); };
  SplitRng rng(11);
  const Matrix fake = random_matrix(7, 3, rng);
  const auto f = [&] { return gradient_penalty(critic, g.node_features, fake, 0.4); };
  EXPECT_LT(testing::gradient_relative_error(f, disc.parameters().vars()), 1e-3);
}

// Critic loss

TEST(LossOracle, CriticLossConstantCriticIsLambdaGp) {
  const Fixture f = three_graphs(12);
  const LossConfig cfg;
  for (std::size_t b = 1; b <= 3; ++b) {
    std::vector<CriticSample> batch;
    for (std::size_t g = 0; g < b; ++g) batch.push_back({constant_critic(-1.5), f.real[g], f.fake[g]});
    SplitRng rng(12);
    EXPECT_EQ(critic_loss(batch, cfg, rng).scalar(), 10.0) << "batch " << b;
  }
}

TEST(LossOracle, CriticLossZeroWeightCriticRealEqualsFake) {
  const Fixture f = three_graphs(13);
  DiscriminatorConfig dc;
  dc.input_dim = 4;
  dc.node_capacity = 7;
  dc.hidden_dim = 4;
  Discriminator disc(dc, SplitRng(13));
  for (auto& [name, v] : disc.parameters().entries()) {
    ad::Var leaf = v;
    leaf.mutable_value().setZero();
  }
  std::vector<Topology> topos;
  for (const auto& x : f.real) {
    topos.push_back(Topology::from_adjacency(random_graph(static_cast<int>(x.rows()), 0.5, 1, 1).adjacency));
  }
  std::vector<CriticSample> batch;
  for (std::size_t g = 0; g < 3; ++g) {
    const Topology* t = &topos[g];
    batch.push_back({[&disc, t](const ad::Var& x) { return disc.forward(x, *t); }, f.real[g], f.real[g]});
  }
  SplitRng rng(13);
  EXPECT_EQ(critic_loss(batch, LossConfig{}, rng).scalar(), 10.0);
}

TEST(LossOracle, CriticLossMatchesStraightLineOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Fixture f = three_graphs(100 + seed);
    SplitRng wrng(seed);
    std::vector<TanhCritic> critics;
    std::vector<CriticSample> batch;
    for (std::size_t g = 0; g < 3; ++g) {
      critics.push_back({random_matrix(4, 1, wrng, -2.0, 2.0)});
      batch.push_back({critics.back().fn(), f.real[g], f.fake[g]});
    }
    LossConfig cfg;
    cfg.lambda_gp = 10.0;
    SplitRng rng(seed + 7);
    SplitRng oracle_rng(seed + 7);
    const CriticLossParts parts = critic_loss_parts(batch, cfg, rng);

    double total = 0.0;
    double w_sum = 0.0;
    double gp_sum = 0.0;
    for (std::size_t g = 0; g < 3; ++g) {
      const double eps = oracle_rng.uniform();
      const double w = critics[g].value(f.fake[g]) - critics[g].value(f.real[g]);
      const double gp = critics[g].penalty(eps * f.real[g] + (1.0 - eps) * f.fake[g]);
      total += w + cfg.lambda_gp * gp;
      w_sum += w;
      gp_sum += gp;
    }
    EXPECT_NEAR(parts.total.scalar(), total / 3.0, 1e-10);
    EXPECT_NEAR(parts.wasserstein, w_sum / 3.0, 1e-10);
    EXPECT_NEAR(parts.penalty, gp_sum / 3.0, 1e-10);
  }
}

TEST(LossOracle, CriticLossComposesComponentsForRealCritic) {
  DiscriminatorConfig dc;
  dc.input_dim = 4;
  dc.node_capacity = 8;
  dc.hidden_dim = 5;
  const Discriminator disc(dc, SplitRng(14));
  std::vector<Graph> graphs{random_graph(6, 0.5, 4, 14), random_graph(8, 0.4, 4, 15)};
  std::vector<Topology> topos;
  for (const auto& g : graphs) topos.push_back(Topology::from_adjacency(g.adjacency));
  SplitRng frng(16);
  std::vector<CriticSample> batch;
  for (std::size_t g = 0; g < 2; ++g) {
    const Topology* t = &topos[g];
    batch.push_back({[&disc, t](const ad::Var& x) { return disc.forward(x, *t); }, graphs[g].node_features,
                     random_matrix(graphs[g].num_nodes(), 4, frng, 0.0, 1.0)});
  }
  LossConfig cfg;
  SplitRng rng(17);
  SplitRng oracle_rng(17);
  const double got = critic_loss(batch, cfg, rng).scalar();
  double expected = 0.0;
  for (const auto& s : batch) {
    const double eps = oracle_rng.uniform();
    expected += critic_value(s.critic(ad::constant(s.fake))).scalar() -
                critic_value(s.critic(ad::constant(s.real))).scalar() +
                cfg.lambda_gp * gradient_penalty(s.critic, s.real, s.fake, eps).scalar();
  }
  EXPECT_NEAR(got, expected / 2.0, 1e-10);
}

// Generator loss

TEST(LossOracle, GeneratorLossMatchesStraightLineOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Fixture f = three_graphs(200 + seed);
    SplitRng wrng(seed);
    for (std::size_t g = 0; g < 3; ++g) {
      const TanhCritic c{random_matrix(4, 1, wrng, -2.0, 2.0)};
      for (double lambda_r : {0.0, 1.0, 10.0, 100.0}) {
        for (auto norm : {ReconNorm::L1, ReconNorm::L2}) {
          LossConfig cfg;
          cfg.lambda_r = lambda_r;
          cfg.recon_norm = norm;
          const Matrix& x = f.real[g];
          const Matrix& xt = f.fake[g];
          const Matrix& r = f.masks[g].entries();
          Matrix composite = x;
          double abs_sum = 0.0;
          int n = 0;
          for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (r.data()[i] == 0.0) {
              composite.data()[i] = xt.data()[i];
              abs_sum += std::abs(x.data()[i] - xt.data()[i]);
              ++n;
            }
          }
          const double recon =
              norm == ReconNorm::L2 ? testing::masked_rms_oracle(x, xt, r) : (n == 0 ? 0.0 : abs_sum / n);
          const double expected = -c.value(composite) + lambda_r * recon;
          EXPECT_NEAR(generator_loss(c.fn(), x, f.masks[g], ad::constant(xt), cfg).scalar(), expected, 1e-10);
        }
      }
    }
  }
}

TEST(LossOracle, GeneratorLossZeroWeightCriticPerfectReconstruction) {
  DiscriminatorConfig dc;
  dc.input_dim = 3;
  dc.node_capacity = 6;
  dc.hidden_dim = 4;
  Discriminator disc(dc, SplitRng(18));
  disc.head_weight().mutable_value().setZero();
  disc.head_bias().mutable_value()(0, 0) = 0.8;
  const Graph g = random_graph(6, 0.5, 3, 18);
  const Topology t = Topology::from_adjacency(g.adjacency);
  const CriticFn critic = [&](const ad::Var& x) { return disc.forward(x, t); };
  const MaskMatrix r = sample_mask(6, 3, 0.5, 18);
  EXPECT_NEAR(generator_loss(critic, g.node_features, r, ad::constant(g.node_features), LossConfig{}).scalar(), -0.8,
              1e-15);
}

TEST(LossOracle, GeneratorLossWithoutAdversarialTerm) {
  const Fixture f = three_graphs(19);
  LossConfig cfg;
  cfg.adversarial = false;
  const double got = generator_loss(constant_critic(5.0), f.real[0], f.masks[0], ad::constant(f.fake[0]), cfg).scalar();
  EXPECT_NEAR(got, 10.0 * testing::masked_rms_oracle(f.real[0], f.fake[0], f.masks[0].entries()), 1e-12);
}

TEST(LossGradient, GeneratorLossWrtImputation) {
  const Fixture f = three_graphs(20);
  SplitRng wrng(20);
  const TanhCritic c{random_matrix(4, 1, wrng)};
  ad::Var xt = ad::parameter(f.fake[1]);
  const auto fn = [&] { return generator_loss(c.fn(), f.real[1], f.masks[1], xt, LossConfig{}); };
  EXPECT_LT(testing::gradient_relative_error(fn, {xt}), 1e-6);
}

}  // namespace
}  // namespace dpgan
