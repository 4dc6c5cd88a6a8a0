#include "dpgan/eval.hpp"

#include "dpgan/autodiff.hpp"
#include "dpgan/errors.hpp"
#include "dpgan/layers.hpp"
#include "dpgan/optim.hpp"
#include "dpgan/params.hpp"
#include "dpgan/rng.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace dpgan {
namespace {

struct GcnClassifier {
  GcnParams layer1;
  GcnParams layer2;
  ad::Var out_weight;
  ad::Var out_bias;
  ParameterSet params;

  GcnClassifier(Eigen::Index in, int hidden, int classes, SplitRng rng)
      : layer1(GcnParams::init(in, hidden, rng)),
        layer2(GcnParams::init(hidden, hidden, rng)),
        out_weight(glorot(hidden, classes, rng)),
        out_bias(zero_parameter(1, classes)) {
    layer1.register_into(params, "cls.gcn1");
    layer2.register_into(params, "cls.gcn2");
    params.add("cls.out.weight", out_weight);
    params.add("cls.out.bias", out_bias);
  }

  ad::Var logits(const Matrix& x, const Topology& topo) const {
    ad::Var h = ad::relu(gcn_forward(ad::constant(x), topo, layer1));
    h = ad::relu(gcn_forward(h, topo, layer2));
    const ad::Var pooled = ad::scale(ad::sum_rows(h), 1.0 / static_cast<double>(x.rows()));
    return linear(pooled, out_weight, out_bias);
  }
};

int label_of(const Graph& g, int id) {
  if (!g.graph_label) throw ValidationError(fmt::format("downstream_accuracy: graph {} has no label", id));
  return *g.graph_label;
}

}  // namespace

double downstream_accuracy(std::span<const Graph> graphs, std::span<const int> train_ids,
                           std::span<const int> test_ids, std::uint64_t seed, const ClassifierConfig& cfg) {
  if (train_ids.empty() || test_ids.empty()) throw ValidationError("downstream_accuracy: empty split");
  int max_label = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const int y = label_of(graphs[i], static_cast<int>(i));
    if (y < 0) throw ValidationError("downstream_accuracy: negative label");
    max_label = std::max(max_label, y);
  }
  const int classes = cfg.num_classes > 0 ? cfg.num_classes : max_label + 1;
  if (classes < 2) throw ValidationError("downstream_accuracy: single-class dataset");
  if (max_label >= classes) throw ValidationError("downstream_accuracy: label exceeds num_classes");

  std::vector<Topology> topo;
  topo.reserve(graphs.size());
  for (const auto& g : graphs) topo.push_back(Topology::from_adjacency(g.adjacency));

  GcnClassifier model(graphs.front().num_features(), cfg.hidden_dim, classes, SplitRng(seed).split("classifier"));
  Optimizer opt(OptimizerConfig{OptimizerKind::Adam, cfg.lr}, model.params);
  const auto vars = model.params.vars();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    ad::Var total;
    for (int id : train_ids) {
      const auto& g = graphs[static_cast<std::size_t>(id)];
      const ad::Var loss =
          ad::softmax_cross_entropy(model.logits(g.node_features, topo[static_cast<std::size_t>(id)]), *g.graph_label);
      total = total.defined() ? ad::add(total, loss) : loss;
    }
    total = ad::scale(total, 1.0 / static_cast<double>(train_ids.size()));
    opt.step(ad::grad(total, vars));
  }

  ad::NoGradGuard no_grad;
  int correct = 0;
  for (int id : test_ids) {
    const auto& g = graphs[static_cast<std::size_t>(id)];
    const Matrix logits = model.logits(g.node_features, topo[static_cast<std::size_t>(id)]).value();
    Eigen::Index best = 0;
    logits.row(0).maxCoeff(&best);
    if (static_cast<int>(best) == *g.graph_label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_ids.size());
}

}  // namespace dpgan
