#pragma once

#include "dpgan/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dpgan {

/// Loads the flat-file multi-graph layout (`<NAME>_A.txt`,
/// `<NAME>_graph_indicator.txt`, `<NAME>_node_attributes.txt` and optionally
/// `<NAME>_graph_labels.txt`). Node ordering follows the files.
std::vector<Graph> load_tudataset(const std::filesystem::path& directory);

/// Loads a single attributed graph from `features.csv` (one comma-separated
/// row per node), `edges.csv` (0-based "i,j" pairs) and optional `labels.txt`.
Graph load_single_graph(const std::filesystem::path& directory);
/// Per-node class ids from `labels.txt`; empty when the file is absent.
std::vector<int> load_node_labels(const std::filesystem::path& directory);

struct SyntheticSpec {
  int num_graphs = 200;
  int num_nodes = 20;
  int num_features = 8;
  int latent_dim = 3;
  int smoothing_steps = 3;
  double radius = 0.35;  // random-geometric connection radius in the unit square
  double noise = 0.02;
  int num_classes = 2;
};

/// Random geometric graphs carrying smooth signals: latent Gaussian node
/// signals are diffused over the graph, then mapped to features through a
/// shared random nonlinear read-out, so features correlate both across
/// neighbors and across dimensions. Graph labels are a threshold on a mean
/// latent coordinate.
std::vector<Graph> make_smooth_signal_graphs(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace dpgan
