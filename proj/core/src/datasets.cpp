#include "dpgan/datasets.hpp"

#include "dpgan/errors.hpp"
#include "dpgan/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <string_view>

namespace dpgan {
namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_number(std::string_view text, const fs::path& file, std::size_t line_no) {
  T value{};
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if constexpr (std::is_floating_point_v<T>) {
    // strtod accepts the exponent and nan/inf spellings used by some exports.
    std::string buf(text);
    char* stop = nullptr;
    value = std::strtod(buf.c_str(), &stop);
    if (buf.empty() || stop != buf.c_str() + buf.size()) {
      throw FormatError(fmt::format("{}:{}: cannot parse '{}' as a number", file.string(), line_no, text));
    }
  } else {
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
      throw FormatError(fmt::format("{}:{}: cannot parse '{}' as an integer", file.string(), line_no, text));
    }
  }
  return value;
}

std::ifstream open_required(const fs::path& file) {
  if (!fs::exists(file)) throw FormatError(fmt::format("missing file: {}", file.string()));
  std::ifstream in(file);
  if (!in) throw IoError(fmt::format("cannot open {}", file.string()));
  return in;
}

/// Reads non-empty lines as rows of comma-separated values.
template <typename T>
std::vector<std::vector<T>> read_rows(const fs::path& file) {
  std::ifstream in = open_required(file);
  std::vector<std::vector<T>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    std::vector<T> row;
    for (std::string_view field : split_commas(view)) row.push_back(parse_number<T>(field, file, line_no));
    rows.push_back(std::move(row));
  }
  return rows;
}

fs::path find_with_suffix(const fs::path& dir, std::string_view suffix) {
  if (!fs::is_directory(dir)) throw FormatError(fmt::format("not a directory: {}", dir.string()));
  const std::string prefix = dir.filename().string();
  const fs::path expected = dir / (prefix + std::string(suffix));
  if (fs::exists(expected)) return expected;
  std::vector<fs::path> candidates;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > suffix.size() && name.ends_with(suffix)) candidates.push_back(entry.path());
  }
  std::sort(candidates.begin(), candidates.end());
  return candidates.empty() ? expected : candidates.front();
}

}  // namespace

std::vector<Graph> load_tudataset(const fs::path& directory) {
  const fs::path edges_file = find_with_suffix(directory, "_A.txt");
  const fs::path indicator_file = find_with_suffix(directory, "_graph_indicator.txt");
  const fs::path attr_file = find_with_suffix(directory, "_node_attributes.txt");
  const fs::path labels_file = find_with_suffix(directory, "_graph_labels.txt");

  const auto indicator_rows = read_rows<long>(indicator_file);
  const auto attr_rows = read_rows<double>(attr_file);
  const auto edge_rows = read_rows<long>(edges_file);

  const std::size_t n_nodes = indicator_rows.size();
  if (attr_rows.size() != n_nodes) {
    throw FormatError(fmt::format("{}: {} attribute rows for {} nodes", attr_file.string(), attr_rows.size(),
                                  n_nodes));
  }
  if (n_nodes == 0) throw FormatError(fmt::format("{}: no nodes", indicator_file.string()));
  const std::size_t dim = attr_rows.front().size();

  // Attribute rows must all have the same width; report the first bad line.
  {
    std::ifstream in = open_required(attr_file);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string_view view = trim(line);
      if (view.empty()) continue;
      if (split_commas(view).size() != dim) {
        throw FormatError(fmt::format("{}:{}: ragged attribute row (expected {} values)", attr_file.string(),
                                      line_no, dim));
      }
    }
  }

  // Graph ids are 1-based and contiguous per node block.
  std::map<long, std::vector<int>> members;
  std::vector<int> local_index(n_nodes);
  std::vector<long> graph_of(n_nodes);
  for (std::size_t v = 0; v < n_nodes; ++v) {
    if (indicator_rows[v].size() != 1) {
      throw FormatError(fmt::format("{}:{}: expected one graph id", indicator_file.string(), v + 1));
    }
    const long gid = indicator_rows[v][0];
    graph_of[v] = gid;
    auto& m = members[gid];
    local_index[v] = static_cast<int>(m.size());
    m.push_back(static_cast<int>(v));
  }

  std::map<long, std::vector<std::pair<int, int>>> edges;
  for (std::size_t e = 0; e < edge_rows.size(); ++e) {
    const auto& row = edge_rows[e];
    if (row.size() != 2) {
      throw FormatError(fmt::format("{}:{}: expected an 'i, j' pair", edges_file.string(), e + 1));
    }
    const long u = row[0] - 1;
    const long v = row[1] - 1;
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n_nodes || static_cast<std::size_t>(v) >= n_nodes) {
      throw FormatError(fmt::format("{}:{}: node id out of range", edges_file.string(), e + 1));
    }
    if (graph_of[static_cast<std::size_t>(u)] != graph_of[static_cast<std::size_t>(v)]) {
      throw FormatError(fmt::format("{}:{}: edge joins two graphs", edges_file.string(), e + 1));
    }
    edges[graph_of[static_cast<std::size_t>(u)]].emplace_back(local_index[static_cast<std::size_t>(u)],
                                                             local_index[static_cast<std::size_t>(v)]);
  }

  std::vector<int> labels;
  if (fs::exists(labels_file)) {
    for (const auto& row : read_rows<long>(labels_file)) labels.push_back(static_cast<int>(row.at(0)));
    if (labels.size() != members.size()) {
      throw FormatError(fmt::format("{}: {} labels for {} graphs", labels_file.string(), labels.size(),
                                    members.size()));
    }
  }

  std::vector<Graph> graphs;
  graphs.reserve(members.size());
  std::size_t g = 0;
  for (const auto& [gid, nodes] : members) {
    Matrix x(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& row = attr_rows[static_cast<std::size_t>(nodes[i])];
      for (std::size_t j = 0; j < dim; ++j) {
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
      }
    }
    std::optional<int> label;
    if (!labels.empty()) label = labels[g];
    graphs.push_back(Graph::from_edges(std::move(x), edges[gid], label));
    ++g;
  }
  return graphs;
}

Graph load_single_graph(const fs::path& directory) {
  const fs::path features_file = directory / "features.csv";
  const fs::path edges_file = directory / "edges.csv";
  const auto feature_rows = read_rows<double>(features_file);
  if (feature_rows.empty()) throw FormatError(fmt::format("{}: no nodes", features_file.string()));
  const std::size_t dim = feature_rows.front().size();
  Matrix x(static_cast<Eigen::Index>(feature_rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < feature_rows.size(); ++i) {
    if (feature_rows[i].size() != dim) {
      throw FormatError(fmt::format("{}: ragged feature row for node {}", features_file.string(), i));
    }
    for (std::size_t j = 0; j < dim; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = feature_rows[i][j];
    }
  }
  const auto edge_rows = read_rows<long>(edges_file);
  std::vector<std::pair<int, int>> edges;
  edges.reserve(edge_rows.size());
  const auto n = static_cast<long>(feature_rows.size());
  for (std::size_t e = 0; e < edge_rows.size(); ++e) {
    const auto& row = edge_rows[e];
    if (row.size() != 2) {
      throw FormatError(fmt::format("{}:{}: expected an 'i,j' pair", edges_file.string(), e + 1));
    }
    if (row[0] < 0 || row[1] < 0 || row[0] >= n || row[1] >= n) {
      throw FormatError(fmt::format("{}:{}: dangling edge endpoint ({}, {}) with {} nodes",
                                    edges_file.string(), e + 1, row[0], row[1], n));
    }
    edges.emplace_back(static_cast<int>(row[0]), static_cast<int>(row[1]));
  }
  return Graph::from_edges(std::move(x), edges);
}

std::vector<int> load_node_labels(const fs::path& directory) {
  const fs::path file = directory / "labels.txt";
  std::vector<int> labels;
  if (!fs::exists(file)) return labels;
  for (const auto& row : read_rows<long>(file)) labels.push_back(static_cast<int>(row.at(0)));
  return labels;
}

std::vector<Graph> make_smooth_signal_graphs(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.num_graphs < 1 || spec.num_nodes < 1 || spec.num_features < 1 || spec.latent_dim < 1) {
    throw ValidationError("synthetic dataset: sizes must be positive");
  }
  const SplitRng root = SplitRng(seed).split("synthetic");
  // Read-out shared by every graph: features are a fixed nonlinear map of the
  // smoothed latent signal.
  SplitRng readout_rng = root.split("readout");
  Matrix readout(spec.latent_dim, spec.num_features);
  for (Eigen::Index i = 0; i < readout.size(); ++i) readout.data()[i] = readout_rng.normal();
  Eigen::RowVectorXd offset(spec.num_features);
  for (Eigen::Index j = 0; j < offset.size(); ++j) offset(j) = 0.5 * readout_rng.normal();

  std::vector<Graph> graphs;
  graphs.reserve(static_cast<std::size_t>(spec.num_graphs));
  for (int g = 0; g < spec.num_graphs; ++g) {
    SplitRng rng = root.split(static_cast<std::uint64_t>(g));
    const int n = spec.num_nodes;
    std::vector<std::pair<double, double>> pos(static_cast<std::size_t>(n));
    for (auto& p : pos) p = {rng.uniform(), rng.uniform()};

    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) {
      int nearest = -1;
      double nearest_d2 = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const double dx = pos[static_cast<std::size_t>(i)].first - pos[static_cast<std::size_t>(j)].first;
        const double dy = pos[static_cast<std::size_t>(i)].second - pos[static_cast<std::size_t>(j)].second;
        const double d2 = dx * dx + dy * dy;
        if (d2 < nearest_d2) {
          nearest_d2 = d2;
          nearest = j;
        }
        if (j > i && d2 <= spec.radius * spec.radius) edges.emplace_back(i, j);
      }
      // No isolated nodes: always link the nearest neighbour.
      if (nearest >= 0) edges.emplace_back(i, nearest);
    }

    Matrix latent(n, spec.latent_dim);
    for (Eigen::Index i = 0; i < latent.size(); ++i) latent.data()[i] = rng.normal();
    Graph graph = Graph::from_edges(Matrix::Zero(n, spec.num_features), edges);

    // Lazy random-walk diffusion: s <- (s + D^-1 A s) / 2.
    const Topology topo = Topology::from_adjacency(graph.adjacency);
    const Vector inv_deg = topo.degree.cwiseMax(1.0).cwiseInverse();
    for (int step = 0; step < spec.smoothing_steps; ++step) {
      const Matrix neighbour_mean = inv_deg.asDiagonal() * (graph.adjacency * latent);
      latent = 0.5 * (latent + neighbour_mean);
    }
    // Re-standardize so smoothing does not shrink the signal towards zero.
    const Eigen::RowVectorXd mu = latent.colwise().mean();
    const double sd =
        std::sqrt((latent.rowwise() - mu).squaredNorm() / static_cast<double>(latent.size()));
    if (sd > 0.0) latent /= sd;

    Matrix features = ((latent * readout).rowwise() + offset).array().tanh();
    for (Eigen::Index i = 0; i < features.size(); ++i) features.data()[i] += spec.noise * rng.normal();
    graph.node_features = std::move(features);
    if (spec.num_classes > 1) {
      graph.graph_label = mu(0) > 0.0 ? 1 : 0;
    }
    graphs.push_back(std::move(graph));
  }
  return graphs;
}

}  // namespace dpgan
