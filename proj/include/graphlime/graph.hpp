#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace graphlime {

using NodeId = std::size_t;
using Edge = std::pair<NodeId, NodeId>;

/// Immutable undirected attributed graph.
///
/// Edges are stored canonically (first < second, sorted, unique). Self-loops
/// are never stored; consumers that need them add them logically.
class Graph {
public:
    Graph(std::size_t node_count,
          std::vector<Edge> edges,
          Eigen::MatrixXd features,
          std::optional<std::vector<int>> labels = std::nullopt,
          std::vector<std::string> feature_names = {});

    std::size_t node_count() const noexcept { return node_count_; }
    std::size_t feature_count() const noexcept { return static_cast<std::size_t>(features_.cols()); }
    std::size_t edge_count() const noexcept { return edges_.size(); }

    /// Number of edge records read from the source file before symmetrizing
    /// and deduplicating. Equals edge_count() for graphs built in memory.
    std::size_t edge_records() const noexcept { return edge_records_; }

    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<NodeId>& neighbors(NodeId v) const { return adjacency_.at(v); }
    bool has_edge(NodeId a, NodeId b) const;

    const Eigen::MatrixXd& features() const noexcept { return features_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }

    bool has_labels() const noexcept { return labels_.has_value(); }
    const std::vector<int>& labels() const;
    std::size_t class_count() const;

    /// Same structure and labels, different feature matrix (row count must match).
    Graph with_features(Eigen::MatrixXd features, std::vector<std::string> names) const;

    void set_edge_records(std::size_t records) { edge_records_ = records; }

private:
    std::size_t node_count_;
    std::vector<Edge> edges_;
    std::vector<std::vector<NodeId>> adjacency_;
    Eigen::MatrixXd features_;
    std::optional<std::vector<int>> labels_;
    std::vector<std::string> feature_names_;
    std::size_t edge_records_ = 0;
};

/// Ordered neighborhood of `center`: the center itself, then every node at
/// shortest-path distance 1..hops, ring by ring, ascending id within a ring.
std::vector<NodeId> n_hop_neighborhood(const Graph& graph, NodeId center, std::size_t hops);

struct LocalSample {
    NodeId center = 0;
    std::vector<NodeId> node_ids;      // center first
    Eigen::MatrixXd features;          // n x d
    Eigen::MatrixXd predictions;       // n x C, probability rows

    std::size_t size() const noexcept { return node_ids.size(); }
};

/// Gathers the feature rows of `nodes` and pairs them with predictor outputs.
/// Throws insufficient_neighbors when fewer than two nodes are supplied.
LocalSample assemble_local_sample(const Graph& graph,
                                  const std::vector<NodeId>& nodes,
                                  const Eigen::MatrixXd& predictor_outputs);

struct NoiseInjection {
    std::vector<std::size_t> noisy_indices;
    std::uint64_t seed = 0;
};

/// Appends `count` random columns. Binary feature matrices get
/// Bernoulli(overall density) columns, anything else gets Normal(pooled mean,
/// pooled variance) columns. Original columns are copied untouched.
std::pair<Graph, NoiseInjection> inject_noise_features(const Graph& graph,
                                                       std::size_t count,
                                                       std::uint64_t seed);

// --- file formats -----------------------------------------------------------

Graph load_graph(const std::filesystem::path& edge_file,
                 const std::filesystem::path& feature_file,
                 const std::optional<std::filesystem::path>& label_file = std::nullopt);

/// Reads the whitespace-separated citation format: `<id> <features...> <class>`
/// rows and `<cited> <citing>` pairs. Nodes are numbered in row order and class
/// names are numbered in sorted order.
Graph load_citation_graph(const std::filesystem::path& content_file, const std::filesystem::path& cites_file);

/// Writes canonical edge, feature and (when present) label files.
void save_graph(const Graph& graph,
                const std::filesystem::path& edge_file,
                const std::filesystem::path& feature_file,
                const std::optional<std::filesystem::path>& label_file = std::nullopt);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

}  // namespace graphlime
