#include "graphlime/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <unordered_map>

#include "graphlime/error.hpp"
#include "io_util.hpp"

namespace graphlime {

Graph::Graph(std::size_t node_count,
             std::vector<Edge> edges,
             Eigen::MatrixXd features,
             std::optional<std::vector<int>> labels,
             std::vector<std::string> feature_names)
    : node_count_(node_count),
      adjacency_(node_count),
      features_(std::move(features)),
      labels_(std::move(labels)),
      feature_names_(std::move(feature_names)) {
    if (static_cast<std::size_t>(features_.rows()) != node_count_) {
        fail(ErrorCode::consistency,
             "feature matrix has " + std::to_string(features_.rows()) + " rows, expected " +
                 std::to_string(node_count_));
    }
    if (features_.cols() < 1) {
        fail(ErrorCode::invalid_argument, "graph needs at least one feature column");
    }
    if (labels_ && labels_->size() != node_count_) {
        fail(ErrorCode::consistency,
             "label count " + std::to_string(labels_->size()) + " does not match node count " +
                 std::to_string(node_count_));
    }
    if (labels_) {
        for (int label : *labels_) {
            if (label < 0) fail(ErrorCode::invalid_argument, "class ids must be non-negative");
        }
    }
    if (feature_names_.empty()) {
        feature_names_.reserve(feature_count());
        for (std::size_t j = 0; j < feature_count(); ++j) feature_names_.push_back("f" + std::to_string(j));
    } else if (feature_names_.size() != feature_count()) {
        fail(ErrorCode::consistency, "feature name count does not match feature columns");
    }

    for (auto& [a, b] : edges) {
        if (a >= node_count_ || b >= node_count_) {
            fail(ErrorCode::bounds, "edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                        ") references a node >= " + std::to_string(node_count_));
        }
        if (a > b) std::swap(a, b);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges.erase(std::remove_if(edges.begin(), edges.end(), [](const Edge& e) { return e.first == e.second; }),
                edges.end());
    edges_ = std::move(edges);
    edge_records_ = edges_.size();

    for (const auto& [a, b] : edges_) {
        adjacency_[a].push_back(b);
        adjacency_[b].push_back(a);
    }
    for (auto& list : adjacency_) std::sort(list.begin(), list.end());
}

bool Graph::has_edge(NodeId a, NodeId b) const {
    const auto& list = adjacency_.at(a);
    return std::binary_search(list.begin(), list.end(), b);
}

const std::vector<int>& Graph::labels() const {
    if (!labels_) fail(ErrorCode::invalid_argument, "graph has no labels");
    return *labels_;
}

std::size_t Graph::class_count() const {
    if (!labels_ || labels_->empty()) return 0;
    return static_cast<std::size_t>(*std::max_element(labels_->begin(), labels_->end())) + 1;
}

Graph Graph::with_features(Eigen::MatrixXd features, std::vector<std::string> names) const {
    Graph copy(node_count_, edges_, std::move(features), labels_, std::move(names));
    copy.edge_records_ = edge_records_;
    return copy;
}

std::vector<NodeId> n_hop_neighborhood(const Graph& graph, NodeId center, std::size_t hops) {
    if (center >= graph.node_count()) {
        fail(ErrorCode::bounds, "node " + std::to_string(center) + " out of range");
    }
    if (hops < 1) fail(ErrorCode::invalid_argument, "hop count must be at least 1");

    std::vector<bool> seen(graph.node_count(), false);
    std::vector<NodeId> order{center};
    seen[center] = true;
    std::vector<NodeId> ring{center};
    for (std::size_t depth = 0; depth < hops && !ring.empty(); ++depth) {
        std::vector<NodeId> next;
        for (NodeId u : ring) {
            for (NodeId w : graph.neighbors(u)) {
                if (!seen[w]) {
                    seen[w] = true;
                    next.push_back(w);
                }
            }
        }
        std::sort(next.begin(), next.end());
        order.insert(order.end(), next.begin(), next.end());
        ring = std::move(next);
    }
    return order;
}

LocalSample assemble_local_sample(const Graph& graph,
                                  const std::vector<NodeId>& nodes,
                                  const Eigen::MatrixXd& predictor_outputs) {
    if (nodes.size() < 2) {
        fail(ErrorCode::insufficient_neighbors,
             "local sample needs at least 2 nodes, got " + std::to_string(nodes.size()));
    }
    if (static_cast<std::size_t>(predictor_outputs.rows()) != nodes.size()) {
        fail(ErrorCode::invalid_argument, "one prediction row per sampled node is required");
    }
    std::vector<NodeId> sorted = nodes;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        fail(ErrorCode::invalid_argument, "local sample contains duplicate nodes");
    }
    for (Eigen::Index i = 0; i < predictor_outputs.rows(); ++i) {
        const auto row = predictor_outputs.row(i);
        if ((row.array() < 0.0).any() || std::abs(row.sum() - 1.0) > 1e-6) {
            fail(ErrorCode::invalid_argument, "prediction row " + std::to_string(i) + " is not a probability vector");
        }
    }

    LocalSample sample;
    sample.center = nodes.front();
    sample.node_ids = nodes;
    sample.features.resize(static_cast<Eigen::Index>(nodes.size()), graph.features().cols());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i] >= graph.node_count()) fail(ErrorCode::bounds, "sample node out of range");
        sample.features.row(static_cast<Eigen::Index>(i)) = graph.features().row(static_cast<Eigen::Index>(nodes[i]));
    }
    sample.predictions = predictor_outputs;
    return sample;
}

std::pair<Graph, NoiseInjection> inject_noise_features(const Graph& graph, std::size_t count, std::uint64_t seed) {
    if (count < 1) fail(ErrorCode::invalid_argument, "noise feature count must be at least 1");

    const Eigen::MatrixXd& x = graph.features();
    const bool binary = (x.array() == 0.0 || x.array() == 1.0).all();
    const auto n = x.rows();
    const auto d = x.cols();

    Eigen::MatrixXd augmented(n, d + static_cast<Eigen::Index>(count));
    augmented.leftCols(d) = x;

    std::mt19937_64 rng(seed);
    if (binary) {
        const double density = x.mean();
        std::bernoulli_distribution coin(density);
        for (Eigen::Index j = d; j < augmented.cols(); ++j)
            for (Eigen::Index i = 0; i < n; ++i) augmented(i, j) = coin(rng) ? 1.0 : 0.0;
    } else {
        const double mean = x.mean();
        const double var = (x.array() - mean).square().mean();
        std::normal_distribution<double> normal(mean, std::sqrt(var));
        for (Eigen::Index j = d; j < augmented.cols(); ++j)
            for (Eigen::Index i = 0; i < n; ++i) augmented(i, j) = normal(rng);
    }

    NoiseInjection injection;
    injection.seed = seed;
    std::vector<std::string> names = graph.feature_names();
    for (std::size_t k = 0; k < count; ++k) {
        injection.noisy_indices.push_back(static_cast<std::size_t>(d) + k);
        names.push_back("noise" + std::to_string(k));
    }
    return {graph.with_features(std::move(augmented), std::move(names)), std::move(injection)};
}

// --- file formats -----------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_number(const std::string& token, T& out) {
    const std::string t = trim(token);
    if (t.empty()) return false;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    if constexpr (std::is_floating_point_v<T>) {
        if (*begin == '+') ++begin;
    }
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    return in;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) parts.push_back(cur);
    if (!line.empty() && line.back() == sep) parts.emplace_back();
    return parts;
}

}  // namespace

Graph load_graph(const std::filesystem::path& edge_file,
                 const std::filesystem::path& feature_file,
                 const std::optional<std::filesystem::path>& label_file) {
    // features first: they define node_count
    auto fin = open_input(feature_file);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> names;
    while (std::getline(fin, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) fail(ErrorCode::parse, feature_file.string() + ": missing header row");
    for (auto& name : split(trim(line), ',')) names.push_back(trim(name));
    const std::size_t d = names.size();

    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(fin, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(trim(line), ',');
        if (cells.size() != d) {
            fail(ErrorCode::parse, feature_file.string() + ":" + std::to_string(line_no) + ": expected " +
                                       std::to_string(d) + " values, found " + std::to_string(cells.size()));
        }
        for (const auto& cell : cells) {
            double v = 0.0;
            if (!parse_number(cell, v) || !std::isfinite(v)) {
                fail(ErrorCode::parse, feature_file.string() + ":" + std::to_string(line_no) +
                                           ": malformed value '" + trim(cell) + "'");
            }
            values.push_back(v);
        }
        ++rows;
    }
    Eigen::MatrixXd features(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < d; ++j)
            features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * d + j];

    auto ein = open_input(edge_file);
    std::vector<Edge> edges;
    std::size_t records = 0;
    line_no = 0;
    while (std::getline(ein, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto parts = split(t, '\t');
        std::size_t a = 0;
        std::size_t b = 0;
        if (parts.size() != 2 || !parse_number(parts[0], a) || !parse_number(parts[1], b)) {
            fail(ErrorCode::parse, edge_file.string() + ":" + std::to_string(line_no) +
                                       ": expected 'src<TAB>dst', got '" + t + "'");
        }
        if (a >= rows || b >= rows) {
            fail(ErrorCode::bounds, edge_file.string() + ":" + std::to_string(line_no) + ": endpoint " +
                                        std::to_string(std::max(a, b)) + " >= node count " + std::to_string(rows));
        }
        edges.emplace_back(a, b);
        ++records;
    }

    std::optional<std::vector<int>> labels;
    if (label_file) {
        auto lin = open_input(*label_file);
        std::vector<int> parsed;
        line_no = 0;
        while (std::getline(lin, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            int label = 0;
            if (!parse_number(line, label) || label < 0) {
                fail(ErrorCode::parse, label_file->string() + ":" + std::to_string(line_no) +
                                           ": malformed class id '" + trim(line) + "'");
            }
            parsed.push_back(label);
        }
        if (parsed.size() != rows) {
            fail(ErrorCode::consistency, label_file->string() + " has " + std::to_string(parsed.size()) +
                                             " labels but " + feature_file.string() + " has " +
                                             std::to_string(rows) + " rows");
        }
        labels = std::move(parsed);
    }

    Graph graph(rows, std::move(edges), std::move(features), std::move(labels), std::move(names));
    graph.set_edge_records(records);
    return graph;
}

Graph load_citation_graph(const std::filesystem::path& content_file, const std::filesystem::path& cites_file) {
    auto content = open_input(content_file);
    std::unordered_map<std::string, NodeId> index;
    std::vector<std::string> class_names;
    std::vector<double> values;
    std::size_t d = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(content, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::vector<std::string> cells{std::istream_iterator<std::string>(ss), std::istream_iterator<std::string>()};
        if (cells.empty()) continue;
        if (cells.size() < 3) {
            fail(ErrorCode::parse, content_file.string() + ":" + std::to_string(line_no) +
                                       ": expected '<id> <features...> <class>'");
        }
        if (d == 0) d = cells.size() - 2;
        if (cells.size() - 2 != d) {
            fail(ErrorCode::parse, content_file.string() + ":" + std::to_string(line_no) + ": expected " +
                                       std::to_string(d) + " feature values, found " + std::to_string(cells.size() - 2));
        }
        if (!index.emplace(cells.front(), index.size()).second) {
            fail(ErrorCode::parse, content_file.string() + ":" + std::to_string(line_no) + ": duplicate id '" +
                                       cells.front() + "'");
        }
        for (std::size_t j = 1; j + 1 < cells.size(); ++j) {
            double v = 0.0;
            if (!parse_number(cells[j], v) || !std::isfinite(v)) {
                fail(ErrorCode::parse, content_file.string() + ":" + std::to_string(line_no) +
                                           ": malformed value '" + cells[j] + "'");
            }
            values.push_back(v);
        }
        class_names.push_back(cells.back());
    }
    const std::size_t rows = index.size();
    if (rows == 0) fail(ErrorCode::parse, content_file.string() + ": no rows");

    Eigen::MatrixXd features(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < d; ++j)
            features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * d + j];

    std::vector<std::string> classes = class_names;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    std::vector<int> labels;
    labels.reserve(rows);
    for (const auto& name : class_names) {
        labels.push_back(static_cast<int>(std::lower_bound(classes.begin(), classes.end(), name) - classes.begin()));
    }

    auto ein = open_input(cites_file);
    std::vector<Edge> edges;
    std::size_t records = 0;
    line_no = 0;
    while (std::getline(ein, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::vector<std::string> cells{std::istream_iterator<std::string>(ss), std::istream_iterator<std::string>()};
        if (cells.empty()) continue;
        if (cells.size() != 2) {
            fail(ErrorCode::parse, cites_file.string() + ":" + std::to_string(line_no) + ": expected '<cited> <citing>'");
        }
        const auto a = index.find(cells[0]);
        const auto b = index.find(cells[1]);
        if (a == index.end() || b == index.end()) {
            fail(ErrorCode::bounds, cites_file.string() + ":" + std::to_string(line_no) + ": unknown id '" +
                                        (a == index.end() ? cells[0] : cells[1]) + "'");
        }
        edges.emplace_back(a->second, b->second);
        ++records;
    }

    Graph graph(rows, std::move(edges), std::move(features), std::move(labels));
    graph.set_edge_records(records);
    return graph;
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) fail(ErrorCode::format, "cannot format value");
    return std::string(buf, ptr);
}

void save_graph(const Graph& graph,
                const std::filesystem::path& edge_file,
                const std::filesystem::path& feature_file,
                const std::optional<std::filesystem::path>& label_file) {
    std::ostringstream edges;
    for (const auto& [a, b] : graph.edges()) edges << a << '\t' << b << '\n';
    detail::write_file_atomic(edge_file, edges.str());

    std::ostringstream feats;
    const auto& names = graph.feature_names();
    for (std::size_t j = 0; j < names.size(); ++j) feats << (j ? "," : "") << names[j];
    feats << '\n';
    const auto& x = graph.features();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) feats << (j ? "," : "") << format_double(x(i, j));
        feats << '\n';
    }
    detail::write_file_atomic(feature_file, feats.str());

    if (label_file) {
        std::ostringstream labels;
        for (int label : graph.labels()) labels << label << '\n';
        detail::write_file_atomic(*label_file, labels.str());
    }
}

}  // namespace graphlime
