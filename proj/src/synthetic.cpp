#include "graphlime/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "graphlime/error.hpp"

namespace graphlime {

Graph generate_synthetic(const SyntheticParams& params, std::uint64_t seed) {
    if (params.node_count < 2 || params.class_count < 2 || params.class_count > params.node_count) {
        fail(ErrorCode::invalid_argument, "synthetic graph needs >= 2 nodes and 2..node_count classes");
    }
    const std::size_t d = params.informative_features + params.weak_features;
    if (d < 1) fail(ErrorCode::invalid_argument, "synthetic graph needs at least one feature");
    if (!(params.homophily >= 0.0 && params.homophily <= 1.0)) {
        fail(ErrorCode::invalid_argument, "homophily must lie in [0, 1]");
    }
    if (!(params.average_degree >= 0.0)) fail(ErrorCode::invalid_argument, "average degree must be >= 0");

    std::mt19937_64 rng(seed);
    const std::size_t n = params.node_count;
    const std::size_t classes = params.class_count;

    // balanced labels in shuffled order
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % classes);
    std::shuffle(labels.begin(), labels.end(), rng);

    Eigen::MatrixXd means(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(d));
    std::bernoulli_distribution coin(0.5);
    for (std::size_t j = 0; j < d; ++j) {
        const double amp = 0.5 * (j < params.informative_features ? params.signal : params.weak_signal);
        if (classes == 2) {
            const double s = coin(rng) ? amp : -amp;
            means(0, static_cast<Eigen::Index>(j)) = s;
            means(1, static_cast<Eigen::Index>(j)) = -s;
        } else {
            for (std::size_t c = 0; c < classes; ++c)
                means(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) = coin(rng) ? amp : -amp;
        }
    }

    std::normal_distribution<double> noise(0.0, 1.0);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                means(labels[i], static_cast<Eigen::Index>(j)) + noise(rng);

    std::vector<std::vector<NodeId>> by_class(classes);
    for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);

    const auto target = static_cast<std::size_t>(std::llround(params.average_degree * static_cast<double>(n) / 2.0));
    const std::size_t max_edges = n * (n - 1) / 2;
    std::set<Edge> edges;
    std::uniform_int_distribution<std::size_t> pick_node(0, n - 1);
    std::bernoulli_distribution same(params.homophily);
    std::size_t attempts = 0;
    while (edges.size() < std::min(target, max_edges) && attempts < 50 * target + 100) {
        ++attempts;
        const NodeId a = pick_node(rng);
        const auto ca = static_cast<std::size_t>(labels[a]);
        NodeId b = a;
        if (same(rng)) {
            const auto& pool = by_class[ca];
            b = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
        } else {
            std::size_t cb = std::uniform_int_distribution<std::size_t>(0, classes - 2)(rng);
            if (cb >= ca) ++cb;
            const auto& pool = by_class[cb];
            b = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
        }
        if (a == b) continue;
        edges.insert({std::min(a, b), std::max(a, b)});
    }

    std::vector<std::string> names;
    for (std::size_t j = 0; j < d; ++j) {
        names.push_back(j < params.informative_features ? "informative" + std::to_string(j)
                                                        : "weak" + std::to_string(j - params.informative_features));
    }
    return Graph(n, std::vector<Edge>(edges.begin(), edges.end()), std::move(x), std::move(labels), std::move(names));
}

}  // namespace graphlime
