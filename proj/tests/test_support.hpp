#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <algorithm>
#include <vector>

#include <Eigen/Dense>

#include "graphlime/error.hpp"
#include "graphlime/graph.hpp"
#include "graphlime/hsic.hpp"
#include "graphlime/kernel.hpp"
#include "graphlime/predictor.hpp"

namespace testing {

using graphlime::Edge;
using graphlime::Graph;
using graphlime::NodeId;

inline Graph path_graph(std::size_t n, std::size_t d = 2) {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    return Graph(n, edges, Eigen::MatrixXd::Random(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d)));
}

/// Node 0 is the center.
inline Graph star_graph(std::size_t leaves, std::size_t d = 2) {
    std::vector<Edge> edges;
    for (std::size_t i = 1; i <= leaves; ++i) edges.emplace_back(0, i);
    const auto n = static_cast<Eigen::Index>(leaves + 1);
    return Graph(leaves + 1, edges, Eigen::MatrixXd::Random(n, static_cast<Eigen::Index>(d)));
}

/// Black box defined by a function of the (possibly overridden) feature row of v.
class RowPredictor final : public graphlime::Predictor {
public:
    using Fn = std::function<Eigen::VectorXd(const Eigen::RowVectorXd&)>;
    RowPredictor(std::size_t classes, Fn fn) : classes_(classes), fn_(std::move(fn)) {}

    std::size_t class_count() const override { return classes_; }
    Eigen::VectorXd predict(const Graph&, const Eigen::MatrixXd& features, NodeId v) const override {
        return fn_(features.row(static_cast<Eigen::Index>(v)));
    }

private:
    std::size_t classes_;
    Fn fn_;
};

inline Eigen::VectorXd two_class(double p1) {
    Eigen::VectorXd p(2);
    p << 1.0 - p1, p1;
    return p;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Random HSIC problem built from Gaussian feature columns and a smooth
/// function of the first few of them.
inline graphlime::HsicProblem random_problem(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = normal(rng);
    Eigen::MatrixXd y(x.rows(), 2);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double z = x(i, 0) + 0.5 * normal(rng);
        if (d > 1) z -= 0.7 * x(i, 1) * x(i, 1);
        y(i, 1) = sigmoid(2.0 * z);
        y(i, 0) = 1.0 - y(i, 1);
    }
    std::vector<graphlime::GramMatrix> grams;
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        grams.push_back(graphlime::center_and_normalize(graphlime::gaussian_gram_feature(x.col(j), 1.0)));
    auto out = graphlime::center_and_normalize(graphlime::gaussian_gram_output(y, 0.5));
    return graphlime::make_problem(std::move(grams), std::move(out));
}

/// Largest entrywise relative difference between the analytic gradient and a
/// central finite difference, |a - n| / max(|a|, |n|, 1e-6).
inline double max_gradient_error(graphlime::GnnModel model, const Graph& graph, std::span<const NodeId> ids,
                                 double weight_decay, double step = 1e-6) {
    graphlime::GnnModel::Gradients analytic;
    model.loss_and_gradients(graph, graph.features(), ids, weight_decay, &analytic);
    double worst = 0.0;
    auto sweep = [&](auto& params, const auto& grads) {
        for (Eigen::Index i = 0; i < params.size(); ++i) {
            const double saved = params.data()[i];
            params.data()[i] = saved + step;
            const double up = model.loss_and_gradients(graph, graph.features(), ids, weight_decay, nullptr);
            params.data()[i] = saved - step;
            const double down = model.loss_and_gradients(graph, graph.features(), ids, weight_decay, nullptr);
            params.data()[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double a = grads.data()[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    };
    sweep(model.w1(), analytic.w1);
    sweep(model.b1(), analytic.b1);
    sweep(model.w2(), analytic.w2);
    sweep(model.b2(), analytic.b2);
    return worst;
}

/// Five-node labeled graph used by the gradient check.
inline Graph five_node_graph() {
    Eigen::MatrixXd x(5, 3);
    x << 0.5, -1.2, 0.3,
         1.1, 0.4, -0.7,
         -0.3, 0.9, 1.5,
         0.8, -0.6, -1.1,
         -1.4, 0.2, 0.6;
    return Graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 2}}, x, std::vector<int>{0, 1, 1, 0, 1});
}

/// Coverage of a row subset computed from its definition: total importance of
/// the columns that some chosen row touches.
inline double coverage_by_definition(const std::vector<std::size_t>& rows, const Eigen::MatrixXd& w,
                                     const Eigen::VectorXd& importance) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        bool covered = false;
        for (std::size_t i : rows) covered = covered || w(static_cast<Eigen::Index>(i), j) > 0.0;
        if (covered) total += importance(j);
    }
    return total;
}

/// Best coverage over every subset of at most `budget` rows.
inline double exhaustive_best_coverage(const Eigen::MatrixXd& w, const Eigen::VectorXd& importance,
                                       std::size_t budget) {
    const auto n = static_cast<std::size_t>(w.rows());
    double best = 0.0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcountll(mask)) > budget) continue;
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (std::uint64_t{1} << i)) rows.push_back(i);
        best = std::max(best, coverage_by_definition(rows, w, importance));
    }
    return best;
}

/// Sparse nonnegative matrix: each entry is zero with probability one half.
inline Eigen::MatrixXd random_explanation_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = unit(rng) < 0.5 ? 0.0 : unit(rng);
    return w;
}

template <typename F>
graphlime::ErrorCode error_code_of(F&& f) {
    try {
        f();
    } catch (const graphlime::Error& e) {
        return e.code();
    }
    throw std::logic_error("expected a graphlime::Error");
}

}  // namespace testing
