#include "graphlime/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "graphlime/error.hpp"

namespace graphlime {

namespace {

constexpr double kDegenerateNorm = 1e-12;

void require_width(double sigma, const char* what) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        fail(ErrorCode::invalid_argument, std::string(what) + " must be a finite positive width");
    }
}

}  // namespace

GramMatrix gaussian_gram_feature(const Eigen::VectorXd& column, double sigma_x) {
    require_width(sigma_x, "sigma_x");
    if (!column.allFinite()) fail(ErrorCode::invalid_argument, "feature column contains non-finite values");
    const auto n = column.size();
    const double scale = 1.0 / (2.0 * sigma_x * sigma_x);
    GramMatrix gram;
    gram.values.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        gram.values(j, j) = 1.0;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double diff = column(i) - column(j);
            const double k = std::exp(-diff * diff * scale);
            gram.values(i, j) = k;
            gram.values(j, i) = k;
        }
    }
    return gram;
}

GramMatrix gaussian_gram_output(const Eigen::MatrixXd& predictions, double sigma_y) {
    require_width(sigma_y, "sigma_y");
    if (!predictions.allFinite()) fail(ErrorCode::invalid_argument, "predictions contain non-finite values");
    const auto n = predictions.rows();
    const double scale = 1.0 / (2.0 * sigma_y * sigma_y);
    GramMatrix gram;
    gram.values.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        gram.values(j, j) = 1.0;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double dist2 = (predictions.row(i) - predictions.row(j)).squaredNorm();
            const double k = std::exp(-dist2 * scale);
            gram.values(i, j) = k;
            gram.values(j, i) = k;
        }
    }
    return gram;
}

GramMatrix center_and_normalize(const GramMatrix& gram) {
    const Eigen::MatrixXd& g = gram.values;
    // H G H = G - row_means 1^T - 1 col_means^T + grand_mean
    const Eigen::VectorXd row_means = g.rowwise().mean();
    const Eigen::RowVectorXd col_means = g.colwise().mean();
    const double grand = g.mean();
    Eigen::MatrixXd centered = g;
    centered.colwise() -= row_means;
    centered.rowwise() -= col_means;
    centered.array() += grand;

    GramMatrix out;
    out.normalized = true;
    const double norm = centered.norm();
    if (norm < kDegenerateNorm) {
        out.values = Eigen::MatrixXd::Zero(g.rows(), g.cols());
        out.degenerate = true;
        return out;
    }
    out.values = centered / norm;
    // exact symmetry regardless of summation order
    out.values = (0.5 * (out.values + out.values.transpose())).eval();
    return out;
}

double nhsic(const GramMatrix& a, const GramMatrix& b) {
    if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols()) {
        fail(ErrorCode::invalid_argument, "nhsic operands differ in dimension");
    }
    if (a.degenerate || b.degenerate) return 0.0;
    // trace(AB) = sum_ij A_ij B_ji, and both are symmetric
    return a.values.cwiseProduct(b.values).sum();
}

GramMatrix mask_with_adjacency(const GramMatrix& gram, const LocalSample& sample, const Graph& graph) {
    const auto n = static_cast<Eigen::Index>(sample.node_ids.size());
    if (gram.values.rows() != n) fail(ErrorCode::invalid_argument, "gram does not match sample size");
    GramMatrix out = gram;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (!graph.has_edge(sample.node_ids[i], sample.node_ids[j])) {
                out.values(i, j) = 0.0;
                out.values(j, i) = 0.0;
            }
        }
    }
    return out;
}

double median_heuristic_width(const Eigen::MatrixXd& rows) {
    const auto n = rows.rows();
    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) dists.push_back((rows.row(i) - rows.row(j)).norm());
    if (dists.empty()) return 1.0;
    const auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
    std::nth_element(dists.begin(), mid, dists.end());
    double median = *mid;
    if (dists.size() % 2 == 0) {
        const double lower = *std::max_element(dists.begin(), mid);
        median = 0.5 * (median + lower);
    }
    return median > 0.0 ? median : 1.0;
}

std::optional<Eigen::VectorXd> standardize(const Eigen::VectorXd& column) {
    const double mean = column.mean();
    const double sd = std::sqrt((column.array() - mean).square().mean());
    if (!(sd > 1e-12)) return std::nullopt;
    return ((column.array() - mean) / sd).matrix();
}

}  // namespace graphlime
