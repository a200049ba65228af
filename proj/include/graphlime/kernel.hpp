#pragma once

#include <optional>

#include <Eigen/Dense>

#include "graphlime/graph.hpp"

namespace graphlime {

struct GramMatrix {
    Eigen::MatrixXd values;
    bool normalized = false;
    // Set when centering annihilated the matrix (constant input); values are then all zero.
    bool degenerate = false;

    Eigen::Index size() const noexcept { return values.rows(); }
};

struct KernelConfig {
    std::optional<double> sigma_x;  // nullopt: median heuristic
    std::optional<double> sigma_y;
    bool use_adjacency_mask = false;
};

/// K_ij = exp(-(x_i - x_j)^2 / (2 sigma^2)).
GramMatrix gaussian_gram_feature(const Eigen::VectorXd& column, double sigma_x);

/// L_ij = exp(-||y_i - y_j||^2 / (2 sigma^2)) over the rows of `predictions`.
GramMatrix gaussian_gram_output(const Eigen::MatrixXd& predictions, double sigma_y);

/// H G H / ||H G H||_F with H = I - 11^T/n. Returns a zero matrix flagged
/// degenerate when the centered norm falls below 1e-12.
GramMatrix center_and_normalize(const GramMatrix& gram);

/// trace(a b) for two normalized Gram matrices; 0 if either is degenerate.
double nhsic(const GramMatrix& a, const GramMatrix& b);

/// Elementwise product with the sample's 0/1 adjacency (self-loops on).
GramMatrix mask_with_adjacency(const GramMatrix& gram, const LocalSample& sample, const Graph& graph);

/// Median of pairwise Euclidean distances between rows; 1 when the median is 0.
double median_heuristic_width(const Eigen::MatrixXd& rows);

/// Zero-mean, unit-variance copy of `column`; nullopt for a constant column.
std::optional<Eigen::VectorXd> standardize(const Eigen::VectorXd& column);

}  // namespace graphlime
