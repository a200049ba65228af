#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "graphlime/graph.hpp"
#include "graphlime/kernel.hpp"

namespace graphlime {

/// Operands of the HSIC Lasso regression
///     min_{beta >= 0} 1/2 ||Lbar - sum_k beta_k Kbar_k||_F^2 + rho ||beta||_1
/// together with the pairwise NHSIC tables the solvers work from.
struct HsicProblem {
    std::vector<GramMatrix> feature_grams;  // Kbar_k, one per feature
    GramMatrix output_gram;                 // Lbar
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<std::size_t> degenerate_features;

    Eigen::MatrixXd feature_nhsic;  // d x d, NHSIC(f_k, f_m)
    Eigen::VectorXd output_nhsic;   // d,     NHSIC(f_k, y)
    double output_self_nhsic = 0.0; // NHSIC(y, y): 1, or 0 for a constant output

    bool is_degenerate(std::size_t k) const;
};

/// Assembles a problem directly from normalized Gram matrices and fills in
/// the NHSIC tables. Used by build_problem and by tests that need hand-made operands.
HsicProblem make_problem(std::vector<GramMatrix> feature_grams, GramMatrix output_gram);

/// Kernelizes a local sample. Features are standardized over the sample,
/// constant ones are recorded as degenerate. Throws degenerate_problem if no
/// feature is usable.
HsicProblem build_problem(const LocalSample& sample, const KernelConfig& config, const Graph& graph);

struct SolverConfig {
    std::optional<double> rho;
    std::optional<std::size_t> target_nonzeros;
    std::size_t max_iterations = 0;  // 0: 4 * d
    double tolerance = 1e-7;
};

enum class PathEvent { activate, drop, stop };

struct PathStep {
    std::size_t step = 0;
    PathEvent event = PathEvent::activate;
    std::size_t feature = 0;  // meaningless for stop
    double rho = 0.0;         // correlation level at this point of the path
    Eigen::VectorXd beta;
};

struct Coefficients {
    Eigen::VectorXd beta;
    std::vector<PathStep> path;
    double rho = 0.0;      // regularization level the returned beta solves
    bool partial = false;  // iteration budget exhausted before a stopping rule fired
    std::size_t iterations = 0;
};

double objective(const HsicProblem& problem, const Eigen::VectorXd& beta, double rho);
double objective_via_nhsic(const HsicProblem& problem, const Eigen::VectorXd& beta, double rho);

/// Nonnegative least angle regression on the vectorized problem. Exactly one
/// of config.rho / config.target_nonzeros must be set. In the target mode the
/// path is followed until one more feature would enter, so the returned beta
/// is the exact solution at that breakpoint with at most K nonzeros.
Coefficients solve_nonnegative_lars(const HsicProblem& problem, const SolverConfig& config);

/// Projected (nonnegative soft-threshold) gradient descent at fixed rho.
Coefficients solve_projected_gradient(const HsicProblem& problem, double rho, const SolverConfig& config);

/// Largest k nonzero coefficients, descending; ties go to the lower index.
std::vector<std::size_t> top_k(const Eigen::VectorXd& beta, std::size_t k);

/// Largest k entries by absolute value, zeros excluded.
std::vector<std::size_t> top_k_abs(const Eigen::VectorXd& coefficients, std::size_t k);

}  // namespace graphlime
