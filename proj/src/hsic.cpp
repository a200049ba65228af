#include "graphlime/hsic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "graphlime/error.hpp"

namespace graphlime {

bool HsicProblem::is_degenerate(std::size_t k) const {
    return std::binary_search(degenerate_features.begin(), degenerate_features.end(), k);
}

HsicProblem make_problem(std::vector<GramMatrix> feature_grams, GramMatrix output_gram) {
    HsicProblem p;
    p.n = static_cast<std::size_t>(output_gram.values.rows());
    p.d = feature_grams.size();
    for (std::size_t k = 0; k < p.d; ++k) {
        if (static_cast<std::size_t>(feature_grams[k].values.rows()) != p.n) {
            fail(ErrorCode::invalid_argument, "feature gram " + std::to_string(k) + " has the wrong dimension");
        }
        if (feature_grams[k].degenerate) p.degenerate_features.push_back(k);
    }
    p.feature_grams = std::move(feature_grams);
    p.output_gram = std::move(output_gram);

    const auto n2 = static_cast<Eigen::Index>(p.n * p.n);
    const auto d = static_cast<Eigen::Index>(p.d);
    // design matrix: one vectorized gram per column
    Eigen::MatrixXd design(n2, d);
    for (Eigen::Index k = 0; k < d; ++k) {
        design.col(k) = Eigen::Map<const Eigen::VectorXd>(p.feature_grams[k].values.data(), n2);
    }
    const Eigen::Map<const Eigen::VectorXd> response(p.output_gram.values.data(), n2);
    p.feature_nhsic = design.transpose() * design;
    p.feature_nhsic = (0.5 * (p.feature_nhsic + p.feature_nhsic.transpose())).eval();
    p.output_nhsic = design.transpose() * response;
    p.output_self_nhsic = nhsic(p.output_gram, p.output_gram);
    return p;
}

HsicProblem build_problem(const LocalSample& sample, const KernelConfig& config, const Graph& graph) {
    const auto n = sample.features.rows();
    if (n < 2) fail(ErrorCode::insufficient_neighbors, "HSIC problem needs at least 2 samples");
    const auto d = sample.features.cols();

    std::vector<GramMatrix> grams;
    grams.reserve(static_cast<std::size_t>(d));
    std::size_t usable = 0;
    for (Eigen::Index k = 0; k < d; ++k) {
        const auto z = standardize(sample.features.col(k));
        if (!z) {
            GramMatrix zero;
            zero.values = Eigen::MatrixXd::Zero(n, n);
            zero.normalized = true;
            zero.degenerate = true;
            grams.push_back(std::move(zero));
            continue;
        }
        const double sigma = config.sigma_x ? *config.sigma_x : median_heuristic_width(*z);
        GramMatrix gram = gaussian_gram_feature(*z, sigma);
        if (config.use_adjacency_mask) gram = mask_with_adjacency(gram, sample, graph);
        gram = center_and_normalize(gram);
        if (!gram.degenerate) ++usable;
        grams.push_back(std::move(gram));
    }
    if (usable == 0) {
        fail(ErrorCode::degenerate_problem, "every feature is constant over the sample of node " +
                                                std::to_string(sample.center));
    }

    const double sigma_y = config.sigma_y ? *config.sigma_y : median_heuristic_width(sample.predictions);
    GramMatrix out = gaussian_gram_output(sample.predictions, sigma_y);
    if (config.use_adjacency_mask) out = mask_with_adjacency(out, sample, graph);
    out = center_and_normalize(out);
    return make_problem(std::move(grams), std::move(out));
}

namespace {

void check_beta(const HsicProblem& problem, const Eigen::VectorXd& beta) {
    if (static_cast<std::size_t>(beta.size()) != problem.d) {
        fail(ErrorCode::invalid_argument, "beta has " + std::to_string(beta.size()) + " entries, expected " +
                                              std::to_string(problem.d));
    }
    for (Eigen::Index k = 0; k < beta.size(); ++k) {
        if (beta(k) < 0.0) {
            fail(ErrorCode::contract_violation, "beta[" + std::to_string(k) + "] is negative");
        }
    }
}

}  // namespace

double objective(const HsicProblem& problem, const Eigen::VectorXd& beta, double rho) {
    check_beta(problem, beta);
    Eigen::MatrixXd residual = problem.output_gram.values;
    for (std::size_t k = 0; k < problem.d; ++k) {
        if (beta(static_cast<Eigen::Index>(k)) != 0.0) {
            residual -= beta(static_cast<Eigen::Index>(k)) * problem.feature_grams[k].values;
        }
    }
    return 0.5 * residual.squaredNorm() + rho * beta.sum();
}

double objective_via_nhsic(const HsicProblem& problem, const Eigen::VectorXd& beta, double rho) {
    check_beta(problem, beta);
    const double quadratic = beta.dot(problem.feature_nhsic * beta);
    return 0.5 * quadratic - beta.dot(problem.output_nhsic) + 0.5 * problem.output_self_nhsic + rho * beta.sum();
}

Coefficients solve_nonnegative_lars(const HsicProblem& problem, const SolverConfig& config) {
    if (config.rho.has_value() == config.target_nonzeros.has_value()) {
        fail(ErrorCode::invalid_argument, "exactly one of rho or target_nonzeros must be set");
    }
    if (config.rho && *config.rho < 0.0) fail(ErrorCode::invalid_argument, "rho must be non-negative");
    if (config.target_nonzeros && *config.target_nonzeros < 1) {
        fail(ErrorCode::invalid_argument, "target_nonzeros must be at least 1");
    }

    const auto d = static_cast<Eigen::Index>(problem.d);
    const Eigen::MatrixXd& gram = problem.feature_nhsic;
    const Eigen::VectorXd& xty = problem.output_nhsic;
    const double rho_floor = config.rho.value_or(0.0);
    const std::size_t max_iter = config.max_iterations ? config.max_iterations : 4 * problem.d;
    const double tol = config.tolerance;
    // a candidate whose direction is (numerically) collinear with the active set never enters
    constexpr double kCollinear = 1e-9;

    Coefficients result;
    result.beta = Eigen::VectorXd::Zero(d);

    std::vector<bool> usable(static_cast<std::size_t>(d), true);
    for (std::size_t k : problem.degenerate_features) usable[k] = false;
    std::vector<bool> active_flag(static_cast<std::size_t>(d), false);
    std::vector<Eigen::Index> active;

    Eigen::VectorXd corr = xty;
    Eigen::Index first = -1;
    for (Eigen::Index j = 0; j < d; ++j) {
        if (usable[static_cast<std::size_t>(j)] && (first < 0 || corr(j) > corr(first))) first = j;
    }
    double level = first >= 0 ? corr(first) : 0.0;
    std::size_t step = 0;
    auto record = [&](PathEvent event, std::size_t feature) {
        result.path.push_back({step++, event, feature, std::max(level, rho_floor), result.beta});
    };

    if (first < 0 || level <= rho_floor + tol) {
        result.rho = std::max(level, rho_floor);
        record(PathEvent::stop, 0);
        return result;
    }
    active.push_back(first);
    active_flag[static_cast<std::size_t>(first)] = true;
    record(PathEvent::activate, static_cast<std::size_t>(first));

    Eigen::Index just_dropped = -1;
    while (true) {
        if (result.iterations >= max_iter) {
            result.partial = true;
            break;
        }
        ++result.iterations;

        const auto m = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd gram_aa(m, m);
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index b = 0; b < m; ++b) gram_aa(a, b) = gram(active[a], active[b]);
        // direction that lowers every active correlation at unit rate
        Eigen::VectorXd w;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram_aa);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            w = ldlt.solve(Eigen::VectorXd::Ones(m));
        } else {
            w = gram_aa.completeOrthogonalDecomposition().solve(Eigen::VectorXd::Ones(m));
        }
        Eigen::VectorXd rate = Eigen::VectorXd::Zero(d);
        for (Eigen::Index a = 0; a < m; ++a) rate += gram.col(active[a]) * w(a);

        double gamma = level - rho_floor;
        PathEvent event = PathEvent::stop;
        Eigen::Index who = -1;

        for (Eigen::Index j = 0; j < d; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            if (!usable[ju] || active_flag[ju] || j == just_dropped) continue;
            const double denom = 1.0 - rate(j);
            if (denom <= kCollinear) continue;
            const double g = (level - corr(j)) / denom;
            if (g > 0.0 && g < gamma) {
                gamma = g;
                event = PathEvent::activate;
                who = j;
            }
        }
        for (Eigen::Index a = 0; a < m; ++a) {
            if (w(a) >= 0.0) continue;
            const double g = -result.beta(active[a]) / w(a);
            if (g > 0.0 && g < gamma) {
                gamma = g;
                event = PathEvent::drop;
                who = active[a];
            }
        }

        if (event == PathEvent::activate && config.target_nonzeros &&
            active.size() >= *config.target_nonzeros) {
            // stop exactly where the next feature would enter
            event = PathEvent::stop;
        }

        for (Eigen::Index a = 0; a < m; ++a) result.beta(active[a]) += gamma * w(a);
        level -= gamma;
        corr = xty - gram * result.beta;
        just_dropped = -1;

        if (event == PathEvent::drop) {
            result.beta(who) = 0.0;
            active.erase(std::find(active.begin(), active.end(), who));
            active_flag[static_cast<std::size_t>(who)] = false;
            just_dropped = who;
            record(PathEvent::drop, static_cast<std::size_t>(who));
            if (active.empty()) {
                // the path cannot continue from an empty active set at this level
                break;
            }
            continue;
        }
        if (event == PathEvent::activate) {
            active.push_back(who);
            active_flag[static_cast<std::size_t>(who)] = true;
            record(PathEvent::activate, static_cast<std::size_t>(who));
            continue;
        }
        break;
    }

    for (Eigen::Index k = 0; k < d; ++k) {
        if (result.beta(k) < 0.0 || !usable[static_cast<std::size_t>(k)]) result.beta(k) = 0.0;
    }
    result.rho = std::max(level, rho_floor);
    record(PathEvent::stop, 0);
    return result;
}

Coefficients solve_projected_gradient(const HsicProblem& problem, double rho, const SolverConfig& config) {
    if (!(rho > 0.0)) fail(ErrorCode::invalid_argument, "projected gradient needs rho > 0");
    const auto d = static_cast<Eigen::Index>(problem.d);
    const Eigen::MatrixXd& gram = problem.feature_nhsic;
    const Eigen::VectorXd& xty = problem.output_nhsic;

    Coefficients result;
    result.rho = rho;
    result.beta = Eigen::VectorXd::Zero(d);
    if (d == 0) return result;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double lipschitz = std::max(eig.eigenvalues().maxCoeff(), 1e-12);
    const double step = 1.0 / lipschitz;
    const std::size_t max_iter = config.max_iterations ? config.max_iterations : 100000;

    auto smooth_objective = [&](const Eigen::VectorXd& b) {
        return 0.5 * b.dot(gram * b) - b.dot(xty) + rho * b.sum();
    };
    double previous = smooth_objective(result.beta);
    for (std::size_t it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd grad = gram * result.beta - xty;
        Eigen::VectorXd next = (result.beta - step * (grad.array() + rho).matrix()).cwiseMax(0.0);
        for (std::size_t k : problem.degenerate_features) next(static_cast<Eigen::Index>(k)) = 0.0;
        const double current = smooth_objective(next);
        const double moved = (next - result.beta).lpNorm<Eigen::Infinity>();
        result.beta = std::move(next);
        result.iterations = it + 1;
        if (previous - current < config.tolerance && moved < std::sqrt(config.tolerance)) {
            return result;
        }
        previous = current;
    }
    result.partial = true;
    return result;
}

namespace {

std::vector<std::size_t> ranked(const Eigen::VectorXd& score, std::size_t k) {
    std::vector<std::size_t> idx;
    for (Eigen::Index j = 0; j < score.size(); ++j)
        if (score(j) > 0.0) idx.push_back(static_cast<std::size_t>(j));
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return score(static_cast<Eigen::Index>(a)) > score(static_cast<Eigen::Index>(b));
    });
    if (idx.size() > k) idx.resize(k);
    return idx;
}

}  // namespace

std::vector<std::size_t> top_k(const Eigen::VectorXd& beta, std::size_t k) {
    if (k < 1) fail(ErrorCode::invalid_argument, "k must be at least 1");
    return ranked(beta, k);
}

std::vector<std::size_t> top_k_abs(const Eigen::VectorXd& coefficients, std::size_t k) {
    if (k < 1) fail(ErrorCode::invalid_argument, "k must be at least 1");
    return ranked(coefficients.cwiseAbs(), k);
}

}  // namespace graphlime
