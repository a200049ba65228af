#include "graphlime/explainers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "config_json.hpp"
#include "graphlime/error.hpp"
#include "graphlime/random.hpp"

namespace graphlime {

std::string_view method_name(Method method) {
    switch (method) {
        case Method::graphlime: return "graphlime";
        case Method::lime_linear: return "lime_linear";
        case Method::greedy: return "greedy";
        case Method::random: return "random";
    }
    return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
    for (Method m : all_methods())
        if (method_name(m) == name) return m;
    return std::nullopt;
}

const std::vector<Method>& all_methods() {
    static const std::vector<Method> methods{Method::graphlime, Method::lime_linear, Method::greedy, Method::random};
    return methods;
}

void ExplainerConfig::validate(std::size_t feature_count) const {
    if (top_k < 1) fail(ErrorCode::invalid_argument, "top_k must be at least 1");
    if (hops < 1) fail(ErrorCode::invalid_argument, "hops must be at least 1");
    if (lime.samples * 10 < feature_count) {
        fail(ErrorCode::invalid_argument, "LIME needs at least d/10 perturbation samples");
    }
    if (lime.scale < 0.0) fail(ErrorCode::invalid_argument, "LIME perturbation scale must be >= 0");
    if (lime.kernel_width && !(*lime.kernel_width > 0.0)) {
        fail(ErrorCode::invalid_argument, "LIME kernel width must be positive");
    }
    if (kernel.sigma_x && !(*kernel.sigma_x > 0.0)) fail(ErrorCode::invalid_argument, "sigma_x must be positive");
    if (kernel.sigma_y && !(*kernel.sigma_y > 0.0)) fail(ErrorCode::invalid_argument, "sigma_y must be positive");
}

LocalSample sample_neighborhood(const Predictor& predictor, const Graph& graph, NodeId v, std::size_t hops) {
    const std::vector<NodeId> nodes = n_hop_neighborhood(graph, v, hops);
    if (nodes.size() < 2) {
        fail(ErrorCode::insufficient_neighbors, "node " + std::to_string(v) + " has no neighbors within " +
                                                    std::to_string(hops) + " hops");
    }
    Eigen::MatrixXd preds(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(predictor.class_count()));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        preds.row(static_cast<Eigen::Index>(i)) = predictor.predict(graph, nodes[i]).transpose();
    }
    return assemble_local_sample(graph, nodes, preds);
}

Explanation explain_graphlime(const Predictor& predictor, const Graph& graph, NodeId v, const ExplainerConfig& config) {
    config.validate(graph.feature_count());
    const LocalSample sample = sample_neighborhood(predictor, graph, v, config.hops);
    const HsicProblem problem = build_problem(sample, config.kernel, graph);

    SolverConfig solver = config.solver;
    if (!solver.rho && !solver.target_nonzeros) solver.target_nonzeros = config.top_k;
    Coefficients coef = solve_nonnegative_lars(problem, solver);

    Explanation out;
    out.node = v;
    out.method = Method::graphlime;
    out.selected = top_k(coef.beta, config.top_k);
    for (std::size_t j : out.selected) out.weights.push_back(coef.beta(static_cast<Eigen::Index>(j)));
    out.coefficients = std::move(coef.beta);
    out.sample_size = sample.size();
    out.config_digest = config_digest(config);
    return out;
}

namespace {

// Weighted lasso by cyclic coordinate descent on centered data.
// Returns false if no column has weighted variance.
bool weighted_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& w, double lambda,
                    Eigen::VectorXd& beta, Eigen::VectorXd& residual, const Eigen::VectorXd& col_scale) {
    const auto d = x.cols();
    bool any = false;
    for (int sweep = 0; sweep < 2000; ++sweep) {
        double max_delta = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) {
            const double z = col_scale(j);
            if (z <= 0.0) continue;
            any = true;
            const double old = beta(j);
            const double rho = (w.array() * x.col(j).array() * residual.array()).sum() + z * old;
            const double next = rho > lambda ? (rho - lambda) / z : (rho < -lambda ? (rho + lambda) / z : 0.0);
            if (next != old) {
                residual -= (next - old) * x.col(j);
                beta(j) = next;
                max_delta = std::max(max_delta, std::abs(next - old) * std::sqrt(z));
            }
        }
        if (max_delta < 1e-10) break;
    }
    return any;
}

}  // namespace

Explanation explain_linear_lime(const Predictor& predictor, const Graph& graph, NodeId v, const ExplainerConfig& config) {
    config.validate(graph.feature_count());
    if (v >= graph.node_count()) fail(ErrorCode::bounds, "node " + std::to_string(v) + " out of range");
    const Eigen::MatrixXd& x = graph.features();
    const auto d = x.cols();
    const auto samples = static_cast<Eigen::Index>(config.lime.samples);

    Eigen::VectorXd feature_std(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double mean = x.col(j).mean();
        feature_std(j) = std::sqrt((x.col(j).array() - mean).square().mean());
    }
    if (config.lime.scale == 0.0 || (feature_std.array() == 0.0).all() || samples < 2) {
        fail(ErrorCode::degenerate_problem, "LIME perturbations are all identical; cannot fit a surrogate");
    }
    std::vector<double> stds(feature_std.data(), feature_std.data() + d);
    std::nth_element(stds.begin(), stds.begin() + d / 2, stds.end());
    double median_std = stds[static_cast<std::size_t>(d / 2)];
    if (!(median_std > 0.0)) median_std = 1.0;
    const double width = config.lime.kernel_width.value_or(std::sqrt(static_cast<double>(d)) * median_std);

    const Eigen::VectorXd original = predictor.predict(graph, v);
    const auto cls = static_cast<Eigen::Index>(argmax(original));
    const Eigen::RowVectorXd xv = x.row(static_cast<Eigen::Index>(v));

    std::mt19937_64 rng(mix_seed(config.seed, {static_cast<std::uint64_t>(v), 0x11e5ULL}));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd eps(samples, d);
    Eigen::VectorXd target(samples);
    Eigen::VectorXd weight(samples);
    Eigen::MatrixXd work = x;
    for (Eigen::Index s = 0; s < samples; ++s) {
        for (Eigen::Index j = 0; j < d; ++j) eps(s, j) = normal(rng);
        const Eigen::RowVectorXd delta = config.lime.scale * eps.row(s).cwiseProduct(feature_std.transpose());
        work.row(static_cast<Eigen::Index>(v)) = xv + delta;
        target(s) = predictor.predict(graph, work, v)(cls);
        weight(s) = std::exp(-delta.squaredNorm() / (width * width));
    }

    // regress in perturbation units so coefficients compare across features
    const double wsum = weight.sum();
    const Eigen::VectorXd wn = weight / wsum;
    Eigen::MatrixXd design = eps;
    for (Eigen::Index j = 0; j < d; ++j) {
        if (feature_std(j) == 0.0) design.col(j).setZero();
    }
    const Eigen::RowVectorXd col_mean = wn.transpose() * design;
    design.rowwise() -= col_mean;
    const double t_mean = wn.dot(target);
    const Eigen::VectorXd centered = target.array() - t_mean;

    Eigen::VectorXd col_scale(d);
    for (Eigen::Index j = 0; j < d; ++j) col_scale(j) = (wn.array() * design.col(j).array().square()).sum();
    if ((col_scale.array() <= 1e-300).all()) {
        fail(ErrorCode::degenerate_problem, "LIME design matrix has no variance");
    }

    const Eigen::VectorXd xty = design.transpose() * (wn.cwiseProduct(centered));
    const double lambda_max = xty.cwiseAbs().maxCoeff();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd residual = centered;
    if (lambda_max > 0.0) {
        // walk down a geometric lambda path until K features are active
        for (int step = 1; step <= 80; ++step) {
            const double lambda = lambda_max * std::pow(0.8, step);
            weighted_lasso(design, wn, lambda, beta, residual, col_scale);
            if (static_cast<std::size_t>((beta.array() != 0.0).count()) >= config.top_k) break;
        }
    }

    Explanation out;
    out.node = v;
    out.method = Method::lime_linear;
    out.selected = top_k_abs(beta, config.top_k);
    for (std::size_t j : out.selected) out.weights.push_back(beta(static_cast<Eigen::Index>(j)));
    out.coefficients = std::move(beta);
    out.sample_size = static_cast<std::size_t>(samples);
    out.config_digest = config_digest(config);
    return out;
}

Explanation explain_greedy(const Predictor& predictor, const Graph& graph, NodeId v, const ExplainerConfig& config) {
    config.validate(graph.feature_count());
    if (v >= graph.node_count()) fail(ErrorCode::bounds, "node " + std::to_string(v) + " out of range");
    const std::size_t d = graph.feature_count();
    const std::size_t budget = std::min(config.greedy_max_removals.value_or(config.top_k), d);

    Eigen::MatrixXd work = graph.features();
    const Eigen::VectorXd original = predictor.predict(graph, work, v);
    const std::size_t cls = argmax(original);
    double current = original(static_cast<Eigen::Index>(cls));
    std::vector<bool> removed(d, false);

    Explanation out;
    out.node = v;
    out.method = Method::greedy;
    out.sample_size = 1;
    for (std::size_t step = 0; step < budget; ++step) {
        std::size_t best = d;
        double best_prob = 0.0;
        Eigen::VectorXd best_pred;
        for (std::size_t j = 0; j < d; ++j) {
            if (removed[j]) continue;
            const auto jj = static_cast<Eigen::Index>(j);
            const Eigen::VectorXd saved = work.col(jj);
            work.col(jj).setZero();
            Eigen::VectorXd pred = predictor.predict(graph, work, v);
            work.col(jj) = saved;
            const double p = pred(static_cast<Eigen::Index>(cls));
            if (best == d || p < best_prob) {
                best = j;
                best_prob = p;
                best_pred = std::move(pred);
            }
        }
        if (best == d) break;
        removed[best] = true;
        work.col(static_cast<Eigen::Index>(best)).setZero();
        out.selected.push_back(best);
        out.weights.push_back(current - best_prob);
        current = best_prob;
        if (argmax(best_pred) != cls) break;
    }
    out.config_digest = config_digest(config);
    return out;
}

Explanation explain_random(NodeId v, std::size_t feature_count, std::size_t k, std::uint64_t seed) {
    if (k < 1) fail(ErrorCode::invalid_argument, "k must be at least 1");
    if (k > feature_count) {
        fail(ErrorCode::invalid_argument, "cannot pick " + std::to_string(k) + " of " +
                                              std::to_string(feature_count) + " features");
    }
    std::vector<std::size_t> idx(feature_count);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(mix_seed(seed, {static_cast<std::uint64_t>(v), 0x7a4dULL}));
    // partial Fisher-Yates
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, feature_count - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    Explanation out;
    out.node = v;
    out.method = Method::random;
    out.selected.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    out.weights.assign(k, 1.0);
    out.sample_size = 0;
    return out;
}

namespace {

class MethodExplainer final : public Explainer {
public:
    MethodExplainer(Method method, ExplainerConfig config) : method_(method), config_(std::move(config)) {}

    std::string name() const override { return std::string(method_name(method_)); }

    Explanation explain(const Predictor& predictor, const Graph& graph, NodeId v) const override {
        switch (method_) {
            case Method::graphlime: return explain_graphlime(predictor, graph, v, config_);
            case Method::lime_linear: return explain_linear_lime(predictor, graph, v, config_);
            case Method::greedy: return explain_greedy(predictor, graph, v, config_);
            case Method::random: {
                if (v >= graph.node_count()) fail(ErrorCode::bounds, "node " + std::to_string(v) + " out of range");
                Explanation e = explain_random(v, graph.feature_count(), std::min(config_.top_k, graph.feature_count()),
                                               config_.seed);
                e.config_digest = config_digest(config_);
                return e;
            }
        }
        fail(ErrorCode::invalid_argument, "unknown method");
    }

private:
    Method method_;
    ExplainerConfig config_;
};

}  // namespace

std::unique_ptr<Explainer> make_explainer(Method method, const ExplainerConfig& config) {
    return std::make_unique<MethodExplainer>(method, config);
}

std::string config_digest(const ExplainerConfig& config) {
    const std::string text = config::to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string explanation_to_json(const Explanation& explanation, const Graph& graph) {
    config::Json j;
    j["node"] = explanation.node;
    j["method"] = std::string(method_name(explanation.method));
    config::Json sel = config::Json::array();
    for (std::size_t i = 0; i < explanation.selected.size(); ++i) {
        const std::size_t idx = explanation.selected[i];
        sel.push_back({{"index", idx},
                       {"name", idx < graph.feature_names().size() ? graph.feature_names()[idx] : ""},
                       {"weight", explanation.weights.at(i)}});
    }
    j["selected"] = std::move(sel);
    j["n"] = explanation.sample_size;
    j["config_digest"] = explanation.config_digest;
    return j.dump(2) + "\n";
}

}  // namespace graphlime
