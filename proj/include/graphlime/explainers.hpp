#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "graphlime/graph.hpp"
#include "graphlime/hsic.hpp"
#include "graphlime/kernel.hpp"
#include "graphlime/predictor.hpp"

namespace graphlime {

enum class Method { graphlime, lime_linear, greedy, random };

std::string_view method_name(Method method);
/// Parses "graphlime" / "lime_linear" / "greedy" / "random".
std::optional<Method> parse_method(std::string_view name);
const std::vector<Method>& all_methods();

struct LimeSettings {
    std::size_t samples = 500;
    double scale = 0.5;                  // perturbation std as a multiple of each feature's std
    std::optional<double> kernel_width;  // nullopt: sqrt(d) * median feature std
};

struct ExplainerConfig {
    std::size_t hops = 2;
    std::size_t top_k = 10;
    KernelConfig kernel;
    SolverConfig solver;  // when neither rho nor target_nonzeros is set, target_nonzeros = top_k
    LimeSettings lime;
    std::optional<std::size_t> greedy_max_removals;  // nullopt: top_k
    std::uint64_t seed = 0;

    void validate(std::size_t feature_count) const;
};

struct Explanation {
    NodeId node = 0;
    Method method = Method::graphlime;
    std::vector<std::size_t> selected;          // ranked feature indices
    std::vector<double> weights;                // one per selected feature
    std::optional<Eigen::VectorXd> coefficients;  // full vector when the method has one
    std::size_t sample_size = 0;
    std::string config_digest;
};

/// Method-independent entry point used by the evaluation harness.
class Explainer {
public:
    virtual ~Explainer() = default;
    virtual std::string name() const = 0;
    virtual Explanation explain(const Predictor& predictor, const Graph& graph, NodeId v) const = 0;
};

std::unique_ptr<Explainer> make_explainer(Method method, const ExplainerConfig& config);

/// N-hop sample of v paired with the predictor's outputs on the original features.
LocalSample sample_neighborhood(const Predictor& predictor, const Graph& graph, NodeId v, std::size_t hops);

Explanation explain_graphlime(const Predictor& predictor, const Graph& graph, NodeId v, const ExplainerConfig& config);
Explanation explain_linear_lime(const Predictor& predictor, const Graph& graph, NodeId v, const ExplainerConfig& config);
Explanation explain_greedy(const Predictor& predictor, const Graph& graph, NodeId v, const ExplainerConfig& config);
Explanation explain_random(NodeId v, std::size_t feature_count, std::size_t k, std::uint64_t seed);

/// Stable 16-hex-digit digest of the explainer configuration.
std::string config_digest(const ExplainerConfig& config);

/// {node, method, selected:[{index, name, weight}], n, config_digest}
std::string explanation_to_json(const Explanation& explanation, const Graph& graph);

}  // namespace graphlime
