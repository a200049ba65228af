#include "config_json.hpp"

#include <algorithm>
#include <type_traits>
#include <vector>

#include "graphlime/error.hpp"

namespace graphlime::config {

namespace {

template <typename T>
void read(const Json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    const Json& v = j.at(key);
    bool ok = true;
    if constexpr (std::is_same_v<T, bool>) {
        ok = v.is_boolean();
    } else if constexpr (std::is_unsigned_v<T>) {
        ok = v.is_number_unsigned();
    } else if constexpr (std::is_floating_point_v<T>) {
        ok = v.is_number();
    } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
        ok = v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_number_unsigned(); });
    }
    if (!ok) fail(ErrorCode::invalid_argument, std::string("config key '") + key + "' has the wrong type");
    try {
        out = v.get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(ErrorCode::invalid_argument, std::string("config key '") + key + "' has the wrong type");
    }
}

// null or "auto" -> nullopt
template <typename T>
void read_optional(const Json& j, const char* key, std::optional<T>& out) {
    if (!j.contains(key)) return;
    const Json& v = j.at(key);
    if (v.is_null() || (v.is_string() && v.get<std::string>() == "auto")) {
        out.reset();
        return;
    }
    T value{};
    read(j, key, value);
    out = value;
}

template <typename T>
Json optional_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

void require_object(const Json& j, const char* what) {
    if (!j.is_object()) fail(ErrorCode::invalid_argument, std::string(what) + " must be a JSON object");
}

}  // namespace

Json parse(const std::string& text, const char* what) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::parse, std::string(what) + ": " + e.what());
    }
}

Json to_json(const ExplainerConfig& c) {
    Json j;
    j["hops"] = c.hops;
    j["top_k"] = c.top_k;
    j["kernel"] = {{"sigma_x", c.kernel.sigma_x ? Json(*c.kernel.sigma_x) : Json("auto")},
                   {"sigma_y", c.kernel.sigma_y ? Json(*c.kernel.sigma_y) : Json("auto")},
                   {"use_adjacency_mask", c.kernel.use_adjacency_mask}};
    j["solver"] = {{"rho", optional_json(c.solver.rho)},
                   {"target_nonzeros", optional_json(c.solver.target_nonzeros)},
                   {"max_iterations", c.solver.max_iterations},
                   {"tolerance", c.solver.tolerance}};
    j["lime"] = {{"samples", c.lime.samples},
                 {"scale", c.lime.scale},
                 {"kernel_width", c.lime.kernel_width ? Json(*c.lime.kernel_width) : Json("auto")}};
    j["greedy_max_removals"] = optional_json(c.greedy_max_removals);
    j["seed"] = c.seed;
    return j;
}

ExplainerConfig explainer_from_json(const Json& j) {
    require_object(j, "explainer config");
    ExplainerConfig c;
    read(j, "hops", c.hops);
    read(j, "top_k", c.top_k);
    if (j.contains("kernel")) {
        const Json& k = j.at("kernel");
        require_object(k, "kernel config");
        read_optional(k, "sigma_x", c.kernel.sigma_x);
        read_optional(k, "sigma_y", c.kernel.sigma_y);
        read(k, "use_adjacency_mask", c.kernel.use_adjacency_mask);
    }
    if (j.contains("solver")) {
        const Json& s = j.at("solver");
        require_object(s, "solver config");
        read_optional(s, "rho", c.solver.rho);
        read_optional(s, "target_nonzeros", c.solver.target_nonzeros);
        read(s, "max_iterations", c.solver.max_iterations);
        read(s, "tolerance", c.solver.tolerance);
    }
    if (j.contains("lime")) {
        const Json& l = j.at("lime");
        require_object(l, "lime config");
        read(l, "samples", c.lime.samples);
        read(l, "scale", c.lime.scale);
        read_optional(l, "kernel_width", c.lime.kernel_width);
    }
    read_optional(j, "greedy_max_removals", c.greedy_max_removals);
    read(j, "seed", c.seed);
    return c;
}

Json to_json(const GnnHyperParams& h) {
    return {{"hidden_width", h.hidden_width},
            {"epochs", h.epochs},
            {"learning_rate", h.learning_rate},
            {"weight_decay", h.weight_decay},
            {"seed", h.seed}};
}

GnnHyperParams hyper_from_json(const Json& j) {
    require_object(j, "training config");
    GnnHyperParams h;
    read(j, "hidden_width", h.hidden_width);
    read(j, "epochs", h.epochs);
    read(j, "learning_rate", h.learning_rate);
    read(j, "weight_decay", h.weight_decay);
    read(j, "seed", h.seed);
    return h;
}

Json to_json(const SyntheticParams& p) {
    return {{"node_count", p.node_count},
            {"class_count", p.class_count},
            {"informative_features", p.informative_features},
            {"weak_features", p.weak_features},
            {"signal", p.signal},
            {"weak_signal", p.weak_signal},
            {"average_degree", p.average_degree},
            {"homophily", p.homophily}};
}

SyntheticParams synthetic_from_json(const Json& j) {
    require_object(j, "synthetic config");
    SyntheticParams p;
    read(j, "node_count", p.node_count);
    read(j, "class_count", p.class_count);
    read(j, "informative_features", p.informative_features);
    read(j, "weak_features", p.weak_features);
    read(j, "signal", p.signal);
    read(j, "weak_signal", p.weak_signal);
    read(j, "average_degree", p.average_degree);
    read(j, "homophily", p.homophily);
    return p;
}

Json to_json(const SetupConfig& c) {
    return {{"noise_count", c.noise_count},
            {"accuracy_gate", c.accuracy_gate},
            {"retries", c.retries},
            {"train_fraction", c.train_fraction},
            {"seed", c.seed}};
}

SetupConfig setup_from_json(const Json& j) {
    require_object(j, "setup config");
    SetupConfig c;
    read(j, "noise_count", c.noise_count);
    read(j, "accuracy_gate", c.accuracy_gate);
    read(j, "retries", c.retries);
    read(j, "train_fraction", c.train_fraction);
    read(j, "seed", c.seed);
    return c;
}

Json to_json(const TrustExperimentConfig& c) {
    return {{"untrust_fraction", c.untrust_fraction}, {"rounds", c.rounds}, {"hops", c.hops}, {"seed", c.seed}};
}

TrustExperimentConfig trust_from_json(const Json& j) {
    require_object(j, "trust config");
    TrustExperimentConfig c;
    read(j, "untrust_fraction", c.untrust_fraction);
    read(j, "rounds", c.rounds);
    read(j, "hops", c.hops);
    read(j, "seed", c.seed);
    return c;
}

Json to_json(const ModelSelectionConfig& c) {
    return {{"budgets", c.budgets},
            {"noise_count", c.noise_count},
            {"rounds", c.rounds},
            {"min_accuracy", c.min_accuracy},
            {"min_gap", c.min_gap},
            {"retries", c.retries},
            {"candidates", c.candidates},
            {"train_fraction", c.train_fraction},
            {"seed", c.seed}};
}

ModelSelectionConfig model_selection_from_json(const Json& j) {
    require_object(j, "model-select config");
    ModelSelectionConfig c;
    read(j, "budgets", c.budgets);
    read(j, "noise_count", c.noise_count);
    read(j, "rounds", c.rounds);
    read(j, "min_accuracy", c.min_accuracy);
    read(j, "min_gap", c.min_gap);
    read(j, "retries", c.retries);
    read(j, "candidates", c.candidates);
    read(j, "train_fraction", c.train_fraction);
    read(j, "seed", c.seed);
    return c;
}

}  // namespace graphlime::config
