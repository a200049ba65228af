#include "graphlime/graphlime.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "config_json.hpp"
#include "graphlime/error.hpp"
#include "graphlime/evaluation.hpp"
#include "graphlime/explainers.hpp"
#include "graphlime/graph.hpp"
#include "graphlime/predictor.hpp"
#include "graphlime/random.hpp"
#include "graphlime/synthetic.hpp"

struct glime_graph {
    graphlime::Graph graph;
};

struct glime_model {
    graphlime::GnnModel model;
};

namespace {

using graphlime::ErrorCode;
using graphlime::config::Json;

constexpr const char* kVersion = "0.1.0";

thread_local std::string last_error;

glime_status to_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return GLIME_INVALID_ARGUMENT;
        case ErrorCode::parse: return GLIME_PARSE;
        case ErrorCode::bounds: return GLIME_BOUNDS;
        case ErrorCode::consistency: return GLIME_CONSISTENCY;
        case ErrorCode::insufficient_neighbors: return GLIME_INSUFFICIENT_NEIGHBORS;
        case ErrorCode::degenerate_problem: return GLIME_DEGENERATE;
        case ErrorCode::format: return GLIME_FORMAT;
        case ErrorCode::training: return GLIME_TRAINING;
        case ErrorCode::gate_unmet: return GLIME_GATE_UNMET;
        case ErrorCode::io: return GLIME_IO;
        case ErrorCode::contract_violation: return GLIME_CONTRACT;
    }
    return GLIME_INTERNAL;
}

template <typename F>
glime_status guarded(F&& body) {
    last_error.clear();
    try {
        body();
        return GLIME_OK;
    } catch (const graphlime::Error& e) {
        last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return GLIME_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return GLIME_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (p == nullptr) graphlime::fail(ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
}

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

Json parse_config(const char* text, const char* what) {
    if (text == nullptr || *text == '\0') return Json::object();
    Json j = graphlime::config::parse(text, what);
    if (!j.is_object()) graphlime::fail(ErrorCode::invalid_argument, std::string(what) + " must be a JSON object");
    return j;
}

Json section(const Json& j, const char* key) { return j.contains(key) ? j.at(key) : Json::object(); }

graphlime::Method method_from(const std::string& name) {
    if (auto m = graphlime::parse_method(name)) return *m;
    std::string valid;
    for (auto m : graphlime::all_methods()) valid += (valid.empty() ? "" : ", ") + std::string(graphlime::method_name(m));
    graphlime::fail(ErrorCode::invalid_argument, "unknown method '" + name + "'; valid methods: " + valid);
}

std::vector<graphlime::Method> methods_from(const Json& j) {
    if (!j.contains("methods")) return graphlime::all_methods();
    if (!j.at("methods").is_array()) graphlime::fail(ErrorCode::invalid_argument, "methods must be an array of names");
    std::vector<graphlime::Method> out;
    for (const auto& m : j.at("methods")) {
        if (!m.is_string()) graphlime::fail(ErrorCode::invalid_argument, "methods must be an array of names");
        out.push_back(method_from(m.get<std::string>()));
    }
    return out;
}

double read_fraction(const Json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) graphlime::fail(ErrorCode::invalid_argument, std::string(key) + " must be a number");
    return j.at(key).get<double>();
}

std::vector<graphlime::NodeId> node_list(const Json& j, const graphlime::Graph& g) {
    std::vector<graphlime::NodeId> nodes;
    if (j.contains("nodes")) {
        if (!j.at("nodes").is_array()) graphlime::fail(ErrorCode::invalid_argument, "nodes must be an array of ids");
        for (const auto& v : j.at("nodes")) {
            if (!v.is_number_unsigned()) graphlime::fail(ErrorCode::invalid_argument, "nodes must be an array of ids");
            const auto id = v.get<std::size_t>();
            if (id >= g.node_count()) {
                graphlime::fail(ErrorCode::bounds, "node " + std::to_string(id) + " out of range (graph has " +
                                                       std::to_string(g.node_count()) + " nodes)");
            }
            nodes.push_back(id);
        }
        return nodes;
    }
    for (graphlime::NodeId v = 0; v < g.node_count(); ++v)
        if (!g.neighbors(v).empty()) nodes.push_back(v);
    return nodes;
}

Json resolve_train(const Json& j) {
    Json out = graphlime::config::to_json(graphlime::config::hyper_from_json(j));
    out.erase("seed");
    out["train_fraction"] = read_fraction(j, "train_fraction", 0.8);
    return out;
}

double min_fraction_of(const Json& j) { return read_fraction(section(j, "model_select"), "min_fraction", 0.03); }

// Experiment request with every block present and defaulted; a top-level seed
// overrides the per-block seeds.
Json resolve_experiment(const Json& j) {
    Json out;
    Json names = Json::array();
    for (auto m : methods_from(j)) names.push_back(std::string(graphlime::method_name(m)));
    out["methods"] = std::move(names);
    auto explainer = graphlime::config::explainer_from_json(section(j, "explainer"));
    auto setup = graphlime::config::setup_from_json(section(j, "setup"));
    auto trust = graphlime::config::trust_from_json(section(j, "trust"));
    auto selection = graphlime::config::model_selection_from_json(section(j, "model_select"));
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned())
            graphlime::fail(ErrorCode::invalid_argument, "seed must be an unsigned integer");
        const auto seed = j.at("seed").get<std::uint64_t>();
        explainer.seed = seed;
        setup.seed = seed;
        trust.seed = seed;
        selection.seed = seed;
        out["seed"] = seed;
    }
    out["explainer"] = graphlime::config::to_json(explainer);
    Json train = graphlime::config::to_json(graphlime::config::hyper_from_json(section(j, "train")));
    train.erase("seed");
    out["train"] = std::move(train);
    out["setup"] = graphlime::config::to_json(setup);
    std::size_t nodes_to_explain = graphlime::NoiseExperimentConfig{}.nodes_to_explain;
    const Json noise = section(j, "noise");
    if (noise.contains("nodes_to_explain")) {
        if (!noise.at("nodes_to_explain").is_number_unsigned())
            graphlime::fail(ErrorCode::invalid_argument, "nodes_to_explain must be an unsigned integer");
        nodes_to_explain = noise.at("nodes_to_explain").get<std::size_t>();
    }
    out["noise"] = {{"nodes_to_explain", nodes_to_explain}};
    out["trust"] = graphlime::config::to_json(trust);
    Json ms = graphlime::config::to_json(selection);
    ms["min_fraction"] = min_fraction_of(j);
    out["model_select"] = std::move(ms);
    if (j.contains("experiment")) out["experiment"] = j.at("experiment");
    return out;
}

}  // namespace

extern "C" {

const char* glime_version(void) { return kVersion; }

const char* glime_last_error(void) { return last_error.c_str(); }

const char* glime_status_name(glime_status status) {
    switch (status) {
        case GLIME_OK: return "ok";
        case GLIME_INVALID_ARGUMENT: return "invalid_argument";
        case GLIME_PARSE: return "parse";
        case GLIME_BOUNDS: return "bounds";
        case GLIME_CONSISTENCY: return "consistency";
        case GLIME_INSUFFICIENT_NEIGHBORS: return "insufficient_neighbors";
        case GLIME_DEGENERATE: return "degenerate";
        case GLIME_FORMAT: return "format";
        case GLIME_TRAINING: return "training";
        case GLIME_GATE_UNMET: return "gate_unmet";
        case GLIME_IO: return "io";
        case GLIME_CONTRACT: return "contract";
        case GLIME_INTERNAL: return "internal";
    }
    return "unknown";
}

void glime_string_free(char* s) { std::free(s); }

glime_status glime_config_resolve(const char* kind, const char* config_json, char** resolved_json) {
    return guarded([&] {
        require(kind, "kind");
        require(resolved_json, "resolved_json");
        const std::string k = kind;
        const Json j = parse_config(config_json, "config");
        Json out;
        if (k == "train") out = resolve_train(j);
        else if (k == "explainer") out = graphlime::config::to_json(graphlime::config::explainer_from_json(j));
        else if (k == "synthetic") out = graphlime::config::to_json(graphlime::config::synthetic_from_json(j));
        else if (k == "experiment") out = resolve_experiment(j);
        else graphlime::fail(ErrorCode::invalid_argument, "unknown config kind '" + k + "'");
        *resolved_json = copy_string(out.dump());
    });
}

glime_status glime_graph_load(const char* edges_path, const char* features_path, const char* labels_path,
                              glime_graph** out) {
    return guarded([&] {
        require(edges_path, "edges_path");
        require(features_path, "features_path");
        require(out, "out");
        std::optional<std::filesystem::path> labels;
        if (labels_path != nullptr) labels = labels_path;
        *out = new glime_graph{graphlime::load_graph(edges_path, features_path, labels)};
    });
}

glime_status glime_graph_load_citation(const char* content_path, const char* cites_path, glime_graph** out) {
    return guarded([&] {
        require(content_path, "content_path");
        require(cites_path, "cites_path");
        require(out, "out");
        *out = new glime_graph{graphlime::load_citation_graph(content_path, cites_path)};
    });
}

glime_status glime_graph_generate_synthetic(const char* params_json, uint64_t seed, glime_graph** out) {
    return guarded([&] {
        require(out, "out");
        const auto params = graphlime::config::synthetic_from_json(parse_config(params_json, "synthetic parameters"));
        *out = new glime_graph{graphlime::generate_synthetic(params, seed)};
    });
}

glime_status glime_graph_inject_noise(const glime_graph* graph, size_t count, uint64_t seed, glime_graph** out,
                                      size_t* noisy_indices) {
    return guarded([&] {
        require(graph, "graph");
        require(out, "out");
        auto [augmented, injection] = graphlime::inject_noise_features(graph->graph, count, seed);
        if (noisy_indices != nullptr)
            std::copy(injection.noisy_indices.begin(), injection.noisy_indices.end(), noisy_indices);
        *out = new glime_graph{std::move(augmented)};
    });
}

glime_status glime_graph_save(const glime_graph* graph, const char* edges_path, const char* features_path,
                              const char* labels_path) {
    return guarded([&] {
        require(graph, "graph");
        require(edges_path, "edges_path");
        require(features_path, "features_path");
        std::optional<std::filesystem::path> labels;
        if (labels_path != nullptr) labels = labels_path;
        graphlime::save_graph(graph->graph, edges_path, features_path, labels);
    });
}

glime_status glime_graph_info_get(const glime_graph* graph, glime_graph_info* info) {
    return guarded([&] {
        require(graph, "graph");
        require(info, "info");
        const auto& g = graph->graph;
        info->node_count = g.node_count();
        info->feature_count = g.feature_count();
        info->edge_count = g.edge_count();
        info->edge_records = g.edge_records();
        info->has_labels = g.has_labels() ? 1 : 0;
        info->class_count = g.has_labels() ? g.class_count() : 0;
    });
}

void glime_graph_free(glime_graph* graph) { delete graph; }

glime_status glime_model_train(const glime_graph* graph, const char* config_json, uint64_t seed, glime_model** out) {
    return guarded([&] {
        require(graph, "graph");
        require(out, "out");
        const Json j = parse_config(config_json, "training config");
        auto hyper = graphlime::config::hyper_from_json(j);
        hyper.seed = seed;
        const double fraction = read_fraction(j, "train_fraction", 0.8);
        const auto split = graphlime::random_split(graph->graph.node_count(), fraction, graphlime::mix_seed(seed, {2}));
        *out = new glime_model{graphlime::train_reference_gnn(graph->graph, split.train, split.test, hyper)};
    });
}

glime_status glime_model_load(const char* path, const glime_graph* graph, glime_model** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new glime_model{graph != nullptr ? graphlime::load_model_for(path, graph->graph)
                                                : graphlime::load_model(path)};
    });
}

glime_status glime_model_save(const glime_model* model, const char* path) {
    return guarded([&] {
        require(model, "model");
        require(path, "path");
        graphlime::save_model(model->model, path);
    });
}

glime_status glime_model_metrics_json(const glime_model* model, char** json) {
    return guarded([&] {
        require(model, "model");
        require(json, "json");
        const auto& r = model->model.record();
        Json j = {{"train_acc", r.train_accuracy},
                  {"test_acc", r.test_accuracy},
                  {"epochs", r.epochs},
                  {"seed", r.seed},
                  {"final_loss", r.final_loss}};
        *json = copy_string(j.dump(2) + "\n");
    });
}

glime_status glime_model_predict(const glime_model* model, const glime_graph* graph, size_t node,
                                 double* probabilities, size_t capacity, size_t* class_count) {
    return guarded([&] {
        require(model, "model");
        require(graph, "graph");
        const graphlime::Predictor& p = model->model;
        if (graph->graph.feature_count() != model->model.input_width()) {
            graphlime::fail(ErrorCode::format, "model input width does not match the graph's feature count");
        }
        if (node >= graph->graph.node_count()) graphlime::fail(ErrorCode::bounds, "node out of range");
        const Eigen::VectorXd probs = p.predict(graph->graph, node);
        if (class_count != nullptr) *class_count = static_cast<size_t>(probs.size());
        if (probabilities == nullptr) return;
        if (capacity < static_cast<size_t>(probs.size()))
            graphlime::fail(ErrorCode::invalid_argument, "probability buffer is smaller than the class count");
        for (Eigen::Index i = 0; i < probs.size(); ++i) probabilities[i] = probs(i);
    });
}

void glime_model_free(glime_model* model) { delete model; }

glime_status glime_explain(const glime_model* model, const glime_graph* graph, size_t node, const char* method,
                           const char* config_json, char** json) {
    return guarded([&] {
        require(model, "model");
        require(graph, "graph");
        require(method, "method");
        require(json, "json");
        const auto m = method_from(method);
        const auto config = graphlime::config::explainer_from_json(parse_config(config_json, "explainer config"));
        if (node >= graph->graph.node_count()) graphlime::fail(ErrorCode::bounds, "node out of range");
        const auto explainer = graphlime::make_explainer(m, config);
        const auto e = explainer->explain(model->model, graph->graph, node);
        *json = copy_string(graphlime::explanation_to_json(e, graph->graph));
    });
}

glime_status glime_pick(const glime_model* model, const glime_graph* graph, const char* method,
                        const char* config_json, char** json) {
    return guarded([&] {
        require(model, "model");
        require(graph, "graph");
        require(method, "method");
        require(json, "json");
        const auto m = method_from(method);
        const Json j = parse_config(config_json, "pick config");
        const auto config = graphlime::config::explainer_from_json(section(j, "explainer"));
        std::size_t budget = 10;
        if (j.contains("budget")) {
            if (!j.at("budget").is_number_integer() || j.at("budget").get<long long>() < 1)
                graphlime::fail(ErrorCode::invalid_argument, "budget must be an integer >= 1");
            budget = j.at("budget").get<std::size_t>();
        }
        const auto nodes = node_list(j, graph->graph);
        const auto explainer = graphlime::make_explainer(m, config);

        std::vector<graphlime::Explanation> explanations;
        Json skipped = Json::array();
        for (auto v : nodes) {
            try {
                explanations.push_back(explainer->explain(model->model, graph->graph, v));
            } catch (const graphlime::Error& e) {
                if (e.code() != ErrorCode::insufficient_neighbors && e.code() != ErrorCode::degenerate_problem) throw;
                skipped.push_back(v);
            }
        }
        const auto matrix = graphlime::build_explanation_matrix(explanations, graph->graph.feature_count());
        const Eigen::VectorXd importance = graphlime::global_importance(matrix.weights);
        graphlime::PickResult pick;
        if (!explanations.empty()) pick = graphlime::submodular_pick(matrix.weights, importance, budget);
        else pick.budget_exceeded = true;

        Json out;
        Json picked = Json::array();
        for (auto i : pick.picked) picked.push_back(matrix.instance_ids[i]);
        out["picked"] = std::move(picked);
        out["picked_rows"] = pick.picked;
        out["budget"] = budget;
        out["budget_exceeded"] = pick.budget_exceeded;
        out["instance_ids"] = matrix.instance_ids;
        out["feature_names"] = graph->graph.feature_names();
        out["importance"] = std::vector<double>(importance.data(), importance.data() + importance.size());
        Json rows = Json::array();
        for (Eigen::Index r = 0; r < matrix.weights.rows(); ++r) {
            const Eigen::RowVectorXd row = matrix.weights.row(r);
            rows.push_back(std::vector<double>(row.data(), row.data() + row.size()));
        }
        out["W"] = std::move(rows);
        out["skipped"] = std::move(skipped);
        *json = copy_string(out.dump(2) + "\n");
    });
}

glime_status glime_submodular_pick(const double* w, size_t rows, size_t cols, size_t budget, size_t* picked,
                                   size_t* picked_count, int* budget_exceeded) {
    return guarded([&] {
        require(picked_count, "picked_count");
        if (rows * cols > 0) require(w, "w");
        Eigen::MatrixXd matrix(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (size_t r = 0; r < rows; ++r)
            for (size_t c = 0; c < cols; ++c)
                matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = w[r * cols + c];
        const auto importance = graphlime::global_importance(matrix);
        const auto result = graphlime::submodular_pick(matrix, importance, budget);
        if (!result.picked.empty()) require(picked, "picked");
        std::copy(result.picked.begin(), result.picked.end(), picked);
        *picked_count = result.picked.size();
        if (budget_exceeded != nullptr) *budget_exceeded = result.budget_exceeded ? 1 : 0;
    });
}

glime_status glime_run_experiment(const glime_graph* graph, const char* experiment, const char* config_json,
                                  char** report_json, char** report_csv) {
    return guarded([&] {
        require(graph, "graph");
        require(experiment, "experiment");
        const std::string name = experiment;
        const Json j = resolve_experiment(parse_config(config_json, "experiment config"));
        const auto methods = methods_from(j);
        const auto explainer = graphlime::config::explainer_from_json(j.at("explainer"));
        const auto hyper = graphlime::config::hyper_from_json(j.at("train"));
        const auto setup = graphlime::config::setup_from_json(j.at("setup"));
        const auto trust = graphlime::config::trust_from_json(j.at("trust"));
        const auto selection = graphlime::config::model_selection_from_json(j.at("model_select"));
        const auto specs = graphlime::method_specs(methods, explainer);
        const std::size_t k = explainer.top_k;

        std::string js, csv;
        if (name == "noise") {
            graphlime::NoiseExperimentConfig cfg;
            cfg.setup = setup;
            cfg.nodes_to_explain = j.at("noise").at("nodes_to_explain").get<std::size_t>();
            const auto report = graphlime::run_noise_experiment(graph->graph, graphlime::gnn_factory(hyper), specs, k, cfg);
            js = graphlime::report_to_json(report);
            csv = graphlime::report_to_csv(report);
        } else if (name == "trust") {
            const auto prepared = graphlime::prepare_gated_setup(graph->graph, graphlime::gnn_factory(hyper), setup);
            const auto report = graphlime::run_trust_experiment(prepared.graph, *prepared.trained.model,
                                                                prepared.split.test, specs, k, trust);
            js = graphlime::report_to_json(report);
            csv = graphlime::report_to_csv(report);
        } else if (name == "model-select") {
            const double min_fraction = min_fraction_of(j);
            const auto report = graphlime::run_model_selection(
                graph->graph, graphlime::varied_gnn_factory(hyper, min_fraction), specs, k, selection);
            js = graphlime::report_to_json(report);
            csv = graphlime::report_to_csv(report);
        } else {
            graphlime::fail(ErrorCode::invalid_argument,
                            "unknown experiment '" + name + "'; valid experiments: noise, trust, model-select");
        }
        if (report_json != nullptr) *report_json = copy_string(js);
        if (report_csv != nullptr) *report_csv = copy_string(csv);
    });
}

}  // extern "C"
