// Command-line front end. Talks to the library only through the C interface.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "graphlime/graphlime.h"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitGate = 3;

struct CliError {
    int exit_code;
    std::string message;
};

[[noreturn]] void input_error(const std::string& message) { throw CliError{kExitInput, message}; }

void check(glime_status status, const std::string& context) {
    if (status == GLIME_OK) return;
    const int code = status == GLIME_GATE_UNMET ? kExitGate : status == GLIME_INTERNAL ? kExitInternal : kExitInput;
    throw CliError{code, context + ": " + glime_last_error()};
}

struct OwnedString {
    char* ptr = nullptr;
    OwnedString() = default;
    OwnedString(const OwnedString&) = delete;
    OwnedString& operator=(const OwnedString&) = delete;
    ~OwnedString() { glime_string_free(ptr); }
    std::string str() const { return ptr ? std::string(ptr) : std::string(); }
};

template <typename T, void (*Free)(T*)>
struct Handle {
    T* ptr = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    Handle(Handle&& other) noexcept : ptr(std::exchange(other.ptr, nullptr)) {}
    Handle& operator=(Handle&& other) noexcept {
        std::swap(ptr, other.ptr);
        return *this;
    }
    ~Handle() { Free(ptr); }
};

using GraphHandle = Handle<glime_graph, glime_graph_free>;
using ModelHandle = Handle<glime_model, glime_model_free>;

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) input_error("cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_atomic(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CliError{kExitInput, "cannot write " + tmp.string()};
        out << contents;
        if (!out.flush()) throw CliError{kExitInput, "write failed for " + tmp.string()};
    }
    fs::rename(tmp, path);
}

// --- resolved configuration -------------------------------------------------------------

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::string> edges, features, labels, content, cites, model;
};

// Config file contents, accepting either a plain config document or a run manifest.
Json load_config(const std::string& path, const std::string& command) {
    if (path.empty()) return Json::object();
    if (!fs::exists(path)) input_error("config file not found: " + path);
    Json doc;
    try {
        doc = Json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        input_error("cannot parse config " + path + ": " + e.what());
    }
    if (!doc.is_object()) input_error("config " + path + " must be a JSON object");
    if (doc.contains("artifact_version") && doc.contains("config")) {
        if (doc.value("command", command) != command) {
            input_error("manifest " + path + " was written by '" + doc.value("command", "") + "', not '" + command + "'");
        }
        return doc.at("config");
    }
    return doc;
}

Json& at_path(Json& doc, std::initializer_list<const char*> keys) {
    Json* node = &doc;
    for (const char* k : keys) {
        if (!node->is_object()) *node = Json::object();
        node = &(*node)[k];
    }
    return *node;
}

template <typename T>
void override_with(Json& doc, std::initializer_list<const char*> keys, const std::optional<T>& value) {
    if (value) at_path(doc, keys) = *value;
}

std::uint64_t resolve_seed(Json& doc, const Common& c) {
    override_with(doc, {"seed"}, c.seed);
    if (!doc.contains("seed") || !doc.at("seed").is_number_unsigned())
        input_error("a seed is required: pass --seed or set \"seed\" in the config");
    return doc.at("seed").get<std::uint64_t>();
}

fs::path resolve_out(const Json& doc, const Common& c) {
    if (!c.out.empty()) return c.out;
    if (doc.contains("out") && doc.at("out").is_string()) return doc.at("out").get<std::string>();
    input_error("an output directory is required: pass --out or set \"out\" in the config");
}

void apply_data_overrides(Json& doc, const Common& c) {
    override_with(doc, {"data", "edges"}, c.edges);
    override_with(doc, {"data", "features"}, c.features);
    override_with(doc, {"data", "labels"}, c.labels);
    override_with(doc, {"data", "content"}, c.content);
    override_with(doc, {"data", "cites"}, c.cites);
    override_with(doc, {"model"}, c.model);
}

std::string string_at(const Json& doc, std::initializer_list<const char*> keys, const std::string& what) {
    const Json* node = &doc;
    for (const char* k : keys) {
        if (!node->is_object() || !node->contains(k)) input_error(what + " is required");
        node = &node->at(k);
    }
    if (!node->is_string()) input_error(what + " must be a string");
    return node->get<std::string>();
}

void require_file(const std::string& path) {
    if (!fs::exists(path)) input_error("file not found: " + path);
}

GraphHandle load_data(const Json& doc, bool need_labels) {
    if (doc.contains("data") && doc.at("data").contains("content")) {
        const std::string content = string_at(doc, {"data", "content"}, "data.content (--content)");
        const std::string cites = string_at(doc, {"data", "cites"}, "data.cites (--cites)");
        require_file(content);
        require_file(cites);
        GraphHandle g;
        check(glime_graph_load_citation(content.c_str(), cites.c_str(), &g.ptr), "loading graph");
        return g;
    }
    const std::string edges = string_at(doc, {"data", "edges"}, "data.edges (--edges)");
    const std::string features = string_at(doc, {"data", "features"}, "data.features (--features)");
    std::optional<std::string> labels;
    if (doc.contains("data") && doc.at("data").contains("labels") && doc.at("data").at("labels").is_string())
        labels = doc.at("data").at("labels").get<std::string>();
    if (need_labels && !labels) input_error("data.labels (--labels) is required for this command");
    require_file(edges);
    require_file(features);
    if (labels) require_file(*labels);
    GraphHandle g;
    check(glime_graph_load(edges.c_str(), features.c_str(), labels ? labels->c_str() : nullptr, &g.ptr),
          "loading graph");
    return g;
}

ModelHandle load_model(const Json& doc, const GraphHandle& graph) {
    const std::string path = string_at(doc, {"model"}, "model (--model)");
    require_file(path);
    ModelHandle m;
    check(glime_model_load(path.c_str(), graph.ptr, &m.ptr), "loading model");
    return m;
}

// Fills in library defaults so the manifest records every effective setting.
Json resolved(const char* kind, const Json& section) {
    const std::string text = section.is_null() ? std::string() : section.dump();
    OwnedString out;
    check(glime_config_resolve(kind, text.c_str(), &out.ptr), std::string(kind) + " config");
    return Json::parse(out.str());
}

void write_manifest(const fs::path& out, const std::string& command, std::uint64_t seed, Json config) {
    config.erase("out");
    Json manifest;
    manifest["artifact_version"] = glime_version();
    manifest["command"] = command;
    manifest["seed"] = seed;
    manifest["config"] = std::move(config);
    write_atomic(out / "run_manifest.json", manifest.dump(2) + "\n");
}

std::vector<std::uint64_t> parse_id_list(const std::string& text) {
    std::vector<std::uint64_t> ids;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            ids.push_back(std::stoull(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            input_error("not a node id: '" + item + "'");
        }
    }
    return ids;
}

std::vector<std::string> split_names(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

std::string valid_methods() { return "graphlime, lime_linear, greedy, random"; }

void check_method(const std::string& name) {
    for (const char* m : {"graphlime", "lime_linear", "greedy", "random"})
        if (name == m) return;
    input_error("unknown method '" + name + "'; valid methods: " + valid_methods());
}

// --- commands --------------------------------------------------------------------------------

struct TrainFlags {
    std::optional<std::size_t> epochs, hidden;
    std::optional<double> learning_rate, weight_decay, train_fraction;
};

int cmd_train(const Common& c, const TrainFlags& f) {
    Json doc = load_config(c.config_path, "train");
    apply_data_overrides(doc, c);
    override_with(doc, {"train", "epochs"}, f.epochs);
    override_with(doc, {"train", "hidden_width"}, f.hidden);
    override_with(doc, {"train", "learning_rate"}, f.learning_rate);
    override_with(doc, {"train", "weight_decay"}, f.weight_decay);
    override_with(doc, {"train", "train_fraction"}, f.train_fraction);
    const auto seed = resolve_seed(doc, c);
    const fs::path out = resolve_out(doc, c);

    doc["train"] = resolved("train", doc.contains("train") ? doc.at("train") : Json::object());
    GraphHandle graph = load_data(doc, true);
    const std::string train_cfg = doc.at("train").dump();
    ModelHandle model;
    check(glime_model_train(graph.ptr, train_cfg.c_str(), seed, &model.ptr), "training");
    fs::create_directories(out);
    check(glime_model_save(model.ptr, (out / "model.json").c_str()), "saving model");
    OwnedString metrics;
    check(glime_model_metrics_json(model.ptr, &metrics.ptr), "metrics");
    write_atomic(out / "metrics.json", metrics.str());
    write_manifest(out, "train", seed, doc);
    std::cout << metrics.str();
    return kExitOk;
}

struct ExplainFlags {
    std::optional<std::string> method, nodes;
    std::optional<std::size_t> top_k, hops;
};

int cmd_explain(const Common& c, const ExplainFlags& f) {
    Json doc = load_config(c.config_path, "explain");
    apply_data_overrides(doc, c);
    override_with(doc, {"explain", "method"}, f.method);
    override_with(doc, {"explain", "explainer", "top_k"}, f.top_k);
    override_with(doc, {"explain", "explainer", "hops"}, f.hops);
    if (f.nodes) at_path(doc, {"explain", "nodes"}) = parse_id_list(*f.nodes);
    const auto seed = resolve_seed(doc, c);
    const fs::path out = resolve_out(doc, c);

    const std::string method = doc.contains("explain") ? doc["explain"].value("method", "graphlime") : "graphlime";
    check_method(method);
    at_path(doc, {"explain", "method"}) = method;
    at_path(doc, {"explain", "explainer", "seed"}) = seed;
    doc["explain"]["explainer"] = resolved("explainer", doc["explain"]["explainer"]);
    const Json& section = doc.at("explain");
    if (!section.contains("nodes") || !section.at("nodes").is_array() || section.at("nodes").empty())
        input_error("explain.nodes (--nodes) must list at least one node id");

    GraphHandle graph = load_data(doc, false);
    ModelHandle model = load_model(doc, graph);
    const std::string explainer_cfg = section.at("explainer").dump();

    std::size_t skipped = 0;
    std::cout << "node\tfeatures (weight)\n";
    for (const auto& id : section.at("nodes")) {
        if (!id.is_number_unsigned()) input_error("explain.nodes must hold node ids");
        const auto v = id.get<std::size_t>();
        OwnedString js;
        const glime_status st = glime_explain(model.ptr, graph.ptr, v, method.c_str(), explainer_cfg.c_str(), &js.ptr);
        if (st == GLIME_INSUFFICIENT_NEIGHBORS || st == GLIME_DEGENERATE) {
            std::cerr << "warning: node " << v << " skipped: " << glime_last_error() << "\n";
            ++skipped;
            continue;
        }
        check(st, "explaining node " + std::to_string(v));
        write_atomic(out / "explanations" / ("node_" + std::to_string(v) + ".json"), js.str());
        const Json e = Json::parse(js.str());
        std::cout << v << "\t";
        bool first = true;
        for (const auto& s : e.at("selected")) {
            std::cout << (first ? "" : ", ") << s.at("name").get<std::string>() << " ("
                      << s.at("weight").get<double>() << ")";
            first = false;
        }
        std::cout << "\n";
    }
    std::cout << "explained " << section.at("nodes").size() - skipped << ", skipped " << skipped << "\n";
    write_manifest(out, "explain", seed, doc);
    return kExitOk;
}

struct EvalFlags {
    std::optional<std::string> experiment, methods;
    std::optional<std::size_t> top_k, rounds;
};

int cmd_eval(const Common& c, const EvalFlags& f) {
    Json doc = load_config(c.config_path, "eval");
    apply_data_overrides(doc, c);
    override_with(doc, {"eval", "experiment"}, f.experiment);
    override_with(doc, {"eval", "explainer", "top_k"}, f.top_k);
    if (f.methods) at_path(doc, {"eval", "methods"}) = split_names(*f.methods);
    const auto seed = resolve_seed(doc, c);
    const fs::path out = resolve_out(doc, c);

    Json& section = at_path(doc, {"eval"});
    if (!section.contains("experiment") || !section.at("experiment").is_string())
        input_error("eval.experiment (--experiment) is required: noise, trust or model-select");
    const std::string experiment = section.at("experiment").get<std::string>();
    if (experiment != "noise" && experiment != "trust" && experiment != "model-select")
        input_error("unknown experiment '" + experiment + "'; valid experiments: noise, trust, model-select");
    if (f.rounds) {
        if (experiment == "trust") at_path(doc, {"eval", "trust", "rounds"}) = *f.rounds;
        if (experiment == "model-select") at_path(doc, {"eval", "model_select", "rounds"}) = *f.rounds;
    }
    if (!section.contains("methods")) section["methods"] = {"graphlime", "lime_linear", "greedy", "random"};
    std::vector<std::string> methods;
    for (const auto& m : section.at("methods")) {
        if (!m.is_string()) input_error("eval.methods must hold method names");
        check_method(m.get<std::string>());
        methods.push_back(m.get<std::string>());
    }
    section["seed"] = seed;
    section = resolved("experiment", section);
    const std::size_t top_k = section.at("explainer").at("top_k").get<std::size_t>();

    GraphHandle graph = load_data(doc, true);
    const std::string request_text = section.dump();
    OwnedString js, csv;
    check(glime_run_experiment(graph.ptr, experiment.c_str(), request_text.c_str(), &js.ptr, &csv.ptr), experiment);

    const std::string stem = experiment + "_" + join(methods, "-") + "_k" + std::to_string(top_k) + "_s" + std::to_string(seed);
    write_atomic(out / (stem + ".json"), js.str());
    write_atomic(out / (stem + ".csv"), csv.str());
    write_manifest(out, "eval", seed, doc);

    const Json report = Json::parse(js.str());
    if (experiment == "noise") {
        std::cout << "method\tmean_noisy\tskipped\n";
        for (const auto& m : report.at("methods"))
            std::cout << m.at("method").get<std::string>() << "\t" << m.at("mean_noisy_count").get<double>() << "\t"
                      << m.at("skipped").get<std::size_t>() << "\n";
    } else if (experiment == "trust") {
        std::cout << "method\tf1\tprecision\trecall\n";
        for (const auto& m : report.at("methods"))
            std::cout << m.at("method").get<std::string>() << "\t" << m.at("f1").get<double>() << "\t"
                      << m.at("precision").get<double>() << "\t" << m.at("recall").get<double>() << "\n";
    } else {
        std::cout << "method";
        for (const auto& b : report.at("budgets")) std::cout << "\tB=" << b.get<std::size_t>();
        std::cout << "\n";
        for (const auto& [name, acc] : report.at("accuracy").items()) {
            std::cout << name;
            for (const auto& a : acc) std::cout << "\t" << a.get<double>();
            std::cout << "\n";
        }
        std::cout << "random_choice";
        for (const auto& a : report.at("random_choice_accuracy")) std::cout << "\t" << a.get<double>();
        std::cout << "\n";
    }
    std::cout << "wrote " << (out / (stem + ".json")).string() << "\n";
    return kExitOk;
}

struct PickFlags {
    std::optional<std::string> method, nodes;
    std::optional<long long> budget;
};

int cmd_pick(const Common& c, const PickFlags& f) {
    Json doc = load_config(c.config_path, "pick");
    apply_data_overrides(doc, c);
    override_with(doc, {"pick", "method"}, f.method);
    override_with(doc, {"pick", "budget"}, f.budget);
    if (f.nodes) at_path(doc, {"pick", "nodes"}) = parse_id_list(*f.nodes);
    const auto seed = resolve_seed(doc, c);
    const fs::path out = resolve_out(doc, c);

    Json& section = at_path(doc, {"pick"});
    const std::string method = section.value("method", "graphlime");
    check_method(method);
    section["method"] = method;
    if (!section.contains("budget")) input_error("pick.budget (--budget) is required");
    if (!section.at("budget").is_number_integer() || section.at("budget").get<long long>() < 1)
        input_error("pick.budget must be an integer >= 1");
    at_path(doc, {"pick", "explainer", "seed"}) = seed;
    section["explainer"] = resolved("explainer", section["explainer"]);

    GraphHandle graph = load_data(doc, false);
    ModelHandle model = load_model(doc, graph);
    const std::string request = section.dump();
    OwnedString js;
    check(glime_pick(model.ptr, graph.ptr, method.c_str(), request.c_str(), &js.ptr), "pick");
    const Json result = Json::parse(js.str());

    std::ostringstream w_csv, i_csv;
    const auto& names = result.at("feature_names");
    w_csv << "node_id";
    for (const auto& n : names) w_csv << "," << n.get<std::string>();
    w_csv << "\n";
    for (std::size_t r = 0; r < result.at("W").size(); ++r) {
        w_csv << result.at("instance_ids")[r].get<std::size_t>();
        for (const auto& x : result.at("W")[r]) w_csv << "," << x.dump();
        w_csv << "\n";
    }
    i_csv << "feature,importance\n";
    for (std::size_t j = 0; j < names.size(); ++j)
        i_csv << names[j].get<std::string>() << "," << result.at("importance")[j].dump() << "\n";
    write_atomic(out / "pick_W.csv", w_csv.str());
    write_atomic(out / "pick_I.csv", i_csv.str());
    write_atomic(out / "pick.json", js.str());
    write_manifest(out, "pick", seed, doc);

    if (result.at("budget_exceeded").get<bool>())
        std::cerr << "warning: budget exceeds the " << result.at("instance_ids").size()
                  << " explained candidates; all were picked\n";
    if (!result.at("skipped").empty())
        std::cerr << "warning: " << result.at("skipped").size() << " candidates could not be explained\n";
    for (const auto& id : result.at("picked")) std::cout << id.get<std::size_t>() << "\n";
    return kExitOk;
}

struct SyntheticFlags {
    std::optional<std::size_t> node_count;
};

int cmd_generate(const Common& c, const SyntheticFlags& f) {
    Json doc = load_config(c.config_path, "generate-synthetic");
    override_with(doc, {"synthetic", "node_count"}, f.node_count);
    const auto seed = resolve_seed(doc, c);
    const fs::path out = resolve_out(doc, c);
    doc["synthetic"] = resolved("synthetic", doc.contains("synthetic") ? doc.at("synthetic") : Json::object());
    const std::string params = doc.at("synthetic").dump();
    GraphHandle graph;
    check(glime_graph_generate_synthetic(params.c_str(), seed, &graph.ptr), "generating graph");
    fs::create_directories(out);
    check(glime_graph_save(graph.ptr, (out / "edges.tsv").c_str(), (out / "features.csv").c_str(),
                           (out / "labels.txt").c_str()),
          "saving graph");
    write_manifest(out, "generate-synthetic", seed, doc);
    glime_graph_info info{};
    check(glime_graph_info_get(graph.ptr, &info), "graph info");
    std::cout << "nodes " << info.node_count << ", features " << info.feature_count << ", edges " << info.edge_count
              << ", classes " << info.class_count << "\n";
    return kExitOk;
}

void add_common(CLI::App* app, Common& c, bool data) {
    app->add_option("--config", c.config_path, "JSON config or run_manifest.json");
    app->add_option("--seed", c.seed, "random seed");
    app->add_option("--out", c.out, "output directory");
    if (data) {
        app->add_option("--edges", c.edges, "edge list file");
        app->add_option("--features", c.features, "feature CSV file");
        app->add_option("--labels", c.labels, "label file");
        app->add_option("--content", c.content, "citation-format node file (replaces --features/--labels)");
        app->add_option("--cites", c.cites, "citation-format edge file (replaces --edges)");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graphlime: local explanations for graph node classifiers"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(glime_version()));

    Common common;
    TrainFlags train_flags;
    ExplainFlags explain_flags;
    EvalFlags eval_flags;
    PickFlags pick_flags;
    SyntheticFlags synthetic_flags;

    auto* train = app.add_subcommand("train", "train the reference GNN");
    add_common(train, common, true);
    train->add_option("--epochs", train_flags.epochs);
    train->add_option("--hidden", train_flags.hidden);
    train->add_option("--learning-rate", train_flags.learning_rate);
    train->add_option("--weight-decay", train_flags.weight_decay);
    train->add_option("--train-fraction", train_flags.train_fraction);

    auto* explain = app.add_subcommand("explain", "explain node predictions");
    add_common(explain, common, true);
    explain->add_option("--model", common.model, "model JSON file");
    explain->add_option("--method", explain_flags.method, "graphlime | lime_linear | greedy | random");
    explain->add_option("--nodes", explain_flags.nodes, "comma-separated node ids");
    explain->add_option("--top-k", explain_flags.top_k);
    explain->add_option("--hops", explain_flags.hops);

    auto* eval = app.add_subcommand("eval", "run an evaluation experiment");
    add_common(eval, common, true);
    eval->add_option("--experiment", eval_flags.experiment, "noise | trust | model-select");
    eval->add_option("--methods", eval_flags.methods, "comma-separated method names");
    eval->add_option("--top-k", eval_flags.top_k);
    eval->add_option("--rounds", eval_flags.rounds);

    auto* pick = app.add_subcommand("pick", "submodular pick over explanations");
    add_common(pick, common, true);
    pick->add_option("--model", common.model, "model JSON file");
    pick->add_option("--method", pick_flags.method);
    pick->add_option("--budget", pick_flags.budget);
    pick->add_option("--nodes", pick_flags.nodes, "comma-separated candidate node ids");

    auto* generate = app.add_subcommand("generate-synthetic", "write the synthetic benchmark graph");
    add_common(generate, common, false);
    generate->add_option("--node-count", synthetic_flags.node_count);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*train) return cmd_train(common, train_flags);
        if (*explain) return cmd_explain(common, explain_flags);
        if (*eval) return cmd_eval(common, eval_flags);
        if (*pick) return cmd_pick(common, pick_flags);
        if (*generate) return cmd_generate(common, synthetic_flags);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.exit_code;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed config: " << e.what() << "\n";
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInternal;
}
