#include <sstream>

#include <json.hpp>

#include "graphlime/evaluation.hpp"
#include "graphlime/graph.hpp"

namespace graphlime {

namespace {

using Json = nlohmann::ordered_json;

std::string csv_number(double x) { return format_double(x); }

}  // namespace

std::string report_to_json(const NoiseReport& report) {
    Json j;
    j["experiment"] = "noise";
    j["top_k"] = report.top_k;
    j["seed"] = report.seed;
    j["noisy_indices"] = report.noisy_indices;
    j["train_accuracy"] = report.train_accuracy;
    j["test_accuracy"] = report.test_accuracy;
    j["training_attempts"] = report.training_attempts;
    j["metadata"] = {{"feature_removal", "global column zeroing"},
                     {"explained_nodes", "held-out nodes first, then training nodes, degree > 0"}};
    Json methods = Json::array();
    for (const auto& m : report.methods) {
        methods.push_back({{"method", m.method},
                           {"mean_noisy_count", m.mean},
                           {"histogram", m.histogram},
                           {"skipped", m.skipped},
                           {"nodes", m.nodes},
                           {"noisy_counts", m.noisy_counts}});
    }
    j["methods"] = std::move(methods);
    return j.dump(2) + "\n";
}

std::string report_to_csv(const NoiseReport& report) {
    std::ostringstream out;
    out << "node_id,method,noisy_count\n";
    for (const auto& m : report.methods)
        for (std::size_t i = 0; i < m.nodes.size(); ++i) out << m.nodes[i] << ',' << m.method << ',' << m.noisy_counts[i] << '\n';
    return out.str();
}

std::string report_to_json(const TrustReport& report) {
    Json j;
    j["experiment"] = "trust";
    j["top_k"] = report.top_k;
    j["seed"] = report.seed;
    j["rounds"] = report.rounds;
    j["untrusted_count"] = report.untrusted_count;
    j["metadata"] = {{"positive_class", "trustworthy"},
                     {"feature_removal", "global column zeroing"},
                     {"surrogate", "ordinary least squares on [1, selected features] over the N-hop sample, argmax of class scores"},
                     {"surrogate_methods", {"graphlime", "lime_linear"}}};
    Json methods = Json::array();
    for (const auto& m : report.methods) {
        methods.push_back({{"method", m.method},
                           {"f1", m.f1},
                           {"f1_std", m.f1_std},
                           {"precision", m.precision},
                           {"recall", m.recall},
                           {"unexplained", m.unexplained}});
    }
    j["methods"] = std::move(methods);
    j["oracle_untrustworthy_rate"] = report.oracle_untrustworthy_rate;
    j["untrusted_per_round"] = report.untrusted_per_round;
    return j.dump(2) + "\n";
}

std::string report_to_csv(const TrustReport& report) {
    std::ostringstream out;
    out << "round,method,precision,recall,f1\n";
    for (std::size_t r = 0; r < report.rounds; ++r) {
        for (const auto& m : report.methods) {
            if (r >= m.round_f1.size()) continue;
            out << r << ',' << m.method << ',' << csv_number(m.round_precision[r]) << ','
                << csv_number(m.round_recall[r]) << ',' << csv_number(m.round_f1[r]) << '\n';
        }
    }
    return out.str();
}

std::string report_to_json(const ModelSelectionReport& report) {
    Json j;
    j["experiment"] = "model-select";
    j["top_k"] = report.top_k;
    j["seed"] = report.seed;
    j["budgets"] = report.budgets;
    j["metadata"] = {{"better_classifier", "higher held-out test accuracy"},
                     {"tie_rule", "seeded coin flip"}};
    Json acc = Json::object();
    for (const auto& [name, values] : report.accuracy) acc[name] = values;
    j["accuracy"] = std::move(acc);
    j["random_choice_accuracy"] = report.random_choice_accuracy;
    Json rounds = Json::array();
    for (const auto& r : report.rounds) {
        Json outcomes = Json::object();
        for (const auto& [name, list] : r.outcomes) {
            Json arr = Json::array();
            for (const auto& o : list) {
                arr.push_back({{"noisy_a", o.noisy_a}, {"noisy_b", o.noisy_b}, {"choice", o.choice},
                               {"tie", o.tie}, {"correct", o.correct}});
            }
            outcomes[name] = std::move(arr);
        }
        rounds.push_back({{"round", r.round},
                          {"accuracy_a", r.accuracy_a},
                          {"accuracy_b", r.accuracy_b},
                          {"better", r.better},
                          {"attempts", r.attempts},
                          {"outcomes", std::move(outcomes)},
                          {"random_choice_correct", r.random_choice_correct}});
    }
    j["rounds"] = std::move(rounds);
    return j.dump(2) + "\n";
}

std::string report_to_csv(const ModelSelectionReport& report) {
    std::ostringstream out;
    out << "round,method,budget,noisy_a,noisy_b,choice,tie,correct\n";
    for (const auto& r : report.rounds) {
        for (const auto& [name, list] : r.outcomes) {
            for (std::size_t b = 0; b < list.size(); ++b) {
                const auto& o = list[b];
                out << r.round << ',' << name << ',' << report.budgets[b] << ',' << o.noisy_a << ',' << o.noisy_b
                    << ',' << o.choice << ',' << (o.tie ? 1 : 0) << ',' << (o.correct ? 1 : 0) << '\n';
            }
        }
        for (std::size_t b = 0; b < r.random_choice_correct.size(); ++b) {
            out << r.round << ",random_choice," << report.budgets[b] << ",,,,," << (r.random_choice_correct[b] ? 1 : 0)
                << '\n';
        }
    }
    return out.str();
}

}  // namespace graphlime
