#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "graphlime/explainers.hpp"
#include "graphlime/graph.hpp"
#include "graphlime/predictor.hpp"

namespace graphlime {

// --- submodular pick -------------------------------------------------------------

struct ExplanationMatrix {
    Eigen::MatrixXd weights;  // instances x d, nonnegative
    std::vector<NodeId> instance_ids;
};

/// Row i holds |weight| of each selected feature of explanations[i], zero elsewhere.
ExplanationMatrix build_explanation_matrix(const std::vector<Explanation>& explanations, std::size_t feature_count);

/// I_j = sqrt(sum_i W_ij). Throws contract_violation on a negative entry.
Eigen::VectorXd global_importance(const Eigen::MatrixXd& w);

/// Sum of I_j over the columns covered (W_ij > 0) by at least one instance in `chosen`.
double coverage_score(const std::vector<std::size_t>& chosen, const Eigen::MatrixXd& w, const Eigen::VectorXd& importance);

struct PickResult {
    std::vector<std::size_t> picked;  // instance indices in pick order
    bool budget_exceeded = false;     // budget > instances; every instance was picked
};

/// Greedy coverage maximization; ties go to the lowest instance index.
PickResult submodular_pick(const Eigen::MatrixXd& w, const Eigen::VectorXd& importance, std::size_t budget);

// --- shared experiment plumbing ------------------------------------------------------

struct TrainedPredictor {
    std::shared_ptr<const Predictor> model;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

/// Trains a classifier on `graph` using the split's training part.
using PredictorFactory = std::function<TrainedPredictor(const Graph& graph, const Split& split, std::uint64_t seed)>;

/// Reference GNN trained on the full training split.
PredictorFactory gnn_factory(GnnHyperParams hyper);

/// Reference GNN trained on a seed-dependent random subset (fraction log-uniform in min_fraction..1)
/// of the training split, so that independently trained models differ in quality.
PredictorFactory varied_gnn_factory(GnnHyperParams hyper, double min_fraction);

struct MethodSpec {
    std::string name;
    // builds the explainer for a given seed; deterministic methods ignore it
    std::function<std::shared_ptr<const Explainer>(std::uint64_t seed)> make;
    // re-draw explanations every round (random baseline)
    bool stochastic = false;
    // graphlime/lime_linear users re-fit a local linear surrogate; the rest
    // distrust any explanation that mentions an untrustworthy feature
    bool surrogate_user = false;
};

std::vector<MethodSpec> method_specs(const std::vector<Method>& methods, const ExplainerConfig& config);

// --- gated training setup ------------------------------------------------------------------

/// Noise injection, split and accuracy-gated training shared by the experiments.
struct SetupConfig {
    std::size_t noise_count = 10;
    double accuracy_gate = 0.8;  // minimum held-out accuracy
    std::size_t retries = 25;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

struct GatedSetup {
    Graph graph;                             // with the injected columns appended
    std::vector<std::size_t> noisy_indices;  // sorted
    Split split;
    TrainedPredictor trained;
    std::size_t attempts = 0;
};

/// Retries training with derived seeds until the gate passes; throws gate_unmet
/// carrying the best accuracy reached.
GatedSetup prepare_gated_setup(const Graph& graph, const PredictorFactory& factory, const SetupConfig& config);

// --- noisy-feature experiment ------------------------------------------------------------

struct NoiseExperimentConfig {
    SetupConfig setup;
    std::size_t nodes_to_explain = 50;
};

struct NoiseMethodResult {
    std::string method;
    std::vector<NodeId> nodes;
    std::vector<std::size_t> noisy_counts;
    std::vector<std::size_t> histogram;  // index = noisy count, 0..K
    double mean = 0.0;
    std::size_t skipped = 0;  // nodes the method could not explain
};

struct NoiseReport {
    std::size_t top_k = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> noisy_indices;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::size_t training_attempts = 0;
    std::vector<NoiseMethodResult> methods;
};

NoiseReport run_noise_experiment(const Graph& graph, const PredictorFactory& factory,
                                 const std::vector<MethodSpec>& methods, std::size_t top_k,
                                 const NoiseExperimentConfig& config);

// --- trust experiment ----------------------------------------------------------------------

struct TrustExperimentConfig {
    double untrust_fraction = 0.3;
    std::size_t rounds = 100;
    std::size_t hops = 2;
    std::uint64_t seed = 0;
};

struct TrustMethodResult {
    std::string method;
    double f1 = 0.0;  // averaged over rounds
    double f1_std = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    std::vector<double> round_f1;
    std::vector<double> round_precision;
    std::vector<double> round_recall;
    std::size_t unexplained = 0;
};

struct TrustReport {
    std::size_t top_k = 0;
    std::uint64_t seed = 0;
    std::size_t rounds = 0;
    std::size_t untrusted_count = 0;
    std::vector<std::vector<std::size_t>> untrusted_per_round;
    std::vector<double> oracle_untrustworthy_rate;  // per round
    std::vector<TrustMethodResult> methods;
};

struct Confusion {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Precision, recall, F1 with "trustworthy" as the positive class. A ratio
/// with an empty denominator is 1 when there was nothing to get wrong and 0 otherwise.
struct Scores {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};
Scores score(const Confusion& c);

TrustReport run_trust_experiment(const Graph& graph, const Predictor& predictor, const std::vector<NodeId>& test_nodes,
                                 const std::vector<MethodSpec>& methods, std::size_t top_k,
                                 const TrustExperimentConfig& config);

// --- model selection experiment --------------------------------------------------------------

struct ModelSelectionConfig {
    std::vector<std::size_t> budgets{5, 10, 15, 20, 25, 30};
    std::size_t noise_count = 10;
    std::size_t rounds = 50;
    double min_accuracy = 0.7;
    double min_gap = 0.05;
    std::size_t retries = 25;
    std::size_t candidates = 40;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

struct BudgetOutcome {
    std::size_t noisy_a = 0;
    std::size_t noisy_b = 0;
    std::size_t choice = 0;  // 0 = classifier a, 1 = classifier b
    bool tie = false;
    bool correct = false;
};

struct SelectionRound {
    std::size_t round = 0;
    double accuracy_a = 0.0, accuracy_b = 0.0;
    std::size_t better = 0;
    std::size_t attempts = 0;
    std::map<std::string, std::vector<BudgetOutcome>> outcomes;  // method -> per budget
    std::vector<bool> random_choice_correct;                     // per budget
};

struct ModelSelectionReport {
    std::size_t top_k = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> budgets;
    std::map<std::string, std::vector<double>> accuracy;  // method -> per budget
    std::vector<double> random_choice_accuracy;            // per budget
    std::vector<SelectionRound> rounds;
};

ModelSelectionReport run_model_selection(const Graph& graph, const PredictorFactory& factory,
                                         const std::vector<MethodSpec>& methods, std::size_t top_k,
                                         const ModelSelectionConfig& config);

// --- serialization --------------------------------------------------------------------------

std::string report_to_json(const NoiseReport& report);
std::string report_to_csv(const NoiseReport& report);
std::string report_to_json(const TrustReport& report);
std::string report_to_csv(const TrustReport& report);
std::string report_to_json(const ModelSelectionReport& report);
std::string report_to_csv(const ModelSelectionReport& report);

}  // namespace graphlime
