#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "graphlime/graph.hpp"

namespace graphlime {

/// Black-box node classifier seen by the explainers.
///
/// Implementations must be deterministic and must read features from the
/// matrix they are handed, never from graph.features() directly, so callers
/// can remove or perturb features through an override.
class Predictor {
public:
    virtual ~Predictor() = default;

    virtual std::size_t class_count() const = 0;

    /// Probability vector for node v computed against `features`.
    virtual Eigen::VectorXd predict(const Graph& graph, const Eigen::MatrixXd& features, NodeId v) const = 0;

    /// One probability row per node. The default loops over predict().
    virtual Eigen::MatrixXd predict_all(const Graph& graph, const Eigen::MatrixXd& features) const;

    Eigen::VectorXd predict(const Graph& graph, NodeId v) const { return predict(graph, graph.features(), v); }
};

std::size_t argmax(const Eigen::VectorXd& probabilities);

/// Fraction of `ids` whose argmax prediction equals the graph label.
double accuracy(const Predictor& predictor, const Graph& graph, std::span<const NodeId> ids);

struct GnnHyperParams {
    std::size_t hidden_width = 16;
    std::size_t epochs = 200;
    double learning_rate = 0.01;
    double weight_decay = 5e-4;
    std::uint64_t seed = 0;
};

struct TrainingRecord {
    std::size_t epochs = 0;
    std::uint64_t seed = 0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double final_loss = 0.0;
};

/// Two-layer mean-aggregation message-passing classifier:
///   h_v = relu(W1 [x_v ; mean_{u in N(v)+v} x_u] + b1)
///   p_v = softmax(W2 [h_v ; mean_{u in N(v)+v} h_u] + b2)
class GnnModel final : public Predictor {
public:
    GnnModel() = default;
    GnnModel(std::size_t input_width, std::size_t hidden_width, std::size_t class_count, std::uint64_t seed);

    std::size_t class_count() const override { return static_cast<std::size_t>(w2_.rows()); }
    std::size_t input_width() const noexcept { return static_cast<std::size_t>(w1_.cols() / 2); }
    std::size_t hidden_width() const noexcept { return static_cast<std::size_t>(w1_.rows()); }

    Eigen::VectorXd predict(const Graph& graph, const Eigen::MatrixXd& features, NodeId v) const override;
    Eigen::MatrixXd predict_all(const Graph& graph, const Eigen::MatrixXd& features) const override;

    struct Gradients {
        Eigen::MatrixXd w1, w2;
        Eigen::VectorXd b1, b2;
    };

    /// Mean cross-entropy over `ids` plus 0.5 * weight_decay * (|W1|^2 + |W2|^2)
    /// and its exact gradient.
    double loss_and_gradients(const Graph& graph, const Eigen::MatrixXd& features, std::span<const NodeId> ids,
                              double weight_decay, Gradients* gradients) const;

    Eigen::MatrixXd& w1() { return w1_; }
    Eigen::MatrixXd& w2() { return w2_; }
    Eigen::VectorXd& b1() { return b1_; }
    Eigen::VectorXd& b2() { return b2_; }
    const Eigen::MatrixXd& w1() const { return w1_; }
    const Eigen::MatrixXd& w2() const { return w2_; }
    const Eigen::VectorXd& b1() const { return b1_; }
    const Eigen::VectorXd& b2() const { return b2_; }

    TrainingRecord& record() { return record_; }
    const TrainingRecord& record() const { return record_; }

private:
    void check_shape(const Graph& graph, const Eigen::MatrixXd& features) const;

    Eigen::MatrixXd w1_;  // hidden x 2d
    Eigen::VectorXd b1_;
    Eigen::MatrixXd w2_;  // C x 2*hidden
    Eigen::VectorXd b2_;
    TrainingRecord record_;
};

/// Full-batch training on cross-entropy over `train_ids` (Adam steps with a
/// fixed learning rate). Deterministic under hyper.seed.
GnnModel train_reference_gnn(const Graph& graph, std::span<const NodeId> train_ids,
                             std::span<const NodeId> test_ids, const GnnHyperParams& hyper);

void save_model(const GnnModel& model, const std::filesystem::path& path);
GnnModel load_model(const std::filesystem::path& path);
std::string model_to_json(const GnnModel& model);
GnnModel model_from_json(const std::string& text);

/// Load a model and check it against the graph it will be applied to.
GnnModel load_model_for(const std::filesystem::path& path, const Graph& graph);

/// Random train/test partition: the first round(train_fraction * n) of a
/// seeded shuffle go to training. Both parts are returned sorted.
struct Split {
    std::vector<NodeId> train;
    std::vector<NodeId> test;
};
Split random_split(std::size_t node_count, double train_fraction, std::uint64_t seed);

}  // namespace graphlime
