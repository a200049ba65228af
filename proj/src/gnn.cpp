#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "graphlime/error.hpp"
#include "graphlime/predictor.hpp"
#include "io_util.hpp"

namespace graphlime {

namespace {

constexpr int kModelFormatVersion = 1;
constexpr const char* kModelFormatName = "graphlime-gnn";

// mean over N(v) + v of the rows of `values`, self first, neighbors ascending
Eigen::MatrixXd aggregate(const Graph& graph, const Eigen::MatrixXd& values) {
    Eigen::MatrixXd out(values.rows(), values.cols());
    for (NodeId v = 0; v < graph.node_count(); ++v) {
        const auto vi = static_cast<Eigen::Index>(v);
        Eigen::RowVectorXd acc = values.row(vi);
        const auto& nbrs = graph.neighbors(v);
        for (NodeId u : nbrs) acc += values.row(static_cast<Eigen::Index>(u));
        out.row(vi) = acc / static_cast<double>(nbrs.size() + 1);
    }
    return out;
}

// adjoint of aggregate()
Eigen::MatrixXd aggregate_transpose(const Graph& graph, const Eigen::MatrixXd& grads) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(grads.rows(), grads.cols());
    for (NodeId v = 0; v < graph.node_count(); ++v) {
        const auto vi = static_cast<Eigen::Index>(v);
        const auto& nbrs = graph.neighbors(v);
        const Eigen::RowVectorXd share = grads.row(vi) / static_cast<double>(nbrs.size() + 1);
        out.row(vi) += share;
        for (NodeId u : nbrs) out.row(static_cast<Eigen::Index>(u)) += share;
    }
    return out;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double top = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - top).exp().matrix();
    return e / e.sum();
}

void softmax_rows(Eigen::MatrixXd& logits) {
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double top = logits.row(i).maxCoeff();
        logits.row(i) = (logits.row(i).array() - top).exp().matrix();
        logits.row(i) /= logits.row(i).sum();
    }
}

struct Forward {
    Eigen::MatrixXd m0, z1, h, m1, probs;
};

}  // namespace

Eigen::MatrixXd Predictor::predict_all(const Graph& graph, const Eigen::MatrixXd& features) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(graph.node_count()), static_cast<Eigen::Index>(class_count()));
    for (NodeId v = 0; v < graph.node_count(); ++v) {
        out.row(static_cast<Eigen::Index>(v)) = predict(graph, features, v).transpose();
    }
    return out;
}

std::size_t argmax(const Eigen::VectorXd& probabilities) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < probabilities.size(); ++i)
        if (probabilities(i) > probabilities(best)) best = i;
    return static_cast<std::size_t>(best);
}

double accuracy(const Predictor& predictor, const Graph& graph, std::span<const NodeId> ids) {
    if (ids.empty()) fail(ErrorCode::invalid_argument, "accuracy over an empty node set");
    const auto& labels = graph.labels();
    const Eigen::MatrixXd probs = predictor.predict_all(graph, graph.features());
    std::size_t hits = 0;
    for (NodeId v : ids) {
        if (v >= graph.node_count()) fail(ErrorCode::bounds, "node " + std::to_string(v) + " out of range");
        if (argmax(probs.row(static_cast<Eigen::Index>(v)).transpose()) == static_cast<std::size_t>(labels[v])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(ids.size());
}

GnnModel::GnnModel(std::size_t input_width, std::size_t hidden_width, std::size_t class_count, std::uint64_t seed) {
    if (input_width < 1 || hidden_width < 1 || class_count < 2) {
        fail(ErrorCode::invalid_argument, "model needs input >= 1, hidden >= 1, classes >= 2");
    }
    const auto d2 = static_cast<Eigen::Index>(2 * input_width);
    const auto h = static_cast<Eigen::Index>(hidden_width);
    const auto c = static_cast<Eigen::Index>(class_count);
    std::mt19937_64 rng(seed);
    auto glorot = [&](Eigen::Index rows, Eigen::Index cols, double gain) {
        const double limit = gain * std::sqrt(6.0 / static_cast<double>(rows + cols));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
        return m;
    };
    w1_ = glorot(h, d2, 1.0);
    b1_ = Eigen::VectorXd::Zero(h);
    // small output layer: an untrained model is close to uniform
    w2_ = glorot(c, 2 * h, 0.05);
    b2_ = Eigen::VectorXd::Zero(c);
    record_.seed = seed;
}

void GnnModel::check_shape(const Graph& graph, const Eigen::MatrixXd& features) const {
    if (static_cast<std::size_t>(features.rows()) != graph.node_count() ||
        static_cast<std::size_t>(features.cols()) != input_width()) {
        fail(ErrorCode::invalid_argument,
             "feature matrix is " + std::to_string(features.rows()) + "x" + std::to_string(features.cols()) +
                 ", model expects " + std::to_string(graph.node_count()) + "x" + std::to_string(input_width()));
    }
}

Eigen::VectorXd GnnModel::predict(const Graph& graph, const Eigen::MatrixXd& features, NodeId v) const {
    check_shape(graph, features);
    if (v >= graph.node_count()) fail(ErrorCode::bounds, "node " + std::to_string(v) + " out of range");
    const auto d = static_cast<Eigen::Index>(input_width());
    const auto h = static_cast<Eigen::Index>(hidden_width());

    auto hidden_of = [&](NodeId u) {
        const auto& nbrs = graph.neighbors(u);
        Eigen::RowVectorXd acc = features.row(static_cast<Eigen::Index>(u));
        for (NodeId w : nbrs) acc += features.row(static_cast<Eigen::Index>(w));
        const Eigen::RowVectorXd mean = acc / static_cast<double>(nbrs.size() + 1);
        Eigen::VectorXd z = w1_.leftCols(d) * features.row(static_cast<Eigen::Index>(u)).transpose() +
                            w1_.rightCols(d) * mean.transpose() + b1_;
        return z.cwiseMax(0.0).eval();
    };

    const Eigen::VectorXd hv = hidden_of(v);
    Eigen::VectorXd acc = hv;
    const auto& nbrs = graph.neighbors(v);
    for (NodeId u : nbrs) acc += hidden_of(u);
    const Eigen::VectorXd mean = acc / static_cast<double>(nbrs.size() + 1);
    const Eigen::VectorXd logits = w2_.leftCols(h) * hv + w2_.rightCols(h) * mean + b2_;
    return softmax(logits);
}

Eigen::MatrixXd GnnModel::predict_all(const Graph& graph, const Eigen::MatrixXd& features) const {
    check_shape(graph, features);
    const auto d = static_cast<Eigen::Index>(input_width());
    const auto h = static_cast<Eigen::Index>(hidden_width());
    const Eigen::MatrixXd m0 = aggregate(graph, features);
    Eigen::MatrixXd z1 = features * w1_.leftCols(d).transpose() + m0 * w1_.rightCols(d).transpose();
    z1.rowwise() += b1_.transpose();
    const Eigen::MatrixXd hid = z1.cwiseMax(0.0);
    const Eigen::MatrixXd m1 = aggregate(graph, hid);
    Eigen::MatrixXd z2 = hid * w2_.leftCols(h).transpose() + m1 * w2_.rightCols(h).transpose();
    z2.rowwise() += b2_.transpose();
    softmax_rows(z2);
    return z2;
}

double GnnModel::loss_and_gradients(const Graph& graph, const Eigen::MatrixXd& features,
                                    std::span<const NodeId> ids, double weight_decay,
                                    Gradients* gradients) const {
    check_shape(graph, features);
    if (ids.empty()) fail(ErrorCode::invalid_argument, "loss over an empty node set");
    const auto& labels = graph.labels();
    const auto d = static_cast<Eigen::Index>(input_width());
    const auto h = static_cast<Eigen::Index>(hidden_width());
    const auto c = static_cast<Eigen::Index>(class_count());

    Forward f;
    f.m0 = aggregate(graph, features);
    f.z1 = features * w1_.leftCols(d).transpose() + f.m0 * w1_.rightCols(d).transpose();
    f.z1.rowwise() += b1_.transpose();
    f.h = f.z1.cwiseMax(0.0);
    f.m1 = aggregate(graph, f.h);
    f.probs = f.h * w2_.leftCols(h).transpose() + f.m1 * w2_.rightCols(h).transpose();
    f.probs.rowwise() += b2_.transpose();
    softmax_rows(f.probs);

    const double inv = 1.0 / static_cast<double>(ids.size());
    double loss = 0.0;
    Eigen::MatrixXd dz2 = Eigen::MatrixXd::Zero(f.probs.rows(), c);
    for (NodeId v : ids) {
        const auto vi = static_cast<Eigen::Index>(v);
        const int y = labels[v];
        if (y >= c) fail(ErrorCode::invalid_argument, "label exceeds model class count");
        loss -= std::log(std::max(f.probs(vi, y), 1e-300)) * inv;
        dz2.row(vi) += f.probs.row(vi) * inv;
        dz2(vi, y) -= inv;
    }
    loss += 0.5 * weight_decay * (w1_.squaredNorm() + w2_.squaredNorm());
    if (!gradients) return loss;

    Gradients& g = *gradients;
    g.w2.resize(c, 2 * h);
    g.w2.leftCols(h) = dz2.transpose() * f.h;
    g.w2.rightCols(h) = dz2.transpose() * f.m1;
    g.w2 += weight_decay * w2_;
    g.b2 = dz2.colwise().sum().transpose();

    Eigen::MatrixXd dh = dz2 * w2_.leftCols(h) + aggregate_transpose(graph, dz2 * w2_.rightCols(h));
    Eigen::MatrixXd dz1 = (f.z1.array() > 0.0).select(dh, 0.0);
    g.w1.resize(h, 2 * d);
    g.w1.leftCols(d) = dz1.transpose() * features;
    g.w1.rightCols(d) = dz1.transpose() * f.m0;
    g.w1 += weight_decay * w1_;
    g.b1 = dz1.colwise().sum().transpose();
    return loss;
}

GnnModel train_reference_gnn(const Graph& graph, std::span<const NodeId> train_ids,
                             std::span<const NodeId> test_ids, const GnnHyperParams& hyper) {
    if (!graph.has_labels()) fail(ErrorCode::invalid_argument, "training requires node labels");
    if (train_ids.empty()) fail(ErrorCode::invalid_argument, "training set is empty");
    {
        std::vector<NodeId> a(train_ids.begin(), train_ids.end());
        std::vector<NodeId> b(test_ids.begin(), test_ids.end());
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        std::vector<NodeId> both;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
        if (!both.empty()) fail(ErrorCode::invalid_argument, "train and test sets overlap");
    }
    const std::size_t classes = std::max<std::size_t>(graph.class_count(), 2);
    GnnModel model(graph.feature_count(), hyper.hidden_width, classes, hyper.seed);

    // Adam state
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    GnnModel::Gradients m{Eigen::MatrixXd::Zero(model.w1().rows(), model.w1().cols()),
                          Eigen::MatrixXd::Zero(model.w2().rows(), model.w2().cols()),
                          Eigen::VectorXd::Zero(model.b1().size()), Eigen::VectorXd::Zero(model.b2().size())};
    GnnModel::Gradients s = m;
    double loss = 0.0;
    for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
        GnnModel::Gradients g;
        loss = model.loss_and_gradients(graph, graph.features(), train_ids, hyper.weight_decay, &g);
        if (!std::isfinite(loss)) {
            fail(ErrorCode::training, "training diverged at epoch " + std::to_string(epoch));
        }
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(epoch));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(epoch));
        auto update = [&](auto& param, auto& mom, auto& sq, const auto& grad) {
            mom = beta1 * mom + (1.0 - beta1) * grad;
            sq = beta2 * sq + (1.0 - beta2) * grad.cwiseProduct(grad);
            param.array() -= hyper.learning_rate * (mom.array() / c1) / ((sq.array() / c2).sqrt() + eps);
        };
        update(model.w1(), m.w1, s.w1, g.w1);
        update(model.w2(), m.w2, s.w2, g.w2);
        update(model.b1(), m.b1, s.b1, g.b1);
        update(model.b2(), m.b2, s.b2, g.b2);
    }

    auto& rec = model.record();
    rec.epochs = hyper.epochs;
    rec.seed = hyper.seed;
    rec.final_loss = hyper.epochs ? loss : model.loss_and_gradients(graph, graph.features(), train_ids, hyper.weight_decay, nullptr);
    rec.train_accuracy = accuracy(model, graph, train_ids);
    rec.test_accuracy = test_ids.empty() ? 0.0 : accuracy(model, graph, test_ids);
    return model;
}

// --- persistence ----------------------------------------------------------------

namespace {

nlohmann::json flatten(const Eigen::MatrixXd& m) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
    return arr;
}

Eigen::MatrixXd unflatten(const nlohmann::json& arr, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (!arr.is_array() || arr.size() != static_cast<std::size_t>(rows * cols)) {
        fail(ErrorCode::format, std::string("model field '") + name + "' should hold " +
                                    std::to_string(rows * cols) + " values");
    }
    Eigen::MatrixXd m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = arr.at(k++).get<double>();
    return m;
}

}  // namespace

std::string model_to_json(const GnnModel& model) {
    const auto& rec = model.record();
    nlohmann::ordered_json j;
    j["format"] = kModelFormatName;
    j["version"] = kModelFormatVersion;
    j["input_width"] = model.input_width();
    j["hidden_width"] = model.hidden_width();
    j["class_count"] = model.class_count();
    j["w1"] = flatten(model.w1());
    j["b1"] = flatten(model.b1());
    j["w2"] = flatten(model.w2());
    j["b2"] = flatten(model.b2());
    j["training"] = {{"epochs", rec.epochs},
                     {"seed", rec.seed},
                     {"train_acc", rec.train_accuracy},
                     {"test_acc", rec.test_accuracy},
                     {"final_loss", rec.final_loss}};
    return j.dump(1) + "\n";
}

GnnModel model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::format, std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (j.value("format", "") != kModelFormatName) fail(ErrorCode::format, "not a graphlime model file");
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion) {
            fail(ErrorCode::format, "unsupported model version " + std::to_string(version) + " (expected " +
                                        std::to_string(kModelFormatVersion) + ")");
        }
        const auto d = j.at("input_width").get<Eigen::Index>();
        const auto h = j.at("hidden_width").get<Eigen::Index>();
        const auto c = j.at("class_count").get<Eigen::Index>();
        if (d < 1 || h < 1 || c < 2) fail(ErrorCode::format, "model dimensions out of range");
        GnnModel model(static_cast<std::size_t>(d), static_cast<std::size_t>(h), static_cast<std::size_t>(c), 0);
        model.w1() = unflatten(j.at("w1"), h, 2 * d, "w1");
        model.b1() = unflatten(j.at("b1"), h, 1, "b1");
        model.w2() = unflatten(j.at("w2"), c, 2 * h, "w2");
        model.b2() = unflatten(j.at("b2"), c, 1, "b2");
        const auto& t = j.at("training");
        auto& rec = model.record();
        rec.epochs = t.at("epochs").get<std::size_t>();
        rec.seed = t.at("seed").get<std::uint64_t>();
        rec.train_accuracy = t.at("train_acc").get<double>();
        rec.test_accuracy = t.at("test_acc").get<double>();
        rec.final_loss = t.at("final_loss").get<double>();
        return model;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::format, std::string("malformed model file: ") + e.what());
    }
}

void save_model(const GnnModel& model, const std::filesystem::path& path) {
    detail::write_file_atomic(path, model_to_json(model));
}

GnnModel load_model(const std::filesystem::path& path) {
    return model_from_json(detail::read_file(path));
}

GnnModel load_model_for(const std::filesystem::path& path, const Graph& graph) {
    GnnModel model = load_model(path);
    if (model.input_width() != graph.feature_count()) {
        fail(ErrorCode::format, "model expects " + std::to_string(model.input_width()) +
                                    " features, graph has " + std::to_string(graph.feature_count()));
    }
    return model;
}

Split random_split(std::size_t node_count, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        fail(ErrorCode::invalid_argument, "train fraction must lie in (0, 1)");
    }
    std::vector<NodeId> ids(node_count);
    std::iota(ids.begin(), ids.end(), NodeId{0});
    std::mt19937_64 rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(node_count)));
    Split split;
    split.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(cut));
    split.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(cut), ids.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

}  // namespace graphlime
