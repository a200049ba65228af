#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "graphlime/predictor.hpp"
#include "graphlime/synthetic.hpp"
#include "io_util.hpp"
#include "test_support.hpp"

using namespace graphlime;
using doctest::Approx;
using testing::error_code_of;
namespace fs = std::filesystem;

namespace {

std::vector<NodeId> all_nodes(const Graph& g) {
    std::vector<NodeId> ids(g.node_count());
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("graphlime_gnn_" + std::to_string(std::random_device{}()) + name);
}

}  // namespace

TEST_CASE("analytic gradients match central differences") {
    const Graph g = testing::five_node_graph();
    const auto ids = all_nodes(g);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const GnnModel model(3, 4, 2, seed);
        CHECK(testing::max_gradient_error(model, g, ids, 0.0) < 1e-4);
        CHECK(testing::max_gradient_error(model, g, ids, 5e-4) < 1e-4);
    }
    const std::vector<NodeId> subset{1, 3};
    CHECK(testing::max_gradient_error(GnnModel(3, 6, 3, 9), g, subset, 1e-2) < 1e-4);
}

TEST_CASE("predictions are probability vectors and deterministic") {
    const Graph g = generate_synthetic(SyntheticParams{}, 1);
    const GnnModel model(g.feature_count(), 8, 2, 5);
    const Predictor& p = model;
    const Eigen::MatrixXd all = model.predict_all(g, g.features());
    for (NodeId v = 0; v < 20; ++v) {
        const auto row = p.predict(g, v);
        CHECK(row.sum() == Approx(1.0).epsilon(1e-12));
        CHECK((row.array() >= 0.0).all());
        CHECK((row - all.row(static_cast<Eigen::Index>(v)).transpose()).norm() < 1e-12);
        CHECK(p.predict(g, g.features(), v) == p.predict(g, v));
    }
    CHECK(error_code_of([&] { p.predict(g, Eigen::MatrixXd::Zero(3, g.feature_count()), 0); }) ==
          ErrorCode::invalid_argument);
}

TEST_CASE("training reaches the accuracy gate on the synthetic graph") {
    const Graph g = generate_synthetic(SyntheticParams{}, 7);
    const auto split = random_split(g.node_count(), 0.8, 7);
    GnnHyperParams hyper;
    hyper.seed = 7;
    const GnnModel model = train_reference_gnn(g, split.train, split.test, hyper);
    CHECK(model.record().test_accuracy >= 0.8);
    CHECK(model.record().test_accuracy == accuracy(model, g, split.test));
    CHECK(model.record().epochs == hyper.epochs);

    const GnnModel again = train_reference_gnn(g, split.train, split.test, hyper);
    CHECK(model_to_json(again) == model_to_json(model));
}

TEST_CASE("untrained models are near chance") {
    const Graph g = generate_synthetic(SyntheticParams{}, 3);
    const auto split = random_split(g.node_count(), 0.8, 3);
    GnnHyperParams hyper;
    hyper.epochs = 0;
    double total = 0.0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        hyper.seed = static_cast<std::uint64_t>(s);
        const GnnModel model = train_reference_gnn(g, split.train, split.test, hyper);
        const Predictor& p = model;
        for (NodeId v = 0; v < 10; ++v) CHECK(std::abs(p.predict(g, v)(0) - 0.5) < 0.3);
        total += accuracy(model, g, split.test);
    }
    CHECK(std::abs(total / seeds - 0.5) <= 0.15);
}

TEST_CASE("accuracy contract") {
    const Graph g = testing::five_node_graph();
    testing::RowPredictor always_one(2, [](const Eigen::RowVectorXd&) { return testing::two_class(0.9); });
    const std::vector<NodeId> ones{1, 2, 4};
    CHECK(accuracy(always_one, g, ones) == 1.0);
    const std::vector<NodeId> single{4};
    CHECK(accuracy(always_one, g, single) == 1.0);
    const std::vector<NodeId> mixed{0, 1};
    CHECK(accuracy(always_one, g, mixed) == 0.5);
    CHECK(error_code_of([&] { accuracy(always_one, g, std::vector<NodeId>{}); }) == ErrorCode::invalid_argument);
}

TEST_CASE("training input checks") {
    const Graph unlabeled(3, {{0, 1}}, Eigen::MatrixXd::Ones(3, 2));
    const std::vector<NodeId> train{0, 1};
    const std::vector<NodeId> test{2};
    CHECK(error_code_of([&] { train_reference_gnn(unlabeled, train, test, GnnHyperParams{}); }) ==
          ErrorCode::invalid_argument);
    const Graph g = testing::five_node_graph();
    const std::vector<NodeId> overlap{1, 2};
    CHECK(error_code_of([&] { train_reference_gnn(g, train, overlap, GnnHyperParams{}); }) ==
          ErrorCode::invalid_argument);
    GnnHyperParams wild;
    wild.learning_rate = 1e300;
    wild.epochs = 50;
    CHECK(error_code_of([&] { train_reference_gnn(g, train, test, wild); }) == ErrorCode::training);
}

TEST_CASE("model persistence") {
    const Graph g = generate_synthetic(SyntheticParams{}, 2);
    const auto split = random_split(g.node_count(), 0.8, 2);
    GnnHyperParams hyper;
    hyper.epochs = 20;
    const GnnModel model = train_reference_gnn(g, split.train, split.test, hyper);
    const auto path = temp_file("model.json");
    save_model(model, path);
    const GnnModel back = load_model_for(path, g);
    const Predictor& a = model;
    const Predictor& b = back;
    for (NodeId v = 0; v < 10; ++v) CHECK(a.predict(g, v) == b.predict(g, v));
    CHECK(model_to_json(back) == model_to_json(model));

    const std::string text = detail::read_file(path);
    std::ofstream(path, std::ios::trunc) << text.substr(0, text.size() / 2);
    CHECK(error_code_of([&] { load_model(path); }) == ErrorCode::format);

    save_model(model, path);
    const Graph narrow(3, {{0, 1}}, Eigen::MatrixXd::Ones(3, 4));
    try {
        load_model_for(path, narrow);
        FAIL("expected a shape error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::format);
        const std::string msg = e.what();
        CHECK(msg.find(std::to_string(g.feature_count())) != std::string::npos);
        CHECK(msg.find("4") != std::string::npos);
    }
    fs::remove(path);
}

TEST_CASE("predictions do not depend on edge input order") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 3);
    const std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}, {1, 4}};
    std::vector<Edge> shuffled{{4, 1}, {5, 0}, {3, 2}, {1, 0}, {5, 4}, {2, 1}, {4, 3}};
    const Graph a(6, edges, x);
    const Graph b(6, shuffled, x);
    const GnnModel model(3, 5, 2, 4);
    CHECK(model.predict_all(a, x) == model.predict_all(b, x));
}

TEST_CASE("random split") {
    const auto s = random_split(10, 0.8, 1);
    CHECK(s.train.size() == 8);
    CHECK(s.test.size() == 2);
    CHECK(std::is_sorted(s.train.begin(), s.train.end()));
    std::vector<NodeId> both = s.train;
    both.insert(both.end(), s.test.begin(), s.test.end());
    std::sort(both.begin(), both.end());
    CHECK(both == all_nodes(Graph(10, {}, Eigen::MatrixXd::Zero(10, 1))));
    CHECK(random_split(10, 0.8, 1).test == s.test);
    CHECK(error_code_of([] { random_split(10, 1.0, 1); }) == ErrorCode::invalid_argument);
}
