#include <doctest.h>

#include <json.hpp>
#include <numeric>
#include <random>
#include <set>

#include "graphlime/explainers.hpp"
#include "test_support.hpp"

using namespace graphlime;
using testing::error_code_of;
using testing::RowPredictor;

namespace {

// Random graph with Gaussian features; every node gets at least one neighbor.
Graph gaussian_graph(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = normal(rng);
    std::vector<Edge> edges;
    for (std::size_t v = 0; v < n; ++v)
        for (int e = 0; e < 3; ++e) edges.emplace_back(v, pick(rng));
    return Graph(n, edges, x);
}

RowPredictor threshold_on(Eigen::Index feature) {
    return RowPredictor(2, [feature](const Eigen::RowVectorXd& x) {
        return testing::two_class(testing::sigmoid(6.0 * x(feature)));
    });
}

ExplainerConfig with_k(std::size_t k) {
    ExplainerConfig cfg;
    cfg.top_k = k;
    return cfg;
}

}  // namespace

TEST_CASE("method names") {
    for (Method m : all_methods()) CHECK(parse_method(method_name(m)) == m);
    CHECK_FALSE(parse_method("lime").has_value());
    CHECK(make_explainer(Method::greedy, ExplainerConfig{})->name() == "greedy");
}

TEST_CASE("graphlime recovers a single decisive feature") {
    const Graph g = gaussian_graph(200, 8, 1);
    const auto model = threshold_on(3);
    std::size_t hits = 0;
    const std::size_t nodes = 50;
    for (NodeId v = 0; v < nodes; ++v) {
        const auto e = explain_graphlime(model, g, v, with_k(1));
        if (e.selected == std::vector<std::size_t>{3}) ++hits;
    }
    CHECK(hits >= 45);
}

TEST_CASE("graphlime explanation contract") {
    const Graph g = gaussian_graph(120, 6, 2);
    const auto model = threshold_on(1);
    const auto e = explain_graphlime(model, g, 5, with_k(6));
    REQUIRE(e.coefficients.has_value());
    CHECK(e.selected.size() <= 6);
    CHECK(e.selected.size() == e.weights.size());
    for (std::size_t i = 0; i < e.selected.size(); ++i) {
        CHECK((*e.coefficients)(static_cast<Eigen::Index>(e.selected[i])) > 0.0);
        CHECK(e.weights[i] > 0.0);
        if (i > 0) CHECK(e.weights[i] <= e.weights[i - 1]);
    }
    CHECK((e.coefficients->array() >= 0.0).all());
    CHECK(e.sample_size == n_hop_neighborhood(g, 5, 2).size());
    CHECK(e.config_digest.size() == 16);

    const Graph lonely(3, {{1, 2}}, Eigen::MatrixXd::Random(3, 4));
    CHECK(error_code_of([&] { explain_graphlime(model, lonely, 0, with_k(2)); }) == ErrorCode::insufficient_neighbors);
    CHECK(error_code_of([&] { explain_graphlime(model, g, 999, with_k(2)); }) == ErrorCode::bounds);
    CHECK(error_code_of([&] { explain_graphlime(model, g, 0, with_k(0)); }) == ErrorCode::invalid_argument);
}

TEST_CASE("adjacency masking is a no-op on a complete neighborhood") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 3);
    std::vector<Edge> edges;
    for (NodeId a = 0; a < 5; ++a)
        for (NodeId b = a + 1; b < 5; ++b) edges.emplace_back(a, b);
    const Graph g(5, edges, x);
    const auto model = threshold_on(0);
    ExplainerConfig plain = with_k(2);
    ExplainerConfig masked = plain;
    masked.kernel.use_adjacency_mask = true;
    const auto a = explain_graphlime(model, g, 0, plain);
    const auto b = explain_graphlime(model, g, 0, masked);
    CHECK(a.selected == b.selected);
    CHECK(*a.coefficients == *b.coefficients);
}

TEST_CASE("linear LIME recovers the support of a sparse linear black box") {
    const Graph g = gaussian_graph(100, 8, 3);
    const RowPredictor model(2, [](const Eigen::RowVectorXd& x) {
        return testing::two_class(testing::sigmoid(1.5 * x(2) - 1.0 * x(5)));
    });
    std::size_t hits = 0;
    const std::size_t trials = 40;
    for (NodeId v = 0; v < trials; ++v) {
        ExplainerConfig cfg = with_k(2);
        cfg.seed = v;
        const auto e = explain_linear_lime(model, g, v, cfg);
        if (std::set<std::size_t>(e.selected.begin(), e.selected.end()) == std::set<std::size_t>{2, 5}) ++hits;
    }
    CHECK(hits >= 36);
}

TEST_CASE("linear LIME determinism and degenerate perturbations") {
    const Graph g = gaussian_graph(60, 5, 4);
    const auto model = threshold_on(2);
    ExplainerConfig cfg = with_k(3);
    cfg.seed = 11;
    const auto a = explain_linear_lime(model, g, 7, cfg);
    const auto b = explain_linear_lime(model, g, 7, cfg);
    CHECK(a.selected == b.selected);
    CHECK(a.weights == b.weights);
    CHECK(a.sample_size == cfg.lime.samples);

    cfg.lime.scale = 0.0;
    CHECK(error_code_of([&] { explain_linear_lime(model, g, 7, cfg); }) == ErrorCode::degenerate_problem);
}

TEST_CASE("greedy removal") {
    const Graph g = gaussian_graph(30, 6, 5);
    SUBCASE("a black box that ignores its input stops at the removal budget") {
        const RowPredictor flat(2, [](const Eigen::RowVectorXd&) { return testing::two_class(0.7); });
        ExplainerConfig cfg = with_k(4);
        const auto e = explain_greedy(flat, g, 0, cfg);
        CHECK(e.selected == std::vector<std::size_t>{0, 1, 2, 3});
        cfg.greedy_max_removals = 2;
        CHECK(explain_greedy(flat, g, 0, cfg).selected == std::vector<std::size_t>{0, 1});
    }
    SUBCASE("a single decisive feature is removed first and flips the class") {
        Eigen::MatrixXd x = Eigen::MatrixXd::Constant(4, 5, 1.0);
        const Graph small(4, {{0, 1}, {1, 2}, {2, 3}}, x);
        const RowPredictor decisive(2, [](const Eigen::RowVectorXd& row) {
            return testing::two_class(row(4) > 0.5 ? 0.9 : 0.1);
        });
        const auto e = explain_greedy(decisive, small, 1, with_k(3));
        CHECK(e.selected == std::vector<std::size_t>{4});
        CHECK(e.weights.front() == doctest::Approx(0.8));
    }
}

TEST_CASE("random baseline") {
    const auto perm = explain_random(0, 10, 10, 3);
    std::vector<std::size_t> sorted = perm.selected;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> expected(10);
    std::iota(expected.begin(), expected.end(), 0);
    CHECK(sorted == expected);
    CHECK(explain_random(0, 10, 4, 99).selected == explain_random(0, 10, 4, 99).selected);
    CHECK(error_code_of([] { explain_random(0, 3, 4, 1); }) == ErrorCode::invalid_argument);

    std::vector<std::size_t> counts(10, 0);
    const std::size_t draws = 20000;
    for (std::size_t s = 0; s < draws; ++s)
        for (std::size_t j : explain_random(0, 10, 2, s).selected) ++counts[j];
    for (std::size_t c : counts) CHECK(std::abs(static_cast<double>(c) / draws - 0.2) < 0.02);
}

TEST_CASE("explanation JSON") {
    const Graph g = gaussian_graph(40, 4, 6);
    const auto e = explain_graphlime(threshold_on(0), g, 3, with_k(2));
    const auto j = nlohmann::json::parse(explanation_to_json(e, g));
    CHECK(j.at("node") == 3);
    CHECK(j.at("method") == "graphlime");
    CHECK(j.at("selected").size() == e.selected.size());
    CHECK(j.at("selected")[0].at("name") == g.feature_names()[e.selected[0]]);
    CHECK(j.at("n") == e.sample_size);
}
