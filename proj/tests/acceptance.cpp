// Acceptance suite: one PASS/FAIL/SKIP line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "graphlime/evaluation.hpp"
#include "graphlime/explainers.hpp"
#include "graphlime/synthetic.hpp"
#include "test_support.hpp"

using namespace graphlime;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    enum Status { pass, fail, skip } status = fail;
    std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Outcome::pass : Outcome::fail, std::move(detail)}; }

std::string fmt(double v, int precision = 4) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(precision);
    ss << v;
    return ss.str();
}

int failures = 0;

void criterion(int id, double budget_seconds, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {Outcome::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (out.status != Outcome::skip && secs > budget_seconds) {
        out.status = Outcome::fail;
        out.detail += "; runtime " + fmt(secs, 1) + " s exceeds " + fmt(budget_seconds, 0) + " s";
    }
    const char* label = out.status == Outcome::pass ? "PASS" : out.status == Outcome::fail ? "FAIL" : "SKIP";
    if (out.status == Outcome::fail) ++failures;
    std::cout << "criterion " << id << " [PRIMARY] " << label << " - " << out.detail << " (" << fmt(secs, 2) << " s)"
              << std::endl;
}

std::vector<std::size_t> support(const Eigen::VectorXd& beta) {
    std::vector<std::size_t> s;
    for (Eigen::Index k = 0; k < beta.size(); ++k)
        if (beta(k) > 1e-6) s.push_back(static_cast<std::size_t>(k));
    return s;
}

// --- 1 ---
Outcome decomposition_identity() {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 2 + static_cast<std::size_t>(unit(rng) * 19);  // 2..20
        const std::size_t d = 1 + static_cast<std::size_t>(unit(rng) * 8);   // 1..8
        const auto p = testing::random_problem(rng, n, d);
        Eigen::VectorXd beta(static_cast<Eigen::Index>(d));
        for (Eigen::Index k = 0; k < beta.size(); ++k) beta(k) = unit(rng) < 0.3 ? 0.0 : 2.0 * unit(rng);
        const double rho = unit(rng);
        worst = std::max(worst, std::abs(objective(p, beta, rho) - objective_via_nhsic(p, beta, rho)));
    }
    std::ostringstream d;
    d << "100 problems, max |difference| = " << worst << " (limit 1e-9)";
    return verdict(worst < 1e-9, d.str());
}

// --- 2 ---
Outcome solver_equivalence() {
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    int support_mismatch = 0;
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 5 + static_cast<std::size_t>(unit(rng) * 16);
        const std::size_t d = 2 + static_cast<std::size_t>(unit(rng) * 5);
        const auto p = testing::random_problem(rng, n, d);
        const double rho = (0.05 + 0.9 * unit(rng)) * p.output_nhsic.maxCoeff();
        SolverConfig cfg;
        cfg.rho = rho;
        const auto lars = solve_nonnegative_lars(p, cfg);
        const auto pgd = solve_projected_gradient(p, rho, SolverConfig{});
        worst = std::max(worst, std::abs(objective(p, lars.beta, rho) - objective(p, pgd.beta, rho)));
        if (support(lars.beta) != support(pgd.beta)) ++support_mismatch;
    }
    std::ostringstream d;
    d << "50 problems, max objective gap = " << worst << " (limit 1e-6), support mismatches = " << support_mismatch;
    return verdict(worst < 1e-6 && support_mismatch == 0, d.str());
}

// --- 3 ---
Outcome kernel_algebra() {
    std::mt19937_64 rng(303);
    std::normal_distribution<double> normal;
    double idempotence = 0.0, norm_err = 0.0, self_err = 0.0;
    bool degenerate_ok = true;
    int cases = 0;
    for (int t = 0; t < 300; ++t) {
        const Eigen::Index n = 2 + t % 24;
        const Eigen::MatrixXd h =
            Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
        idempotence = std::max(idempotence, (h * h - h).cwiseAbs().maxCoeff());
        Eigen::VectorXd x(n);
        for (Eigen::Index i = 0; i < n; ++i) x(i) = normal(rng);
        const auto k = center_and_normalize(gaussian_gram_feature(x, 0.3 + std::abs(normal(rng))));
        Eigen::MatrixXd y(n, 3);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index c = 0; c < 3; ++c) y(i, c) = std::abs(normal(rng));
        const auto l = center_and_normalize(gaussian_gram_output(y, 1.0));
        for (const auto* g : {&k, &l}) {
            if (g->degenerate) continue;
            ++cases;
            norm_err = std::max(norm_err, std::abs(g->values.norm() - 1.0));
            self_err = std::max(self_err, std::abs(nhsic(*g, *g) - 1.0));
        }
        const auto flat = center_and_normalize(gaussian_gram_feature(Eigen::VectorXd::Constant(n, normal(rng)), 1.0));
        degenerate_ok = degenerate_ok && flat.degenerate && flat.values.isZero(0.0);
    }
    std::ostringstream d;
    d << cases << " grams: |HH-H| " << idempotence << ", |norm-1| " << norm_err << ", |nhsic(A,A)-1| " << self_err
      << ", constant feature -> zero gram: " << (degenerate_ok ? "yes" : "no");
    return verdict(idempotence < 1e-12 && norm_err < 1e-12 && self_err < 1e-9 && degenerate_ok, d.str());
}

// --- 4 ---
Outcome redundancy_suppression() {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        std::normal_distribution<double> normal;
        const Eigen::Index n = 30;
        const Eigen::Index d = 6;
        Eigen::MatrixXd x(n, d);
        Eigen::MatrixXd probs(n, 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) x(i, j) = normal(rng);
            x(i, 4) = x(i, 1);  // duplicate of the informative column
            probs(i, 1) = testing::sigmoid(3.0 * x(i, 1));
            probs(i, 0) = 1.0 - probs(i, 1);
        }
        std::vector<Edge> edges;
        for (Eigen::Index i = 1; i < n; ++i) edges.emplace_back(0, static_cast<NodeId>(i));
        const Graph g(static_cast<std::size_t>(n), edges, x);
        const auto sample = assemble_local_sample(g, n_hop_neighborhood(g, 0, 1), probs);
        SolverConfig cfg;
        cfg.rho = 1e-3;
        const auto c = solve_nonnegative_lars(build_problem(sample, KernelConfig{}, g), cfg);
        // state right after the first activation: the step that follows it
        const auto& first = c.path.front();
        const Eigen::VectorXd& after = c.path.size() > 1 ? c.path[1].beta : c.beta;
        const bool first_is_duplicate = first.event == PathEvent::activate && (first.feature == 1 || first.feature == 4);
        const bool exactly_one = (after(1) > 0.0) != (after(4) > 0.0);
        const bool stays_single = (c.beta(1) > 0.0) != (c.beta(4) > 0.0);
        if (first_is_duplicate && exactly_one && stays_single) ++ok;
    }
    return verdict(ok == 20, std::to_string(ok) + "/20 seeds select exactly one of the duplicated columns");
}

// --- 5 ---
Outcome submodular_pick_correctness() {
    std::mt19937_64 rng(505);
    std::uniform_int_distribution<int> rows(1, 8), cols(2, 8), budgets(1, 3);
    int equal = 0;
    double worst_ratio = 1.0;
    for (int t = 0; t < 200; ++t) {
        const auto w = testing::random_explanation_matrix(rng, rows(rng), cols(rng));
        const auto imp = global_importance(w);
        const auto b = static_cast<std::size_t>(budgets(rng));
        const double greedy = testing::coverage_by_definition(submodular_pick(w, imp, b).picked, w, imp);
        const double best = testing::exhaustive_best_coverage(w, imp, b);
        if (std::abs(greedy - best) <= 1e-12 * std::max(1.0, best)) ++equal;
        if (best > 0.0) worst_ratio = std::min(worst_ratio, greedy / best);
    }
    int monotone = 0, submodular = 0;
    for (int t = 0; t < 200; ++t) {
        const auto w = testing::random_explanation_matrix(rng, 7, 6);
        const auto imp = global_importance(w);
        std::vector<std::size_t> small, large;
        std::bernoulli_distribution coin(0.5);
        for (std::size_t i = 0; i < 6; ++i) {
            if (coin(rng)) {
                large.push_back(i);
                if (coin(rng)) small.push_back(i);
            }
        }
        auto with6 = [](std::vector<std::size_t> v) {
            v.push_back(6);
            return v;
        };
        if (coverage_score(small, w, imp) <= coverage_score(large, w, imp) + 1e-12) ++monotone;
        if (coverage_score(with6(small), w, imp) - coverage_score(small, w, imp) >=
            coverage_score(with6(large), w, imp) - coverage_score(large, w, imp) - 1e-12)
            ++submodular;
    }
    std::ostringstream d;
    d << "greedy equals exhaustive optimum in " << equal << "/200 cases (worst ratio " << fmt(worst_ratio)
      << ", guarantee 0.6321); monotone " << monotone << "/200, submodular " << submodular << "/200";
    return verdict(equal == 200 && monotone == 200 && submodular == 200, d.str());
}

// --- 6 ---
Outcome noise_experiment() {
    const Graph g = generate_synthetic(SyntheticParams{}, 1);
    NoiseExperimentConfig cfg;
    cfg.setup.seed = 1;
    cfg.nodes_to_explain = 50;
    ExplainerConfig ecfg;
    const auto r = run_noise_experiment(g, gnn_factory(GnnHyperParams{}),
                                        method_specs({Method::graphlime, Method::lime_linear, Method::random}, ecfg),
                                        10, cfg);
    double gl = 0, lime = 0, rnd = 0;
    std::size_t explained = 0;
    for (const auto& m : r.methods) {
        if (m.method == "graphlime") {
            gl = m.mean;
            explained = m.nodes.size() - m.skipped;
        }
        if (m.method == "lime_linear") lime = m.mean;
        if (m.method == "random") rnd = m.mean;
    }
    std::ostringstream d;
    d << "d'=" << g.feature_count() + 10 << ", test acc " << fmt(r.test_accuracy, 3) << ", " << explained
      << " nodes; mean noisy count graphlime " << fmt(gl, 3) << ", lime_linear " << fmt(lime, 3) << ", random "
      << fmt(rnd, 3);
    return verdict(r.test_accuracy >= 0.8 && explained >= 50 && gl <= 1.0 && gl < rnd && gl <= lime, d.str());
}

// --- 7 ---
Outcome trust_experiment() {
    const Graph g = generate_synthetic(SyntheticParams{}, 1);
    SetupConfig setup;
    setup.seed = 1;
    const auto prepared = prepare_gated_setup(g, gnn_factory(GnnHyperParams{}), setup);
    TrustExperimentConfig cfg;
    cfg.rounds = 100;
    cfg.seed = 1;
    const auto r = run_trust_experiment(prepared.graph, *prepared.trained.model, prepared.split.test,
                                        method_specs({Method::graphlime, Method::greedy, Method::random},
                                                     ExplainerConfig{}),
                                        10, cfg);
    double gl = 0, greedy = 0, rnd = 0;
    for (const auto& m : r.methods) {
        if (m.method == "graphlime") gl = m.f1;
        if (m.method == "greedy") greedy = m.f1;
        if (m.method == "random") rnd = m.f1;
    }
    double flips = 0.0;
    for (double x : r.oracle_untrustworthy_rate) flips += x;
    std::ostringstream d;
    d << "100 rounds, " << prepared.split.test.size() << " test nodes, F1 graphlime " << fmt(gl, 3) << ", greedy "
      << fmt(greedy, 3) << ", random " << fmt(rnd, 3) << "; mean oracle untrustworthy rate "
      << fmt(flips / static_cast<double>(r.rounds), 3);
    return verdict(gl >= rnd + 0.20 && gl >= greedy, d.str());
}

// --- 8 ---
Outcome model_selection() {
    SyntheticParams params;
    params.node_count = 600;
    params.signal = 0.6;
    params.weak_signal = 0.3;
    params.weak_features = 0;
    const Graph g = generate_synthetic(params, 7);
    ModelSelectionConfig cfg;
    cfg.budgets = {5, 10, 15};
    cfg.rounds = 50;
    cfg.seed = 7;
    const auto r = run_model_selection(g, varied_gnn_factory(GnnHyperParams{}, 0.03),
                                       method_specs({Method::graphlime}, ExplainerConfig{}), 10, cfg);
    const auto& acc = r.accuracy.at("graphlime");
    const double threshold = 0.5 + 2.0 * std::sqrt(0.25 / static_cast<double>(cfg.rounds));
    bool monotone = true;
    for (std::size_t i = 1; i < acc.size(); ++i) monotone = monotone && acc[i] >= acc[i - 1] - 0.05;
    std::ostringstream d;
    d << "graphlime accuracy B=5/10/15: " << fmt(acc[0], 2) << "/" << fmt(acc[1], 2) << "/" << fmt(acc[2], 2)
      << " (B=10 must exceed " << fmt(threshold, 3) << "), coin flip " << fmt(r.random_choice_accuracy[1], 2)
      << ", non-decreasing within 0.05: " << (monotone ? "yes" : "no");
    return verdict(acc[1] > threshold && monotone, d.str());
}

// --- 9 ---
Outcome gradient_check() {
    const Graph g = testing::five_node_graph();
    const std::vector<NodeId> ids{0, 1, 2, 3, 4};
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
        worst = std::max(worst, testing::max_gradient_error(GnnModel(3, 8, 2, seed), g, ids, 5e-4));
    std::ostringstream d;
    d << "5-node graph, 5 initializations, max relative error " << worst << " (limit 1e-4)";
    return verdict(worst < 1e-4, d.str());
}

// --- 10 ---
int run_cli(const std::string& args) {
    const std::string cmd = std::string(GRAPHLIME_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Names of files that differ between two output trees (or exist in only one).
std::vector<std::string> tree_diff(const fs::path& a, const fs::path& b) {
    std::vector<std::string> diff;
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        ++files;
        const auto rel = fs::relative(e.path(), a);
        if (!fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel)) diff.push_back(rel.string());
    }
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file() && !fs::exists(a / fs::relative(e.path(), b))) diff.push_back(e.path().string());
    if (files == 0) diff.emplace_back("(no output)");
    return diff;
}

Outcome reproducibility() {
    const fs::path root = fs::temp_directory_path() / ("graphlime_acceptance_" + std::to_string(std::random_device{}()));
    fs::create_directories(root);
    const std::string data = "--edges " + (root / "data/edges.tsv").string() + " --features " +
                             (root / "data/features.csv").string() + " --labels " +
                             (root / "data/labels.txt").string();
    const std::string model = " --model " + (root / "train/model.json").string();
    const fs::path select_cfg = root / "select_synthetic.json";
    std::ofstream(select_cfg)
        << R"({"synthetic": {"node_count": 600, "signal": 0.6, "weak_signal": 0.3, "weak_features": 0}})";
    const std::string select_data = "--edges " + (root / "select_data/edges.tsv").string() + " --features " +
                                    (root / "select_data/features.csv").string() + " --labels " +
                                    (root / "select_data/labels.txt").string();
    const std::vector<std::pair<std::string, std::string>> commands{
        {"data", "generate-synthetic --seed 3"},
        {"train", "train " + data + " --seed 3"},
        {"explain", "explain " + data + model + " --method graphlime --nodes 0,1,2,3 --seed 3"},
        {"explain_random", "explain " + data + model + " --method random --nodes 0,1,2,3 --seed 3"},
        {"pick", "pick " + data + model + " --method lime_linear --budget 3 --nodes 0,1,2,3,4,5,6,7 --seed 3"},
        {"noise", "eval " + data + " --experiment noise --methods graphlime,random --seed 3"},
        {"trust", "eval " + data + " --experiment trust --methods graphlime,greedy,random --rounds 10 --seed 3"},
        {"select_data", "generate-synthetic --config " + select_cfg.string() + " --seed 7"},
        {"select", "eval " + select_data + " --experiment model-select --methods graphlime --rounds 2 --seed 7"},
    };
    std::vector<std::string> problems;
    for (const auto& [name, args] : commands) {
        const int first = run_cli(args + " --out " + (root / name).string());
        if (first != 0) {
            problems.push_back(name + " exited " + std::to_string(first));
            continue;
        }
        const std::string verb = args.substr(0, args.find(' '));
        const int replay = run_cli(verb + " --config " + (root / name / "run_manifest.json").string() + " --out " +
                                   (root / (name + "_replay")).string());
        if (replay != 0) {
            problems.push_back(name + " replay exited " + std::to_string(replay));
            continue;
        }
        for (const auto& f : tree_diff(root / name, root / (name + "_replay"))) problems.push_back(name + "/" + f);
    }
    fs::remove_all(root);

    std::ostringstream d;
    d << commands.size() << " commands replayed from their manifests: "
      << (problems.empty() ? "all outputs byte-identical" : "differences");
    for (const auto& p : problems) d << " [" << p << "]";

    const char* cora = std::getenv("GRAPHLIME_CORA_DIR");
    bool cora_ok = true;
    if (cora == nullptr) {
        d << "; Cora ingestion not checked (set GRAPHLIME_CORA_DIR to a directory with cora.content and cora.cites)";
    } else {
        const Graph g = load_citation_graph(fs::path(cora) / "cora.content", fs::path(cora) / "cora.cites");
        cora_ok = g.node_count() == 2708 && g.feature_count() == 1433 && g.edge_records() == 5429 &&
                  g.class_count() == 7;
        d << "; Cora nodes " << g.node_count() << ", features " << g.feature_count() << ", edge records "
          << g.edge_records() << " (" << g.edge_count() << " unique undirected), classes " << g.class_count();
    }
    return verdict(problems.empty() && cora_ok, d.str());
}

}  // namespace

int main() {
    criterion(1, 5, decomposition_identity);
    criterion(2, 30, solver_equivalence);
    criterion(3, 5, kernel_algebra);
    criterion(4, 60, redundancy_suppression);
    criterion(5, 10, submodular_pick_correctness);
    criterion(6, 300, noise_experiment);
    criterion(7, 600, trust_experiment);
    criterion(8, 1200, model_selection);
    criterion(9, 5, gradient_check);
    criterion(10, 600, reproducibility);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
