#include "graphlime/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "graphlime/error.hpp"
#include "graphlime/random.hpp"

namespace graphlime {

// --- submodular pick ---------------------------------------------------------------------

ExplanationMatrix build_explanation_matrix(const std::vector<Explanation>& explanations, std::size_t feature_count) {
    ExplanationMatrix m;
    m.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(explanations.size()),
                                      static_cast<Eigen::Index>(feature_count));
    for (std::size_t i = 0; i < explanations.size(); ++i) {
        const Explanation& e = explanations[i];
        m.instance_ids.push_back(e.node);
        for (std::size_t s = 0; s < e.selected.size(); ++s) {
            if (e.selected[s] >= feature_count) fail(ErrorCode::bounds, "explanation feature index out of range");
            m.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e.selected[s])) = std::abs(e.weights.at(s));
        }
    }
    return m;
}

Eigen::VectorXd global_importance(const Eigen::MatrixXd& w) {
    if ((w.array() < 0.0).any()) fail(ErrorCode::contract_violation, "explanation matrix has a negative entry");
    return w.colwise().sum().transpose().cwiseSqrt();
}

double coverage_score(const std::vector<std::size_t>& chosen, const Eigen::MatrixXd& w,
                      const Eigen::VectorXd& importance) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        const bool covered = std::any_of(chosen.begin(), chosen.end(), [&](std::size_t i) {
            return w(static_cast<Eigen::Index>(i), j) > 0.0;
        });
        if (covered) total += importance(j);
    }
    return total;
}

PickResult submodular_pick(const Eigen::MatrixXd& w, const Eigen::VectorXd& importance, std::size_t budget) {
    if (budget < 1) fail(ErrorCode::invalid_argument, "pick budget must be at least 1");
    if (importance.size() != w.cols()) fail(ErrorCode::invalid_argument, "importance length must equal W columns");
    const auto rows = static_cast<std::size_t>(w.rows());
    PickResult result;
    result.budget_exceeded = budget > rows;
    const std::size_t target = std::min(budget, rows);

    std::vector<bool> covered(static_cast<std::size_t>(w.cols()), false);
    std::vector<bool> taken(rows, false);
    while (result.picked.size() < target) {
        std::size_t best = rows;
        double best_gain = -1.0;
        for (std::size_t i = 0; i < rows; ++i) {
            if (taken[i]) continue;
            double gain = 0.0;
            for (Eigen::Index j = 0; j < w.cols(); ++j) {
                if (!covered[static_cast<std::size_t>(j)] && w(static_cast<Eigen::Index>(i), j) > 0.0) gain += importance(j);
            }
            if (gain > best_gain) {
                best_gain = gain;
                best = i;
            }
        }
        taken[best] = true;
        result.picked.push_back(best);
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            if (w(static_cast<Eigen::Index>(best), j) > 0.0) covered[static_cast<std::size_t>(j)] = true;
    }
    return result;
}

// --- predictors and methods ------------------------------------------------------------------

PredictorFactory gnn_factory(GnnHyperParams hyper) {
    return [hyper](const Graph& graph, const Split& split, std::uint64_t seed) {
        GnnHyperParams h = hyper;
        h.seed = seed;
        auto model = std::make_shared<GnnModel>(train_reference_gnn(graph, split.train, split.test, h));
        TrainedPredictor out;
        out.train_accuracy = model->record().train_accuracy;
        out.test_accuracy = model->record().test_accuracy;
        out.model = std::move(model);
        return out;
    };
}

PredictorFactory varied_gnn_factory(GnnHyperParams hyper, double min_fraction) {
    if (!(min_fraction > 0.0 && min_fraction <= 1.0)) {
        fail(ErrorCode::invalid_argument, "min_fraction must lie in (0, 1]");
    }
    return [hyper, min_fraction](const Graph& graph, const Split& split, std::uint64_t seed) {
        std::mt19937_64 rng(mix_seed(seed, {0x5b5e7ULL}));
        // log-uniform on [min_fraction, 1]
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double f = std::pow(min_fraction, unit(rng));
        std::vector<NodeId> subset = split.train;
        std::shuffle(subset.begin(), subset.end(), rng);
        const auto keep = std::max<std::size_t>(
            2, static_cast<std::size_t>(std::llround(f * static_cast<double>(subset.size()))));
        subset.resize(std::min(keep, subset.size()));
        std::sort(subset.begin(), subset.end());

        GnnHyperParams h = hyper;
        h.seed = seed;
        auto model = std::make_shared<GnnModel>(train_reference_gnn(graph, subset, split.test, h));
        TrainedPredictor out;
        out.train_accuracy = model->record().train_accuracy;
        out.test_accuracy = model->record().test_accuracy;
        out.model = std::move(model);
        return out;
    };
}

std::vector<MethodSpec> method_specs(const std::vector<Method>& methods, const ExplainerConfig& config) {
    std::vector<MethodSpec> specs;
    for (Method m : methods) {
        MethodSpec spec;
        spec.name = std::string(method_name(m));
        spec.stochastic = m == Method::random;
        spec.surrogate_user = m == Method::graphlime || m == Method::lime_linear;
        spec.make = [m, config](std::uint64_t seed) -> std::shared_ptr<const Explainer> {
            ExplainerConfig c = config;
            c.seed = seed;
            return make_explainer(m, c);
        };
        specs.push_back(std::move(spec));
    }
    return specs;
}

namespace {

std::size_t count_in(const std::vector<std::size_t>& selected, const std::vector<bool>& flagged) {
    return static_cast<std::size_t>(std::count_if(selected.begin(), selected.end(), [&](std::size_t j) {
        return j < flagged.size() && flagged[j];
    }));
}

std::vector<bool> flag_set(const std::vector<std::size_t>& indices, std::size_t d) {
    std::vector<bool> flags(d, false);
    for (std::size_t j : indices) flags.at(j) = true;
    return flags;
}

bool is_explanation_failure(const Error& e) {
    return e.code() == ErrorCode::insufficient_neighbors || e.code() == ErrorCode::degenerate_problem;
}

}  // namespace

// --- gated training setup --------------------------------------------------------------------------

GatedSetup prepare_gated_setup(const Graph& graph, const PredictorFactory& factory, const SetupConfig& config) {
    if (!graph.has_labels()) fail(ErrorCode::invalid_argument, "training needs a labeled graph");
    GatedSetup out{graph, {}, {}, {}, 0};
    if (config.noise_count > 0) {
        auto [augmented, injection] = inject_noise_features(graph, config.noise_count, mix_seed(config.seed, {1}));
        out.graph = std::move(augmented);
        out.noisy_indices = injection.noisy_indices;
    }
    out.split = random_split(out.graph.node_count(), config.train_fraction, mix_seed(config.seed, {2}));

    double best = 0.0;
    const std::size_t attempts = std::max<std::size_t>(config.retries, 1);
    for (std::size_t a = 0; a < attempts; ++a) {
        out.trained = factory(out.graph, out.split, mix_seed(config.seed, {3, a}));
        out.attempts = a + 1;
        best = std::max(best, out.trained.test_accuracy);
        if (out.trained.test_accuracy >= config.accuracy_gate) return out;
    }
    std::ostringstream msg;
    msg << "accuracy gate " << config.accuracy_gate << " unmet after " << attempts << " attempts; best test accuracy "
        << best;
    fail(ErrorCode::gate_unmet, msg.str());
}

// --- noisy-feature experiment ------------------------------------------------------------------

NoiseReport run_noise_experiment(const Graph& graph, const PredictorFactory& factory,
                                 const std::vector<MethodSpec>& methods, std::size_t top_k,
                                 const NoiseExperimentConfig& config) {
    NoiseReport report;
    report.top_k = top_k;
    report.seed = config.setup.seed;
    if (methods.empty()) return report;
    if (top_k < 1) fail(ErrorCode::invalid_argument, "top_k must be at least 1");

    const GatedSetup setup = prepare_gated_setup(graph, factory, config.setup);
    const Graph& noisy = setup.graph;
    const Split& split = setup.split;
    const TrainedPredictor& trained = setup.trained;
    report.noisy_indices = setup.noisy_indices;
    report.training_attempts = setup.attempts;
    report.train_accuracy = trained.train_accuracy;
    report.test_accuracy = trained.test_accuracy;
    const auto noisy_flags = flag_set(report.noisy_indices, noisy.feature_count());

    // held-out nodes first, then training nodes; only nodes with a neighborhood
    std::vector<NodeId> nodes;
    for (const auto* part : {&split.test, &split.train}) {
        for (NodeId v : *part) {
            if (nodes.size() >= config.nodes_to_explain) break;
            if (!noisy.neighbors(v).empty()) nodes.push_back(v);
        }
    }

    for (const MethodSpec& spec : methods) {
        NoiseMethodResult res;
        res.method = spec.name;
        res.histogram.assign(top_k + 1, 0);
        const auto explainer = spec.make(mix_seed(config.setup.seed, {4}));
        double total = 0.0;
        for (NodeId v : nodes) {
            try {
                const Explanation e = explainer->explain(*trained.model, noisy, v);
                const std::size_t c = std::min(count_in(e.selected, noisy_flags), top_k);
                res.nodes.push_back(v);
                res.noisy_counts.push_back(c);
                ++res.histogram[c];
                total += static_cast<double>(c);
            } catch (const Error& err) {
                if (!is_explanation_failure(err)) throw;
                ++res.skipped;
            }
        }
        res.mean = res.nodes.empty() ? 0.0 : total / static_cast<double>(res.nodes.size());
        report.methods.push_back(std::move(res));
    }
    return report;
}

// --- trust experiment ------------------------------------------------------------------------

Scores score(const Confusion& c) {
    auto ratio = [](std::size_t num, std::size_t den, bool nothing_to_miss) {
        if (den == 0) return nothing_to_miss ? 1.0 : 0.0;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    Scores s;
    const bool no_errors = c.fp == 0 && c.fn == 0;
    s.precision = ratio(c.tp, c.tp + c.fp, no_errors);
    s.recall = ratio(c.tp, c.tp + c.fn, no_errors);
    s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

namespace {

// Least-squares map from [1, x_S] to class scores over the local sample.
struct LinearSurrogate {
    std::vector<std::size_t> features;
    Eigen::MatrixXd coef;  // (|S| + 1) x C

    Eigen::RowVectorXd scores(const Eigen::RowVectorXd& x) const {
        Eigen::RowVectorXd design(static_cast<Eigen::Index>(features.size()) + 1);
        design(0) = 1.0;
        for (std::size_t i = 0; i < features.size(); ++i)
            design(static_cast<Eigen::Index>(i) + 1) = x(static_cast<Eigen::Index>(features[i]));
        return design * coef;
    }
};

LinearSurrogate fit_surrogate(const LocalSample& sample, const std::vector<std::size_t>& features) {
    LinearSurrogate s;
    s.features = features;
    const auto n = sample.features.rows();
    Eigen::MatrixXd design(n, static_cast<Eigen::Index>(features.size()) + 1);
    design.col(0).setOnes();
    for (std::size_t i = 0; i < features.size(); ++i)
        design.col(static_cast<Eigen::Index>(i) + 1) = sample.features.col(static_cast<Eigen::Index>(features[i]));
    s.coef = design.completeOrthogonalDecomposition().solve(sample.predictions);
    return s;
}

Eigen::Index row_argmax(const Eigen::RowVectorXd& r) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < r.size(); ++i)
        if (r(i) > r(best)) best = i;
    return best;
}

}  // namespace

TrustReport run_trust_experiment(const Graph& graph, const Predictor& predictor, const std::vector<NodeId>& test_nodes,
                                 const std::vector<MethodSpec>& methods, std::size_t top_k,
                                 const TrustExperimentConfig& config) {
    const std::size_t d = graph.feature_count();
    if (!(config.untrust_fraction >= 0.0 && config.untrust_fraction <= 1.0)) {
        fail(ErrorCode::invalid_argument, "untrust_fraction must lie in [0, 1]");
    }
    const auto untrusted_count = static_cast<std::size_t>(std::floor(config.untrust_fraction * static_cast<double>(d)));
    if (config.untrust_fraction > 0.0 && untrusted_count == 0) {
        fail(ErrorCode::invalid_argument, "untrust_fraction " + std::to_string(config.untrust_fraction) +
                                              " of " + std::to_string(d) + " features marks none untrustworthy");
    }
    if (test_nodes.empty()) fail(ErrorCode::invalid_argument, "trust experiment needs test nodes");

    TrustReport report;
    report.top_k = top_k;
    report.seed = config.seed;
    report.rounds = config.rounds;
    report.untrusted_count = untrusted_count;

    const Eigen::MatrixXd base = predictor.predict_all(graph, graph.features());

    // local samples for the surrogate users
    std::vector<std::optional<LocalSample>> samples(test_nodes.size());
    const bool any_surrogate = std::any_of(methods.begin(), methods.end(), [](const MethodSpec& m) { return m.surrogate_user; });
    if (any_surrogate) {
        for (std::size_t i = 0; i < test_nodes.size(); ++i) {
            try {
                samples[i] = sample_neighborhood(predictor, graph, test_nodes[i], config.hops);
            } catch (const Error& err) {
                if (!is_explanation_failure(err)) throw;
            }
        }
    }

    struct NodeState {
        std::vector<std::size_t> selected;
        std::optional<LinearSurrogate> surrogate;
    };
    auto explain_node = [&](const MethodSpec& spec, const Explainer& explainer, std::size_t i, std::size_t& failures) {
        NodeState st;
        try {
            st.selected = explainer.explain(predictor, graph, test_nodes[i]).selected;
        } catch (const Error& err) {
            if (!is_explanation_failure(err)) throw;
            ++failures;
        }
        if (spec.surrogate_user && samples[i]) st.surrogate = fit_surrogate(*samples[i], st.selected);
        return st;
    };

    std::vector<TrustMethodResult> results(methods.size());
    std::vector<std::vector<NodeState>> fixed(methods.size());
    for (std::size_t m = 0; m < methods.size(); ++m) {
        results[m].method = methods[m].name;
        if (methods[m].stochastic) continue;
        const auto explainer = methods[m].make(mix_seed(config.seed, {5}));
        for (std::size_t i = 0; i < test_nodes.size(); ++i)
            fixed[m].push_back(explain_node(methods[m], *explainer, i, results[m].unexplained));
    }

    std::vector<std::size_t> all(d);
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (std::size_t r = 0; r < config.rounds; ++r) {
        std::mt19937_64 rng(mix_seed(config.seed, {6, r}));
        std::vector<std::size_t> perm = all;
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<std::size_t> untrusted(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(untrusted_count));
        std::sort(untrusted.begin(), untrusted.end());
        const auto flags = flag_set(untrusted, d);

        Eigen::MatrixXd removed = graph.features();
        for (std::size_t j : untrusted) removed.col(static_cast<Eigen::Index>(j)).setZero();
        const Eigen::MatrixXd after = predictor.predict_all(graph, removed);

        std::vector<bool> oracle_untrust(test_nodes.size());
        std::size_t flips = 0;
        for (std::size_t i = 0; i < test_nodes.size(); ++i) {
            const auto v = static_cast<Eigen::Index>(test_nodes[i]);
            oracle_untrust[i] = row_argmax(base.row(v)) != row_argmax(after.row(v));
            flips += oracle_untrust[i] ? 1 : 0;
        }
        report.oracle_untrustworthy_rate.push_back(static_cast<double>(flips) / static_cast<double>(test_nodes.size()));
        report.untrusted_per_round.push_back(untrusted);

        for (std::size_t m = 0; m < methods.size(); ++m) {
            const MethodSpec& spec = methods[m];
            std::vector<NodeState> round_states;
            if (spec.stochastic) {
                const auto explainer = spec.make(mix_seed(config.seed, {7, r}));
                std::size_t ignored = 0;
                for (std::size_t i = 0; i < test_nodes.size(); ++i)
                    round_states.push_back(explain_node(spec, *explainer, i, ignored));
            }
            const auto& states = spec.stochastic ? round_states : fixed[m];

            Confusion conf;
            for (std::size_t i = 0; i < test_nodes.size(); ++i) {
                const NodeState& st = states[i];
                bool user_untrust = false;
                if (spec.surrogate_user) {
                    if (st.surrogate && count_in(st.selected, flags) > 0) {
                        const Eigen::RowVectorXd x = graph.features().row(static_cast<Eigen::Index>(test_nodes[i]));
                        Eigen::RowVectorXd x_removed = x;
                        for (std::size_t j : st.selected)
                            if (flags[j]) x_removed(static_cast<Eigen::Index>(j)) = 0.0;
                        user_untrust = row_argmax(st.surrogate->scores(x)) != row_argmax(st.surrogate->scores(x_removed));
                    }
                } else {
                    user_untrust = count_in(st.selected, flags) > 0;
                }
                const bool oracle_trust = !oracle_untrust[i];
                const bool user_trust = !user_untrust;
                if (oracle_trust && user_trust) ++conf.tp;
                else if (!oracle_trust && user_trust) ++conf.fp;
                else if (oracle_trust && !user_trust) ++conf.fn;
                else ++conf.tn;
            }
            const Scores s = score(conf);
            results[m].round_precision.push_back(s.precision);
            results[m].round_recall.push_back(s.recall);
            results[m].round_f1.push_back(s.f1);
        }
    }

    for (auto& res : results) {
        const auto mean = [](const std::vector<double>& v) {
            return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        };
        res.f1 = mean(res.round_f1);
        res.precision = mean(res.round_precision);
        res.recall = mean(res.round_recall);
        double var = 0.0;
        for (double f : res.round_f1) var += (f - res.f1) * (f - res.f1);
        res.f1_std = res.round_f1.size() > 1 ? std::sqrt(var / static_cast<double>(res.round_f1.size() - 1)) : 0.0;
    }
    report.methods = std::move(results);
    return report;
}

// --- model selection -------------------------------------------------------------------------------

ModelSelectionReport run_model_selection(const Graph& graph, const PredictorFactory& factory,
                                         const std::vector<MethodSpec>& methods, std::size_t top_k,
                                         const ModelSelectionConfig& config) {
    if (config.budgets.empty()) fail(ErrorCode::invalid_argument, "at least one budget is required");
    for (std::size_t b : config.budgets)
        if (b < 1) fail(ErrorCode::invalid_argument, "budgets must be at least 1");
    if (config.noise_count < 1) fail(ErrorCode::invalid_argument, "model selection needs injected noise features");

    ModelSelectionReport report;
    report.top_k = top_k;
    report.seed = config.seed;
    report.budgets = config.budgets;
    const std::size_t nb = config.budgets.size();
    std::map<std::string, std::vector<std::size_t>> hits;
    for (const auto& m : methods) hits[m.name].assign(nb, 0);
    std::vector<std::size_t> random_hits(nb, 0);

    for (std::size_t r = 0; r < config.rounds; ++r) {
        auto [noisy, injection] = inject_noise_features(graph, config.noise_count, mix_seed(config.seed, {10, r}));
        const auto flags = flag_set(injection.noisy_indices, noisy.feature_count());
        const Split split = random_split(noisy.node_count(), config.train_fraction, mix_seed(config.seed, {11, r}));

        TrainedPredictor a, b;
        bool passed = false;
        SelectionRound round;
        round.round = r;
        std::ostringstream seen;
        for (std::size_t attempt = 0; attempt < std::max<std::size_t>(config.retries, 1) && !passed; ++attempt) {
            a = factory(noisy, split, mix_seed(config.seed, {12, r, attempt, 0}));
            b = factory(noisy, split, mix_seed(config.seed, {12, r, attempt, 1}));
            round.attempts = attempt + 1;
            const bool accurate = std::min({a.train_accuracy, a.test_accuracy, b.train_accuracy, b.test_accuracy}) >
                                  config.min_accuracy;
            passed = accurate && std::abs(a.test_accuracy - b.test_accuracy) > config.min_gap;
            if (!passed) {
                seen << " (" << a.train_accuracy << "/" << a.test_accuracy << ", " << b.train_accuracy << "/"
                     << b.test_accuracy << ")";
            }
        }
        if (!passed) {
            fail(ErrorCode::gate_unmet, "round " + std::to_string(r) + ": no classifier pair met the gates (accuracy > " +
                                            std::to_string(config.min_accuracy) + ", gap > " +
                                            std::to_string(config.min_gap) + "); train/test seen:" + seen.str());
        }
        round.accuracy_a = a.test_accuracy;
        round.accuracy_b = b.test_accuracy;
        round.better = a.test_accuracy > b.test_accuracy ? 0 : 1;

        std::vector<NodeId> pool;
        for (NodeId v : split.test) {
            if (pool.size() >= config.candidates) break;
            if (!noisy.neighbors(v).empty()) pool.push_back(v);
        }

        for (std::size_t bi = 0; bi < nb; ++bi) {
            std::mt19937_64 coin(mix_seed(config.seed, {13, r, bi}));
            const bool pick_b = std::bernoulli_distribution(0.5)(coin);
            const bool correct = (pick_b ? 1u : 0u) == round.better;
            round.random_choice_correct.push_back(correct);
            random_hits[bi] += correct ? 1 : 0;
        }

        for (std::size_t m = 0; m < methods.size(); ++m) {
            const MethodSpec& spec = methods[m];
            const auto explainer = spec.make(mix_seed(config.seed, {14, r}));
            std::vector<Explanation> ex_a, ex_b;
            for (NodeId v : pool) {
                const std::pair<const Predictor*, std::vector<Explanation>*> targets[] = {{a.model.get(), &ex_a},
                                                                                          {b.model.get(), &ex_b}};
                for (const auto& [model, out] : targets) {
                    try {
                        out->push_back(explainer->explain(*model, noisy, v));
                    } catch (const Error& err) {
                        if (!is_explanation_failure(err)) throw;
                        Explanation empty;
                        empty.node = v;
                        out->push_back(std::move(empty));
                    }
                }
            }
            const ExplanationMatrix wa = build_explanation_matrix(ex_a, noisy.feature_count());
            const ExplanationMatrix wb = build_explanation_matrix(ex_b, noisy.feature_count());
            const Eigen::VectorXd ia = global_importance(wa.weights);
            const Eigen::VectorXd ib = global_importance(wb.weights);

            auto& outcomes = round.outcomes[spec.name];
            for (std::size_t bi = 0; bi < nb; ++bi) {
                const std::size_t budget = config.budgets[bi];
                BudgetOutcome o;
                if (!pool.empty()) {
                    for (std::size_t i : submodular_pick(wa.weights, ia, budget).picked)
                        o.noisy_a += count_in(ex_a[i].selected, flags);
                    for (std::size_t i : submodular_pick(wb.weights, ib, budget).picked)
                        o.noisy_b += count_in(ex_b[i].selected, flags);
                }
                if (o.noisy_a == o.noisy_b) {
                    o.tie = true;
                    std::mt19937_64 coin(mix_seed(config.seed, {15, r, bi, m}));
                    o.choice = std::bernoulli_distribution(0.5)(coin) ? 1 : 0;
                } else {
                    o.choice = o.noisy_a < o.noisy_b ? 0 : 1;
                }
                o.correct = o.choice == round.better;
                hits[spec.name][bi] += o.correct ? 1 : 0;
                outcomes.push_back(o);
            }
        }
        report.rounds.push_back(std::move(round));
    }

    const double rounds = std::max<double>(1.0, static_cast<double>(config.rounds));
    for (auto& [name, h] : hits) {
        auto& acc = report.accuracy[name];
        for (std::size_t x : h) acc.push_back(static_cast<double>(x) / rounds);
    }
    for (std::size_t x : random_hits) report.random_choice_accuracy.push_back(static_cast<double>(x) / rounds);
    return report;
}

}  // namespace graphlime
