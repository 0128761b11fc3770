// vizkb: command-line front end for the knowledge-base, augmentation, labeling,
// training and evaluation pipeline. Every command prints one JSON summary line on
// stdout; errors go to stderr with a nonzero exit code.

#include <csignal>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <httplib.h>

#include "vizkb/augment.hpp"
#include "vizkb/chart_json.hpp"
#include "vizkb/config.hpp"
#include "vizkb/enumerator.hpp"
#include "vizkb/error.hpp"
#include "vizkb/evaluate.hpp"
#include "vizkb/hard_constraints.hpp"
#include "vizkb/io.hpp"
#include "vizkb/labeling.hpp"
#include "vizkb/llm.hpp"
#include "vizkb/service.hpp"
#include "vizkb/training.hpp"

using namespace vizkb;
using nlohmann::json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitInvalid = 2;

struct Globals {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool no_timestamps = false;
    ProjectConfig config;
};

void summary(json j) { std::cout << j.dump() << std::endl; }

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

ChartSpec load_chart(const std::string& path) {
    const ChartSpec spec = chart_from_json(read_json(path));
    return spec;
}

std::vector<DesignPair> load_corpus(const std::string& path, const std::string& labels_path) {
    auto pairs = path.empty() ? std::vector<DesignPair>{} : read_pairs(path);
    if (!labels_path.empty()) {
        LabelStore store;
        import_labels(store, labels_path);
        apply_labels(pairs, store);
    }
    return pairs;
}

std::vector<DesignPair> labeled_only(std::vector<DesignPair> pairs) {
    std::erase_if(pairs, [](const DesignPair& p) { return !p.label || p.illegible; });
    return pairs;
}

void write_specs(const std::string& path, const std::vector<ChartSpec>& specs) {
    std::vector<json> rows;
    for (const auto& s : specs) rows.push_back(to_json(s));
    write_file_atomic(path, to_jsonl(rows));
}

std::vector<PartialSpec> partials_from_corpus(const std::vector<DesignPair>& corpus) {
    std::vector<PartialSpec> out;
    std::set<std::string> seen;
    for (const auto& p : corpus) {
        for (const ChartSpec* s : {&p.left, &p.right}) {
            PartialSpec partial = partial_from_chart(*s);
            if (seen.insert(to_json(partial).dump()).second) out.push_back(std::move(partial));
        }
    }
    return out;
}

std::vector<PartialSpec> load_partials(const std::string& path) {
    const json j = read_json(path);
    std::vector<PartialSpec> out;
    if (j.is_array()) {
        for (const auto& p : j) out.push_back(partial_from_json(p));
    } else {
        out.push_back(partial_from_json(j));
    }
    return out;
}

// Uses the trailing ": the pair ..." of an exception text as a one-line message.
int fail(const std::exception& e) {
    std::cerr << "vizkb: error: " << e.what() << std::endl;
    summary({{"status", "error"}, {"error", e.what()}});
    return kExitError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vizkb - visualization design knowledge base and pair augmentation toolkit"};
    app.require_subcommand(1);
    app.footer(
        "Exit codes: 0 success, 1 error, 2 invalid chart (validate).\n"
        "Environment: VIZKB_LLM_API_KEY supplies the API key for 'label llm'.\n"
        "Weights arguments accept a .csv or .json file or the word 'builtin'.");

    Globals g;
    app.add_option("--config", g.config_path, "Project config JSON");
    app.add_option("--seed", g.seed, "RNG seed (overrides the config)")->each([&](const std::string&) { g.seed_set = true; });
    app.add_flag("--no-timestamps", g.no_timestamps, "Leave timestamps out of outputs for byte-identical reruns");

    std::function<int()> action;

    // ---- kb-core ----
    auto* validate_cmd = app.add_subcommand("validate", "Check a chart against the hard constraints");
    std::string chart_path;
    validate_cmd->add_option("chart", chart_path, "Chart JSON")->required();
    validate_cmd->callback([&] {
        action = [&] {
            const ChartSpec spec = load_chart(chart_path);
            json v = json::array();
            for (const auto& x : validate(spec)) v.push_back({{"rule", to_string(x.rule)}, {"detail", x.detail}});
            const bool ok = v.empty();
            summary({{"command", "validate"}, {"valid", ok}, {"violations", std::move(v)}});
            return ok ? 0 : kExitInvalid;
        };
    });

    auto* features_cmd = app.add_subcommand("features", "Feature counts of a chart, or the catalog");
    std::string catalog_out, weights_arg = "";
    bool list_catalog = false;
    features_cmd->add_option("chart", chart_path, "Chart JSON");
    features_cmd->add_flag("--catalog", list_catalog, "Export the feature catalog instead");
    features_cmd->add_option("--out", catalog_out, "Write the result to this file");
    features_cmd->add_option("--weights", weights_arg, "Weights for the catalog export");
    features_cmd->callback([&] {
        action = [&] {
            const FeatureCatalog& catalog = builtin_catalog();
            json result;
            if (list_catalog || chart_path.empty()) {
                const WeightTable w = load_weights(weights_arg.empty() ? g.config.weights : weights_arg, catalog);
                result = catalog_to_json(catalog, w);
            } else {
                const ChartSpec spec = load_chart(chart_path);
                if (!is_valid(spec)) throw Error("chart violates hard constraints; run 'vizkb validate'");
                result = to_json(extract_features(spec, catalog));
            }
            if (!catalog_out.empty()) write_file_atomic(catalog_out, result.dump(2) + "\n");
            summary({{"command", "features"}, {"result", result}});
            return 0;
        };
    });

    auto* cost_cmd = app.add_subcommand("cost", "Cost of a chart under a weight table");
    cost_cmd->add_option("chart", chart_path, "Chart JSON")->required();
    cost_cmd->add_option("--weights", weights_arg, "Weights (default from config, else builtin)");
    cost_cmd->callback([&] {
        action = [&] {
            const ChartSpec spec = load_chart(chart_path);
            if (!is_valid(spec)) throw Error("chart violates hard constraints; run 'vizkb validate'");
            const WeightTable w = load_weights(weights_arg.empty() ? g.config.weights : weights_arg, builtin_catalog());
            const FeatureVector fv = extract_features(spec, builtin_catalog());
            summary({{"command", "cost"}, {"cost", cost(fv, w)}, {"features", to_json(fv)}});
            return 0;
        };
    });

    // ---- enumerator ----
    auto* enum_cmd = app.add_subcommand("enumerate", "Complete a partial specification");
    std::string partial_path, out_path, force_list, forbid_list;
    std::size_t max_results = 0, top_k = 0;
    std::int64_t max_features = 0, cost_cap = 0;
    bool use_cost_cap = false;
    enum_cmd->add_option("--partial", partial_path, "Partial spec JSON")->required();
    enum_cmd->add_option("--out", out_path, "Output JSONL of charts");
    enum_cmd->add_option("--force", force_list, "Comma-separated features that must be present");
    enum_cmd->add_option("--forbid", forbid_list, "Comma-separated features that must be absent");
    enum_cmd->add_option("--max-results", max_results, "Keep at most this many completions");
    enum_cmd->add_option("--max-features", max_features, "Cap on total feature occurrences per chart");
    enum_cmd->add_option("--cost-cap", cost_cap, "Drop charts above this cost")->each([&](const std::string&) {
        use_cost_cap = true;
    });
    enum_cmd->add_option("--weights", weights_arg, "Weights for ranking and cost caps");
    enum_cmd->add_option("--top-k", top_k, "Keep the k lowest distinct-cost charts");
    enum_cmd->callback([&] {
        action = [&] {
            const PartialSpec partial = partial_from_json(read_json(partial_path));
            EnumerationBounds b;
            b.max_results = max_results ? max_results : g.config.max_results;
            if (max_features > 0) b.max_feature_count = max_features;
            if (use_cost_cap) b.cost_cap = cost_cap;
            std::optional<WeightTable> w;
            if (!weights_arg.empty() || use_cost_cap || top_k) {
                w = load_weights(weights_arg.empty() ? g.config.weights : weights_arg, builtin_catalog());
            }
            const auto f1 = split_list(force_list), f2 = split_list(forbid_list);
            Enumeration e = enumerate_constrained(partial, {f1.begin(), f1.end()}, {f2.begin(), f2.end()}, b,
                                                  builtin_catalog(), w ? &*w : nullptr);
            std::vector<ChartSpec> specs = std::move(e.specs);
            if (top_k && !specs.empty()) specs = top_k_distinct_cost(specs, *w, top_k);
            if (!out_path.empty()) write_specs(out_path, specs);
            summary({{"command", "enumerate"},
                     {"matched", e.matched},
                     {"written", specs.size()},
                     {"truncated", e.truncated()},
                     {"nodes", e.nodes}});
            return 0;
        };
    });

    // ---- augment ----
    auto* augment_cmd = app.add_subcommand("augment", "Generate augmented design pairs");
    augment_cmd->require_subcommand(1);
    std::string corpus_path, labels_path, specs_path, feature_list, partials_path;
    std::vector<std::string> binary_pairs;
    std::size_t max_new = 0, top = 0, per_feature = 0;
    std::int64_t threshold = 0;

    auto* aug_prim = augment_cmd->add_subcommand("primitive", "Pairs preserving each origin's design differences");
    aug_prim->add_option("--corpus", corpus_path, "Origin pairs (JSONL)")->required();
    aug_prim->add_option("--out", out_path, "Output pairs (JSONL)")->required();
    aug_prim->add_option("--max-new", max_new, "New pairs per origin (default 7)");
    aug_prim->callback([&] {
        action = [&] {
            const auto corpus = read_pairs(corpus_path);
            PrimitiveAugmentOptions opt;
            opt.max_new = max_new ? max_new : g.config.max_new;
            std::vector<DesignPair> out;
            std::size_t skipped = 0;
            for (const auto& p : corpus) {
                std::vector<DesignPair> got;
                try {
                    got = primitive_augment(p, opt);
                } catch (const Error& e) {
                    std::cerr << "vizkb: skipping '" << p.id << "': " << e.what() << std::endl;
                    ++skipped;
                    continue;
                }
                for (auto& q : got) {
                    flag_pair(q, g.config.density_cap);
                    out.push_back(std::move(q));
                }
            }
            write_pairs(out_path, out);
            summary({{"command", "augment primitive"}, {"origins", corpus.size()}, {"pairs", out.size()},
                     {"skipped", skipped}});
            return 0;
        };
    });

    auto* aug_feat = augment_cmd->add_subcommand("feature", "Unary and binary feature ablation pairs");
    aug_feat->add_option("--corpus", corpus_path, "Corpus (JSONL); partials and coverage come from its charts")
        ->required();
    aug_feat->add_option("--partials", partials_path, "Partial specs JSON (array) instead of the corpus charts");
    aug_feat->add_option("--features", feature_list, "Comma-separated features (default: under-covered ones)");
    aug_feat->add_option("--binary", binary_pairs, "Feature pair a:b for binary ablation (repeatable)");
    aug_feat->add_option("--threshold", threshold, "Coverage threshold (default 7)");
    aug_feat->add_option("--per-feature", per_feature, "Pairs per feature (default 7)");
    aug_feat->add_option("--out", out_path, "Output pairs (JSONL)")->required();
    aug_feat->callback([&] {
        action = [&] {
            const auto corpus = read_pairs(corpus_path);
            const auto partials = partials_path.empty() ? partials_from_corpus(corpus) : load_partials(partials_path);
            const CoverageReport cov =
                coverage_report(corpus, builtin_catalog(), threshold ? threshold : g.config.threshold);
            AblationOptions opt;
            opt.seed = g.config.seed;
            opt.bounds.max_results = 200;
            opt.bounds.max_feature_count = g.config.max_feature_count;
            std::vector<std::string> features = split_list(feature_list);
            if (features.empty() && binary_pairs.empty()) features.assign(cov.under_covered.begin(), cov.under_covered.end());
            std::vector<DesignPair> out;
            json warnings = json::array();
            for (const auto& f : features) {
                auto r = feature_augment_unary(f, partials, per_feature ? per_feature : g.config.pairs_per_feature, opt);
                for (auto& w : r.warnings) warnings.push_back({{"subject", w.subject}, {"reason", w.reason}});
                for (auto& p : r.pairs) out.push_back(std::move(p));
            }
            if (!binary_pairs.empty()) {
                std::vector<ChartSpec> probe;
                for (const auto& p : corpus) {
                    probe.push_back(p.left);
                    probe.push_back(p.right);
                }
                EnumerationBounds pb;
                pb.max_results = 200;
                for (const auto& partial : partials) {
                    auto e = complete(partial, pb);
                    probe.insert(probe.end(), e.specs.begin(), e.specs.end());
                }
                const DependencyGraph graph = analyze_dependencies(probe, builtin_catalog());
                for (const auto& ab : binary_pairs) {
                    const auto colon = ab.find(':');
                    if (colon == std::string::npos) throw Error("--binary expects a:b, got '" + ab + "'");
                    auto r = feature_augment_binary(ab.substr(0, colon), ab.substr(colon + 1), partials, graph, &cov,
                                                    2, opt);
                    for (auto& w : r.warnings) warnings.push_back({{"subject", w.subject}, {"reason", w.reason}});
                    for (auto& p : r.pairs) out.push_back(std::move(p));
                }
            }
            for (auto& p : out) flag_pair(p, g.config.density_cap);
            write_pairs(out_path, out);
            summary({{"command", "augment feature"}, {"pairs", out.size()}, {"partials", partials.size()},
                     {"seed", opt.seed}, {"warnings", std::move(warnings)}});
            return 0;
        };
    });

    auto* aug_seed = augment_cmd->add_subcommand("seed", "Pairs of top distinct-cost designs per data spec");
    aug_seed->add_option("--specs", specs_path, "Seed data specs JSON")->required();
    aug_seed->add_option("--weights", weights_arg, "Labeling weights");
    aug_seed->add_option("--top", top, "Designs per seed (default 8)");
    aug_seed->add_option("--out", out_path, "Output pairs (JSONL)")->required();
    aug_seed->callback([&] {
        action = [&] {
            const auto seeds = read_seeds(specs_path);
            const WeightTable w = load_weights(weights_arg.empty() ? g.config.weights : weights_arg, builtin_catalog());
            SeedOptions opt;
            opt.n_top = top ? top : g.config.n_top;
            opt.bounds.max_results = g.config.max_results;
            opt.bounds.max_feature_count = g.config.max_feature_count;
            auto r = seed_augment(seeds, w, opt);
            for (auto& p : r.pairs) flag_pair(p, g.config.density_cap);
            write_pairs(out_path, r.pairs);
            json warnings = json::array();
            for (auto& x : r.warnings) warnings.push_back({{"subject", x.subject}, {"reason", x.reason}});
            summary({{"command", "augment seed"}, {"seeds", seeds.size()}, {"pairs", r.pairs.size()},
                     {"warnings", std::move(warnings)}});
            return 0;
        };
    });

    // ---- coverage and dependencies ----
    auto* coverage_cmd = app.add_subcommand("coverage", "Feature coverage of a corpus");
    coverage_cmd->add_option("--corpus", corpus_path, "Corpus (JSONL); omitted means empty");
    coverage_cmd->add_option("--threshold", threshold, "Under-coverage threshold (default 7)");
    coverage_cmd->add_option("--out", out_path, "Write the report JSON here");
    coverage_cmd->callback([&] {
        action = [&] {
            const auto corpus = load_corpus(corpus_path, "");
            const auto r = coverage_report(corpus, builtin_catalog(), threshold ? threshold : g.config.threshold);
            if (!out_path.empty()) write_file_atomic(out_path, to_json(r).dump(2) + "\n");
            summary({{"command", "coverage"},
                     {"charts", r.charts},
                     {"threshold", r.threshold},
                     {"under_covered_count", r.under_covered.size()},
                     {"under_covered", std::vector<std::string>(r.under_covered.begin(), r.under_covered.end())}});
            return 0;
        };
    });

    auto* deps_cmd = app.add_subcommand("deps", "Provoke/contradict relations over a probe set");
    deps_cmd->add_option("--corpus", corpus_path, "Corpus charts to include in the probe");
    deps_cmd->add_option("--specs", specs_path, "Seed specs whose completions join the probe");
    deps_cmd->add_option("--out", out_path, "Write the graph JSON here");
    deps_cmd->callback([&] {
        action = [&] {
            std::vector<ChartSpec> probe;
            for (const auto& p : load_corpus(corpus_path, "")) {
                probe.push_back(p.left);
                probe.push_back(p.right);
            }
            if (!specs_path.empty()) {
                EnumerationBounds b;
                b.max_results = g.config.max_results;
                for (const auto& s : read_seeds(specs_path)) {
                    auto e = complete(seed_partial(s), b);
                    probe.insert(probe.end(), e.specs.begin(), e.specs.end());
                }
            }
            const auto graph = analyze_dependencies(probe, builtin_catalog());
            if (!out_path.empty()) write_file_atomic(out_path, to_json(graph).dump(2) + "\n");
            summary({{"command", "deps"}, {"probe", probe.size()}, {"edges", graph.edges.size()},
                     {"undetermined", graph.undetermined.size()}});
            return 0;
        };
    });

    // ---- labeling ----
    auto* label_cmd = app.add_subcommand("label", "Label pairs");
    label_cmd->require_subcommand(1);
    std::string train_path, pairs_path, store_path, in_path, pairs_out;
    std::string endpoint, model_name, audit_path;

    auto* label_classify = label_cmd->add_subcommand("classify", "Label pairs with a classifier trained on labeled ones");
    label_classify->add_option("--train", train_path, "Labeled pairs (JSONL)")->required();
    label_classify->add_option("--labels", labels_path, "Extra labels applied to the training pairs");
    label_classify->add_option("--pairs", pairs_path, "Pairs to label (JSONL)")->required();
    label_classify->add_option("--out", out_path, "Output label records (JSONL)")->required();
    label_classify->callback([&] {
        action = [&] {
            const auto labeled = labeled_only(load_corpus(train_path, labels_path));
            ClassifierConfig cc;
            cc.seed = g.config.seed;
            auto model = train_classifier_labeler(labeled, cc);
            const auto pairs = read_pairs(pairs_path);
            const std::string ts = g.no_timestamps ? "" : utc_timestamp();
            const auto records = classify_labels(*model, pairs, LabelProvenance::ml, ts);
            write_file_atomic(out_path, labels_to_jsonl(records));
            summary({{"command", "label classify"},
                     {"train", labeled.size()},
                     {"labeled", records.size()},
                     {"cv_accuracy", model->cv_accuracy ? json(*model->cv_accuracy) : json(nullptr)},
                     {"seed", cc.seed}});
            return 0;
        };
    });

    auto* label_llm = label_cmd->add_subcommand("llm", "Label pairs with a chat-completion endpoint");
    label_llm->add_option("--pairs", pairs_path, "Pairs to label (JSONL)")->required();
    label_llm->add_option("--out", out_path, "Output label records (JSONL)")->required();
    label_llm->add_option("--endpoint", endpoint, "Chat-completion URL (default from config)");
    label_llm->add_option("--model", model_name, "Model name (default from config)");
    label_llm->add_option("--audit", audit_path, "Transcript log (JSONL)");
    label_llm->callback([&] {
        action = [&] {
            LlmConfig cfg = g.config.llm;
            if (!endpoint.empty()) cfg.endpoint = endpoint;
            if (!model_name.empty()) cfg.model = model_name;
            if (!audit_path.empty()) cfg.audit_log = audit_path;
            cfg.timestamps = !g.no_timestamps;
            if (cfg.endpoint.empty()) throw Error("no LLM endpoint configured");
            cfg.api_key = resolve_api_key(cfg);
            HttpChatTransport transport(cfg.endpoint, cfg.api_key);
            const auto pairs = read_pairs(pairs_path);
            const auto outcomes = llm_label_all(pairs, transport, cfg);
            std::vector<LabelRecord> records;
            json errors = json::array();
            std::size_t flagged = 0;
            for (const auto& o : outcomes) {
                if (o.record) {
                    records.push_back(*o.record);
                    flagged += o.record->flagged ? 1 : 0;
                } else {
                    errors.push_back({{"pair_id", o.pair_id}, {"error", o.error}});
                }
            }
            write_file_atomic(out_path, labels_to_jsonl(records));
            summary({{"command", "label llm"}, {"labeled", records.size()}, {"flagged", flagged},
                     {"errors", std::move(errors)}});
            return 0;
        };
    });

    auto* label_import = label_cmd->add_subcommand("import", "Merge label records into a store file");
    label_import->add_option("--store", store_path, "Store file (JSONL, created when missing)")->required();
    label_import->add_option("--in", in_path, "Label records to import (JSONL)")->required();
    label_import->callback([&] {
        action = [&] {
            LabelStore store;
            if (std::ifstream(store_path).good()) import_labels(store, store_path);
            const std::size_t before = store.size();
            import_labels(store, in_path);
            export_labels(store, store_path);
            summary({{"command", "label import"}, {"records", store.size()}, {"added", store.size() - before}});
            return 0;
        };
    });

    auto* label_export = label_cmd->add_subcommand("export", "Export labels, or labeled pairs ready for training");
    label_export->add_option("--store", store_path, "Store file (JSONL)")->required();
    label_export->add_option("--out", out_path, "Label records (JSONL)");
    label_export->add_option("--pairs", pairs_path, "Corpus to apply the labels to");
    label_export->add_option("--pairs-out", pairs_out, "Labeled, legible pairs (JSONL)");
    label_export->callback([&] {
        action = [&] {
            LabelStore store;
            import_labels(store, store_path);
            if (!out_path.empty()) export_labels(store, out_path);
            std::size_t exported = 0;
            if (!pairs_out.empty()) {
                if (pairs_path.empty()) throw Error("--pairs-out needs --pairs");
                auto pairs = read_pairs(pairs_path);
                apply_labels(pairs, store);
                pairs = labeled_only(std::move(pairs));
                exported = pairs.size();
                write_pairs(pairs_out, pairs);
            }
            summary({{"command", "label export"}, {"records", store.size()}, {"pairs", exported}});
            return 0;
        };
    });

    // ---- training ----
    auto* train_cmd = app.add_subcommand("train", "Learn weights from labeled pairs");
    std::string family_name = "logistic", model_out, split_out;
    double l2 = 1e-3;
    train_cmd->add_option("--corpus", corpus_path, "Labeled pairs (JSONL)")->required();
    train_cmd->add_option("--labels", labels_path, "Label records applied to the corpus");
    train_cmd->add_option("--family", family_name, "logistic or linear_svm");
    train_cmd->add_option("--l2", l2, "L2 regularization strength");
    train_cmd->add_option("--out", out_path, "Weights output (.csv or .json)")->required();
    train_cmd->add_option("--model-out", model_out, "Coefficients JSON with training metadata");
    train_cmd->add_option("--split-out", split_out, "Split plan JSON");
    train_cmd->callback([&] {
        action = [&] {
            const auto pairs = labeled_only(load_corpus(corpus_path, labels_path));
            const SplitPlan plan = make_splits(pairs, 0.15, 5, g.config.seed);
            const std::set<std::string> holdout(plan.holdout.begin(), plan.holdout.end());
            std::vector<DesignPair> fit, held;
            for (const auto& p : pairs) (holdout.count(p.id) ? held : fit).push_back(p);
            TrainConfig tc;
            tc.seed = g.config.seed;
            tc.l2 = l2;
            const auto m = train(parse_model_family(family_name), to_examples(fit), builtin_catalog().names(), tc);
            const WeightTable w = coefficients_to_weights(m);
            save_weights(out_path, w, g.config.seed);
            if (!model_out.empty()) write_file_atomic(model_out, to_json(m).dump(2) + "\n");
            if (!split_out.empty()) write_file_atomic(split_out, to_json(plan).dump(2) + "\n");
            const double hold_acc = held.empty() ? 0.0 : overall_accuracy(accuracy(held, w));
            summary({{"command", "train"},
                     {"family", to_string(m.family)},
                     {"train_pairs", fit.size()},
                     {"holdout_pairs", held.size()},
                     {"holdout_accuracy", hold_acc},
                     {"epochs", m.epochs},
                     {"converged", m.converged},
                     {"seed", g.config.seed}});
            return 0;
        };
    });

    auto* cv_cmd = app.add_subcommand("cv", "Cross-validated compliance accuracy");
    cv_cmd->add_option("--corpus", corpus_path, "Labeled pairs (JSONL)")->required();
    cv_cmd->add_option("--labels", labels_path, "Label records applied to the corpus");
    cv_cmd->add_option("--family", family_name, "logistic or linear_svm");
    cv_cmd->add_option("--l2", l2, "L2 regularization strength");
    cv_cmd->callback([&] {
        action = [&] {
            const auto pairs = labeled_only(load_corpus(corpus_path, labels_path));
            const SplitPlan plan = make_splits(pairs, 0.15, 5, g.config.seed);
            TrainConfig tc;
            tc.seed = g.config.seed;
            tc.l2 = l2;
            const CvResult r = cross_validate(pairs, plan, parse_model_family(family_name), tc);
            summary({{"command", "cv"}, {"folds", r.fold_accuracy}, {"mean", r.mean}, {"seed", g.config.seed}});
            return 0;
        };
    });

    // ---- evaluation ----
    std::string csv_out;
    auto* eval_cmd = app.add_subcommand("eval", "Compliance accuracy of labeled pairs under weights");
    eval_cmd->add_option("--corpus", corpus_path, "Labeled pairs (JSONL)")->required();
    eval_cmd->add_option("--labels", labels_path, "Label records applied to the corpus");
    eval_cmd->add_option("--weights", weights_arg, "Weights to score");
    eval_cmd->add_option("--csv", csv_out, "Accuracy table CSV");
    eval_cmd->add_option("--out", out_path, "Accuracy table JSON");
    eval_cmd->callback([&] {
        action = [&] {
            const auto pairs = labeled_only(load_corpus(corpus_path, labels_path));
            const WeightTable w = load_weights(weights_arg.empty() ? g.config.weights : weights_arg, builtin_catalog());
            const auto rows = accuracy(pairs, w);
            if (!csv_out.empty()) write_file_atomic(csv_out, accuracy_to_csv(rows));
            if (!out_path.empty()) write_file_atomic(out_path, to_json(rows).dump(2) + "\n");
            summary({{"command", "eval"}, {"pairs", pairs.size()}, {"accuracy", overall_accuracy(rows)}});
            return 0;
        };
    });

    auto* report_cmd = app.add_subcommand("report", "Weight-shift and cosine-similarity reports");
    report_cmd->require_subcommand(1);
    std::string before_path, after_path, group_by = "source";
    auto* shift_cmd = report_cmd->add_subcommand("shift", "Weight changes scaled by feature frequency");
    shift_cmd->add_option("--before", before_path, "Original weights")->required();
    shift_cmd->add_option("--after", after_path, "Updated weights")->required();
    shift_cmd->add_option("--corpus", corpus_path, "Training charts for relative frequencies")->required();
    shift_cmd->add_option("--csv", csv_out, "Report CSV");
    shift_cmd->callback([&] {
        action = [&] {
            const WeightTable a = load_weights(before_path, builtin_catalog());
            const WeightTable b = load_weights(after_path, builtin_catalog());
            const auto cov = coverage_report(read_pairs(corpus_path), builtin_catalog());
            const auto rows = weight_shift_report(a, b, relative_frequencies(cov));
            if (!csv_out.empty()) write_file_atomic(csv_out, shift_to_csv(rows));
            json top = json::array();
            for (std::size_t i = 0; i < rows.size() && i < 10; ++i) top.push_back({{rows[i].feature, rows[i].shift}});
            summary({{"command", "report shift"}, {"features", rows.size()}, {"top", std::move(top)}});
            return 0;
        };
    });
    auto* cosine_cmd = report_cmd->add_subcommand("cosine", "Mean feature cosine similarity between pair groups");
    cosine_cmd->add_option("--corpus", corpus_path, "Pairs (JSONL)")->required();
    cosine_cmd->add_option("--by", group_by, "Grouping: source or group")->check(CLI::IsMember({"source", "group"}));
    cosine_cmd->add_option("--csv", csv_out, "Matrix CSV");
    cosine_cmd->callback([&] {
        action = [&] {
            std::map<std::string, std::vector<FeatureVector>> groups;
            for (const auto& p : read_pairs(corpus_path)) {
                const std::string key = group_by == "source" ? std::string(to_string(p.source)) : p.group;
                for (const ChartSpec* s : {&p.left, &p.right}) groups[key].push_back(extract_features(*s, builtin_catalog()));
            }
            const auto m = group_cosine_similarity(groups);
            if (!csv_out.empty()) write_file_atomic(csv_out, cosine_to_csv(m));
            summary({{"command", "report cosine"}, {"matrix", to_json(m)}});
            return 0;
        };
    });

    // ---- service ----
    auto* serve_cmd = app.add_subcommand("serve", "Run the labeling HTTP service");
    std::string host = "127.0.0.1", strategy = "active_ml";
    int port = 8765;
    std::size_t batch = 0, iterations = 0;
    serve_cmd->add_option("--corpus", corpus_path, "Pairs to label (JSONL)")->required();
    serve_cmd->add_option("--labels", labels_path, "Label log (JSONL, appended to)")->required();
    serve_cmd->add_option("--weights", weights_arg, "Weights for the accuracy report");
    serve_cmd->add_option("--host", host, "Bind address");
    serve_cmd->add_option("--port", port, "Port");
    serve_cmd->add_option("--strategy", strategy, "manual or active_ml");
    serve_cmd->add_option("--batch", batch, "Queries per active-learning iteration (default 20)");
    serve_cmd->add_option("--iterations", iterations, "Active-learning iterations (default 20)");
    serve_cmd->callback([&] {
        action = [&] {
            ServiceConfig sc;
            sc.strategy = parse_session_strategy(strategy);
            sc.batch_size = batch ? batch : g.config.batch;
            sc.max_iterations = iterations ? iterations : g.config.iterations;
            sc.density_cap = g.config.density_cap;
            sc.timestamps = !g.no_timestamps;
            ClassifierConfig cc;
            cc.seed = g.config.seed;
            LabelingService service(read_pairs(corpus_path), labels_path,
                                    load_weights(weights_arg.empty() ? g.config.weights : weights_arg,
                                                 builtin_catalog()),
                                    sc, classifier_trainer(cc));
            httplib::Server server;
            register_routes(server, service);
            static httplib::Server* running = &server;
            std::signal(SIGINT, [](int) { running->stop(); });
            std::signal(SIGTERM, [](int) { running->stop(); });
            if (!server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
            summary({{"command", "serve"}, {"host", host}, {"port", port}, {"status", "listening"}});
            server.listen_after_bind();
            return 0;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        if (!g.config_path.empty()) g.config = load_config(g.config_path);
        if (g.seed_set) g.config.seed = g.seed;
        if (g.no_timestamps) g.config.llm.timestamps = false;
        return action ? action() : 0;
    } catch (const std::exception& e) {
        return fail(e);
    }
}
