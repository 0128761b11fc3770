#include "vizkb/labeling.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>

#include "vizkb/error.hpp"
#include "vizkb/io.hpp"
#include "vizkb/primitives.hpp"

namespace vizkb {

using nlohmann::json;

// ---- records ----

json to_json(const LabelRecord& r) {
    json j{{"pair_id", r.pair_id},
           {"label", r.illegible ? json("illegible") : json(r.label)},
           {"provenance", to_string(r.provenance)},
           {"confidence", r.confidence},
           {"timestamp", r.timestamp}};
    if (r.flagged) j["flagged"] = true;
    return j;
}

LabelRecord label_from_json(const json& j) {
    LabelRecord r;
    try {
        r.pair_id = j.at("pair_id").get<std::string>();
        const json& l = j.at("label");
        if (l.is_string()) {
            if (l.get<std::string>() != "illegible") throw ParseError("unknown label '" + l.get<std::string>() + "'");
            r.illegible = true;
        } else {
            r.label = l.get<int>();
            if (r.label < -1 || r.label > 1) throw ParseError("label outside {-1, 0, 1}");
        }
        r.provenance = parse_label_provenance(j.value("provenance", std::string("manual")));
        r.confidence = j.value("confidence", 1.0);
        r.timestamp = j.value("timestamp", std::string());
        r.flagged = j.value("flagged", false);
    } catch (const json::exception& e) {
        throw ParseError(std::string("label record: ") + e.what());
    }
    if (r.provenance == LabelProvenance::none) throw ParseError("label record without provenance");
    return r;
}

std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---- store ----

void LabelStore::put(const LabelRecord& r) { records_[r.pair_id][r.provenance] = r; }

bool LabelStore::has_manual(const std::string& pair_id) const {
    auto it = records_.find(pair_id);
    return it != records_.end() && it->second.count(LabelProvenance::manual);
}

std::optional<LabelRecord> LabelStore::active(const std::string& pair_id) const {
    auto it = records_.find(pair_id);
    if (it == records_.end()) return std::nullopt;
    for (LabelProvenance p : {LabelProvenance::manual, LabelProvenance::llm, LabelProvenance::active_ml,
                              LabelProvenance::ml, LabelProvenance::seed_weights}) {
        auto r = it->second.find(p);
        if (r != it->second.end()) return r->second;
    }
    return std::nullopt;
}

std::vector<LabelRecord> LabelStore::records() const {
    std::vector<LabelRecord> out;
    for (const auto& [_, by_prov] : records_) {
        for (const auto& [__, r] : by_prov) out.push_back(r);
    }
    return out;
}

std::size_t LabelStore::size() const {
    std::size_t n = 0;
    for (const auto& [_, by_prov] : records_) n += by_prov.size();
    return n;
}

std::vector<LabelRecord> read_labels(const std::string& path) {
    std::vector<LabelRecord> out;
    for (const auto& row : read_jsonl(path)) out.push_back(label_from_json(row));
    return out;
}

std::string labels_to_jsonl(const std::vector<LabelRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

void import_labels(LabelStore& store, const std::string& path) {
    for (const auto& r : read_labels(path)) store.put(r);
}

void export_labels(const LabelStore& store, const std::string& path) {
    write_file_atomic(path, labels_to_jsonl(store.records()));
}

PersistentLabelStore::PersistentLabelStore(std::string log_path) : log_path_(std::move(log_path)) { load(); }

void PersistentLabelStore::load() {
    namespace fs = std::filesystem;
    const std::string snap = log_path_ + ".snapshot";
    if (fs::exists(snap)) {
        const json j = read_json(snap);
        log_lines_ = j.value("log_lines", std::size_t{0});
        for (const auto& r : j.at("records")) store_.put(label_from_json(r));
    }
    if (!fs::exists(log_path_)) return;
    const auto rows = read_jsonl(log_path_);
    for (std::size_t i = log_lines_; i < rows.size(); ++i) store_.put(label_from_json(rows[i]));
    log_lines_ = rows.size();
}

void PersistentLabelStore::put(const LabelRecord& r) {
    append_line(log_path_, to_json(r).dump());
    ++log_lines_;
    store_.put(r);
}

void PersistentLabelStore::snapshot() const {
    json records = json::array();
    for (const auto& r : store_.records()) records.push_back(to_json(r));
    write_file_atomic(log_path_ + ".snapshot", json{{"log_lines", log_lines_}, {"records", std::move(records)}}.dump());
}

void apply_labels(std::vector<DesignPair>& pairs, const LabelStore& store) {
    for (auto& p : pairs) {
        const auto r = store.active(p.id);
        if (!r) continue;
        if (r->illegible) {
            p.illegible = true;
            if (p.illegible_reason.empty()) p.illegible_reason = "removed by labeler";
            continue;
        }
        p.label = r->label;
        p.provenance = r->provenance;
    }
}

// ---- difference vectors ----

std::vector<std::string> build_vocabulary(const std::vector<DesignPair>& pairs) {
    std::set<std::string> vocab;
    for (const auto& p : pairs) {
        for (const ChartSpec* s : {&p.left, &p.right}) {
            for (const auto& [tok, _] : abstract_primitives(*s)) vocab.insert(tok);
        }
    }
    return {vocab.begin(), vocab.end()};
}

std::vector<double> primitive_diff_vector(const DesignPair& pair, const std::vector<std::string>& vocabulary) {
    std::vector<double> v(vocabulary.size(), 0.0);
    auto add = [&](const ChartSpec& s, double sign) {
        for (const auto& [tok, n] : abstract_primitives(s)) {
            auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), tok);
            if (it != vocabulary.end() && *it == tok) v[static_cast<std::size_t>(it - vocabulary.begin())] += sign * n;
        }
    };
    add(pair.left, 1.0);
    add(pair.right, -1.0);
    return v;
}

// ---- classifier ----

namespace {

double sigmoid(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double target_of(int label) { return label > 0 ? 1.0 : (label < 0 ? 0.0 : 0.5); }

}  // namespace

MlpClassifier::MlpClassifier(std::vector<std::string> vocabulary, const ClassifierConfig& config)
    : vocabulary_(std::move(vocabulary)), config_(config) {
    const std::size_t d = vocabulary_.size(), h = config_.hidden;
    if (h == 0) throw Error("classifier needs at least one hidden unit");
    std::mt19937_64 rng(config_.seed);
    std::normal_distribution<double> in(0.0, 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(d, 1))));
    std::normal_distribution<double> bias(0.0, 0.1);
    std::normal_distribution<double> out(0.0, 1.0 / std::sqrt(static_cast<double>(h)));
    w1_.resize(h * d);
    for (auto& w : w1_) w = in(rng);
    b1_.resize(h);
    for (auto& b : b1_) b = bias(rng);
    w2_.resize(h);
    for (auto& w : w2_) w = out(rng);
}

double MlpClassifier::g(const std::vector<double>& x, std::vector<double>* hidden) const {
    const std::size_t d = vocabulary_.size(), h = config_.hidden;
    double out = 0.0;
    if (hidden) hidden->resize(h);
    for (std::size_t j = 0; j < h; ++j) {
        double a = b1_[j];
        const double* row = &w1_[j * d];
        for (std::size_t k = 0; k < d; ++k) a += row[k] * x[k];
        const double t = std::tanh(a);
        if (hidden) (*hidden)[j] = t;
        out += w2_[j] * t;
    }
    return out;
}

double MlpClassifier::score(const std::vector<double>& x) const {
    std::vector<double> neg(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
    return g(x, nullptr) - g(neg, nullptr);
}

double MlpClassifier::prob_right(const std::vector<double>& x) const {
    // the score is "left minus right", so a positive score favors the left chart
    return sigmoid(-score(x));
}

double MlpClassifier::prob_right(const DesignPair& pair) const {
    return prob_right(primitive_diff_vector(pair, vocabulary_));
}

void MlpClassifier::fit(const std::vector<std::vector<double>>& xs, const std::vector<int>& labels) {
    const std::size_t d = vocabulary_.size(), h = config_.hidden, n = xs.size();
    if (n == 0) throw Error("no training examples");
    std::vector<double> gw1(w1_.size()), gb1(h), gw2(h);
    std::vector<double> m1(w1_.size()), v1(w1_.size()), mb(h), vb(h), m2(h), v2(h);
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::vector<double> hp, hn, neg(d);
    for (std::size_t epoch = 1; epoch <= config_.epochs; ++epoch) {
        std::fill(gw1.begin(), gw1.end(), 0.0);
        std::fill(gb1.begin(), gb1.end(), 0.0);
        std::fill(gw2.begin(), gw2.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& x = xs[i];
            for (std::size_t k = 0; k < d; ++k) neg[k] = -x[k];
            const double f = g(x, &hp) - g(neg, &hn);
            // p = sigmoid(-f) is the probability of "right preferred"
            const double p = sigmoid(-f);
            const double dl_df = -(p - target_of(labels[i])) / static_cast<double>(n);
            for (std::size_t j = 0; j < h; ++j) {
                const double dp = 1.0 - hp[j] * hp[j];
                const double dn = 1.0 - hn[j] * hn[j];
                gw2[j] += dl_df * (hp[j] - hn[j]);
                gb1[j] += dl_df * w2_[j] * (dp - dn);
                const double s = dl_df * w2_[j] * (dp + dn);
                double* row = &gw1[j * d];
                for (std::size_t k = 0; k < d; ++k) {
                    if (x[k] != 0.0) row[k] += s * x[k];
                }
            }
        }
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(epoch));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(epoch));
        auto adam = [&](std::vector<double>& p, const std::vector<double>& gr, std::vector<double>& m,
                        std::vector<double>& v) {
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = beta1 * m[i] + (1 - beta1) * gr[i];
                v[i] = beta2 * v[i] + (1 - beta2) * gr[i] * gr[i];
                p[i] -= config_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
            }
        };
        adam(w1_, gw1, m1, v1);
        adam(b1_, gb1, mb, vb);
        adam(w2_, gw2, m2, v2);
    }
}

std::unique_ptr<MlpClassifier> train_classifier_labeler(const std::vector<DesignPair>& labeled,
                                                        const ClassifierConfig& config) {
    std::vector<const DesignPair*> use;
    std::set<int> classes;
    for (const auto& p : labeled) {
        if (!p.label || p.illegible) continue;
        use.push_back(&p);
        classes.insert(*p.label);
    }
    if (classes.size() < 2) throw Error("the classifier needs at least two distinct labels");
    std::vector<DesignPair> scope;
    for (const auto* p : use) scope.push_back(*p);
    auto vocab = build_vocabulary(scope);
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    for (const auto* p : use) {
        xs.push_back(primitive_diff_vector(*p, vocab));
        ys.push_back(*p->label);
    }
    auto model = std::make_unique<MlpClassifier>(vocab, config);
    model->fit(xs, ys);

    if (config.cv_folds > 1 && xs.size() >= config.cv_folds) {
        std::vector<std::size_t> order(xs.size());
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(config.seed);
        std::shuffle(order.begin(), order.end(), rng);
        ClassifierConfig inner = config;
        inner.cv_folds = 0;
        std::size_t correct = 0;
        for (std::size_t f = 0; f < config.cv_folds; ++f) {
            std::vector<std::vector<double>> tx;
            std::vector<int> ty;
            std::vector<std::size_t> test;
            for (std::size_t i = 0; i < order.size(); ++i) {
                if (i % config.cv_folds == f) test.push_back(order[i]);
                else {
                    tx.push_back(xs[order[i]]);
                    ty.push_back(ys[order[i]]);
                }
            }
            MlpClassifier fold(vocab, inner);
            fold.fit(tx, ty);
            for (std::size_t i : test) {
                const double p = fold.prob_right(xs[i]);
                const int pred = p > 0.5 ? 1 : (p < 0.5 ? -1 : 0);
                correct += pred == ys[i] ? 1 : 0;
            }
        }
        model->cv_accuracy = static_cast<double>(correct) / static_cast<double>(xs.size());
    }
    return model;
}

LabelRecord classify(const PreferenceModel& model, const DesignPair& pair, LabelProvenance provenance,
                     const std::string& timestamp) {
    const double p = model.prob_right(pair);
    LabelRecord r;
    r.pair_id = pair.id;
    r.label = p > 0.5 ? 1 : (p < 0.5 ? -1 : 0);
    r.provenance = provenance;
    r.confidence = std::max(p, 1.0 - p);
    r.timestamp = timestamp;
    return r;
}

std::vector<LabelRecord> classify_labels(const PreferenceModel& model, const std::vector<DesignPair>& unlabeled,
                                         LabelProvenance provenance, const std::string& timestamp) {
    std::vector<LabelRecord> out;
    out.reserve(unlabeled.size());
    for (const auto& p : unlabeled) out.push_back(classify(model, p, provenance, timestamp));
    return out;
}

// ---- active learning ----

std::string_view to_string(SessionStrategy s) { return s == SessionStrategy::manual ? "manual" : "active_ml"; }

SessionStrategy parse_session_strategy(std::string_view s) {
    if (s == "manual") return SessionStrategy::manual;
    if (s == "active_ml" || s == "active") return SessionStrategy::active_ml;
    throw ParseError("unknown session strategy '" + std::string(s) + "'");
}

ActiveStep active_learning_step(LabelSession& session, const PreferenceModel& model,
                                const std::vector<DesignPair>& unlabeled) {
    ActiveStep step;
    session.queue.clear();
    if (unlabeled.empty() || session.iteration >= session.max_iterations) {
        step.complete = true;
        return step;
    }
    std::vector<UncertainQuery> all;
    all.reserve(unlabeled.size());
    for (const auto& p : unlabeled) {
        const double pr = model.prob_right(p);
        all.push_back({p.id, std::max(pr, 1.0 - pr)});
    }
    std::sort(all.begin(), all.end(), [](const UncertainQuery& a, const UncertainQuery& b) {
        const double da = std::abs(a.confidence - 0.5), db = std::abs(b.confidence - 0.5);
        return da < db || (da == db && a.pair_id < b.pair_id);
    });
    if (all.size() > session.batch_size) all.resize(session.batch_size);
    for (const auto& q : all) session.queue.push_back(q.pair_id);
    step.batch = std::move(all);
    return step;
}

}  // namespace vizkb
