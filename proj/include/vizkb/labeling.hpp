#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vizkb/pair.hpp"

namespace vizkb {

// ---- label records and store ----

struct LabelRecord {
    std::string pair_id;
    int label = 0;  // -1 left preferred, +1 right preferred, 0 equal
    LabelProvenance provenance = LabelProvenance::manual;
    double confidence = 1.0;
    std::string timestamp;  // ISO 8601 UTC, empty when timestamps are off
    bool illegible = false;  // the pair was removed instead of labeled
    bool flagged = false;    // e.g. contradictory answers from the LLM
    bool operator==(const LabelRecord&) const = default;
};

nlohmann::json to_json(const LabelRecord& r);
LabelRecord label_from_json(const nlohmann::json& j);

std::string utc_timestamp();

// One active record per (pair, provenance). Manual records take precedence over
// automated ones; among automated ones the order is llm, active_ml, ml, seed_weights.
class LabelStore {
public:
    // Replaces the record with the same pair and provenance.
    void put(const LabelRecord& r);
    bool has_manual(const std::string& pair_id) const;
    std::optional<LabelRecord> active(const std::string& pair_id) const;
    std::vector<LabelRecord> records() const;  // sorted by pair id, then provenance
    std::size_t size() const;
    bool operator==(const LabelStore&) const = default;

private:
    std::map<std::string, std::map<LabelProvenance, LabelRecord>> records_;
};

std::vector<LabelRecord> read_labels(const std::string& path);
std::string labels_to_jsonl(const std::vector<LabelRecord>& records);
// Adds every record of the file; importing a file twice leaves the store as after once.
void import_labels(LabelStore& store, const std::string& path);
void export_labels(const LabelStore& store, const std::string& path);

// Append-only record log with a snapshot. Every put is appended before it is
// applied; load() rebuilds the store from the snapshot and the log tail.
class PersistentLabelStore {
public:
    explicit PersistentLabelStore(std::string log_path);
    const LabelStore& store() const { return store_; }
    void put(const LabelRecord& r);
    void snapshot() const;  // writes <log>.snapshot
    const std::string& log_path() const { return log_path_; }

private:
    void load();
    std::string log_path_;
    LabelStore store_;
    std::size_t log_lines_ = 0;
};

// Copies active labels onto the pairs; illegible records set the illegible flag.
void apply_labels(std::vector<DesignPair>& pairs, const LabelStore& store);

// ---- primitive difference vectors ----

// Sorted token vocabulary over both sides of every pair.
std::vector<std::string> build_vocabulary(const std::vector<DesignPair>& pairs);
// v[t] = count_left(t) - count_right(t); tokens outside the vocabulary are ignored.
std::vector<double> primitive_diff_vector(const DesignPair& pair, const std::vector<std::string>& vocabulary);

// ---- classifier ----

class PreferenceModel {
public:
    virtual ~PreferenceModel() = default;
    // Probability that the right chart is preferred.
    virtual double prob_right(const DesignPair& pair) const = 0;
};

struct ClassifierConfig {
    std::size_t hidden = 64;
    std::size_t epochs = 200;
    double learning_rate = 0.01;
    std::uint64_t seed = 0;
    std::size_t cv_folds = 5;  // 0 or 1 disables the cross-validation estimate
};

// f(x) = g(x) - g(-x) with g a one-hidden-layer tanh network, p = sigmoid(f).
// f(-x) = -f(x), so swapping the sides gives exactly 1 - p.
class MlpClassifier : public PreferenceModel {
public:
    MlpClassifier(std::vector<std::string> vocabulary, const ClassifierConfig& config);
    double prob_right(const DesignPair& pair) const override;
    double prob_right(const std::vector<double>& x) const;
    double score(const std::vector<double>& x) const;

    // Full-batch Adam on cross-entropy; label 0 targets 0.5.
    void fit(const std::vector<std::vector<double>>& xs, const std::vector<int>& labels);

    const std::vector<std::string>& vocabulary() const { return vocabulary_; }
    std::optional<double> cv_accuracy;

private:
    double g(const std::vector<double>& x, std::vector<double>* hidden) const;
    std::vector<std::string> vocabulary_;
    ClassifierConfig config_;
    std::vector<double> w1_;  // hidden x inputs, row major
    std::vector<double> b1_;
    std::vector<double> w2_;
};

// Throws Error when fewer than two distinct labels are present.
std::unique_ptr<MlpClassifier> train_classifier_labeler(const std::vector<DesignPair>& labeled,
                                                        const ClassifierConfig& config = {});

// label = +1 when p > 0.5, -1 when p < 0.5, 0 at exactly 0.5; confidence = max(p, 1 - p).
LabelRecord classify(const PreferenceModel& model, const DesignPair& pair,
                     LabelProvenance provenance = LabelProvenance::ml, const std::string& timestamp = "");
std::vector<LabelRecord> classify_labels(const PreferenceModel& model, const std::vector<DesignPair>& unlabeled,
                                         LabelProvenance provenance = LabelProvenance::ml,
                                         const std::string& timestamp = "");

// ---- active learning ----

enum class SessionStrategy { manual, active_ml };
std::string_view to_string(SessionStrategy s);
SessionStrategy parse_session_strategy(std::string_view s);

struct LabelSession {
    std::string session_id;
    SessionStrategy strategy = SessionStrategy::active_ml;
    std::size_t batch_size = 20;
    std::size_t max_iterations = 20;
    std::vector<std::string> queue;
    std::size_t iteration = 0;
};

struct UncertainQuery {
    std::string pair_id;
    double confidence = 0.5;
};

struct ActiveStep {
    bool complete = false;  // nothing left to ask, or the iteration budget is spent
    std::vector<UncertainQuery> batch;
};

// The batch_size pairs whose confidence is closest to 0.5 (ties by pair id).
// Sets session.queue to the batch.
ActiveStep active_learning_step(LabelSession& session, const PreferenceModel& model,
                                const std::vector<DesignPair>& unlabeled);

}  // namespace vizkb
