#pragma once

#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "vizkb/features.hpp"
#include "vizkb/labeling.hpp"
#include "vizkb/pair.hpp"

namespace httplib {
class Server;
}

namespace vizkb {

struct ServiceConfig {
    std::string session_id = "session";
    SessionStrategy strategy = SessionStrategy::active_ml;
    std::size_t batch_size = 20;
    std::size_t max_iterations = 20;
    std::int64_t density_cap = 300;
    bool synchronous_retrain = false;  // retrain inside the POST that completes a batch
    bool timestamps = true;
};

// Builds a model from the labeled pairs; may return null when it cannot (e.g. one class).
using ModelTrainer = std::function<std::unique_ptr<PreferenceModel>(const std::vector<DesignPair>& labeled)>;

// MLP trainer that returns null instead of throwing on single-class input.
ModelTrainer classifier_trainer(const ClassifierConfig& config = {});

struct Reply {
    int status = 200;
    nlohmann::json body;
};

// Labeling session state behind the HTTP API. Every label is appended to the label
// log before it is applied; constructing the service over an existing log replays
// it and reaches the same state.
class LabelingService {
public:
    LabelingService(std::vector<DesignPair> corpus, std::string label_log, WeightTable weights,
                    ServiceConfig config, ModelTrainer trainer, const FeatureCatalog& catalog = builtin_catalog());
    ~LabelingService();
    LabelingService(const LabelingService&) = delete;
    LabelingService& operator=(const LabelingService&) = delete;

    Reply session() const;
    Reply next() const;  // 503 while retraining
    Reply label(const nlohmann::json& body);
    Reply pair(const std::string& id) const;
    Reply accuracy_report() const;

    void wait_idle();  // blocks until a background retrain has finished
    std::size_t retrain_events() const;
    LabelStore store() const;
    // Corpus with active labels applied and illegible pairs removed.
    std::vector<DesignPair> training_export() const;

private:
    enum class State { active, retraining, complete };

    void start();
    bool apply(const LabelRecord& r, bool persist, bool sync);  // false: already labeled by hand
    void batch_done(bool sync, std::unique_lock<std::mutex>& lock);
    void install_batch(const PreferenceModel* model);
    std::vector<DesignPair> labeled_pairs() const;
    std::vector<DesignPair> unlabeled_pairs() const;
    nlohmann::json pair_json(const DesignPair& p) const;
    nlohmann::json session_json() const;

    std::vector<DesignPair> corpus_;
    std::map<std::string, std::size_t> index_;
    std::string log_;
    WeightTable weights_;
    ServiceConfig config_;
    ModelTrainer trainer_;
    const FeatureCatalog& catalog_;

    mutable std::mutex mu_;
    std::condition_variable idle_;
    LabelStore store_;
    LabelSession session_;
    State state_ = State::active;
    std::size_t answered_in_batch_ = 0;
    std::size_t labeled_ = 0;
    std::size_t total_ = 0;
    std::size_t retrains_ = 0;
    std::thread worker_;
};

// Registers the /api routes on a server.
void register_routes(httplib::Server& server, LabelingService& service);

}  // namespace vizkb
