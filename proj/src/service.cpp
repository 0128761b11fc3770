#include "vizkb/service.hpp"

#include <algorithm>
#include <filesystem>

#include <httplib.h>

#include "vizkb/augment.hpp"
#include "vizkb/chart_json.hpp"
#include "vizkb/error.hpp"
#include "vizkb/evaluate.hpp"
#include "vizkb/io.hpp"
#include "vizkb/vega_lite.hpp"

namespace vizkb {

using nlohmann::json;

ModelTrainer classifier_trainer(const ClassifierConfig& config) {
    return [config](const std::vector<DesignPair>& labeled) -> std::unique_ptr<PreferenceModel> {
        try {
            ClassifierConfig c = config;
            c.cv_folds = 0;
            return train_classifier_labeler(labeled, c);
        } catch (const Error&) {
            return nullptr;
        }
    };
}

LabelingService::LabelingService(std::vector<DesignPair> corpus, std::string label_log, WeightTable weights,
                                 ServiceConfig config, ModelTrainer trainer, const FeatureCatalog& catalog)
    : corpus_(std::move(corpus)),
      log_(std::move(label_log)),
      weights_(std::move(weights)),
      config_(std::move(config)),
      trainer_(std::move(trainer)),
      catalog_(catalog) {
    for (std::size_t i = 0; i < corpus_.size(); ++i) {
        if (!index_.emplace(corpus_[i].id, i).second) throw Error("duplicate pair id '" + corpus_[i].id + "'");
    }
    session_.session_id = config_.session_id;
    session_.strategy = config_.strategy;
    session_.batch_size = config_.batch_size;
    session_.max_iterations = config_.max_iterations;
    start();
    if (!log_.empty() && std::filesystem::exists(log_)) {
        for (const auto& r : read_labels(log_)) apply(r, false, true);
    }
}

LabelingService::~LabelingService() {
    if (worker_.joinable()) worker_.join();
}

void LabelingService::start() {
    total_ = unlabeled_pairs().size();
    std::unique_ptr<PreferenceModel> model;
    if (config_.strategy == SessionStrategy::active_ml && trainer_) model = trainer_(labeled_pairs());
    install_batch(model.get());
}

std::vector<DesignPair> LabelingService::labeled_pairs() const {
    std::vector<DesignPair> out = corpus_;
    apply_labels(out, store_);
    std::erase_if(out, [](const DesignPair& p) { return !p.label || p.illegible; });
    return out;
}

std::vector<DesignPair> LabelingService::unlabeled_pairs() const {
    std::vector<DesignPair> out;
    for (const auto& p : corpus_) {
        if (p.label || p.illegible || store_.has_manual(p.id)) continue;
        out.push_back(p);
    }
    return out;
}

std::vector<DesignPair> LabelingService::training_export() const {
    std::lock_guard lock(mu_);
    return labeled_pairs();
}

// Chooses the next batch: the model's least confident pairs, or corpus order
// without a model. Expects the lock to be held (or no concurrency yet).
void LabelingService::install_batch(const PreferenceModel* model) {
    const auto unlabeled = unlabeled_pairs();
    answered_in_batch_ = 0;
    if (config_.strategy == SessionStrategy::manual) {
        session_.queue.clear();
        for (const auto& p : unlabeled) session_.queue.push_back(p.id);
        state_ = session_.queue.empty() ? State::complete : State::active;
        return;
    }
    if (unlabeled.empty() || session_.iteration >= session_.max_iterations) {
        session_.queue.clear();
        state_ = State::complete;
        return;
    }
    if (model) {
        active_learning_step(session_, *model, unlabeled);
    } else {
        session_.queue.clear();
        for (std::size_t i = 0; i < unlabeled.size() && i < session_.batch_size; ++i) {
            session_.queue.push_back(unlabeled[i].id);
        }
    }
    state_ = State::active;
}

bool LabelingService::apply(const LabelRecord& r, bool persist, bool sync) {
    std::unique_lock lock(mu_);
    if (r.provenance == LabelProvenance::manual && store_.has_manual(r.pair_id)) return false;
    if (persist && !log_.empty()) append_line(log_, to_json(r).dump());
    store_.put(r);
    if (r.provenance != LabelProvenance::manual) return true;
    ++labeled_;
    auto it = std::find(session_.queue.begin(), session_.queue.end(), r.pair_id);
    if (it == session_.queue.end()) return true;
    session_.queue.erase(it);
    ++answered_in_batch_;
    if (config_.strategy == SessionStrategy::manual) {
        if (session_.queue.empty()) state_ = State::complete;
        return true;
    }
    if (session_.queue.empty()) batch_done(sync, lock);
    return true;
}

void LabelingService::batch_done(bool sync, std::unique_lock<std::mutex>& lock) {
    ++retrains_;
    ++session_.iteration;
    state_ = State::retraining;
    if (!log_.empty()) {
        json records = json::array();
        for (const auto& rec : store_.records()) records.push_back(to_json(rec));
        write_file_atomic(log_ + ".snapshot", json{{"records", std::move(records)}}.dump());
    }
    const auto labeled = labeled_pairs();
    if (sync) {
        auto model = trainer_ ? trainer_(labeled) : nullptr;
        install_batch(model.get());
        return;
    }
    if (worker_.joinable()) {
        lock.unlock();
        worker_.join();
        lock.lock();
    }
    worker_ = std::thread([this, labeled] {
        auto model = trainer_ ? trainer_(labeled) : nullptr;
        std::lock_guard inner(mu_);
        install_batch(model.get());
        idle_.notify_all();
    });
}

void LabelingService::wait_idle() {
    std::unique_lock lock(mu_);
    idle_.wait(lock, [this] { return state_ != State::retraining; });
}

std::size_t LabelingService::retrain_events() const {
    std::lock_guard lock(mu_);
    return retrains_;
}

LabelStore LabelingService::store() const {
    std::lock_guard lock(mu_);
    return store_;
}

json LabelingService::session_json() const {
    static constexpr const char* states[] = {"active", "retraining", "complete"};
    return {{"session_id", session_.session_id},
            {"strategy", to_string(session_.strategy)},
            {"state", states[static_cast<int>(state_)]},
            {"iteration", session_.iteration},
            {"max_iterations", session_.max_iterations},
            {"batch_size", session_.batch_size},
            {"queue", session_.queue.size()},
            {"retrain_events", retrains_},
            {"progress", {{"labeled", labeled_}, {"total", total_}}}};
}

json LabelingService::pair_json(const DesignPair& p) const {
    const Legibility left = flag_illegible(p.left, config_.density_cap);
    const Legibility right = flag_illegible(p.right, config_.density_cap);
    std::string hint = p.illegible_reason.empty() ? p.illegible_hint : p.illegible_reason;
    if (hint.empty() && left.illegible) hint = "left: " + left.reason;
    if (hint.empty() && right.illegible) hint = "right: " + right.reason;
    json j{{"pair_id", p.id},
           {"left", to_json(p.left)},
           {"right", to_json(p.right)},
           {"render", {{"left", to_vega_lite(p.left)}, {"right", to_vega_lite(p.right)}}},
           {"source", to_string(p.source)},
           {"group", p.group},
           {"illegible", {{"flag", p.illegible || left.illegible || right.illegible}, {"reason", hint}}},
           {"lineage", to_json(p)["lineage"]}};
    if (const auto r = store_.active(p.id)) j["label"] = to_json(*r);
    return j;
}

Reply LabelingService::session() const {
    std::lock_guard lock(mu_);
    return {200, session_json()};
}

Reply LabelingService::next() const {
    std::lock_guard lock(mu_);
    if (state_ == State::retraining) return {503, {{"status", "retraining"}}};
    if (state_ == State::complete || session_.queue.empty()) {
        return {200, {{"status", "complete"}, {"session", session_json()}}};
    }
    json j = pair_json(corpus_[index_.at(session_.queue.front())]);
    j["status"] = "ok";
    j["session"] = session_json();
    return {200, j};
}

Reply LabelingService::label(const json& body) {
    LabelRecord r;
    try {
        r.pair_id = body.at("pair_id").get<std::string>();
        const json& l = body.at("label");
        if (l.is_string()) {
            if (l.get<std::string>() != "illegible") return {400, {{"error", "label must be -1, 0, 1 or \"illegible\""}}};
            r.illegible = true;
        } else if (l.is_number_integer()) {
            r.label = l.get<int>();
            if (r.label < -1 || r.label > 1) return {400, {{"error", "label must be -1, 0, 1 or \"illegible\""}}};
        } else {
            return {400, {{"error", "label must be -1, 0, 1 or \"illegible\""}}};
        }
    } catch (const json::exception& e) {
        return {400, {{"error", std::string("bad request: ") + e.what()}}};
    }
    if (!index_.count(r.pair_id)) return {404, {{"error", "unknown pair '" + r.pair_id + "'"}}};
    r.provenance = LabelProvenance::manual;
    r.confidence = 1.0;
    r.timestamp = config_.timestamps ? utc_timestamp() : "";
    if (!apply(r, true, config_.synchronous_retrain)) {
        return {409, {{"error", "pair '" + r.pair_id + "' is already labeled"}}};
    }
    return session();
}

Reply LabelingService::pair(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = index_.find(id);
    if (it == index_.end()) return {404, {{"error", "unknown pair '" + id + "'"}}};
    return {200, pair_json(corpus_[it->second])};
}

Reply LabelingService::accuracy_report() const {
    std::vector<DesignPair> labeled;
    {
        std::lock_guard lock(mu_);
        labeled = labeled_pairs();
    }
    const auto rows = accuracy(labeled, weights_, catalog_);
    return {200, {{"overall", overall_accuracy(rows)}, {"rows", to_json(rows)}, {"weights_version", weights_.version}}};
}

void register_routes(httplib::Server& server, LabelingService& service) {
    auto send = [](httplib::Response& res, const Reply& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    server.Get("/api/session", [&service, send](const httplib::Request&, httplib::Response& res) {
        send(res, service.session());
    });
    server.Get("/api/session/next", [&service, send](const httplib::Request&, httplib::Response& res) {
        send(res, service.next());
    });
    server.Post("/api/session/label", [&service, send](const httplib::Request& req, httplib::Response& res) {
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::parse_error& e) {
            send(res, {400, {{"error", std::string("invalid JSON: ") + e.what()}}});
            return;
        }
        send(res, service.label(body));
    });
    server.Get(R"(/api/pairs/(.+))", [&service, send](const httplib::Request& req, httplib::Response& res) {
        send(res, service.pair(req.matches[1]));
    });
    server.Get("/api/report/accuracy", [&service, send](const httplib::Request&, httplib::Response& res) {
        send(res, service.accuracy_report());
    });
}

}  // namespace vizkb
