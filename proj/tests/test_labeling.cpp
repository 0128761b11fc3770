#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>

#include "support.hpp"
#include "synth.hpp"
#include "vizkb/augment.hpp"
#include "vizkb/config.hpp"
#include "vizkb/error.hpp"
#include "vizkb/io.hpp"
#include "vizkb/labeling.hpp"
#include "vizkb/llm.hpp"
#include "vizkb/primitives.hpp"
#include "vizkb/vega_lite.hpp"

using namespace vizkb;
using nlohmann::json;
using test::chart;

namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
    static std::atomic<int> n{0};
    const fs::path dir = fs::temp_directory_path() / ("vizkb_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const fs::path p = dir / (std::to_string(n++) + "_" + name);
    fs::remove(p);
    fs::remove(p.string() + ".snapshot");
    return p.string();
}

LabelRecord rec(const std::string& id, int label, LabelProvenance p = LabelProvenance::manual, double conf = 1.0) {
    LabelRecord r;
    r.pair_id = id;
    r.label = label;
    r.provenance = p;
    r.confidence = conf;
    return r;
}

DesignPair make_pair(const std::string& id, const std::string& l, const std::string& r) {
    DesignPair p;
    p.id = id;
    p.left = chart(l);
    p.right = chart(r);
    return p;
}

class FixedModel : public PreferenceModel {
public:
    explicit FixedModel(std::map<std::string, double> p) : p_(std::move(p)) {}
    double prob_right(const DesignPair& pair) const override { return p_.at(pair.id); }

private:
    std::map<std::string, double> p_;
};

std::string answer(const std::string& letter) {
    json content{{"preferred", letter}};
    return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content.dump()}}}}})}}.dump();
}

class AlwaysA : public ChatTransport {
public:
    std::string post(const std::string&) override {
        ++calls;
        return answer("A");
    }
    std::atomic<int> calls{0};
};

// Answers by looking up the cost of both described charts.
class CostOracle : public ChatTransport {
public:
    std::map<std::string, std::int64_t> cost_of;
    std::string post(const std::string& body) override {
        const std::string user = json::parse(body)["messages"][1]["content"].get<std::string>();
        const auto a = user.find("Chart A:\n") + 9;
        const auto b = user.find("\nChart B:\n");
        const std::int64_t ca = cost_of.at(user.substr(a, b - a));
        const std::int64_t cb = cost_of.at(user.substr(b + 10));
        return answer(ca < cb ? "A" : (cb < ca ? "B" : "equal"));
    }
};

class Flaky : public ChatTransport {
public:
    int failures = 0;
    std::string post(const std::string&) override {
        if (failures-- > 0) throw TransportError("connection reset");
        return answer("B");
    }
};

class Garbage : public ChatTransport {
public:
    std::string reply;
    std::string post(const std::string&) override { return reply; }
};

}  // namespace

TEST_CASE("label records and store") {
    LabelRecord r = rec("p1", -1);
    r.timestamp = "2024-01-02T03:04:05Z";
    CHECK(label_from_json(to_json(r)) == r);
    LabelRecord ill = rec("p2", 0);
    ill.illegible = true;
    CHECK(to_json(ill)["label"] == "illegible");
    CHECK(label_from_json(to_json(ill)).illegible);
    CHECK_THROWS_AS(label_from_json(json{{"pair_id", "x"}, {"label", 2}}), ParseError);
    CHECK_THROWS_AS(label_from_json(json{{"pair_id", "x"}, {"label", "maybe"}}), ParseError);
    CHECK_THROWS_AS(label_from_json(json{{"label", 1}}), ParseError);
    CHECK(utc_timestamp().size() == 20);

    LabelStore s;
    s.put(rec("p1", 1, LabelProvenance::ml, 0.7));
    s.put(rec("p1", -1, LabelProvenance::llm));
    CHECK(s.active("p1")->provenance == LabelProvenance::llm);
    s.put(rec("p1", 0, LabelProvenance::manual));
    CHECK(s.has_manual("p1"));
    CHECK(s.active("p1")->label == 0);
    // a later automated label does not override the manual one
    s.put(rec("p1", 1, LabelProvenance::active_ml));
    CHECK(s.active("p1")->provenance == LabelProvenance::manual);
    s.put(rec("p1", 1, LabelProvenance::manual));
    CHECK(s.active("p1")->label == 1);
    CHECK(s.size() == 4);
    CHECK(!s.active("nope"));

    const std::string path = temp_path("labels.jsonl");
    export_labels(s, path);
    LabelStore t;
    import_labels(t, path);
    CHECK(t == s);
    import_labels(t, path);
    CHECK(t == s);
    CHECK(t.size() == 4);
}

TEST_CASE("persistent store replays the log") {
    const std::string log = temp_path("session.jsonl");
    {
        PersistentLabelStore p(log);
        p.put(rec("a", -1));
        p.put(rec("b", 1));
        p.snapshot();
        p.put(rec("a", 0));
        p.put(rec("c", 1, LabelProvenance::ml));
    }
    PersistentLabelStore q(log);
    CHECK(q.store().size() == 3);
    CHECK(q.store().active("a")->label == 0);
    CHECK(q.store().active("c")->provenance == LabelProvenance::ml);

    // without the snapshot the log alone gives the same state
    const std::string copy = temp_path("copy.jsonl");
    fs::copy_file(log, copy);
    PersistentLabelStore r(copy);
    CHECK(r.store() == q.store());
}

TEST_CASE("apply labels") {
    std::vector<DesignPair> pairs = {make_pair("a", "point x:Q1:linear", "bar x:N:categorical y:#:linear"),
                                     make_pair("b", "point x:Q1:linear", "line x:T:linear y:Q1:linear"),
                                     make_pair("c", "point x:Q2:linear", "point x:Q1:linear")};
    LabelStore s;
    s.put(rec("a", 1, LabelProvenance::llm));
    LabelRecord ill = rec("b", 0);
    ill.illegible = true;
    s.put(ill);
    apply_labels(pairs, s);
    CHECK(pairs[0].label == 1);
    CHECK(pairs[0].provenance == LabelProvenance::llm);
    CHECK(pairs[1].illegible);
    CHECK(!pairs[1].label);
    CHECK(!pairs[2].label);
}

TEST_CASE("primitive difference vectors") {
    const auto fig = make_pair("f", "line x:T:linear y:Q1:log color:N:categorical", "line x:T:linear y:Q1:linear facet:row:N");
    const auto vocab = build_vocabulary({fig});
    CHECK(std::is_sorted(vocab.begin(), vocab.end()));
    const auto v = primitive_diff_vector(fig, vocab);
    std::map<std::string, double> nonzero;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        if (v[i] != 0.0) nonzero[vocab[i]] = v[i];
    }
    CHECK(nonzero == std::map<std::string, double>{{"color", 1},
                                                   {"color.categorical", 1},
                                                   {"color.nominal", 1},
                                                   {"facet.row", -1},
                                                   {"y.linear", -1},
                                                   {"y.log", 1}});
    const auto sv = primitive_diff_vector(swapped(fig), vocab);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(sv[i] == -v[i]);

    // tokens outside the vocabulary are dropped
    const auto other = make_pair("o", "bar x:N:categorical y:#:linear", "point x:Q1:linear y:Q2:linear");
    const auto ov = primitive_diff_vector(other, {"mark.bar", "zzz"});
    CHECK(ov == std::vector<double>{1.0, 0.0});
}

TEST_CASE("classifier: antisymmetry, fit, edge cases") {
    const auto& pool = test::chart_pool(30);
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::vector<DesignPair> raw;
    for (int i = 0; i < 300; ++i) {
        DesignPair p;
        p.id = "c" + std::to_string(i);
        p.left = pool[pick(rng)];
        p.right = pool[pick(rng)];
        if (canonical_key(p.left) == canonical_key(p.right)) continue;
        raw.push_back(p);
    }
    // a hidden linear rule over the difference vector
    const auto vocab = build_vocabulary(raw);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> hidden(vocab.size());
    for (auto& h : hidden) h = g(rng);
    std::vector<DesignPair> labeled;
    for (auto p : raw) {
        const auto x = primitive_diff_vector(p, vocab);
        double s = 0;
        for (std::size_t i = 0; i < x.size(); ++i) s += hidden[i] * x[i];
        if (std::abs(s) < 0.5) continue;
        p.label = s > 0 ? 1 : -1;
        p.provenance = LabelProvenance::manual;
        labeled.push_back(p);
    }
    REQUIRE(labeled.size() > 150);
    ClassifierConfig cfg;
    cfg.seed = 3;
    const auto model = train_classifier_labeler(labeled, cfg);
    std::size_t right = 0;
    double worst = 0;
    for (const auto& p : labeled) {
        const double pr = model->prob_right(p);
        right += (pr > 0.5) == (*p.label > 0) ? 1 : 0;
        worst = std::max(worst, std::abs(model->prob_right(swapped(p)) - (1.0 - pr)));
    }
    CHECK(static_cast<double>(right) / labeled.size() >= 0.99);
    CHECK(worst <= 1e-6);
    REQUIRE(model->cv_accuracy);
    CHECK(*model->cv_accuracy > 0.7);

    const std::vector<double> zero(model->vocabulary().size(), 0.0);
    CHECK(model->prob_right(zero) == 0.5);
    auto same = labeled[0];
    same.right = same.left;
    const auto r = classify(*model, same);
    CHECK(r.label == 0);
    CHECK(r.confidence == 0.5);
    CHECK(r.provenance == LabelProvenance::ml);

    const auto recs = classify_labels(*model, {labeled[0], labeled[1]}, LabelProvenance::active_ml, "t");
    REQUIRE(recs.size() == 2);
    CHECK(recs[1].pair_id == labeled[1].id);
    CHECK(recs[1].provenance == LabelProvenance::active_ml);
    CHECK(recs[1].timestamp == "t");
    CHECK(recs[0].confidence >= 0.5);

    auto one_class = labeled;
    for (auto& p : one_class) p.label = 1;
    CHECK_THROWS_AS(train_classifier_labeler(one_class), Error);
    CHECK_THROWS_AS(train_classifier_labeler({}), Error);

    // equal labels train towards 0.5
    auto ties = labeled;
    for (std::size_t i = 0; i < ties.size(); ++i) ties[i].label = i < 3 ? (i % 2 ? 1 : -1) : 0;
    const auto tmodel = train_classifier_labeler(ties, cfg);
    double tie_dev = 0, strict_dev = 0;
    for (std::size_t i = 3; i < ties.size(); ++i) {
        tie_dev += std::abs(tmodel->prob_right(ties[i]) - 0.5);
        strict_dev += std::abs(model->prob_right(ties[i]) - 0.5);
    }
    CHECK(tie_dev < 0.25 * strict_dev);
}

TEST_CASE("active learning step") {
    const std::vector<DesignPair> pairs = {make_pair("a", "point x:Q1:linear", "point x:Q2:linear"),
                                           make_pair("b", "point x:Q1:linear", "point x:QI:linear"),
                                           make_pair("c", "point x:Q2:linear", "point x:QI:linear")};
    const FixedModel m({{"a", 0.5}, {"b", 0.6}, {"c", 0.1}});
    LabelSession s;
    s.batch_size = 2;
    const auto step = active_learning_step(s, m, pairs);
    CHECK(!step.complete);
    REQUIRE(step.batch.size() == 2);
    CHECK(step.batch[0].pair_id == "a");
    CHECK(step.batch[0].confidence == 0.5);
    CHECK(step.batch[1].pair_id == "b");
    CHECK(step.batch[1].confidence == doctest::Approx(0.6));
    CHECK(s.queue == std::vector<std::string>{"a", "b"});

    // equal uncertainty falls back to id order
    const FixedModel tie({{"a", 0.3}, {"b", 0.7}, {"c", 0.7}});
    s.batch_size = 1;
    CHECK(active_learning_step(s, tie, pairs).batch[0].pair_id == "a");

    CHECK(active_learning_step(s, m, {}).complete);
    s.iteration = s.max_iterations;
    CHECK(active_learning_step(s, m, pairs).complete);
    CHECK(s.queue.empty());
    CHECK(parse_session_strategy("manual") == SessionStrategy::manual);
    CHECK_THROWS_AS(parse_session_strategy("random"), ParseError);
}

TEST_CASE("llm prompt and answer parsing") {
    const auto a = chart("bar x:N:categorical y:Q1/mean:linear facet:row:B");
    const auto j = chart_prompt_json(a);
    CHECK(j["layers"][0]["mark"] == "bar");
    CHECK(j["layers"][0]["encoding"][1]["aggregate"] == "mean");
    CHECK(j["layers"][0]["encoding"][0]["type"] == "nominal");
    CHECK(j["facet"]["field"] == "B");
    CHECK(j["data"]["rows"] == 200);
    // no entity identifiers in the prompt
    CHECK(j.dump().find("cars") == std::string::npos);

    LlmConfig cfg;
    cfg.model = "m";
    const auto req = llm_request(a, chart("point x:Q1:linear"), cfg);
    CHECK(req["temperature"] == 0);
    CHECK(req["metadata"]["prompt_version"] == kPromptVersion);
    CHECK(req["messages"].size() == 2);

    CHECK(parse_llm_answer(answer("A")) == "A");
    CHECK(parse_llm_answer(answer("b")) == "B");
    CHECK(parse_llm_answer(answer("equal")) == "equal");
    CHECK_THROWS_AS(parse_llm_answer(answer("C")), ParseError);
    CHECK_THROWS_AS(parse_llm_answer("{}"), ParseError);
    CHECK_THROWS_AS(parse_llm_answer("not json"), ParseError);
    const json prose{{"choices", json::array({{{"message", {{"content", "I pick B: {\"preferred\": \"B\"}"}}}}})}};
    CHECK(parse_llm_answer(prose.dump()) == "B");
}

TEST_CASE("llm labeling with mock transports") {
    const auto seeds = read_seeds(std::string(VIZKB_TEST_DATA) + "/seeds.json");
    const auto w = default_weights(builtin_catalog());
    auto pairs = seed_augment(seeds, w).pairs;
    pairs.resize(60);

    LlmConfig cfg;
    cfg.api_key = "test-key";
    cfg.timestamps = false;
    cfg.audit_log = temp_path("audit.jsonl");

    AlwaysA biased;
    const auto flagged = llm_label_all(pairs, biased, cfg);
    CHECK(biased.calls == 120);
    for (const auto& o : flagged) {
        REQUIRE(o.record);
        CHECK(o.record->label == 0);
        CHECK(o.record->flagged);
        CHECK(o.record->provenance == LabelProvenance::llm);
    }
    const auto audit = read_jsonl(cfg.audit_log);
    CHECK(audit.size() == 120);
    CHECK(audit[0].contains("request"));
    CHECK(audit[0].contains("answer"));
    CHECK(!audit[0].contains("timestamp"));

    CostOracle oracle;
    for (const auto& p : pairs) {
        for (const ChartSpec* s : {&p.left, &p.right}) {
            oracle.cost_of[chart_prompt_json(*s).dump()] = cost(extract_features(*s, builtin_catalog()), w);
        }
    }
    cfg.audit_log.clear();
    const auto got = llm_label_all(pairs, oracle, cfg);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        REQUIRE(got[i].record);
        CHECK(got[i].pair_id == pairs[i].id);
        CHECK(got[i].record->label == *pairs[i].label);
        CHECK(!got[i].record->flagged);
    }

    Flaky flaky;
    flaky.failures = 2;
    const auto retried = llm_label(pairs[0], flaky, cfg);
    REQUIRE(retried.record);
    CHECK(retried.record->flagged);  // "B" both ways disagrees
    flaky.failures = 3;
    const auto gave_up = llm_label(pairs[0], flaky, cfg);
    CHECK(!gave_up.record);
    CHECK(gave_up.error.find("transport") != std::string::npos);

    Garbage g;
    g.reply = answer("maybe");
    const auto bad = llm_label(pairs[0], g, cfg);
    CHECK(!bad.record);
    CHECK(bad.error.find("parse") != std::string::npos);
    g.reply = "<html>";
    CHECK(!llm_label(pairs[0], g, cfg).record);

    LlmConfig nokey;
    ::unsetenv("VIZKB_LLM_API_KEY");
    CHECK(resolve_api_key(nokey).empty());
    CHECK_THROWS_AS(llm_label_all(pairs, biased, nokey), Error);
    ::setenv("VIZKB_LLM_API_KEY", "env-key", 1);
    CHECK(resolve_api_key(nokey) == "env-key");
    ::unsetenv("VIZKB_LLM_API_KEY");
}

TEST_CASE("vega-lite export") {
    const auto j = to_vega_lite(chart("bar x:Q1/bin10:linear y:#:log color:N:categorical facet:row:B"));
    CHECK(j["$schema"] == kVegaLiteSchema);
    CHECK(j["data"]["name"] == "cars");
    CHECK(j["facet"]["row"]["field"] == "B");
    const auto& enc = j["spec"]["encoding"];
    CHECK(j["spec"]["mark"] == "bar");
    CHECK(enc["x"]["bin"]["maxbins"] == 10);
    CHECK(enc["y"]["aggregate"] == "count");
    CHECK(enc["y"]["scale"]["type"] == "log");
    CHECK(enc["color"]["type"] == "nominal");

    const auto layered = to_vega_lite(chart("point x:Q1:linear y:Q2:linear ; line x:Q1:linear y:Q2:linear"));
    CHECK(layered["layer"].size() == 2);
    CHECK(!layered.contains("facet"));
    CHECK(to_vega_lite(chart("point x:Q1:linear polar"))["usermeta"]["coordinates"] == "polar");
}

TEST_CASE("project config") {
    const auto c = config_from_json(json{{"seed", 9}, {"augment", {{"threshold", 5}}}, {"session", {{"batch", 10}}}});
    CHECK(c.seed == 9);
    CHECK(c.threshold == 5);
    CHECK(c.batch == 10);
    CHECK(c.n_top == 8);
    CHECK(config_from_json(to_json(c)).batch == 10);
    CHECK_THROWS_AS(config_from_json(json{{"session", {{"batch", 0}}}}), Error);
    CHECK_THROWS_AS(config_from_json(json{{"augment", {{"threshold", "x"}}}}), ParseError);
}
