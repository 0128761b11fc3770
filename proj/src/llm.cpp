#include "vizkb/llm.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "vizkb/chart_json.hpp"
#include "vizkb/error.hpp"
#include "vizkb/io.hpp"

namespace vizkb {

using nlohmann::json;

namespace {

const char* kInstruction =
    "You compare two chart designs for the same data. The task is reading and comparing individual values. "
    "Each chart is described by its design primitives in JSON. Answer with a JSON object "
    "{\"preferred\": \"A\"} or {\"preferred\": \"B\"}, or {\"preferred\": \"equal\"} when neither is better.";

std::string field_type(const ChartSpec& spec, const EncodingDef& e) {
    if (e.is_count()) return "quantitative";
    const FieldDef* f = spec.dataset.find(e.field);
    switch (f->dtype) {
        case DataType::number: return "quantitative";
        case DataType::datetime: return "temporal";
        default: return "nominal";
    }
}

}  // namespace

json chart_prompt_json(const ChartSpec& spec) {
    json layers = json::array();
    for (const auto& m : spec.marks) {
        json encs = json::array();
        for (const auto& e : m.encodings) {
            json je{{"channel", to_string(e.channel)}, {"type", field_type(spec, e)}};
            je["field"] = e.is_count() ? json(nullptr) : json(e.field);
            if (const ScaleDef* s = spec.scale_for(e.channel)) je["scale"] = to_string(s->stype);
            if (e.aggregate != Aggregate::none) je["aggregate"] = to_string(e.aggregate);
            if (e.bin) je["bin"] = *e.bin;
            if (e.stack != Stack::none) je["stack"] = to_string(e.stack);
            encs.push_back(std::move(je));
        }
        layers.push_back({{"mark", to_string(m.mtype)}, {"encoding", std::move(encs)}});
    }
    json fields = json::array();
    for (const auto& f : spec.dataset.fields) {
        fields.push_back({{"field", f.name}, {"type", to_string(f.dtype)}, {"cardinality", f.cardinality}});
    }
    json j{{"coordinates", to_string(spec.coordinates)},
           {"layers", std::move(layers)},
           {"data", {{"rows", spec.dataset.rows}, {"fields", std::move(fields)}}}};
    if (spec.facet) {
        json f{{"direction", to_string(spec.facet->direction)}, {"field", spec.facet->field}};
        if (spec.facet->bin) f["bin"] = *spec.facet->bin;
        j["facet"] = std::move(f);
    }
    return j;
}

json llm_request(const ChartSpec& a, const ChartSpec& b, const LlmConfig& config) {
    const std::string user =
        "Chart A:\n" + chart_prompt_json(a).dump() + "\nChart B:\n" + chart_prompt_json(b).dump();
    return {{"model", config.model},
            {"temperature", 0},
            {"messages",
             json::array({{{"role", "system"}, {"content", kInstruction}}, {{"role", "user"}, {"content", user}}})},
            {"metadata", {{"prompt_version", kPromptVersion}}}};
}

std::string parse_llm_answer(const std::string& response_body) {
    std::string content;
    try {
        const json r = json::parse(response_body);
        content = r.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("chat response: ") + e.what());
    }
    const auto open = content.find('{');
    const auto close = content.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        throw ParseError("model answer has no JSON object: " + content);
    }
    std::string pref;
    try {
        pref = json::parse(content.substr(open, close - open + 1)).at("preferred").get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError("model answer: " + std::string(e.what()));
    }
    if (pref == "a") pref = "A";
    if (pref == "b") pref = "B";
    if (pref != "A" && pref != "B" && pref != "equal") throw ParseError("model answer '" + pref + "' is not A, B or equal");
    return pref;
}

void AuditLog::write(const json& entry) {
    if (path_.empty()) return;
    std::lock_guard lock(mu_);
    append_line(path_, entry.dump());
}

std::string resolve_api_key(const LlmConfig& config) {
    if (!config.api_key.empty()) return config.api_key;
    const char* env = std::getenv("VIZKB_LLM_API_KEY");
    return env ? env : "";
}

HttpChatTransport::HttpChatTransport(std::string endpoint, std::string api_key, int timeout_seconds)
    : api_key_(std::move(api_key)), timeout_(timeout_seconds) {
    const auto scheme = endpoint.find("://");
    if (scheme == std::string::npos) throw Error("endpoint '" + endpoint + "' has no scheme");
    const auto slash = endpoint.find('/', scheme + 3);
    base_ = endpoint.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : endpoint.substr(slash);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (endpoint.rfind("https", 0) == 0) throw Error("this build has no TLS support; use an http endpoint");
#endif
}

std::string HttpChatTransport::post(const std::string& body) {
    httplib::Client client(base_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) throw TransportError("request to " + base_ + path_ + " failed: " + httplib::to_string(res.error()));
    if (res->status >= 500 || res->status == 429) {
        throw TransportError("endpoint answered HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) throw ParseError("endpoint answered HTTP " + std::to_string(res->status) + ": " + res->body);
    return res->body;
}

namespace {

// Label in the pair's own orientation from an answer about (A, B).
int label_from_answer(const std::string& answer, bool a_is_left) {
    if (answer == "equal") return 0;
    const bool left_preferred = (answer == "A") == a_is_left;
    return left_preferred ? -1 : 1;
}

struct Asked {
    std::optional<std::string> answer;
    std::string error;
    bool malformed = false;
};

Asked ask(const DesignPair& pair, bool a_is_left, ChatTransport& transport, const LlmConfig& config, AuditLog* audit) {
    const ChartSpec& a = a_is_left ? pair.left : pair.right;
    const ChartSpec& b = a_is_left ? pair.right : pair.left;
    const std::string body = llm_request(a, b, config).dump();
    Asked out;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        json entry{{"pair_id", pair.id}, {"orientation", a_is_left ? "left_is_A" : "right_is_A"},
                   {"attempt", attempt + 1}, {"request", json::parse(body)}};
        if (config.timestamps) entry["timestamp"] = utc_timestamp();
        std::string response;
        try {
            response = transport.post(body);
        } catch (const std::exception& e) {
            out.error = std::string("transport: ") + e.what();
            entry["error"] = out.error;
            if (audit) audit->write(entry);
            continue;
        }
        entry["response"] = response;
        bool envelope_ok = true;
        try {
            (void)json::parse(response).at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception&) {
            envelope_ok = false;
        }
        if (!envelope_ok) {
            out.error = "unreadable chat response";
            entry["error"] = out.error;
            if (audit) audit->write(entry);
            continue;
        }
        try {
            out.answer = parse_llm_answer(response);
            out.error.clear();
            entry["answer"] = *out.answer;
        } catch (const ParseError& e) {
            out.error = std::string("parse: ") + e.what();
            out.malformed = true;
            entry["error"] = out.error;
        }
        if (audit) audit->write(entry);
        return out;
    }
    return out;
}

}  // namespace

LlmOutcome llm_label(const DesignPair& pair, ChatTransport& transport, const LlmConfig& config, AuditLog* audit) {
    LlmOutcome out;
    out.pair_id = pair.id;
    const Asked first = ask(pair, true, transport, config, audit);
    if (!first.answer) {
        out.error = first.error;
        return out;
    }
    const Asked second = ask(pair, false, transport, config, audit);
    if (!second.answer) {
        out.error = second.error;
        return out;
    }
    const int l1 = label_from_answer(*first.answer, true);
    const int l2 = label_from_answer(*second.answer, false);
    LabelRecord r;
    r.pair_id = pair.id;
    r.provenance = LabelProvenance::llm;
    r.timestamp = config.timestamps ? utc_timestamp() : "";
    if (l1 == l2) {
        r.label = l1;
        r.confidence = 1.0;
    } else {
        r.label = 0;
        r.confidence = 0.5;
        r.flagged = true;
    }
    out.record = r;
    return out;
}

std::vector<LlmOutcome> llm_label_all(const std::vector<DesignPair>& pairs, ChatTransport& transport,
                                      const LlmConfig& config) {
    LlmConfig cfg = config;
    cfg.api_key = resolve_api_key(config);
    if (cfg.api_key.empty()) throw Error("no API key: set VIZKB_LLM_API_KEY or the llm.api_key config value");
    AuditLog audit(cfg.audit_log);
    std::vector<LlmOutcome> out(pairs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < pairs.size(); i = next++) out[i] = llm_label(pairs[i], transport, cfg, &audit);
    };
    const std::size_t n = std::max<std::size_t>(1, std::min(cfg.parallel, pairs.size()));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    return out;
}

}  // namespace vizkb
