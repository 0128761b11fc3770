#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vizkb/labeling.hpp"
#include "vizkb/pair.hpp"

namespace vizkb {

inline constexpr const char* kPromptVersion = "value-task-v1";

struct LlmConfig {
    std::string endpoint;  // e.g. http://localhost:8080/v1/chat/completions
    std::string model;
    std::string api_key;   // falls back to VIZKB_LLM_API_KEY
    int max_retries = 2;   // extra attempts after a transport or response parse failure
    std::size_t parallel = 4;
    std::string audit_log;  // JSONL transcript file; empty disables
    bool timestamps = true;
};

// Sends one chat-completion request body and returns the raw response body.
// Throws TransportError on network failures.
class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual std::string post(const std::string& body) = 0;
};

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// POST over HTTP(S) with a bearer token.
class HttpChatTransport : public ChatTransport {
public:
    HttpChatTransport(std::string endpoint, std::string api_key, int timeout_seconds = 60);
    std::string post(const std::string& body) override;

private:
    std::string base_, path_, api_key_;
    int timeout_;
};

// Chart description without entity identifiers: marks, encodings (channel, field,
// field type, scale, transforms), facet, coordinates and field statistics.
nlohmann::json chart_prompt_json(const ChartSpec& spec);

// Chat request asking which of chart A and chart B better supports reading values.
nlohmann::json llm_request(const ChartSpec& a, const ChartSpec& b, const LlmConfig& config);

// Answer letter from a chat-completion response: "A", "B" or "equal". Throws
// ParseError when the response or the answer cannot be read.
std::string parse_llm_answer(const std::string& response_body);

// Thread-safe JSONL transcript writer.
class AuditLog {
public:
    explicit AuditLog(std::string path) : path_(std::move(path)) {}
    void write(const nlohmann::json& entry);

private:
    std::string path_;
    std::mutex mu_;
};

struct LlmOutcome {
    std::string pair_id;
    std::optional<LabelRecord> record;
    std::string error;  // set when no record could be produced
};

// Asks with the pair in both orientations. Agreeing answers give the label;
// disagreeing answers give 0 with the record flagged.
LlmOutcome llm_label(const DesignPair& pair, ChatTransport& transport, const LlmConfig& config,
                     AuditLog* audit = nullptr);

// Labels many pairs with up to config.parallel requests in flight. Results are in
// input order. Throws Error when no API key is configured.
std::vector<LlmOutcome> llm_label_all(const std::vector<DesignPair>& pairs, ChatTransport& transport,
                                      const LlmConfig& config);

// API key from the config, else from VIZKB_LLM_API_KEY; empty when neither is set.
std::string resolve_api_key(const LlmConfig& config);

}  // namespace vizkb
