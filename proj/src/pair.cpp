#include "vizkb/pair.hpp"

#include "vizkb/chart_json.hpp"
#include "vizkb/error.hpp"
#include "vizkb/io.hpp"

namespace vizkb {

using nlohmann::json;

namespace {

constexpr std::string_view kSources[] = {"corpus", "primitive_aug", "feature_aug_unary", "feature_aug_binary",
                                         "seed_aug"};
constexpr std::string_view kProvenances[] = {"manual", "ml", "active_ml", "llm", "seed_weights", "none"};

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::string_view (&names)[N], const char* what) {
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == s) return static_cast<E>(i);
    }
    throw ParseError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(PairSource s) { return kSources[static_cast<int>(s)]; }
std::string_view to_string(LabelProvenance p) { return kProvenances[static_cast<int>(p)]; }
PairSource parse_pair_source(std::string_view s) { return parse_enum<PairSource>(s, kSources, "pair source"); }
LabelProvenance parse_label_provenance(std::string_view s) {
    return parse_enum<LabelProvenance>(s, kProvenances, "label provenance");
}

void check_pair(const DesignPair& p) {
    if (canonical_hash(p.left) == canonical_hash(p.right)) throw Error("pair '" + p.id + "' compares a design with itself");
    if (p.label) {
        if (*p.label < -1 || *p.label > 1) throw Error("pair '" + p.id + "' has a label outside {-1, 0, 1}");
        if (p.provenance == LabelProvenance::none) throw Error("pair '" + p.id + "' is labeled without provenance");
    }
}

DesignPair swapped(DesignPair p) {
    std::swap(p.left, p.right);
    if (p.label) p.label = -*p.label;
    if (p.lineage && !p.lineage->with_side.empty()) {
        p.lineage->with_side = p.lineage->with_side == "left" ? "right" : "left";
    }
    return p;
}

json to_json(const DesignPair& p) {
    json j{{"id", p.id},
           {"left", to_json(p.left)},
           {"right", to_json(p.right)},
           {"label", p.label ? json(*p.label) : json(nullptr)},
           {"source", to_string(p.source)},
           {"label_provenance", to_string(p.provenance)},
           {"illegible", p.illegible}};
    if (!p.illegible_reason.empty()) j["illegible_reason"] = p.illegible_reason;
    if (!p.illegible_hint.empty()) j["illegible_hint"] = p.illegible_hint;
    if (!p.group.empty()) j["group"] = p.group;
    if (p.lineage) {
        json l{{"origin", p.lineage->origin}, {"ablated", p.lineage->ablated}};
        if (!p.lineage->context.empty()) l["context"] = p.lineage->context;
        if (!p.lineage->with_side.empty()) l["with_side"] = p.lineage->with_side;
        if (p.lineage->seed) l["seed"] = *p.lineage->seed;
        j["lineage"] = std::move(l);
    } else {
        j["lineage"] = nullptr;
    }
    return j;
}

DesignPair pair_from_json(const json& j) {
    DesignPair p;
    try {
        p.id = j.at("id").get<std::string>();
        p.left = chart_from_json(j.at("left"));
        p.right = chart_from_json(j.at("right"));
        if (j.contains("label") && !j.at("label").is_null()) p.label = j.at("label").get<int>();
        p.source = parse_pair_source(j.value("source", std::string("corpus")));
        p.provenance = parse_label_provenance(j.value("label_provenance", std::string("none")));
        p.illegible = j.value("illegible", false);
        p.illegible_reason = j.value("illegible_reason", std::string());
        p.illegible_hint = j.value("illegible_hint", std::string());
        p.group = j.value("group", std::string());
        if (j.contains("lineage") && !j.at("lineage").is_null()) {
            const json& jl = j.at("lineage");
            Lineage l;
            l.origin = jl.value("origin", std::string());
            l.ablated = jl.value("ablated", std::vector<std::string>{});
            l.context = jl.value("context", std::string());
            l.with_side = jl.value("with_side", std::string());
            if (jl.contains("seed")) l.seed = jl.at("seed").get<std::uint64_t>();
            p.lineage = std::move(l);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("design pair: ") + e.what());
    }
    return p;
}

std::vector<DesignPair> read_pairs(const std::string& path) {
    std::vector<DesignPair> out;
    std::size_t line = 0;
    for (const auto& row : read_jsonl(path)) {
        ++line;
        try {
            out.push_back(pair_from_json(row));
        } catch (const Error& e) {
            throw ParseError(path + ": record " + std::to_string(line) + ": " + e.what());
        }
    }
    return out;
}

std::string pairs_to_jsonl(const std::vector<DesignPair>& pairs) {
    std::string out;
    for (const auto& p : pairs) {
        out += to_json(p).dump();
        out += '\n';
    }
    return out;
}

void write_pairs(const std::string& path, const std::vector<DesignPair>& pairs) {
    write_file_atomic(path, pairs_to_jsonl(pairs));
}

}  // namespace vizkb
