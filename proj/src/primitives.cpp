#include "vizkb/primitives.hpp"

namespace vizkb {

namespace {

std::string_view field_type_token(const ChartSpec& spec, const EncodingDef& enc) {
    if (enc.is_count()) return "quantitative";
    const FieldDef* f = spec.dataset.find(enc.field);
    switch (f ? f->dtype : DataType::number) {
        case DataType::number: return "quantitative";
        case DataType::datetime: return "temporal";
        case DataType::string:
        case DataType::boolean: return "nominal";
    }
    return "quantitative";
}

}  // namespace

TokenBag abstract_primitives(const ChartSpec& spec) {
    TokenBag bag;
    auto add = [&bag](std::string t) { ++bag[std::move(t)]; };

    for (const auto& mark : spec.marks) {
        add("mark." + std::string(to_string(mark.mtype)));
        for (const auto& enc : mark.encodings) {
            const std::string ch(to_string(enc.channel));
            add(ch);
            add(ch + "." + std::string(field_type_token(spec, enc)));
            if (const ScaleDef* s = spec.scale_for(enc.channel)) {
                add(ch + "." + std::string(to_string(s->stype)));
            }
            if (enc.aggregate != Aggregate::none) add(ch + "." + std::string(to_string(enc.aggregate)));
            if (enc.bin) {
                add(ch + ".bin");
                add(ch + ".bin." + std::to_string(*enc.bin));
            }
            if (enc.stack != Stack::none) add(ch + ".stack." + std::string(to_string(enc.stack)));
        }
    }
    if (spec.facet) {
        const std::string dir = "facet." + std::string(to_string(spec.facet->direction));
        add(dir);
        if (spec.facet->bin) add(dir + ".bin");
    }
    add("coordinates." + std::string(to_string(spec.coordinates)));
    return bag;
}

std::string token_group(const std::string& token) { return token.substr(0, token.find('.')); }

bool contains(const TokenBag& haystack, const TokenBag& needle) {
    for (const auto& [tok, n] : needle) {
        auto it = haystack.find(tok);
        if (it == haystack.end() || it->second < n) return false;
    }
    return true;
}

TokenBag bag_union(TokenBag a, const TokenBag& b) {
    for (const auto& [tok, n] : b) a[tok] += n;
    return a;
}

TokenBag bag_minus(TokenBag a, const TokenBag& b) {
    for (const auto& [tok, n] : b) {
        auto it = a.find(tok);
        if (it == a.end()) continue;
        it->second -= n;
        if (it->second <= 0) a.erase(it);
    }
    return a;
}

std::vector<std::string> flatten(const TokenBag& bag) {
    std::vector<std::string> out;
    for (const auto& [tok, n] : bag) out.insert(out.end(), static_cast<std::size_t>(n), tok);
    return out;
}

}  // namespace vizkb
