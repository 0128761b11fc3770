#include "vizkb/hard_constraints.hpp"

#include <set>

namespace vizkb {

namespace {

bool is_discrete_type(DataType t) { return t == DataType::string || t == DataType::boolean; }

bool is_discrete_scale(ScaleType s) { return s == ScaleType::ordinal || s == ScaleType::categorical; }

std::string channel_name(Channel c) { return std::string(to_string(c)); }

}  // namespace

std::string_view to_string(HardRule r) {
    static constexpr std::string_view names[] = {"H1", "H2", "H3", "H4", "H5", "H6", "H7"};
    return names[static_cast<int>(r)];
}

std::vector<HardViolation> validate(const ChartSpec& spec) {
    check_structure(spec);
    std::vector<HardViolation> out;
    auto add = [&out](HardRule r, std::string detail) { out.push_back({r, std::move(detail)}); };

    std::set<Channel> used;
    for (const auto& mark : spec.marks) {
        for (const auto& enc : mark.encodings) used.insert(enc.channel);
    }

    // H1
    for (Channel c : kAllChannels) {
        int n = 0;
        for (const auto& s : spec.scales) n += (s.channel == c);
        if (n > 1) add(HardRule::H1, channel_name(c) + " has " + std::to_string(n) + " scales");
        if (n == 0 && used.count(c)) add(HardRule::H1, channel_name(c) + " has no scale");
    }

    for (const auto& mark : spec.marks) {
        std::set<Channel> seen;
        bool positional = false;
        for (const auto& enc : mark.encodings) {
            const std::string ch = channel_name(enc.channel);
            // H6
            if (!seen.insert(enc.channel).second) add(HardRule::H6, ch + " repeated within a layer");
            positional = positional || enc.channel == Channel::x || enc.channel == Channel::y;

            const FieldDef* field = enc.is_count() ? nullptr : spec.dataset.find(enc.field);
            const bool is_number = field != nullptr && field->dtype == DataType::number;

            // H4
            if (enc.bin && !is_number) add(HardRule::H4, ch + ": bin on a non-number field");
            if ((enc.aggregate == Aggregate::mean || enc.aggregate == Aggregate::sum) && !is_number) {
                add(HardRule::H4, ch + ": " + std::string(to_string(enc.aggregate)) + " on a non-number field");
            }

            // H2, H3: checked against every scale declared on the channel
            for (const auto& scale : spec.scales) {
                if (scale.channel != enc.channel) continue;
                if (scale.stype == ScaleType::log) {
                    const bool positive = enc.is_count() ||
                                          (is_number && !enc.bin && field->extent && field->extent->min > 0);
                    if (!positive) add(HardRule::H2, ch + ": log scale needs positive numbers");
                }
                const bool discrete_data = enc.is_count() ? false
                                           : enc.bin      ? true
                                                          : is_discrete_type(field->dtype);
                if (is_discrete_scale(scale.stype)) {
                    if (!discrete_data) {
                        add(HardRule::H3, ch + ": " + std::string(to_string(scale.stype)) +
                                              " scale on continuous data");
                    }
                } else {
                    // log on discrete data is reported by H2 alone
                    if (scale.stype == ScaleType::linear && !enc.is_count() && !enc.bin &&
                        is_discrete_type(field->dtype)) {
                        add(HardRule::H3, ch + ": " + std::string(to_string(scale.stype)) +
                                              " scale on " + std::string(to_string(field->dtype)) + " data");
                    }
                    if (enc.channel == Channel::shape) add(HardRule::H3, "shape needs a discrete scale");
                }
            }
        }
        // H5
        if (!positional &&
            (mark.mtype == MarkType::bar || mark.mtype == MarkType::area || mark.mtype == MarkType::line)) {
            add(HardRule::H5, std::string(to_string(mark.mtype)) + " mark without x or y");
        }
    }

    // H7
    if (spec.facet) {
        const FieldDef* field = spec.dataset.find(spec.facet->field);
        const bool ok = is_discrete_type(field->dtype) || (field->dtype == DataType::number && spec.facet->bin);
        if (!ok) add(HardRule::H7, "facet on continuous field '" + field->name + "'");
    }
    return out;
}

}  // namespace vizkb
