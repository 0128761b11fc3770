#pragma once

// Compact chart notation for tests.
//
//   "point x:Q1:linear y:Q2:log"
//   "bar x:Q1/bin25:linear y:#:linear"          '#' is the count sentinel
//   "line x:T:linear y:Q1/mean:log color:N:categorical facet:row:N"
//   "point x:Q1:linear ; line x:Q1:linear y:Q2:linear"   ';' separates layers
//   "point x:N:categorical scale:x:linear"      extra scale declaration
//   "point x:Q1:linear polar"
//
// Transforms: mean, sum, count, bin<n>. Stack: "/stack=zero" suffix on the field part.

#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vizkb/chart.hpp"

namespace vizkb::test {

inline FieldDef num(std::string name, std::int64_t card, double lo, double hi, bool interesting = false) {
    return FieldDef{std::move(name), DataType::number, card, 5.0, Extent{lo, hi}, interesting};
}
inline FieldDef str(std::string name, std::int64_t card) {
    return FieldDef{std::move(name), DataType::string, card, 2.0, std::nullopt, false};
}

// Q1, Q2 positive numbers; QZ spans zero; QI positive and interesting; N low- and
// NH high-cardinality strings; T datetime; B boolean. 200 rows.
inline Dataset test_dataset() {
    Dataset d;
    d.name = "cars";
    d.rows = 200;
    d.fields = {num("Q1", 100, 1, 100),
                num("Q2", 80, 0.5, 50),
                num("QZ", 60, -5, 5),
                num("QI", 40, 2, 9, true),
                str("N", 5),
                str("NH", 30),
                FieldDef{"T", DataType::datetime, 50, 5.5, Extent{0, 1e9}, false},
                FieldDef{"B", DataType::boolean, 2, 1.0, std::nullopt, false}};
    return d;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(' ');
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(' ');
    return s.substr(b, e - b + 1);
}

inline ChartSpec chart(std::string_view dsl, Dataset ds = test_dataset()) {
    ChartSpec spec;
    spec.dataset = std::move(ds);
    for (const auto& layer_text : split(dsl, ';')) {
        std::istringstream in(trim(layer_text));
        std::string word;
        in >> word;
        MarkDef mark;
        mark.mtype = parse_mark_type(word);
        while (in >> word) {
            if (word == "polar") {
                spec.coordinates = Coordinates::polar;
                continue;
            }
            const auto parts = split(word, ':');
            if (parts[0] == "facet") {
                FacetDef f;
                f.direction = parse_facet_direction(parts.at(1));
                f.field = parts.at(2);
                if (parts.size() > 3) f.bin = std::stoi(parts[3]);
                spec.facet = f;
                continue;
            }
            if (parts[0] == "scale") {
                spec.scales.push_back(ScaleDef{parse_channel(parts.at(1)), parse_scale_type(parts.at(2))});
                continue;
            }
            if (parts.size() != 3) throw std::invalid_argument("bad encoding token: " + word);
            EncodingDef e;
            e.channel = parse_channel(parts[0]);
            auto field_parts = split(parts[1], '/');
            e.field = field_parts[0] == "#" ? std::string(kCountField) : field_parts[0];
            if (e.is_count()) e.aggregate = Aggregate::count;
            for (std::size_t i = 1; i < field_parts.size(); ++i) {
                const std::string& t = field_parts[i];
                if (t.rfind("bin", 0) == 0) e.bin = std::stoi(t.substr(3));
                else if (t.rfind("stack=", 0) == 0) e.stack = parse_stack(t.substr(6));
                else e.aggregate = parse_aggregate(t);
            }
            mark.encodings.push_back(e);
            const ScaleType st = parse_scale_type(parts[2]);
            bool have = false;
            for (const auto& s : spec.scales) have = have || (s.channel == e.channel && s.stype == st);
            if (!have) spec.scales.push_back(ScaleDef{e.channel, st});
        }
        spec.marks.push_back(std::move(mark));
    }
    return spec;
}

}  // namespace vizkb::test
