#include "vizkb/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vizkb/error.hpp"

namespace vizkb {

using nlohmann::json;

std::string_view to_string(ComplianceRule r) {
    switch (r) {
        case ComplianceRule::strict_order: return "strict_order";
        case ComplianceRule::near_tie: return "near_tie";
        case ComplianceRule::duplicate_inconsistent: return "duplicate_inconsistent";
    }
    return "strict_order";
}

bool judge(std::int64_t cost_left, std::int64_t cost_right, int label) {
    if (label < 0) return cost_left < cost_right;
    if (label > 0) return cost_right < cost_left;
    return std::llabs(cost_left - cost_right) <= kNearTie;
}

ComplianceResult combine(const std::string& pair_id, const std::vector<Orientation>& orientations) {
    if (orientations.empty()) throw Error("no orientations to judge for pair '" + pair_id + "'");
    ComplianceResult r;
    r.pair_id = pair_id;
    r.cost_left = orientations.front().cost_left;
    r.cost_right = orientations.front().cost_right;
    r.rule = orientations.front().label == 0 ? ComplianceRule::near_tie : ComplianceRule::strict_order;
    const bool first = judge(r.cost_left, r.cost_right, orientations.front().label);
    for (const auto& o : orientations) {
        if (judge(o.cost_left, o.cost_right, o.label) != first) {
            r.rule = ComplianceRule::duplicate_inconsistent;
            r.compliant = false;
            return r;
        }
    }
    r.compliant = first;
    return r;
}

namespace {

void require_label(const DesignPair& p) {
    if (!p.label) throw Error("pair '" + p.id + "' is unlabeled");
}

}  // namespace

ComplianceResult compliance(const DesignPair& pair, const WeightTable& w, const FeatureCatalog& catalog) {
    require_label(pair);
    const std::int64_t cl = cost(extract_features(pair.left, catalog), w);
    const std::int64_t cr = cost(extract_features(pair.right, catalog), w);
    return combine(pair.id, {{cl, cr, *pair.label}, {cr, cl, -*pair.label}});
}

std::vector<ComplianceResult> compliance_all(const std::vector<DesignPair>& pairs, const WeightTable& w,
                                             const FeatureCatalog& catalog) {
    struct Judged {
        std::size_t index;
        Orientation o;
    };
    std::map<std::string, std::vector<Judged>> by_designs;
    std::vector<std::string> order;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const DesignPair& p = pairs[i];
        if (p.illegible) continue;
        require_label(p);
        const std::string kl = canonical_key(p.left);
        const std::string kr = canonical_key(p.right);
        const std::int64_t cl = cost(extract_features(p.left, catalog), w);
        const std::int64_t cr = cost(extract_features(p.right, catalog), w);
        // normalize to the lexicographically smaller design on the left
        const bool keep = kl <= kr;
        const std::string key = keep ? kl + "\n" + kr : kr + "\n" + kl;
        const Orientation o = keep ? Orientation{cl, cr, *p.label} : Orientation{cr, cl, -*p.label};
        auto& bucket = by_designs[key];
        if (bucket.empty()) order.push_back(key);
        bucket.push_back({i, o});
    }
    std::vector<std::pair<std::size_t, ComplianceResult>> results;
    for (const auto& key : order) {
        const auto& bucket = by_designs[key];
        std::vector<Orientation> all;
        for (const auto& j : bucket) {
            all.push_back(j.o);
            all.push_back({j.o.cost_right, j.o.cost_left, -j.o.label});
        }
        const ComplianceResult joint = combine("", all);
        for (const auto& j : bucket) {
            const DesignPair& p = pairs[j.index];
            ComplianceResult r = combine(p.id, {{j.o.cost_left, j.o.cost_right, j.o.label}});
            if (joint.rule == ComplianceRule::duplicate_inconsistent) {
                r.compliant = false;
                r.rule = ComplianceRule::duplicate_inconsistent;
            }
            const bool keep = canonical_key(p.left) <= canonical_key(p.right);
            if (!keep) std::swap(r.cost_left, r.cost_right);
            results.emplace_back(j.index, r);
        }
    }
    std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<ComplianceResult> out;
    out.reserve(results.size());
    for (auto& [_, r] : results) out.push_back(std::move(r));
    return out;
}

std::vector<AccuracyRow> accuracy(const std::vector<DesignPair>& pairs, const WeightTable& w,
                                  const FeatureCatalog& catalog) {
    const auto results = compliance_all(pairs, w, catalog);
    std::map<std::string, const DesignPair*> by_id;
    for (const auto& p : pairs) by_id[p.id] = &p;

    std::vector<AccuracyRow> rows;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    auto row = [&](const std::string& slice, const std::string& value) -> AccuracyRow& {
        auto [it, fresh] = index.try_emplace({slice, value}, rows.size());
        if (fresh) rows.push_back({slice, value, 0, 0, std::nullopt});
        return rows[it->second];
    };
    row("all", "all");
    for (PairSource s : {PairSource::corpus, PairSource::primitive_aug, PairSource::feature_aug_unary,
                         PairSource::feature_aug_binary, PairSource::seed_aug}) {
        row("source", std::string(to_string(s)));
    }
    for (LabelProvenance p : {LabelProvenance::manual, LabelProvenance::ml, LabelProvenance::active_ml,
                              LabelProvenance::llm, LabelProvenance::seed_weights, LabelProvenance::none}) {
        row("provenance", std::string(to_string(p)));
    }
    std::vector<std::string> groups;
    for (const auto& p : pairs) {
        if (!p.group.empty()) groups.push_back(p.group);
    }
    std::sort(groups.begin(), groups.end());
    groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
    for (const auto& g : groups) row("group", g);

    for (const auto& r : results) {
        const DesignPair& p = *by_id.at(r.pair_id);
        for (AccuracyRow* target : {&row("all", "all"), &row("source", std::string(to_string(p.source))),
                                    &row("provenance", std::string(to_string(p.provenance)))}) {
            target->n += 1;
            target->compliant += r.compliant ? 1 : 0;
        }
        if (!p.group.empty()) {
            AccuracyRow& g = row("group", p.group);
            g.n += 1;
            g.compliant += r.compliant ? 1 : 0;
        }
    }
    for (auto& r : rows) {
        if (r.n > 0) r.accuracy = static_cast<double>(r.compliant) / static_cast<double>(r.n);
    }
    return rows;
}

double overall_accuracy(const std::vector<AccuracyRow>& rows) {
    for (const auto& r : rows) {
        if (r.slice == "all") return r.accuracy.value_or(0.0);
    }
    return 0.0;
}

json to_json(const std::vector<AccuracyRow>& rows) {
    json arr = json::array();
    for (const auto& r : rows) {
        arr.push_back({{"slice", r.slice},
                       {"value", r.value},
                       {"n", r.n},
                       {"compliant", r.compliant},
                       {"accuracy", r.accuracy ? json(*r.accuracy) : json(nullptr)}});
    }
    return arr;
}

namespace {

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

}  // namespace

std::string accuracy_to_csv(const std::vector<AccuracyRow>& rows) {
    std::string out = "slice,value,n,compliant,accuracy\n";
    for (const auto& r : rows) {
        out += r.slice + "," + r.value + "," + std::to_string(r.n) + "," + std::to_string(r.compliant) + "," +
               (r.accuracy ? fmt(*r.accuracy) : "NA") + "\n";
    }
    return out;
}

std::vector<WeightShift> weight_shift_report(const WeightTable& before, const WeightTable& after,
                                             const std::map<std::string, double>& frequency) {
    std::vector<WeightShift> rows;
    for (const auto& [name, wa] : before.weights) {
        const auto wb = after.find(name);
        if (!wb) throw Error("feature '" + name + "' missing from the second weight table");
        auto f = frequency.find(name);
        const double freq = f == frequency.end() ? 0.0 : f->second;
        rows.push_back({name, wa, *wb, freq, static_cast<double>(*wb - wa) * freq});
    }
    for (const auto& [name, _] : after.weights) {
        if (!before.find(name)) throw Error("feature '" + name + "' missing from the first weight table");
    }
    std::stable_sort(rows.begin(), rows.end(), [](const WeightShift& a, const WeightShift& b) {
        const double x = std::abs(a.shift), y = std::abs(b.shift);
        return x > y || (x == y && a.feature < b.feature);
    });
    return rows;
}

std::string shift_to_csv(const std::vector<WeightShift>& rows) {
    std::string out = "feature,before,after,frequency,shift\n";
    for (const auto& r : rows) {
        out += r.feature + "," + std::to_string(r.before) + "," + std::to_string(r.after) + "," + fmt(r.frequency) +
               "," + fmt(r.shift) + "\n";
    }
    return out;
}

json to_json(const std::vector<WeightShift>& rows) {
    json arr = json::array();
    for (const auto& r : rows) {
        arr.push_back({{"feature", r.feature},
                       {"before", r.before},
                       {"after", r.after},
                       {"frequency", r.frequency},
                       {"shift", r.shift}});
    }
    return arr;
}

double cosine(const FeatureVector& a, const FeatureVector& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [k, v] : a.counts) {
        na += static_cast<double>(v) * static_cast<double>(v);
        dot += static_cast<double>(v) * static_cast<double>(b.get(k));
    }
    for (const auto& [_, v] : b.counts) nb += static_cast<double>(v) * static_cast<double>(v);
    if (na == 0.0 || nb == 0.0) throw Error("cosine of a zero vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

CosineMatrix group_cosine_similarity(const std::map<std::string, std::vector<FeatureVector>>& groups) {
    CosineMatrix m;
    std::vector<std::vector<const FeatureVector*>> kept;
    for (const auto& [name, vectors] : groups) {
        m.groups.push_back(name);
        m.zero_vectors[name] = 0;
        std::vector<const FeatureVector*> nz;
        for (const auto& v : vectors) {
            bool zero = true;
            for (const auto& [_, c] : v.counts) zero = zero && c == 0;
            if (zero) ++m.zero_vectors[name];
            else nz.push_back(&v);
        }
        kept.push_back(std::move(nz));
    }
    const std::size_t g = m.groups.size();
    m.cells.assign(g, std::vector<std::optional<double>>(g));
    for (std::size_t i = 0; i < g; ++i) {
        for (std::size_t j = i; j < g; ++j) {
            double sum = 0.0;
            std::size_t n = 0;
            if (i == j) {
                for (std::size_t a = 0; a < kept[i].size(); ++a) {
                    for (std::size_t b = a + 1; b < kept[i].size(); ++b, ++n) sum += cosine(*kept[i][a], *kept[i][b]);
                }
            } else {
                for (const auto* u : kept[i]) {
                    for (const auto* v : kept[j]) {
                        sum += cosine(*u, *v);
                        ++n;
                    }
                }
            }
            if (n > 0) m.cells[i][j] = m.cells[j][i] = sum / static_cast<double>(n);
        }
    }
    return m;
}

std::string cosine_to_csv(const CosineMatrix& m) {
    std::string out = "group";
    for (const auto& g : m.groups) out += "," + g;
    out += "\n";
    for (std::size_t i = 0; i < m.groups.size(); ++i) {
        out += m.groups[i];
        for (const auto& c : m.cells[i]) out += "," + (c ? fmt(*c) : std::string("NA"));
        out += "\n";
    }
    return out;
}

json to_json(const CosineMatrix& m) {
    json cells = json::array();
    for (const auto& row : m.cells) {
        json r = json::array();
        for (const auto& c : row) r.push_back(c ? json(*c) : json(nullptr));
        cells.push_back(std::move(r));
    }
    json zeros = json::object();
    for (const auto& [k, v] : m.zero_vectors) zeros[k] = v;
    return {{"groups", m.groups}, {"cells", std::move(cells)}, {"zero_vectors", std::move(zeros)}};
}

}  // namespace vizkb
