#include "vizkb/config.hpp"

#include "vizkb/error.hpp"
#include "vizkb/io.hpp"

namespace vizkb {

using nlohmann::json;

void check_config(const ProjectConfig& c) {
    auto positive = [](std::int64_t v, const char* name) {
        if (v < 1) throw Error(std::string("config value '") + name + "' must be >= 1");
    };
    positive(c.threshold, "threshold");
    positive(static_cast<std::int64_t>(c.max_new), "max_new");
    positive(static_cast<std::int64_t>(c.pairs_per_feature), "pairs_per_feature");
    positive(static_cast<std::int64_t>(c.n_top), "n_top");
    positive(static_cast<std::int64_t>(c.batch), "batch");
    positive(static_cast<std::int64_t>(c.iterations), "iterations");
    positive(c.density_cap, "density_cap");
    positive(static_cast<std::int64_t>(c.max_results), "max_results");
    positive(c.max_feature_count, "max_feature_count");
    positive(static_cast<std::int64_t>(c.llm.parallel), "llm.parallel");
    if (c.llm.max_retries < 0) throw Error("config value 'llm.max_retries' must be >= 0");
}

ProjectConfig config_from_json(const json& j) {
    ProjectConfig c;
    try {
        if (j.contains("paths")) {
            const json& p = j.at("paths");
            c.catalog = p.value("catalog", c.catalog);
            c.corpus = p.value("corpus", c.corpus);
            c.labels = p.value("labels", c.labels);
            c.weights = p.value("weights", c.weights);
        }
        c.seed = j.value("seed", c.seed);
        if (j.contains("augment")) {
            const json& a = j.at("augment");
            c.threshold = a.value("threshold", c.threshold);
            c.max_new = a.value("max_new", c.max_new);
            c.pairs_per_feature = a.value("pairs_per_feature", c.pairs_per_feature);
            c.n_top = a.value("n_top", c.n_top);
            c.density_cap = a.value("density_cap", c.density_cap);
            c.max_results = a.value("max_results", c.max_results);
            c.max_feature_count = a.value("max_feature_count", c.max_feature_count);
        }
        if (j.contains("session")) {
            const json& s = j.at("session");
            c.batch = s.value("batch", c.batch);
            c.iterations = s.value("iterations", c.iterations);
        }
        if (j.contains("llm")) {
            const json& l = j.at("llm");
            c.llm.endpoint = l.value("endpoint", c.llm.endpoint);
            c.llm.model = l.value("model", c.llm.model);
            c.llm.max_retries = l.value("max_retries", c.llm.max_retries);
            c.llm.parallel = l.value("parallel", c.llm.parallel);
            c.llm.audit_log = l.value("audit_log", c.llm.audit_log);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    check_config(c);
    return c;
}

ProjectConfig load_config(const std::string& path) { return config_from_json(read_json(path)); }

json to_json(const ProjectConfig& c) {
    return {{"paths", {{"catalog", c.catalog}, {"corpus", c.corpus}, {"labels", c.labels}, {"weights", c.weights}}},
            {"seed", c.seed},
            {"augment",
             {{"threshold", c.threshold},
              {"max_new", c.max_new},
              {"pairs_per_feature", c.pairs_per_feature},
              {"n_top", c.n_top},
              {"density_cap", c.density_cap},
              {"max_results", c.max_results},
              {"max_feature_count", c.max_feature_count}}},
            {"session", {{"batch", c.batch}, {"iterations", c.iterations}}},
            {"llm",
             {{"endpoint", c.llm.endpoint},
              {"model", c.llm.model},
              {"max_retries", c.llm.max_retries},
              {"parallel", c.llm.parallel},
              {"audit_log", c.llm.audit_log}}}};
}

}  // namespace vizkb
