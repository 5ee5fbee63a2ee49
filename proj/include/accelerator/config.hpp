#pragma once

/// Single JSON config document shared by every CLI subcommand. Batch stages
/// communicate only through the JSONL files named under "paths".

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "accelerator/errors.hpp"
#include "accelerator/eval_harness.hpp"
#include "accelerator/intent_filter.hpp"
#include "accelerator/llm_alternator.hpp"
#include "accelerator/llm_client_http.hpp"
#include "accelerator/query_repr.hpp"

namespace accel {

struct PipelineConfig {
    struct Paths {
        std::string events;
        std::string chains;
        std::string profiles;
        std::string journeys;
        std::string suggestions;
        std::string store;
        std::string impressions;
        std::string eval_report;
        std::string eval_table;
        std::string mock_fixture;
    } paths;

    IntentFilterConfig intent{};
    SimilarityConfig similarity{};
    LlmClientConfig llm{};
    bool mock_llm = false;
    int alternates_per_query = 7;  // k
    DiversityConfig diversity{};

    struct Prune {
        std::int64_t min_support = 1;
        std::size_t max_sources = 10;
        std::size_t max_convergings = 10;
    } prune;

    struct Eval {
        std::size_t n_impressions = 10'000;
        double click_base = 0.05;
        double click_sim_weight = 0.25;
        double click_novelty_weight = 0.45;
        double convert_base = 0.05;
        double convert_sim_weight = 0.30;
        double convert_novelty_weight = 0.50;
    } eval;

    std::string serve_bind = "127.0.0.1:8787";
    std::uint64_t seed = 42;
    std::int64_t built_at_ms = 0;  // stamped onto records; fixed so reruns are byte-identical
};

namespace detail {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config field \"") + key + "\" has the wrong type");
    }
}

inline void require_fraction(double value, const char* name) {
    if (value < 0.0 || value > 1.0) {
        throw ConfigError(std::string(name) + " must lie in [0,1]");
    }
}

}  // namespace detail

inline void validate_config(const PipelineConfig& cfg) {
    detail::require_fraction(cfg.intent.threshold, "intent.threshold");
    detail::require_fraction(cfg.similarity.blend_alpha, "similarity.blend_alpha");
    detail::require_fraction(cfg.diversity.mmr_lambda, "diversity.mmr_lambda");
    detail::require_fraction(cfg.diversity.max_pairwise_sim, "diversity.max_pairwise_sim");
    if (cfg.similarity.min_profile_items < 1) {
        throw ConfigError("similarity.min_profile_items must be >= 1");
    }
    if (cfg.diversity.k_out < 1) throw ConfigError("diversity.k_out must be >= 1");
    if (cfg.alternates_per_query < 1) throw ConfigError("alternator.k must be >= 1");
    if (cfg.prune.min_support < 1) throw ConfigError("prune.min_support must be >= 1");
    if (cfg.llm.timeout_ms < 1) throw ConfigError("alternator.timeout_ms must be >= 1");
    if (cfg.llm.max_retries < 0) throw ConfigError("alternator.max_retries must be >= 0");
    if (cfg.mock_llm && cfg.paths.mock_fixture.empty()) {
        throw ConfigError("mock llm enabled but paths.mock_fixture is not set");
    }
}

inline PipelineConfig parse_config(const nlohmann::json& j) {
    using detail::get_or;
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    PipelineConfig cfg;
    const auto paths = j.value("paths", nlohmann::json::object());
    cfg.paths.events = get_or<std::string>(paths, "events", "");
    cfg.paths.chains = get_or<std::string>(paths, "chains", "");
    cfg.paths.profiles = get_or<std::string>(paths, "profiles", "");
    cfg.paths.journeys = get_or<std::string>(paths, "journeys", "");
    cfg.paths.suggestions = get_or<std::string>(paths, "suggestions", "");
    cfg.paths.store = get_or<std::string>(paths, "store", "");
    cfg.paths.impressions = get_or<std::string>(paths, "impressions", "");
    cfg.paths.eval_report = get_or<std::string>(paths, "eval_report", "");
    cfg.paths.eval_table = get_or<std::string>(paths, "eval_table", "");
    cfg.paths.mock_fixture = get_or<std::string>(paths, "mock_fixture", "");

    const auto intent = j.value("intent", nlohmann::json::object());
    cfg.intent.threshold = get_or<double>(intent, "threshold", cfg.intent.threshold);

    const auto sim = j.value("similarity", nlohmann::json::object());
    cfg.similarity.min_profile_items =
        get_or<std::size_t>(sim, "min_profile_items", cfg.similarity.min_profile_items);
    cfg.similarity.blend_alpha = get_or<double>(sim, "blend_alpha", cfg.similarity.blend_alpha);

    const auto alt = j.value("alternator", nlohmann::json::object());
    cfg.llm.endpoint = get_or<std::string>(alt, "endpoint", "");
    cfg.llm.model = get_or<std::string>(alt, "model", cfg.llm.model);
    cfg.llm.max_tokens = get_or<int>(alt, "max_tokens", cfg.llm.max_tokens);
    cfg.llm.temperature = get_or<double>(alt, "temperature", cfg.llm.temperature);
    cfg.llm.timeout_ms = get_or<int>(alt, "timeout_ms", cfg.llm.timeout_ms);
    cfg.llm.max_retries = get_or<int>(alt, "max_retries", cfg.llm.max_retries);
    cfg.llm.backoff_base_ms = get_or<int>(alt, "backoff_base_ms", cfg.llm.backoff_base_ms);
    cfg.llm.completion_path =
        get_or<std::string>(alt, "completion_path", cfg.llm.completion_path);
    cfg.mock_llm = get_or<bool>(alt, "mock", cfg.mock_llm);
    cfg.alternates_per_query = get_or<int>(alt, "k", cfg.alternates_per_query);

    const auto div = j.value("diversity", nlohmann::json::object());
    cfg.diversity.mmr_lambda = get_or<double>(div, "mmr_lambda", cfg.diversity.mmr_lambda);
    cfg.diversity.max_pairwise_sim =
        get_or<double>(div, "max_pairwise_sim", cfg.diversity.max_pairwise_sim);
    cfg.diversity.k_out = get_or<std::size_t>(div, "k_out", cfg.diversity.k_out);

    const auto prune = j.value("prune", nlohmann::json::object());
    cfg.prune.min_support = get_or<std::int64_t>(prune, "min_support", cfg.prune.min_support);
    cfg.prune.max_sources = get_or<std::size_t>(prune, "max_sources", cfg.prune.max_sources);
    cfg.prune.max_convergings =
        get_or<std::size_t>(prune, "max_convergings", cfg.prune.max_convergings);

    const auto eval = j.value("eval", nlohmann::json::object());
    cfg.eval.n_impressions = get_or<std::size_t>(eval, "n_impressions", cfg.eval.n_impressions);
    cfg.eval.click_base = get_or<double>(eval, "click_base", cfg.eval.click_base);
    cfg.eval.click_sim_weight =
        get_or<double>(eval, "click_sim_weight", cfg.eval.click_sim_weight);
    cfg.eval.click_novelty_weight =
        get_or<double>(eval, "click_novelty_weight", cfg.eval.click_novelty_weight);
    cfg.eval.convert_base = get_or<double>(eval, "convert_base", cfg.eval.convert_base);
    cfg.eval.convert_sim_weight =
        get_or<double>(eval, "convert_sim_weight", cfg.eval.convert_sim_weight);
    cfg.eval.convert_novelty_weight =
        get_or<double>(eval, "convert_novelty_weight", cfg.eval.convert_novelty_weight);

    const auto serve = j.value("serve", nlohmann::json::object());
    cfg.serve_bind = get_or<std::string>(serve, "bind", cfg.serve_bind);

    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
    cfg.built_at_ms = get_or<std::int64_t>(j, "built_at_ms", cfg.built_at_ms);

    validate_config(cfg);
    return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
    return parse_config(j);
}

}  // namespace accel
