#pragma once

/// Batch stage drivers behind the CLI. Every stage reads its declared JSONL
/// inputs and writes its declared JSONL outputs; progress goes to the given
/// log stream (stderr in the CLI), data only to files.

#include <iostream>
#include <memory>
#include <ostream>
#include <string>

#include "accelerator/config.hpp"
#include "accelerator/errors.hpp"
#include "accelerator/eval_harness.hpp"
#include "accelerator/event_log.hpp"
#include "accelerator/intent_filter.hpp"
#include "accelerator/jsonl.hpp"
#include "accelerator/llm_alternator.hpp"
#include "accelerator/llm_client_http.hpp"
#include "accelerator/query_repr.hpp"
#include "accelerator/sequence_miner.hpp"
#include "accelerator/serve.hpp"
#include "accelerator/suggestion_store.hpp"

namespace accel::pipeline {

namespace detail {
inline void require_path(const std::string& path, const char* name) {
    if (path.empty()) throw ConfigError(std::string("paths.") + name + " is required");
}
}  // namespace detail

/// events -> chains
inline void run_mine(const PipelineConfig& cfg, std::ostream& log = std::cerr) {
    detail::require_path(cfg.paths.events, "events");
    detail::require_path(cfg.paths.chains, "chains");

    auto in = open_input(cfg.paths.events);
    EventLogStats stats;
    const auto events = read_event_log(in, &stats);
    const auto sessions = reconstruct_sessions(events);
    const auto chains = mine_chains(sessions);

    auto out = open_output(cfg.paths.chains);
    write_chains(out, chains);
    log << "mine: " << stats.parsed << " events (" << stats.skipped << " skipped), "
        << sessions.size() << " sessions, " << chains.size() << " chains\n";
}

/// events -> profiles
inline void run_profiles(const PipelineConfig& cfg, std::ostream& log = std::cerr) {
    detail::require_path(cfg.paths.events, "events");
    detail::require_path(cfg.paths.profiles, "profiles");

    auto in = open_input(cfg.paths.events);
    EventLogStats stats;
    const auto events = read_event_log(in, &stats);
    const auto profiles = build_profiles(reconstruct_sessions(events));

    auto out = open_output(cfg.paths.profiles);
    write_profiles(out, profiles);
    log << "profiles: " << stats.parsed << " events (" << stats.skipped << " skipped), "
        << profiles.size() << " query profiles\n";
}

/// chains + profiles -> journeys (intent filter, aggregate, prune)
inline void run_filter(const PipelineConfig& cfg, std::ostream& log = std::cerr) {
    detail::require_path(cfg.paths.chains, "chains");
    detail::require_path(cfg.paths.profiles, "profiles");
    detail::require_path(cfg.paths.journeys, "journeys");

    auto chains_in = open_input(cfg.paths.chains);
    const auto chains = read_chains(chains_in);
    auto profiles_in = open_input(cfg.paths.profiles);
    auto profiles = std::make_shared<const ProfileMap>(read_profiles(profiles_in));

    const auto sim = bind_similarity(profiles, cfg.similarity);
    const auto filtered = filter_corpus(chains, sim, cfg.intent);
    const auto journeys = prune_journeys(aggregate_journeys(filtered), cfg.prune.min_support,
                                         cfg.prune.max_sources, cfg.prune.max_convergings);

    auto out = open_output(cfg.paths.journeys);
    write_journeys(out, journeys);
    log << "filter: " << chains.size() << " chains in, " << filtered.size()
        << " intent-consistent, " << journeys.size() << " journey contexts\n";
}

inline std::unique_ptr<LlmClient> make_llm_client(const PipelineConfig& cfg) {
    if (cfg.mock_llm) {
        return std::make_unique<MockLlmClient>(MockLlmClient::from_fixture(cfg.paths.mock_fixture));
    }
    if (cfg.llm.endpoint.empty()) {
        throw ConfigError("alternator.endpoint is required unless alternator.mock is true");
    }
    return std::make_unique<HttpLlmClient>(cfg.llm);
}

/// journeys + LLM -> suggestions
inline void run_alternate(const PipelineConfig& cfg, std::ostream& log = std::cerr) {
    detail::require_path(cfg.paths.journeys, "journeys");
    detail::require_path(cfg.paths.suggestions, "suggestions");

    auto in = open_input(cfg.paths.journeys);
    const auto journeys = read_journeys(in);
    const auto client = make_llm_client(cfg);

    AlternateConfig alt_cfg;
    alt_cfg.k = cfg.alternates_per_query;
    alt_cfg.diversity = cfg.diversity;
    alt_cfg.built_at_ms = cfg.built_at_ms;

    auto out = open_output(cfg.paths.suggestions);
    std::size_t llm_backed = 0;
    std::size_t fallbacks = 0;
    for (const auto& [t, journey] : journeys) {
        const auto record = alternate_journey(journey, *client, {}, alt_cfg);
        const bool mined = !record.alternates.empty() &&
                           record.alternates.front().provenance == Provenance::Mined;
        (mined ? fallbacks : llm_backed) += 1;
        out << record_to_json(record).dump() << '\n';
    }
    log << "alternate: " << journeys.size() << " journeys, " << llm_backed << " llm-backed, "
        << fallbacks << " mined fallbacks\n";
}

/// suggestions -> validated store snapshot
inline void run_build_store(const PipelineConfig& cfg, std::ostream& log = std::cerr) {
    detail::require_path(cfg.paths.suggestions, "suggestions");
    detail::require_path(cfg.paths.store, "store");

    const auto store = SuggestionStore::load(cfg.paths.suggestions);
    store.snapshot(cfg.paths.store);
    log << "build-store: " << store.size() << " records\n";
}

inline ClickModel make_click_model(const PipelineConfig& cfg) {
    ClickModel model;
    model.click_base = cfg.eval.click_base;
    model.click_sim_weight = cfg.eval.click_sim_weight;
    model.click_novelty_weight = cfg.eval.click_novelty_weight;
    model.convert_base = cfg.eval.convert_base;
    model.convert_sim_weight = cfg.eval.convert_sim_weight;
    model.convert_novelty_weight = cfg.eval.convert_novelty_weight;
    return model;
}

/// store + journeys -> report. The mined-only baseline is rebuilt from the
/// journeys file; the variant impression stream round-trips through its JSONL
/// file before metrics are computed from it.
inline void run_eval(const PipelineConfig& cfg, std::ostream& log = std::cerr) {
    detail::require_path(cfg.paths.store, "store");
    detail::require_path(cfg.paths.journeys, "journeys");
    detail::require_path(cfg.paths.impressions, "impressions");
    detail::require_path(cfg.paths.eval_report, "eval_report");

    const auto variant_store = SuggestionStore::load(cfg.paths.store);
    auto journeys_in = open_input(cfg.paths.journeys);
    const auto journeys = read_journeys(journeys_in);
    SuggestionStore baseline_store;
    for (const auto& [t, journey] : journeys) {
        baseline_store.put(mined_record(journey, cfg.built_at_ms));
    }

    const auto model = make_click_model(cfg);
    const auto variant_events =
        synthesize_replay(variant_store, model, cfg.eval.n_impressions, cfg.seed);
    const auto baseline_events =
        synthesize_replay(baseline_store, model, cfg.eval.n_impressions, cfg.seed);

    {
        auto out = open_output(cfg.paths.impressions);
        write_impressions(out, variant_events);
    }
    auto replay_in = open_input(cfg.paths.impressions);
    const auto variant = compute_metrics(read_impressions(replay_in));
    const auto baseline = compute_metrics(baseline_events);
    const auto delta = relative_delta(variant, baseline);

    {
        auto out = open_output(cfg.paths.eval_report);
        out << eval_report_json(baseline, variant, delta).dump(2) << '\n';
    }
    if (!cfg.paths.eval_table.empty()) {
        auto out = open_output(cfg.paths.eval_table);
        out << format_delta_table(baseline, delta);
    }
    log << "eval: " << cfg.eval.n_impressions << " impressions per arm, ctr "
        << format_delta_pct(delta.ctr_delta_pct) << ", cvr "
        << format_delta_pct(delta.cvr_delta_pct) << "\n";
}

/// store -> HTTP; blocks until the process is stopped.
inline int run_serve(const PipelineConfig& cfg, std::ostream& log = std::cerr) {
    detail::require_path(cfg.paths.store, "store");
    auto store = std::make_shared<const SuggestionStore>(SuggestionStore::load(cfg.paths.store));
    RelatedSearchServer server(std::move(store));
    log << "serve: " << server.current_store()->size() << " records on " << cfg.serve_bind
        << "\n";
    return server.listen(cfg.serve_bind) ? 0 : 1;
}

/// All batch stages in order; serving is left to its own subcommand.
inline void run_pipeline(const PipelineConfig& cfg, std::ostream& log = std::cerr) {
    run_mine(cfg, log);
    run_profiles(cfg, log);
    run_filter(cfg, log);
    run_alternate(cfg, log);
    run_build_store(cfg, log);
    run_eval(cfg, log);
}

}  // namespace accel::pipeline
