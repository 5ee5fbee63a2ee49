#pragma once

/// LLM-backed query expansion: a deterministic in-context prompt built from a
/// mined journey, tolerant extraction of the model's JSON payload,
/// non-repetition constraints against the mined converging queries, MMR
/// reranking for relevance/diversity balance, and a pairwise-similarity gate.
/// The transport is an abstract client so tests and the CLI can swap a
/// fixture-driven mock for the real HTTP endpoint.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "accelerator/errors.hpp"
#include "accelerator/event_log.hpp"
#include "accelerator/jsonl.hpp"
#include "accelerator/query_repr.hpp"
#include "accelerator/sequence_miner.hpp"
#include "accelerator/suggestion_store.hpp"

namespace accel {

struct AlternatorRequest {
    JourneyContext journey;
    int k = 7;  // alternates requested per transitional query
};

struct AlternatorResponse {
    std::string transitional_query;        // normalized
    std::vector<std::string> alternates;   // normalized, deduplicated

    bool operator==(const AlternatorResponse&) const = default;
};

struct DiversityConfig {
    double mmr_lambda = 0.5;
    double max_pairwise_sim = 0.8;
    std::size_t k_out = 5;
};

/// Raw-completion transport. Implementations own timeout/retry policy and
/// throw Timeout, TransportError or NonRetryableStatus.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string complete(const std::string& prompt) = 0;
};

/// Fixture-driven client for tests and offline runs. Each JSONL line holds a
/// response keyed either by exact prompt bytes ("prompt") or by a substring
/// of the prompt ("contains"); exact entries win.
class MockLlmClient final : public LlmClient {
public:
    void add_exact(std::string prompt, std::string response) {
        entries_.push_back({std::move(prompt), {}, std::move(response)});
    }
    void add_contains(std::string needle, std::string response) {
        entries_.push_back({{}, std::move(needle), std::move(response)});
    }

    static MockLlmClient from_fixture(const std::filesystem::path& path) {
        auto in = open_input(path);
        MockLlmClient client;
        for_each_jsonl_line(in, [&](std::size_t line_no, const std::string& line) {
            const auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object() || !j.contains("response") ||
                !j["response"].is_string()) {
                throw CorruptSnapshot(line_no, "bad mock fixture entry");
            }
            if (j.contains("prompt") && j["prompt"].is_string()) {
                client.add_exact(j["prompt"].get<std::string>(), j["response"].get<std::string>());
            } else if (j.contains("contains") && j["contains"].is_string()) {
                client.add_contains(j["contains"].get<std::string>(),
                                    j["response"].get<std::string>());
            } else {
                throw CorruptSnapshot(line_no, "mock entry needs \"prompt\" or \"contains\"");
            }
        });
        return client;
    }

    std::string complete(const std::string& prompt) override {
        ++calls_;
        for (const auto& e : entries_) {
            if (!e.prompt.empty() && e.prompt == prompt) return e.response;
        }
        for (const auto& e : entries_) {
            if (!e.contains.empty() && prompt.find(e.contains) != std::string::npos) {
                return e.response;
            }
        }
        throw TransportError("mock client has no entry matching the prompt");
    }

    std::size_t calls() const noexcept { return calls_; }

private:
    struct Entry {
        std::string prompt;
        std::string contains;
        std::string response;
    };
    std::vector<Entry> entries_;
    std::size_t calls_ = 0;
};

namespace detail {

inline std::vector<std::string> ranked_keys(const std::map<std::string, std::int64_t>& counts) {
    std::vector<std::string> keys;
    for (auto& [q, n] : ranked_by_count(counts)) keys.push_back(q);
    return keys;
}

inline nlohmann::ordered_json journey_prompt_json(const JourneyContext& journey) {
    nlohmann::ordered_json j;
    j["source queries"] = ranked_keys(journey.source_queries);
    j["transitional query"] = journey.transitional_query;
    j["converging queries"] = ranked_keys(journey.converging_queries);
    return j;
}

inline nlohmann::ordered_json response_prompt_json(const AlternatorResponse& resp) {
    nlohmann::ordered_json j;
    j["transitional query"] = resp.transitional_query;
    j["alternate queries"] = resp.alternates;
    return j;
}

}  // namespace detail

struct PromptExemplar {
    JourneyContext journey;
    AlternatorResponse response;
};

/// Deterministic instruction + few-shot + journey prompt; identical inputs
/// produce identical bytes.
inline std::string build_prompt(const AlternatorRequest& req,
                                const std::vector<PromptExemplar>& few_shots = {}) {
    if (req.journey.converging_queries.empty()) {
        throw EmptyJourney("journey has no converging queries");
    }
    std::string prompt;
    prompt += "You assist shoppers on an e-commerce marketplace. A user journey lists the\n";
    prompt += "source queries a shopper started from, the transitional query they passed\n";
    prompt += "through, and the converging queries under which they finally transacted.\n\n";
    prompt += "Generate " + std::to_string(req.k) +
              " alternate converging queries for the transitional query. Each\n";
    prompt += "alternate must stay relevant to the transitional query, have a high\n";
    prompt += "likelihood of leading to a transaction, and be different from the input\n";
    prompt += "list of converging queries. Respond with a single JSON object with the\n";
    prompt += "keys \"transitional query\" and \"alternate queries\".\n";
    for (const auto& shot : few_shots) {
        prompt += "\nInput:\n";
        prompt += detail::journey_prompt_json(shot.journey).dump();
        prompt += "\nOutput:\n";
        prompt += detail::response_prompt_json(shot.response).dump();
        prompt += "\n";
    }
    prompt += "\nInput:\n";
    prompt += detail::journey_prompt_json(req.journey).dump();
    prompt += "\nOutput:\n";
    return prompt;
}

namespace detail {

/// Index one past the matching close bracket, or nullopt when unbalanced.
inline std::optional<std::size_t> balanced_end(std::string_view s, std::size_t start) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{' || c == '[') {
            ++depth;
        } else if (c == '}' || c == ']') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::nullopt;
}

/// First well-formed JSON object, or array containing at least one object,
/// embedded anywhere in the raw text (code fences and prose are skipped).
inline std::optional<nlohmann::json> extract_first_json_value(std::string_view raw) {
    for (std::size_t pos = 0; pos < raw.size(); ++pos) {
        if (raw[pos] != '{' && raw[pos] != '[') continue;
        const auto end = balanced_end(raw, pos);
        if (!end) continue;
        auto j = nlohmann::json::parse(raw.substr(pos, *end - pos), nullptr, false);
        if (j.is_discarded()) continue;
        if (j.is_object()) return j;
        if (j.is_array()) {
            for (const auto& el : j) {
                if (el.is_object()) return j;
            }
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// Extracts the model payload, tolerating surrounding prose. Requires keys
/// "transitional query" (string) and "alternate queries" (array of strings);
/// alternates are normalized and deduplicated preserving first occurrence.
inline AlternatorResponse parse_response(std::string_view raw) {
    auto value = detail::extract_first_json_value(raw);
    if (!value) throw UnparseableResponse("no JSON object in completion");

    nlohmann::json obj = std::move(*value);
    if (obj.is_array()) {
        for (auto& el : obj) {
            if (el.is_object()) {
                obj = std::move(el);
                break;
            }
        }
    }
    if (!obj.contains("transitional query") || !obj["transitional query"].is_string()) {
        throw SchemaViolation("missing \"transitional query\"");
    }
    if (!obj.contains("alternate queries") || !obj["alternate queries"].is_array()) {
        throw SchemaViolation("missing \"alternate queries\"");
    }

    AlternatorResponse resp;
    resp.transitional_query = try_normalize_query(obj["transitional query"].get<std::string>());
    if (resp.transitional_query.empty()) throw SchemaViolation("empty transitional query");

    std::set<std::string> seen;
    for (const auto& el : obj["alternate queries"]) {
        if (!el.is_string()) throw SchemaViolation("alternate queries must be strings");
        auto q = try_normalize_query(el.get<std::string>());
        if (q.empty() || !seen.insert(q).second) continue;
        resp.alternates.push_back(std::move(q));
    }
    if (resp.alternates.empty()) throw SchemaViolation("no usable alternate queries");
    return resp;
}

/// Drops alternates repeating the transitional query or any mined converging
/// query, plus duplicates; order is otherwise preserved.
inline std::vector<std::string> enforce_constraints(const AlternatorResponse& resp,
                                                    const JourneyContext& journey) {
    std::set<std::string> forbidden;
    forbidden.insert(journey.transitional_query);
    for (const auto& [q, n] : journey.converging_queries) forbidden.insert(q);

    std::vector<std::string> kept;
    std::set<std::string> seen;
    for (const auto& q : resp.alternates) {
        if (forbidden.count(q) || !seen.insert(q).second) continue;
        kept.push_back(q);
    }
    if (kept.empty()) throw AllFiltered("every alternate repeats a mined query");
    return kept;
}

struct ScoredQuery {
    std::string query;
    double score = 0.0;

    bool operator==(const ScoredQuery&) const = default;
};

/// Greedy maximal-marginal-relevance selection. Each step picks the remaining
/// candidate maximizing lambda*sim(c,anchor) - (1-lambda)*max sim(c,selected);
/// the first pick maximizes anchor similarity alone. Ties keep the original
/// candidate order. Scores are the selection-time objective values, which are
/// non-increasing down the list.
inline std::vector<ScoredQuery> mmr_rerank(const std::vector<std::string>& candidates,
                                           const std::string& anchor, const SimilarityFn& sim,
                                           const DiversityConfig& cfg = {}) {
    std::vector<ScoredQuery> selected;
    if (candidates.empty() || cfg.k_out == 0) return selected;

    const double lambda = cfg.mmr_lambda;
    std::vector<double> anchor_sim(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) anchor_sim[i] = sim(candidates[i], anchor);

    std::vector<bool> used(candidates.size(), false);
    while (selected.size() < cfg.k_out && selected.size() < candidates.size()) {
        std::optional<std::size_t> best;
        double best_score = 0.0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (used[i]) continue;
            double score;
            if (selected.empty()) {
                score = anchor_sim[i];
            } else {
                double redundancy = 0.0;
                for (const auto& s : selected) {
                    redundancy = std::max(redundancy, sim(candidates[i], s.query));
                }
                score = lambda * anchor_sim[i] - (1.0 - lambda) * redundancy;
            }
            if (!best || score > best_score) {
                best = i;
                best_score = score;
            }
        }
        used[*best] = true;
        const double recorded = selected.empty() ? lambda * anchor_sim[*best] : best_score;
        selected.push_back({candidates[*best], recorded});
    }
    return selected;
}

/// Scans in order and drops any alternate whose similarity to an already kept
/// alternate exceeds max_pairwise_sim.
inline std::vector<ScoredQuery> diversity_gate(const std::vector<ScoredQuery>& ranked,
                                               const SimilarityFn& sim,
                                               const DiversityConfig& cfg = {}) {
    std::vector<ScoredQuery> kept;
    for (const auto& cand : ranked) {
        const bool redundant =
            std::any_of(kept.begin(), kept.end(), [&](const ScoredQuery& s) {
                return sim(cand.query, s.query) > cfg.max_pairwise_sim;
            });
        if (!redundant) kept.push_back(cand);
    }
    return kept;
}

struct AlternateConfig {
    int k = 7;
    DiversityConfig diversity{};
    SimilarityFn sim = token_similarity();  // drives MMR and the diversity gate
    std::int64_t built_at_ms = 0;
};

/// Mined-only record: converging queries ranked by count (ties lexicographic),
/// scores scaled against the top count.
inline SuggestionRecord mined_record(const JourneyContext& journey, std::int64_t built_at_ms = 0) {
    if (journey.converging_queries.empty()) {
        throw EmptyJourney("journey has no converging queries");
    }
    SuggestionRecord rec;
    rec.anchor_query = journey.transitional_query;
    rec.built_at_ms = built_at_ms;
    rec.support = journey.support;
    const auto ranked = ranked_by_count(journey.converging_queries);
    const auto top = static_cast<double>(ranked.front().second);
    for (const auto& [q, n] : ranked) {
        rec.alternates.push_back({q, static_cast<double>(n) / top, Provenance::Mined});
    }
    return rec;
}

/// Full expansion for one journey: prompt -> complete -> parse -> constraints
/// -> MMR -> diversity gate. Any client or payload failure falls back to the
/// mined converging queries, so the serving path never goes empty; a journey
/// without convergings throws EmptyJourney before the client is called.
inline SuggestionRecord alternate_journey(const JourneyContext& journey, LlmClient& client,
                                          const std::vector<PromptExemplar>& few_shots,
                                          const AlternateConfig& cfg = {}) {
    const std::string prompt = build_prompt({journey, cfg.k}, few_shots);

    std::vector<std::string> alternates;
    try {
        const std::string raw = client.complete(prompt);
        alternates = enforce_constraints(parse_response(raw), journey);
    } catch (const Error&) {
        // fall through to the mined record
    }
    if (alternates.empty()) return mined_record(journey, cfg.built_at_ms);

    const auto ranked = mmr_rerank(alternates, journey.transitional_query, cfg.sim, cfg.diversity);
    const auto gated = diversity_gate(ranked, cfg.sim, cfg.diversity);

    SuggestionRecord rec;
    rec.anchor_query = journey.transitional_query;
    rec.built_at_ms = cfg.built_at_ms;
    rec.support = journey.support;
    for (const auto& sq : gated) {
        // MMR objective lives in [-1,1]; map affinely onto the score fraction.
        rec.alternates.push_back({sq.query, (1.0 + sq.score) / 2.0, Provenance::Llm});
    }
    return rec;
}

}  // namespace accel
