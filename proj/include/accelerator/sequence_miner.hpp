#pragma once

/// Chain mining: sessions are cut immediately after each bbowac event, each
/// converted segment with at least two distinct-run queries becomes a
/// QueryChain, and chains aggregate into per-transitional-query journey
/// contexts (source queries, converging queries, support).

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "accelerator/errors.hpp"
#include "accelerator/event_log.hpp"
#include "accelerator/jsonl.hpp"

namespace accel {

struct QueryChain {
    std::vector<std::string> queries;      // normalized, consecutive duplicates collapsed
    bool terminal_converted = false;
    std::set<std::string> terminal_items;  // interactions under the final query

    bool operator==(const QueryChain&) const = default;
    const std::string& converging_query() const { return queries.back(); }
};

struct JourneyContext {
    std::string transitional_query;
    std::map<std::string, std::int64_t> source_queries;
    std::map<std::string, std::int64_t> converging_queries;
    std::int64_t support = 0;  // number of contributing chains

    bool operator==(const JourneyContext&) const = default;
};

using JourneyMap = std::map<std::string, JourneyContext>;

/// Cuts the session immediately after each bbowac event. A trailing segment
/// with no bbowac is still returned; extract_chain discards it.
inline std::vector<std::span<const RawEvent>> segment_session(const Session& session) {
    std::vector<std::span<const RawEvent>> segments;
    const std::span<const RawEvent> events(session.events);
    std::size_t start = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (events[i].kind == EventKind::Bbowac) {
            segments.push_back(events.subspan(start, i + 1 - start));
            start = i + 1;
        }
    }
    if (start < events.size()) segments.push_back(events.subspan(start));
    return segments;
}

/// Distinct-run of normalized queries in the segment, or nullopt when the
/// segment lacks a terminal bbowac or has fewer than two distinct-run queries.
inline std::optional<QueryChain> extract_chain(std::span<const RawEvent> segment) {
    if (segment.empty() || segment.back().kind != EventKind::Bbowac) return std::nullopt;

    QueryChain chain;
    std::size_t last_query = segment.size();
    for (std::size_t i = 0; i < segment.size(); ++i) {
        if (segment[i].kind != EventKind::QueryIssued) continue;
        auto q = try_normalize_query(segment[i].query_text);
        if (q.empty()) continue;
        if (chain.queries.empty() || chain.queries.back() != q) {
            chain.queries.push_back(std::move(q));
        }
        last_query = i;
    }
    if (chain.queries.size() < 2) return std::nullopt;

    for (std::size_t i = last_query + 1; i < segment.size(); ++i) {
        if (segment[i].kind == EventKind::ItemClick || segment[i].kind == EventKind::Bbowac) {
            chain.terminal_items.insert(segment[i].item_id);
        }
    }
    chain.terminal_converted = true;
    return chain;
}

inline std::vector<QueryChain> mine_chains(const std::vector<Session>& sessions) {
    std::vector<QueryChain> chains;
    for (const auto& session : sessions) {
        for (const auto segment : segment_session(session)) {
            if (auto chain = extract_chain(segment)) chains.push_back(std::move(*chain));
        }
    }
    return chains;
}

/// Count map sorted by count descending, ties broken lexicographically.
inline std::vector<std::pair<std::string, std::int64_t>> ranked_by_count(
    const std::map<std::string, std::int64_t>& counts) {
    std::vector<std::pair<std::string, std::int64_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return ranked;
}

/// Folds chains into journey contexts. For a chain [q1..qn] every distinct
/// interior query t gets q1 as a source and qn as a converging query; a
/// length-2 chain is keyed by its own source. A chain contributes at most
/// once per transitional query, and never lists a context's own transitional
/// query among its convergings.
inline JourneyMap aggregate_journeys(const std::vector<QueryChain>& chains) {
    JourneyMap journeys;
    for (const auto& chain : chains) {
        const auto& q = chain.queries;
        if (q.size() < 2) continue;
        const std::string& source = q.front();
        const std::string& converging = q.back();

        std::set<std::string> transitionals;
        if (q.size() == 2) {
            transitionals.insert(source);
        } else {
            transitionals.insert(q.begin() + 1, q.end() - 1);
        }
        for (const auto& t : transitionals) {
            if (t == converging) continue;
            auto& ctx = journeys[t];
            ctx.transitional_query = t;
            ++ctx.source_queries[source];
            ++ctx.converging_queries[converging];
            ++ctx.support;
        }
    }
    return journeys;
}

namespace detail {
inline std::map<std::string, std::int64_t> top_k_by_count(
    const std::map<std::string, std::int64_t>& counts, std::size_t k) {
    auto ranked = ranked_by_count(counts);
    if (ranked.size() > k) ranked.resize(k);
    return {ranked.begin(), ranked.end()};
}
}  // namespace detail

/// Quality gate before LLM spend: drop low-support contexts and truncate the
/// source/converging maps to the top-k by count.
inline JourneyMap prune_journeys(JourneyMap journeys, std::int64_t min_support,
                                 std::size_t max_sources, std::size_t max_convergings) {
    if (min_support < 1) throw InvalidConfig("min_support must be >= 1");
    JourneyMap pruned;
    for (auto& [t, ctx] : journeys) {
        if (ctx.support < min_support) continue;
        ctx.source_queries = detail::top_k_by_count(ctx.source_queries, max_sources);
        ctx.converging_queries = detail::top_k_by_count(ctx.converging_queries, max_convergings);
        pruned.emplace(t, std::move(ctx));
    }
    return pruned;
}

// --- chain JSONL: {"queries":[...],"converted":bool,"items":[...]} ---

inline std::string serialize_chain(const QueryChain& chain) {
    nlohmann::ordered_json j;
    j["queries"] = chain.queries;
    j["converted"] = chain.terminal_converted;
    j["items"] = chain.terminal_items;
    return j.dump();
}

inline QueryChain parse_chain_line(std::string_view line) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("queries") || !j["queries"].is_array() ||
        !j.contains("converted") || !j["converted"].is_boolean()) {
        throw MalformedRecord("bad chain record");
    }
    QueryChain chain;
    for (const auto& q : j["queries"]) {
        if (!q.is_string()) throw MalformedRecord("chain query must be a string");
        chain.queries.push_back(q.get<std::string>());
    }
    chain.terminal_converted = j["converted"].get<bool>();
    if (j.contains("items")) {
        for (const auto& item : j["items"]) chain.terminal_items.insert(item.get<std::string>());
    }
    return chain;
}

inline void write_chains(std::ostream& out, const std::vector<QueryChain>& chains) {
    for (const auto& chain : chains) out << serialize_chain(chain) << '\n';
}

inline std::vector<QueryChain> read_chains(std::istream& in) {
    std::vector<QueryChain> chains;
    for_each_jsonl_line(in, [&](std::size_t, const std::string& line) {
        chains.push_back(parse_chain_line(line));
    });
    return chains;
}

// --- journey snapshot JSONL: {"t":"...","sources":{"q":n},"convergings":{"q":n},"support":n} ---

inline std::string serialize_journey(const JourneyContext& ctx) {
    nlohmann::ordered_json j;
    j["t"] = ctx.transitional_query;
    j["sources"] = nlohmann::ordered_json::object();
    for (const auto& [q, n] : ctx.source_queries) j["sources"][q] = n;
    j["convergings"] = nlohmann::ordered_json::object();
    for (const auto& [q, n] : ctx.converging_queries) j["convergings"][q] = n;
    j["support"] = ctx.support;
    return j.dump();
}

inline JourneyContext parse_journey_line(std::string_view line) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("t") || !j["t"].is_string() ||
        !j.contains("sources") || !j["sources"].is_object() || !j.contains("convergings") ||
        !j["convergings"].is_object() || !j.contains("support") ||
        !j["support"].is_number_integer()) {
        throw MalformedRecord("bad journey record");
    }
    JourneyContext ctx;
    ctx.transitional_query = j["t"].get<std::string>();
    for (const auto& [q, n] : j["sources"].items()) ctx.source_queries[q] = n.get<std::int64_t>();
    for (const auto& [q, n] : j["convergings"].items()) {
        ctx.converging_queries[q] = n.get<std::int64_t>();
    }
    ctx.support = j["support"].get<std::int64_t>();
    return ctx;
}

inline void write_journeys(std::ostream& out, const JourneyMap& journeys) {
    for (const auto& [t, ctx] : journeys) out << serialize_journey(ctx) << '\n';
}

inline JourneyMap read_journeys(std::istream& in) {
    JourneyMap journeys;
    for_each_jsonl_line(in, [&](std::size_t, const std::string& line) {
        auto ctx = parse_journey_line(line);
        journeys[ctx.transitional_query] = std::move(ctx);
    });
    return journeys;
}

}  // namespace accel
