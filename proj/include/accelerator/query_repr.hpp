#pragma once

/// Query-to-item interaction profiles and the query similarity signal built
/// on them. Item-set Jaccard blended with token Jaccard stands in for a
/// learned embedding; the SimilarityFn alias keeps the metric pluggable so a
/// cosine over trained representations can replace it without touching the
/// intent filter.

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "accelerator/errors.hpp"
#include "accelerator/event_log.hpp"
#include "accelerator/jsonl.hpp"

namespace accel {

struct QueryItemProfile {
    std::string query;                        // normalized
    std::map<std::string, std::int64_t> items;  // item id -> interaction count

    bool operator==(const QueryItemProfile&) const = default;
};

using ProfileMap = std::map<std::string, QueryItemProfile>;

struct SimilarityConfig {
    std::size_t min_profile_items = 3;  // below this a profile is too sparse to trust
    double blend_alpha = 0.7;           // weight of the item-set signal in the blend
};

using SimilarityFn = std::function<double(const std::string&, const std::string&)>;

/// Attributes every click/bbowac event to the most recent preceding query of
/// the same session; interactions before any query are dropped.
inline ProfileMap build_profiles(const std::vector<Session>& sessions) {
    ProfileMap profiles;
    for (const auto& session : sessions) {
        std::string current;
        for (const auto& ev : session.events) {
            if (ev.kind == EventKind::QueryIssued) {
                if (auto q = try_normalize_query(ev.query_text); !q.empty()) {
                    current = std::move(q);
                }
            } else if (!current.empty()) {
                auto& profile = profiles[current];
                profile.query = current;
                ++profile.items[ev.item_id];
            }
        }
    }
    return profiles;
}

/// Jaccard over the item-id key sets.
inline double sim_items(const QueryItemProfile& p1, const QueryItemProfile& p2) {
    if (p1.items.empty() || p2.items.empty()) {
        throw EmptyProfile("item similarity needs two non-empty profiles");
    }
    std::size_t inter = 0;
    auto a = p1.items.begin();
    auto b = p2.items.begin();
    while (a != p1.items.end() && b != p2.items.end()) {
        if (a->first < b->first) {
            ++a;
        } else if (b->first < a->first) {
            ++b;
        } else {
            ++inter;
            ++a;
            ++b;
        }
    }
    const std::size_t uni = p1.items.size() + p2.items.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace detail {
inline std::set<std::string_view> token_set(std::string_view q) {
    std::set<std::string_view> tokens;
    std::size_t start = 0;
    while (start < q.size()) {
        auto end = q.find(' ', start);
        if (end == std::string_view::npos) end = q.size();
        if (end > start) tokens.insert(q.substr(start, end - start));
        start = end + 1;
    }
    return tokens;
}
}  // namespace detail

/// Jaccard over whitespace-token sets; 1.0 when both queries are empty.
inline double sim_tokens(std::string_view q1, std::string_view q2) {
    const auto t1 = detail::token_set(q1);
    const auto t2 = detail::token_set(q2);
    if (t1.empty() && t2.empty()) return 1.0;
    if (t1.empty() || t2.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& tok : t1) inter += t2.count(tok);
    const std::size_t uni = t1.size() + t2.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Blend of item and token Jaccard when both queries have profiles with at
/// least min_profile_items distinct items; token Jaccard alone otherwise.
inline double similarity(const std::string& q1, const std::string& q2,
                         const ProfileMap& profiles, const SimilarityConfig& cfg = {}) {
    const double tok = sim_tokens(q1, q2);
    const auto it1 = profiles.find(q1);
    const auto it2 = profiles.find(q2);
    const bool rich = it1 != profiles.end() && it2 != profiles.end() &&
                      it1->second.items.size() >= cfg.min_profile_items &&
                      it2->second.items.size() >= cfg.min_profile_items;
    if (!rich) return tok;
    return cfg.blend_alpha * sim_items(it1->second, it2->second) +
           (1.0 - cfg.blend_alpha) * tok;
}

inline SimilarityFn bind_similarity(std::shared_ptr<const ProfileMap> profiles,
                                    SimilarityConfig cfg = {}) {
    return [profiles = std::move(profiles), cfg](const std::string& a, const std::string& b) {
        return similarity(a, b, *profiles, cfg);
    };
}

inline SimilarityFn token_similarity() {
    return [](const std::string& a, const std::string& b) { return sim_tokens(a, b); };
}

// --- profile snapshot JSONL: {"q":"...","items":{"id":n}} ---

inline std::string serialize_profile(const QueryItemProfile& profile) {
    nlohmann::ordered_json j;
    j["q"] = profile.query;
    j["items"] = nlohmann::ordered_json::object();
    for (const auto& [item, count] : profile.items) j["items"][item] = count;
    return j.dump();
}

inline QueryItemProfile parse_profile_line(std::string_view line) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("q") || !j["q"].is_string() ||
        !j.contains("items") || !j["items"].is_object()) {
        throw MalformedRecord("bad profile record");
    }
    QueryItemProfile profile;
    profile.query = j["q"].get<std::string>();
    for (const auto& [item, count] : j["items"].items()) {
        if (!count.is_number_integer() || count.get<std::int64_t>() < 1) {
            throw MalformedRecord("bad item count");
        }
        profile.items[item] = count.get<std::int64_t>();
    }
    return profile;
}

inline void write_profiles(std::ostream& out, const ProfileMap& profiles) {
    for (const auto& [query, profile] : profiles) out << serialize_profile(profile) << '\n';
}

inline ProfileMap read_profiles(std::istream& in) {
    ProfileMap profiles;
    for_each_jsonl_line(in, [&](std::size_t, const std::string& line) {
        auto profile = parse_profile_line(line);
        profiles[profile.query] = std::move(profile);
    });
    return profiles;
}

}  // namespace accel
