#pragma once

/// Behavioral event log: JSONL parsing, query normalization and session
/// reconstruction. One JSONL object per line with keys
///   sid (string), ts (integer ms), kind in {"query","click","bbowac"},
///   q (kind=query), item (kind in {click,bbowac}),
///   sub in {"buy","bid","offer","watch","ask","cart"} (kind=bbowac).

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "accelerator/errors.hpp"

namespace accel {

enum class EventKind { QueryIssued, ItemClick, Bbowac };

/// Conversion-signal event family: buy, bid, offer, watch, ask, cart click.
enum class BbowacKind { Buy, Bid, Offer, Watch, Ask, Cart };

struct RawEvent {
    std::string session_id;
    std::int64_t timestamp_ms = 0;
    EventKind kind = EventKind::QueryIssued;
    std::optional<BbowacKind> bbowac_kind;  // set iff kind == Bbowac
    std::string query_text;                 // kind == QueryIssued, stored raw
    std::string item_id;                    // kind == ItemClick or Bbowac

    bool operator==(const RawEvent&) const = default;
};

struct Session {
    std::string session_id;
    std::vector<RawEvent> events;  // sorted by timestamp_ms, input order on ties
};

inline std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::QueryIssued: return "query";
        case EventKind::ItemClick: return "click";
        case EventKind::Bbowac: return "bbowac";
    }
    return "";
}

inline std::string_view to_string(BbowacKind kind) {
    switch (kind) {
        case BbowacKind::Buy: return "buy";
        case BbowacKind::Bid: return "bid";
        case BbowacKind::Offer: return "offer";
        case BbowacKind::Watch: return "watch";
        case BbowacKind::Ask: return "ask";
        case BbowacKind::Cart: return "cart";
    }
    return "";
}

inline std::optional<BbowacKind> bbowac_kind_from(std::string_view s) {
    if (s == "buy") return BbowacKind::Buy;
    if (s == "bid") return BbowacKind::Bid;
    if (s == "offer") return BbowacKind::Offer;
    if (s == "watch") return BbowacKind::Watch;
    if (s == "ask") return BbowacKind::Ask;
    if (s == "cart") return BbowacKind::Cart;
    return std::nullopt;
}

/// Canonical query form: lowercased, trimmed, internal whitespace runs
/// collapsed to single spaces, restricted to letters, digits, space, hyphen
/// and ampersand. Idempotent. Returns "" when nothing survives.
inline std::string try_normalize_query(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        char mapped = 0;
        if (c >= 'A' && c <= 'Z') {
            mapped = static_cast<char>(c - 'A' + 'a');
        } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '&') {
            mapped = static_cast<char>(c);
        } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            pending_space = true;
            continue;
        } else {
            continue;  // stripped (covers punctuation and all non-ASCII bytes)
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.push_back(mapped);
    }
    return out;
}

inline std::string normalize_query(std::string_view text) {
    auto out = try_normalize_query(text);
    if (out.empty()) {
        throw EmptyAfterNormalization("query is empty after normalization: \"" +
                                      std::string(text) + "\"");
    }
    return out;
}

/// Parses one JSONL record. Query text is kept raw, but a query that would
/// normalize to nothing is rejected here so downstream stages never see it.
inline RawEvent parse_event_line(std::string_view line) {
    const auto j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
        throw MalformedRecord("not a JSON object");
    }

    RawEvent ev;
    if (!j.contains("sid") || !j["sid"].is_string()) throw MalformedRecord("missing sid");
    ev.session_id = j["sid"].get<std::string>();
    if (ev.session_id.empty()) throw MalformedRecord("empty sid");

    if (!j.contains("ts") || !j["ts"].is_number_integer()) throw MalformedRecord("missing ts");
    ev.timestamp_ms = j["ts"].get<std::int64_t>();
    if (ev.timestamp_ms < 0) throw MalformedRecord("negative ts");

    if (!j.contains("kind") || !j["kind"].is_string()) throw MalformedRecord("missing kind");
    const auto kind = j["kind"].get<std::string>();

    if (kind == "query") {
        ev.kind = EventKind::QueryIssued;
        if (!j.contains("q") || !j["q"].is_string()) throw MalformedRecord("query without q");
        ev.query_text = j["q"].get<std::string>();
        if (try_normalize_query(ev.query_text).empty()) {
            throw MalformedRecord("query text empty after normalization");
        }
    } else if (kind == "click" || kind == "bbowac") {
        ev.kind = kind == "click" ? EventKind::ItemClick : EventKind::Bbowac;
        if (!j.contains("item") || !j["item"].is_string()) throw MalformedRecord(kind + " without item");
        ev.item_id = j["item"].get<std::string>();
        if (ev.item_id.empty()) throw MalformedRecord("empty item");
        if (ev.kind == EventKind::Bbowac) {
            if (!j.contains("sub") || !j["sub"].is_string()) throw MalformedRecord("bbowac without sub");
            ev.bbowac_kind = bbowac_kind_from(j["sub"].get<std::string>());
            if (!ev.bbowac_kind) throw MalformedRecord("unknown bbowac sub");
        }
    } else {
        throw MalformedRecord("unknown kind \"" + kind + "\"");
    }
    return ev;
}

/// Canonical JSONL form; parse_event_line(serialize_event(e)) == e.
inline std::string serialize_event(const RawEvent& ev) {
    nlohmann::ordered_json j;
    j["sid"] = ev.session_id;
    j["ts"] = ev.timestamp_ms;
    j["kind"] = std::string(to_string(ev.kind));
    switch (ev.kind) {
        case EventKind::QueryIssued:
            j["q"] = ev.query_text;
            break;
        case EventKind::Bbowac:
            j["sub"] = std::string(to_string(*ev.bbowac_kind));
            [[fallthrough]];
        case EventKind::ItemClick:
            j["item"] = ev.item_id;
            break;
    }
    return j.dump();
}

struct EventLogStats {
    std::size_t parsed = 0;
    std::size_t skipped = 0;  // malformed lines, never aborts the batch
};

inline std::vector<RawEvent> read_event_log(std::istream& in, EventLogStats* stats = nullptr) {
    std::vector<RawEvent> events;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            events.push_back(parse_event_line(line));
            if (stats) ++stats->parsed;
        } catch (const MalformedRecord&) {
            if (stats) ++stats->skipped;
        }
    }
    return events;
}

/// Groups events by session id (sessions emitted in first-seen order) and
/// sorts each session by timestamp, keeping input order on equal timestamps.
inline std::vector<Session> reconstruct_sessions(const std::vector<RawEvent>& events) {
    std::vector<Session> sessions;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& ev : events) {
        const auto [it, inserted] = index.try_emplace(ev.session_id, sessions.size());
        if (inserted) sessions.push_back(Session{ev.session_id, {}});
        sessions[it->second].events.push_back(ev);
    }
    for (auto& session : sessions) {
        std::stable_sort(session.events.begin(), session.events.end(),
                         [](const RawEvent& a, const RawEvent& b) {
                             return a.timestamp_ms < b.timestamp_ms;
                         });
    }
    return sessions;
}

}  // namespace accel
