#pragma once

/// Persisted anchor -> alternates mapping served to front-end callers.
/// Snapshots are JSONL sorted by anchor so rebuilds diff cleanly.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "accelerator/errors.hpp"
#include "accelerator/event_log.hpp"
#include "accelerator/jsonl.hpp"

namespace accel {

enum class Provenance { Llm, Mined };

inline std::string_view to_string(Provenance p) {
    return p == Provenance::Llm ? "llm" : "mined";
}

inline std::optional<Provenance> provenance_from(std::string_view s) {
    if (s == "llm") return Provenance::Llm;
    if (s == "mined") return Provenance::Mined;
    return std::nullopt;
}

struct SuggestionAlternate {
    std::string query;
    double score = 0.0;  // fraction, non-increasing down the list
    Provenance provenance = Provenance::Mined;

    bool operator==(const SuggestionAlternate&) const = default;
};

struct SuggestionRecord {
    std::string anchor_query;  // normalized
    std::vector<SuggestionAlternate> alternates;
    std::int64_t built_at_ms = 0;
    std::int64_t support = 0;

    bool operator==(const SuggestionRecord&) const = default;
};

inline void validate_record(const SuggestionRecord& rec) {
    if (rec.anchor_query.empty() || rec.anchor_query != try_normalize_query(rec.anchor_query)) {
        throw InvariantViolation("anchor query must be normalized and non-empty");
    }
    if (rec.alternates.empty()) throw InvariantViolation("record has no alternates");
    double prev = 1.0;
    for (const auto& alt : rec.alternates) {
        if (alt.query.empty()) throw InvariantViolation("empty alternate query");
        if (try_normalize_query(alt.query) == rec.anchor_query) {
            throw InvariantViolation("alternate repeats the anchor query");
        }
        if (alt.score < 0.0 || alt.score > 1.0) throw InvariantViolation("score out of [0,1]");
        if (alt.score > prev) throw InvariantViolation("scores must be non-increasing");
        prev = alt.score;
    }
}

inline nlohmann::ordered_json record_to_json(const SuggestionRecord& rec) {
    nlohmann::ordered_json j;
    j["anchor"] = rec.anchor_query;
    j["alternates"] = nlohmann::ordered_json::array();
    for (const auto& alt : rec.alternates) {
        nlohmann::ordered_json a;
        a["q"] = alt.query;
        a["score"] = alt.score;
        a["provenance"] = std::string(to_string(alt.provenance));
        j["alternates"].push_back(std::move(a));
    }
    j["built_at"] = rec.built_at_ms;
    j["support"] = rec.support;
    return j;
}

inline SuggestionRecord record_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("anchor") || !j["anchor"].is_string() ||
        !j.contains("alternates") || !j["alternates"].is_array()) {
        throw MalformedRecord("bad suggestion record");
    }
    SuggestionRecord rec;
    rec.anchor_query = j["anchor"].get<std::string>();
    for (const auto& a : j["alternates"]) {
        if (!a.is_object() || !a.contains("q") || !a["q"].is_string() || !a.contains("score") ||
            !a["score"].is_number() || !a.contains("provenance") || !a["provenance"].is_string()) {
            throw MalformedRecord("bad alternate entry");
        }
        const auto prov = provenance_from(a["provenance"].get<std::string>());
        if (!prov) throw MalformedRecord("unknown provenance");
        rec.alternates.push_back({a["q"].get<std::string>(), a["score"].get<double>(), *prov});
    }
    rec.built_at_ms = j.value("built_at", std::int64_t{0});
    rec.support = j.value("support", std::int64_t{0});
    return rec;
}

class SuggestionStore {
public:
    /// Last write wins by anchor key; malformed records are rejected.
    void put(SuggestionRecord record) {
        validate_record(record);
        auto key = record.anchor_query;
        records_.insert_or_assign(std::move(key), std::move(record));
    }

    /// Lookup normalizes its argument, so raw front-end text can be passed in.
    std::optional<SuggestionRecord> get(std::string_view anchor_query) const {
        const auto key = try_normalize_query(anchor_query);
        if (key.empty()) return std::nullopt;
        const auto it = records_.find(key);
        if (it == records_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const std::map<std::string, SuggestionRecord>& records() const noexcept { return records_; }

    void snapshot(const std::filesystem::path& path) const {
        auto out = open_output(path);
        for (const auto& [anchor, rec] : records_) out << record_to_json(rec).dump() << '\n';
        out.flush();
        if (!out) throw IoError("failed writing snapshot " + path.string());
    }

    static SuggestionStore load(const std::filesystem::path& path) {
        auto in = open_input(path);
        SuggestionStore store;
        for_each_jsonl_line(in, [&](std::size_t line_no, const std::string& line) {
            const auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded()) throw CorruptSnapshot(line_no, "invalid JSON");
            try {
                store.put(record_from_json(j));
            } catch (const Error& e) {
                throw CorruptSnapshot(line_no, e.what());
            }
        });
        return store;
    }

private:
    std::map<std::string, SuggestionRecord> records_;
};

}  // namespace accel
