#pragma once

/// Offline replay: CTR/CVR arithmetic over impression events, relative deltas
/// against a baseline, and a seeded synthetic click model for directional
/// comparisons when real traffic is unavailable. Both rates use impressions
/// as the denominator so they are directly comparable.

#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "accelerator/errors.hpp"
#include "accelerator/jsonl.hpp"
#include "accelerator/query_repr.hpp"
#include "accelerator/suggestion_store.hpp"

namespace accel {

struct ImpressionEvent {
    std::string anchor_query;
    std::vector<std::string> shown;
    std::optional<std::size_t> clicked_index;
    bool converted = false;  // only meaningful when clicked

    bool operator==(const ImpressionEvent&) const = default;
};

struct MetricsReport {
    std::int64_t impressions = 0;
    std::int64_t clicks = 0;
    std::int64_t conversions = 0;
    double ctr = 0.0;
    double cvr = 0.0;

    bool operator==(const MetricsReport&) const = default;
};

inline MetricsReport compute_metrics(const std::vector<ImpressionEvent>& events) {
    MetricsReport report;
    report.impressions = static_cast<std::int64_t>(events.size());
    for (const auto& ev : events) {
        if (!ev.clicked_index) continue;
        ++report.clicks;
        if (ev.converted) ++report.conversions;
    }
    if (report.impressions > 0) {
        report.ctr = static_cast<double>(report.clicks) / static_cast<double>(report.impressions);
        report.cvr =
            static_cast<double>(report.conversions) / static_cast<double>(report.impressions);
    }
    return report;
}

struct DeltaReport {
    double ctr_delta_pct = 0.0;
    double cvr_delta_pct = 0.0;
};

inline DeltaReport relative_delta(const MetricsReport& variant, const MetricsReport& baseline) {
    if (baseline.ctr <= 0.0 || baseline.cvr <= 0.0) {
        throw ZeroBaseline("relative deltas need nonzero baseline rates");
    }
    return {100.0 * (variant.ctr - baseline.ctr) / baseline.ctr,
            100.0 * (variant.cvr - baseline.cvr) / baseline.cvr};
}

/// One decimal with explicit sign, e.g. "-33.6%" or "+32.2%".
inline std::string format_delta_pct(double pct) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+.1f%%", pct);
    return buf;
}

/// Per-suggestion click/convert probabilities from two features: similarity
/// to the anchor and novelty against the sibling suggestions shown alongside.
struct ClickModel {
    double click_base = 0.05;
    double click_sim_weight = 0.25;
    double click_novelty_weight = 0.45;
    double convert_base = 0.05;
    double convert_sim_weight = 0.30;
    double convert_novelty_weight = 0.50;
    SimilarityFn sim = token_similarity();
};

namespace detail {

// 53-bit uniform in [0,1); independent of distribution library internals so
// streams replay identically everywhere.
inline double next_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

}  // namespace detail

/// Deterministic synthetic impression stream: anchors round-robin over the
/// store, the shopper scans the list in order and clicks the first suggestion
/// that fires, then converts with its own probability.
inline std::vector<ImpressionEvent> synthesize_replay(const SuggestionStore& suggestions,
                                                      const ClickModel& model,
                                                      std::size_t n_impressions,
                                                      std::uint64_t rng_seed) {
    if (suggestions.empty()) throw InvalidConfig("cannot synthesize from an empty store");
    if (model.click_base < 0 || model.click_sim_weight < 0 || model.click_novelty_weight < 0 ||
        model.convert_base < 0 || model.convert_sim_weight < 0 ||
        model.convert_novelty_weight < 0) {
        throw InvalidConfig("click model weights must be non-negative");
    }

    struct Slate {
        std::string anchor;
        std::vector<std::string> shown;
        std::vector<double> p_click;
        std::vector<double> p_convert;
    };
    std::vector<Slate> slates;
    for (const auto& [anchor, rec] : suggestions.records()) {
        Slate slate;
        slate.anchor = anchor;
        for (const auto& alt : rec.alternates) slate.shown.push_back(alt.query);
        for (std::size_t j = 0; j < slate.shown.size(); ++j) {
            const double to_anchor = model.sim(slate.shown[j], anchor);
            double max_sibling = 0.0;
            for (std::size_t m = 0; m < slate.shown.size(); ++m) {
                if (m != j) max_sibling = std::max(max_sibling, model.sim(slate.shown[j], slate.shown[m]));
            }
            const double novelty = 1.0 - max_sibling;
            slate.p_click.push_back(detail::clamp01(model.click_base +
                                                    model.click_sim_weight * to_anchor +
                                                    model.click_novelty_weight * novelty));
            slate.p_convert.push_back(detail::clamp01(model.convert_base +
                                                      model.convert_sim_weight * to_anchor +
                                                      model.convert_novelty_weight * novelty));
        }
        slates.push_back(std::move(slate));
    }

    std::mt19937_64 rng(rng_seed);
    std::vector<ImpressionEvent> events;
    events.reserve(n_impressions);
    for (std::size_t i = 0; i < n_impressions; ++i) {
        const Slate& slate = slates[i % slates.size()];
        ImpressionEvent ev;
        ev.anchor_query = slate.anchor;
        ev.shown = slate.shown;
        for (std::size_t j = 0; j < slate.shown.size(); ++j) {
            if (detail::next_uniform(rng) < slate.p_click[j]) {
                ev.clicked_index = j;
                ev.converted = detail::next_uniform(rng) < slate.p_convert[j];
                break;
            }
        }
        events.push_back(std::move(ev));
    }
    return events;
}

// --- impression JSONL: {"anchor":"...","shown":["..."],"clicked":i|null,"converted":bool} ---

inline std::string serialize_impression(const ImpressionEvent& ev) {
    nlohmann::ordered_json j;
    j["anchor"] = ev.anchor_query;
    j["shown"] = ev.shown;
    if (ev.clicked_index) {
        j["clicked"] = *ev.clicked_index;
    } else {
        j["clicked"] = nullptr;
    }
    j["converted"] = ev.converted;
    return j.dump();
}

inline ImpressionEvent parse_impression_line(std::string_view line) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("anchor") || !j["anchor"].is_string() ||
        !j.contains("shown") || !j["shown"].is_array() || !j.contains("converted") ||
        !j["converted"].is_boolean()) {
        throw MalformedRecord("bad impression record");
    }
    ImpressionEvent ev;
    ev.anchor_query = j["anchor"].get<std::string>();
    for (const auto& s : j["shown"]) ev.shown.push_back(s.get<std::string>());
    if (j.contains("clicked") && j["clicked"].is_number_unsigned()) {
        ev.clicked_index = j["clicked"].get<std::size_t>();
        if (*ev.clicked_index >= ev.shown.size()) throw MalformedRecord("clicked out of range");
    }
    ev.converted = j["converted"].get<bool>();
    if (ev.converted && !ev.clicked_index) throw MalformedRecord("conversion without click");
    return ev;
}

inline void write_impressions(std::ostream& out, const std::vector<ImpressionEvent>& events) {
    for (const auto& ev : events) out << serialize_impression(ev) << '\n';
}

inline std::vector<ImpressionEvent> read_impressions(std::istream& in) {
    std::vector<ImpressionEvent> events;
    for_each_jsonl_line(in, [&](std::size_t, const std::string& line) {
        events.push_back(parse_impression_line(line));
    });
    return events;
}

// --- report rendering ---

inline nlohmann::ordered_json metrics_to_json(const MetricsReport& report) {
    nlohmann::ordered_json j;
    j["impressions"] = report.impressions;
    j["clicks"] = report.clicks;
    j["conversions"] = report.conversions;
    j["ctr"] = report.ctr;
    j["cvr"] = report.cvr;
    return j;
}

inline nlohmann::ordered_json eval_report_json(const MetricsReport& baseline,
                                               const MetricsReport& variant,
                                               const DeltaReport& delta) {
    nlohmann::ordered_json j;
    j["baseline"] = metrics_to_json(baseline);
    j["variant"] = metrics_to_json(variant);
    j["ctr_delta"] = format_delta_pct(delta.ctr_delta_pct);
    j["cvr_delta"] = format_delta_pct(delta.cvr_delta_pct);
    return j;
}

/// Aligned two-column table: baseline rates on the first row, relative deltas
/// of the variant on the second.
inline std::string format_delta_table(const MetricsReport& baseline, const DeltaReport& delta) {
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof(buf), "%-18s %20s %14s\n", "", "Click-through rate", "Conversions");
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-18s %20.4f %14.4f\n", "Mined baseline", baseline.ctr,
                  baseline.cvr);
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-18s %20s %14s\n", "LLM Alternator",
                  format_delta_pct(delta.ctr_delta_pct).c_str(),
                  format_delta_pct(delta.cvr_delta_pct).c_str());
    out += buf;
    return out;
}

}  // namespace accel
