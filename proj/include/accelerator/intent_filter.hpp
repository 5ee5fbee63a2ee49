#pragma once

/// Intent boundary enforcement: walking backward from the converging query,
/// keep the maximal suffix whose successive similarities stay at or above the
/// threshold. The similarity metric is injected, never owned.

#include <vector>

#include "accelerator/errors.hpp"
#include "accelerator/query_repr.hpp"
#include "accelerator/sequence_miner.hpp"

namespace accel {

struct IntentFilterConfig {
    double threshold = 0.7;  // >= passes, < cuts
};

inline QueryChain filter_chain(const QueryChain& chain, const SimilarityFn& sim,
                               const IntentFilterConfig& cfg = {}) {
    if (!chain.terminal_converted) {
        throw NotConverted("intent filter only applies to converted chains");
    }
    const auto& q = chain.queries;
    if (q.size() < 2) return chain;

    std::size_t cut = 0;  // index of the first retained query
    for (std::size_t i = q.size() - 1; i-- > 0;) {
        if (sim(q[i], q[i + 1]) < cfg.threshold) {
            cut = i + 1;
            break;
        }
    }
    if (cut == 0) return chain;

    QueryChain out;
    out.queries.assign(q.begin() + static_cast<std::ptrdiff_t>(cut), q.end());
    out.terminal_converted = chain.terminal_converted;
    out.terminal_items = chain.terminal_items;
    return out;
}

/// Applies filter_chain to each chain and drops results reduced below two
/// queries; input order is preserved.
inline std::vector<QueryChain> filter_corpus(const std::vector<QueryChain>& chains,
                                             const SimilarityFn& sim,
                                             const IntentFilterConfig& cfg = {}) {
    std::vector<QueryChain> out;
    out.reserve(chains.size());
    for (const auto& chain : chains) {
        auto filtered = filter_chain(chain, sim, cfg);
        if (filtered.queries.size() >= 2) out.push_back(std::move(filtered));
    }
    return out;
}

}  // namespace accel
