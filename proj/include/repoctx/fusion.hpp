#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "repoctx/bm25.hpp"
#include "repoctx/chunker.hpp"
#include "repoctx/dense.hpp"
#include "repoctx/ranked_list.hpp"

namespace repoctx {

struct FusionConfig {
    static constexpr int kRankOffset = 60;

    /// One weight per retriever, in the order the lists are passed (sparse, dense).
    std::vector<double> weights{0.3, 0.7};

    void validate() const {
        bool any_positive = false;
        for (double w : weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("fusion weights must be finite and >= 0");
            any_positive = any_positive || w > 0.0;
        }
        if (!any_positive) throw ConfigError("at least one fusion weight must be > 0");
    }
};

/// Weighted reciprocal rank fusion: each list contributes w_i / (rank + 60)
/// for the documents it contains, rank being 1-based.
inline RankedList rrf_fuse(std::span<const RankedList> lists, const FusionConfig& config) {
    if (config.weights.size() != lists.size()) {
        throw Error("rrf_fuse: " + std::to_string(config.weights.size()) + " weights for " +
                    std::to_string(lists.size()) + " ranked lists");
    }
    config.validate();
    // per document: rank -> summed weight of the lists placing it there, so a
    // document sharing one rank r across lists scores exactly (sum w) / (r + 60)
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<std::string> ids;
    std::vector<std::map<std::size_t, double>> weight_at_rank;
    for (std::size_t i = 0; i < lists.size(); ++i) {
        std::unordered_set<std::string_view> seen;
        for (std::size_t r = 0; r < lists[i].size(); ++r) {
            const auto& id = lists[i][r].doc_id;
            if (!seen.insert(id).second) throw Error("rrf_fuse: duplicate doc_id within one list: " + id);
            auto [it, inserted] = slot.try_emplace(id, ids.size());
            if (inserted) {
                ids.push_back(id);
                weight_at_rank.emplace_back();
            }
            weight_at_rank[it->second][r + 1] += config.weights[i];
        }
    }
    std::vector<RankedEntry> fused;
    fused.reserve(ids.size());
    for (std::size_t d = 0; d < ids.size(); ++d) {
        double score = 0.0;
        for (const auto& [rank, w] : weight_at_rank[d]) {
            score += w / (static_cast<double>(rank) + FusionConfig::kRankOffset);
        }
        fused.push_back({ids[d], score});
    }
    std::sort(fused.begin(), fused.end(), ranks_before);
    return RankedList{std::move(fused)};
}

/// Both retrieval indexes over one chunk corpus.
/// Immutable once constructed; safe to query from several threads.
class HybridIndex {
public:
    HybridIndex() = default;
    HybridIndex(std::vector<CodeChunk> chunks, TermIndex sparse, VectorIndex dense)
        : chunks(std::move(chunks)), sparse(std::move(sparse)), dense(std::move(dense)) {
        for (std::size_t i = 0; i < this->chunks.size(); ++i) lookup_.emplace(this->chunks[i].doc_id, i);
    }

    std::vector<CodeChunk> chunks;
    TermIndex sparse;
    VectorIndex dense;

    const CodeChunk* find(std::string_view doc_id) const {
        auto it = lookup_.find(std::string(doc_id));
        return it == lookup_.end() ? nullptr : &chunks[it->second];
    }

private:
    std::unordered_map<std::string, std::size_t> lookup_;
};

/// Span whose chunks must never be returned (the ground-truth function).
struct ExcludedSpan {
    std::string file_path;
    ByteRange range;
};

struct RetrievalResult {
    RankedList sparse;
    RankedList dense;
    RankedList fused;
    std::vector<CodeChunk> chunks;  // fused order, best first
};

namespace detail {
inline RankedList drop_excluded(RankedList list, const std::unordered_set<std::string>& excluded, std::size_t k) {
    std::vector<RankedEntry> kept;
    for (auto& e : list.entries) {
        if (excluded.count(e.doc_id) == 0 && kept.size() < k) kept.push_back(std::move(e));
    }
    return RankedList{std::move(kept)};
}
}  // namespace detail

/// Sparse and dense top-k with the same k, fused by weighted RRF.
/// Chunks overlapping `exclude` are removed before the top-k cut.
inline RetrievalResult retrieve_context(const std::string& query, std::size_t k, const HybridIndex& index,
                                        EmbeddingProvider& provider, const FusionConfig& config,
                                        const Bm25Params& bm25 = {},
                                        const std::optional<ExcludedSpan>& exclude = std::nullopt) {
    std::unordered_set<std::string> excluded;
    if (exclude) {
        for (const auto& c : index.chunks) {
            if (c.file_path == exclude->file_path && c.byte_range.overlaps(exclude->range)) {
                excluded.insert(c.doc_id);
            }
        }
    }
    const std::size_t widened = k + excluded.size();
    RetrievalResult result;
    result.sparse = detail::drop_excluded(sparse_top_k(query, widened, index.sparse, bm25), excluded, k);
    result.dense = detail::drop_excluded(dense_top_k(query, widened, index.dense, provider), excluded, k);
    const RankedList lists[] = {result.sparse, result.dense};
    result.fused = rrf_fuse(lists, config);
    for (const auto& e : result.fused.entries) {
        if (const auto* chunk = index.find(e.doc_id)) result.chunks.push_back(*chunk);
    }
    return result;
}

}  // namespace repoctx
