#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace repoctx {

struct RankedEntry {
    std::string doc_id;
    double score = 0.0;
    friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

/// Descending score, ascending doc_id on ties.
inline bool ranks_before(const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
}

struct RankedList {
    std::vector<RankedEntry> entries;

    std::size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }
    const RankedEntry& operator[](std::size_t i) const { return entries[i]; }

    friend bool operator==(const RankedList&, const RankedList&) = default;
};

/// Keeps the best `k` entries in rank order.
inline RankedList top_k(std::vector<RankedEntry> entries, std::size_t k) {
    k = std::min(k, entries.size());
    std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(k), entries.end(),
                      ranks_before);
    entries.resize(k);
    return RankedList{std::move(entries)};
}

}  // namespace repoctx
