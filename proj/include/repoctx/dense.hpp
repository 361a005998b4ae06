#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "repoctx/bm25.hpp"
#include "repoctx/chunker.hpp"
#include "repoctx/common.hpp"
#include "repoctx/ranked_list.hpp"

namespace repoctx {

using EmbeddingVector = std::vector<double>;

/// Failure talking to an embedding backend. `first`/`last` delimit the failed
/// batch (half-open, indices into the caller's text list).
class ProviderError : public Error {
public:
    ProviderError(const std::string& what, bool retriable, std::size_t first = 0, std::size_t last = 0)
        : Error(what), retriable_(retriable), first_(first), last_(last) {}

    bool retriable() const noexcept { return retriable_; }
    std::size_t batch_begin() const noexcept { return first_; }
    std::size_t batch_end() const noexcept { return last_; }
    const std::vector<std::string>& failed_texts() const noexcept { return failed_; }
    void set_failed_texts(std::vector<std::string> texts) { failed_ = std::move(texts); }

private:
    bool retriable_;
    std::size_t first_;
    std::size_t last_;
    std::vector<std::string> failed_;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dimension() const = 0;
    /// Stable description used in cache keys (backend, model, dimension).
    virtual std::string identity() const = 0;
    virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) = 0;
};

/// Deterministic local embedder: hashed bag of sub-word terms projected onto
/// pseudo-random unit directions, then L2-normalised. Texts sharing terms land
/// close together, and the same text always yields the same vector.
class HashEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HashEmbeddingProvider(std::size_t dimension = 64, std::uint64_t seed = 0)
        : dimension_(dimension), seed_(seed) {
        if (dimension_ == 0) throw ConfigError("embedding dimension must be positive");
    }

    std::size_t dimension() const override { return dimension_; }
    std::string identity() const override {
        return "hash:d" + std::to_string(dimension_) + ":s" + std::to_string(seed_);
    }

    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        texts_embedded_.fetch_add(texts.size(), std::memory_order_relaxed);
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(embed_one(t));
        return out;
    }

    std::size_t call_count() const noexcept { return calls_.load(); }
    std::size_t texts_embedded() const noexcept { return texts_embedded_.load(); }

private:
    static std::uint64_t splitmix(std::uint64_t& state) {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
        std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    EmbeddingVector embed_one(std::string_view text) const {
        EmbeddingVector v(dimension_, 0.0);
        auto add = [&](std::string_view feature) {
            std::uint64_t state = fnv1a(feature, seed_);
            for (auto& x : v) {
                // uniform in [-1, 1)
                x += static_cast<double>(splitmix(state) >> 11) * (2.0 / 9007199254740992.0) - 1.0;
            }
        };
        const auto terms = tokenize(text);
        if (terms.empty()) {
            add(text);
        } else {
            for (const auto& t : terms) add(t);
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > 0.0) {
            for (auto& x : v) x /= norm;
        }
        return v;
    }

    std::size_t dimension_;
    std::uint64_t seed_;
    std::atomic<std::size_t> calls_{0};
    std::atomic<std::size_t> texts_embedded_{0};
};

/// Squared Euclidean distance.
inline double sq_euclidean(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw Error("dimension mismatch: " + std::to_string(p.size()) + " vs " + std::to_string(q.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - q[i];
        sum += d * d;
    }
    return sum;
}

struct VectorIndex {
    std::size_t dimension = 0;
    std::vector<std::string> doc_ids;
    std::vector<EmbeddingVector> vectors;

    std::size_t size() const noexcept { return doc_ids.size(); }

    void add(std::string doc_id, EmbeddingVector v) {
        if (doc_ids.empty() && dimension == 0) dimension = v.size();
        if (v.size() != dimension) {
            throw Error("embedding for " + doc_id + " has dimension " + std::to_string(v.size()) +
                        ", index expects " + std::to_string(dimension));
        }
        for (double x : v) {
            if (!std::isfinite(x)) throw Error("non-finite embedding component for " + doc_id);
        }
        doc_ids.push_back(std::move(doc_id));
        vectors.push_back(std::move(v));
    }

    nlohmann::json to_json() const {
        return {{"dimension", dimension}, {"doc_ids", doc_ids}, {"vectors", vectors}};
    }

    static VectorIndex from_json(const nlohmann::json& j) {
        VectorIndex idx;
        idx.dimension = j.at("dimension").get<std::size_t>();
        idx.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
        idx.vectors = j.at("vectors").get<std::vector<EmbeddingVector>>();
        if (idx.doc_ids.size() != idx.vectors.size()) throw Error("corrupt vector index");
        return idx;
    }

    friend bool operator==(const VectorIndex&, const VectorIndex&) = default;
};

/// Embeds every chunk in batches, in corpus order.
inline VectorIndex build_vector_index(std::span<const CodeChunk> chunks, EmbeddingProvider& provider,
                                      std::size_t batch_size = 32) {
    if (batch_size == 0) batch_size = 1;
    VectorIndex index;
    index.dimension = provider.dimension();
    std::vector<std::string> batch;
    for (std::size_t first = 0; first < chunks.size(); first += batch_size) {
        const std::size_t last = std::min(chunks.size(), first + batch_size);
        batch.clear();
        for (std::size_t i = first; i < last; ++i) batch.push_back(chunks[i].text);
        std::vector<EmbeddingVector> vectors;
        try {
            vectors = provider.embed_batch(batch);
        } catch (const ProviderError& e) {
            ProviderError wrapped(std::string("embedding batch failed: ") + e.what(), e.retriable(), first, last);
            wrapped.set_failed_texts(batch);
            throw wrapped;
        } catch (const std::exception& e) {
            ProviderError wrapped(std::string("embedding batch failed: ") + e.what(), true, first, last);
            wrapped.set_failed_texts(batch);
            throw wrapped;
        }
        if (vectors.size() != batch.size()) {
            ProviderError wrapped("provider returned " + std::to_string(vectors.size()) + " vectors for " +
                                      std::to_string(batch.size()) + " texts",
                                  true, first, last);
            wrapped.set_failed_texts(batch);
            throw wrapped;
        }
        for (std::size_t i = first; i < last; ++i) index.add(chunks[i].doc_id, std::move(vectors[i - first]));
    }
    return index;
}

/// Nearest first; the stored score is the negated squared distance.
inline RankedList dense_top_k(std::span<const double> query_vector, std::size_t k, const VectorIndex& index) {
    if (k == 0) throw Error("k must be >= 1");
    std::vector<RankedEntry> entries;
    entries.reserve(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        entries.push_back({index.doc_ids[i], -sq_euclidean(query_vector, index.vectors[i])});
    }
    return top_k(std::move(entries), k);
}

inline RankedList dense_top_k(const std::string& query, std::size_t k, const VectorIndex& index,
                              EmbeddingProvider& provider) {
    const std::string texts[] = {query};
    auto vectors = provider.embed_batch(texts);
    if (vectors.size() != 1) throw ProviderError("provider returned no query embedding", true);
    return dense_top_k(vectors.front(), k, index);
}

}  // namespace repoctx
