#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "repoctx/chunker.hpp"
#include "repoctx/common.hpp"
#include "repoctx/lexical.hpp"
#include "repoctx/ranked_list.hpp"

namespace repoctx {

struct Bm25Params {
    double k1 = 1.5;
    double b = 0.75;

    void validate() const {
        if (!(k1 >= 0.0)) throw ConfigError("bm25 k1 must be >= 0");
        if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("bm25 b must lie in [0, 1]");
    }
};

namespace detail {
inline bool is_upper(char c) noexcept { return c >= 'A' && c <= 'Z'; }
inline bool is_lower(char c) noexcept { return c >= 'a' && c <= 'z'; }
inline bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }
inline bool is_word_byte(char c) noexcept {
    return is_upper(c) || is_lower(c) || is_digit(c) || static_cast<unsigned char>(c) >= 0x80;
}
inline char ascii_lower(char c) noexcept { return is_upper(c) ? static_cast<char>(c - 'A' + 'a') : c; }
}  // namespace detail

/// Lowercased sub-words. Words are runs of ASCII alphanumerics (and non-ASCII
/// bytes); underscores and punctuation separate them. Inside a word a new
/// term starts at lower/digit -> upper ("addKey") and at the last capital of
/// an acronym run ("HTTPServer" -> "http", "server").
inline std::vector<std::string> tokenize(std::string_view text) {
    using namespace detail;
    std::vector<std::string> terms;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        if (!is_word_byte(text[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && is_word_byte(text[j])) ++j;
        std::string current;
        for (std::size_t p = i; p < j; ++p) {
            const char c = text[p];
            if (!current.empty() && is_upper(c)) {
                const char prev = text[p - 1];
                const bool after_lower = is_lower(prev) || is_digit(prev);
                const bool acronym_end = is_upper(prev) && p + 1 < j && is_lower(text[p + 1]);
                if (after_lower || acronym_end) {
                    terms.push_back(std::move(current));
                    current.clear();
                }
            }
            current.push_back(ascii_lower(c));
        }
        if (!current.empty()) terms.push_back(std::move(current));
        i = j;
    }
    return terms;
}

/// Removes comment markers from a docstring: /** */ /* // /// //! and leading '*'.
inline std::string strip_comment_syntax(std::string_view docstring) {
    std::string out;
    for (const auto& raw : split_lines(docstring)) {
        std::string_view line = trim(raw);
        for (std::string_view opener : {"/**", "/*!", "/*", "///", "//!", "//"}) {
            if (line.starts_with(opener)) {
                line.remove_prefix(opener.size());
                break;
            }
        }
        if (line.ends_with("*/")) line.remove_suffix(2);
        line = trim(line);
        while (!line.empty() && line.front() == '*') line.remove_prefix(1);
        line = trim(line);
        if (line.empty()) continue;
        if (!out.empty()) out.push_back(' ');
        out.append(line);
    }
    return out;
}

/// Retrieval query for a target function: docstring text, a space, the signature.
inline std::string make_query(std::string_view docstring, std::string_view signature) {
    return strip_comment_syntax(docstring) + " " + std::string(signature);
}

struct Posting {
    std::uint32_t doc = 0;  // index into TermIndex::doc_ids
    std::uint32_t tf = 0;
    friend bool operator==(const Posting&, const Posting&) = default;
};

/// Inverted index holding N_D, |D|, |D|_avg, TF and DF.
struct TermIndex {
    std::vector<std::string> doc_ids;
    std::vector<std::uint32_t> doc_lengths;
    double avg_doc_length = 0.0;
    std::map<std::string, std::vector<Posting>, std::less<>> postings;

    std::size_t doc_count() const noexcept { return doc_ids.size(); }

    std::size_t doc_freq(std::string_view term) const {
        auto it = postings.find(term);
        return it == postings.end() ? 0 : it->second.size();
    }

    std::optional<std::size_t> find_doc(std::string_view doc_id) const {
        auto it = doc_lookup_.find(std::string(doc_id));
        if (it == doc_lookup_.end()) return std::nullopt;
        return it->second;
    }

    std::uint32_t term_frequency(std::string_view term, std::size_t doc) const {
        auto it = postings.find(term);
        if (it == postings.end()) return 0;
        const auto& list = it->second;
        auto p = std::lower_bound(list.begin(), list.end(), doc,
                                  [](const Posting& a, std::size_t d) { return a.doc < d; });
        return (p != list.end() && p->doc == doc) ? p->tf : 0;
    }

    /// Rebuilds derived state (lookup table, average length).
    void finalize() {
        doc_lookup_.clear();
        for (std::size_t i = 0; i < doc_ids.size(); ++i) {
            if (!doc_lookup_.emplace(doc_ids[i], i).second) {
                throw Error("duplicate doc_id in index: " + doc_ids[i]);
            }
        }
        double total = 0.0;
        for (auto len : doc_lengths) total += len;
        avg_doc_length = doc_ids.empty() ? 0.0 : total / static_cast<double>(doc_ids.size());
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["doc_ids"] = doc_ids;
        j["doc_lengths"] = doc_lengths;
        auto& p = j["postings"] = nlohmann::json::object();
        for (const auto& [term, list] : postings) {
            auto arr = nlohmann::json::array();
            for (const auto& e : list) arr.push_back({e.doc, e.tf});
            p[term] = std::move(arr);
        }
        return j;
    }

    static TermIndex from_json(const nlohmann::json& j) {
        TermIndex idx;
        idx.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
        idx.doc_lengths = j.at("doc_lengths").get<std::vector<std::uint32_t>>();
        for (const auto& [term, arr] : j.at("postings").items()) {
            auto& list = idx.postings[term];
            for (const auto& e : arr) list.push_back({e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>()});
        }
        idx.finalize();
        return idx;
    }

    bool operator==(const TermIndex& o) const {
        return doc_ids == o.doc_ids && doc_lengths == o.doc_lengths && postings == o.postings;
    }

private:
    std::unordered_map<std::string, std::size_t> doc_lookup_;
};

struct Document {
    std::string doc_id;
    std::string text;
};

inline TermIndex build_index(std::span<const Document> docs) {
    TermIndex idx;
    idx.doc_ids.reserve(docs.size());
    idx.doc_lengths.reserve(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        auto terms = tokenize(docs[d].text);
        idx.doc_ids.push_back(docs[d].doc_id);
        idx.doc_lengths.push_back(static_cast<std::uint32_t>(terms.size()));
        std::map<std::string, std::uint32_t> counts;
        for (auto& t : terms) ++counts[std::move(t)];
        for (auto& [term, tf] : counts) {
            idx.postings[term].push_back({static_cast<std::uint32_t>(d), tf});
        }
    }
    idx.finalize();
    return idx;
}

inline TermIndex build_index(std::span<const CodeChunk> chunks) {
    std::vector<Document> docs;
    docs.reserve(chunks.size());
    for (const auto& c : chunks) docs.push_back({c.doc_id, c.text});
    return build_index(std::span<const Document>(docs));
}

/// ln((N_D - DF + 0.5) / (DF + 0.5)); may be negative for very common terms.
inline double idf(std::string_view term, const TermIndex& index) {
    const double n = static_cast<double>(index.doc_count());
    const double df = static_cast<double>(index.doc_freq(term));
    return std::log((n - df + 0.5) / (df + 0.5));
}

namespace detail {
inline double bm25_term(double idf_value, double tf, double doc_len, double avg_len, const Bm25Params& p) {
    const double norm = avg_len > 0.0 ? doc_len / avg_len : 0.0;
    return idf_value * (tf * (p.k1 + 1.0)) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
}
}  // namespace detail

/// Sum over query terms (duplicates count each time) of the Okapi term weight.
inline double bm25_score(std::span<const std::string> query_terms, std::string_view doc_id,
                         const TermIndex& index, const Bm25Params& params = {}) {
    auto doc = index.find_doc(doc_id);
    if (!doc) throw Error("unknown doc_id: " + std::string(doc_id));
    double score = 0.0;
    for (const auto& t : query_terms) {
        const auto tf = index.term_frequency(t, *doc);
        if (tf == 0) continue;
        score += detail::bm25_term(idf(t, index), tf, index.doc_lengths[*doc], index.avg_doc_length, params);
    }
    return score;
}

/// Scores every document (zero when no query term occurs) and keeps the best k.
inline RankedList sparse_top_k(std::string_view query, std::size_t k, const TermIndex& index,
                               const Bm25Params& params = {}) {
    if (k == 0) throw Error("k must be >= 1");
    const auto terms = tokenize(query);
    std::vector<double> scores(index.doc_count(), 0.0);
    for (const auto& t : terms) {
        auto it = index.postings.find(t);
        if (it == index.postings.end()) continue;
        const double w = idf(t, index);
        for (const auto& p : it->second) {
            scores[p.doc] += detail::bm25_term(w, p.tf, index.doc_lengths[p.doc], index.avg_doc_length, params);
        }
    }
    std::vector<RankedEntry> entries;
    entries.reserve(scores.size());
    for (std::size_t d = 0; d < scores.size(); ++d) entries.push_back({index.doc_ids[d], scores[d]});
    return top_k(std::move(entries), k);
}

}  // namespace repoctx
