#pragma once

// Language-agnostic lexing helpers for the C-family syntax shared by the
// supported profiles: comments, string/char literals, brace matching and
// identifier scanning. Not a parser.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "repoctx/common.hpp"

namespace repoctx::lex {

inline bool is_ident_start(char c) noexcept {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' ||
           static_cast<unsigned char>(c) >= 0x80;
}

inline bool is_ident_char(char c) noexcept { return is_ident_start(c) || (c >= '0' && c <= '9'); }

/// If `i` starts a comment or literal, returns the offset just past it.
/// Char literals are recognised only when they close within a few bytes,
/// so Rust lifetimes ('a) are left alone.
inline std::optional<std::size_t> skip_non_code(std::string_view text, std::size_t i) {
    const std::size_t n = text.size();
    const char c = text[i];
    if (c == '/' && i + 1 < n && text[i + 1] == '/') {
        auto nl = text.find('\n', i);
        return nl == std::string_view::npos ? n : nl;
    }
    if (c == '/' && i + 1 < n && text[i + 1] == '*') {
        auto close = text.find("*/", i + 2);
        return close == std::string_view::npos ? n : close + 2;
    }
    if (c == 'r' && (i == 0 || !is_ident_char(text[i - 1])) && i + 1 < n &&
        (text[i + 1] == '"' || text[i + 1] == '#')) {
        std::size_t j = i + 1;
        std::size_t hashes = 0;
        while (j < n && text[j] == '#') {
            ++hashes;
            ++j;
        }
        if (j < n && text[j] == '"') {
            std::string terminator = "\"" + std::string(hashes, '#');
            auto close = text.find(terminator, j + 1);
            return close == std::string_view::npos ? n : close + terminator.size();
        }
        return std::nullopt;
    }
    if (c == '"') {
        std::size_t j = i + 1;
        while (j < n && text[j] != '"') {
            j += (text[j] == '\\') ? 2 : 1;
        }
        return j < n ? j + 1 : n;
    }
    if (c == '\'') {
        // 'x', '\n', 'A', '\u{1F600}'
        std::size_t limit = std::min(n, i + 12);
        std::size_t j = i + 1;
        if (j < limit && text[j] == '\\') {
            j += 2;
            while (j < limit && text[j] != '\'' && text[j] != '\n') ++j;
        } else if (j < limit) {
            // one UTF-8 code point
            ++j;
            while (j < limit && (static_cast<unsigned char>(text[j]) & 0xC0) == 0x80) ++j;
        }
        if (j < limit && text[j] == '\'') return j + 1;
        return std::nullopt;
    }
    return std::nullopt;
}

/// Offset of the '}' matching the '{' at `open`, skipping comments and literals.
inline std::optional<std::size_t> find_matching_brace(std::string_view text, std::size_t open) {
    int depth = 0;
    for (std::size_t i = open; i < text.size();) {
        if (auto skip = skip_non_code(text, i)) {
            i = *skip;
            continue;
        }
        if (text[i] == '{') {
            ++depth;
        } else if (text[i] == '}') {
            if (--depth == 0) return i;
        }
        ++i;
    }
    return std::nullopt;
}

/// First `wanted` at or after `from` outside comments and literals.
inline std::optional<std::size_t> find_code_char(std::string_view text, std::size_t from, char wanted) {
    for (std::size_t i = from; i < text.size();) {
        if (auto skip = skip_non_code(text, i)) {
            i = *skip;
            continue;
        }
        if (text[i] == wanted) return i;
        ++i;
    }
    return std::nullopt;
}

struct Identifier {
    std::string_view name;
    std::size_t offset = 0;  // absolute offset in the scanned text
};

/// Identifiers in text[range), skipping comments and literals. `@Annotation` names are skipped.
inline std::vector<Identifier> scan_identifiers(std::string_view text, ByteRange range) {
    std::vector<Identifier> out;
    const std::size_t end = std::min(range.end, text.size());
    for (std::size_t i = range.start; i < end;) {
        if (auto skip = skip_non_code(text, i)) {
            i = *skip;
            continue;
        }
        if (is_ident_start(text[i]) && (i == 0 || !is_ident_char(text[i - 1]))) {
            std::size_t j = i;
            while (j < end && is_ident_char(text[j])) ++j;
            const bool annotation = i > 0 && text[i - 1] == '@';
            if (!annotation) out.push_back({text.substr(i, j - i), i});
            i = j;
            continue;
        }
        ++i;
    }
    return out;
}

/// The identifier covering `offset`, if any.
inline std::optional<Identifier> identifier_at(std::string_view text, std::size_t offset) {
    if (offset >= text.size() || !is_ident_char(text[offset])) return std::nullopt;
    std::size_t start = offset;
    while (start > 0 && is_ident_char(text[start - 1])) --start;
    std::size_t end = offset;
    while (end < text.size() && is_ident_char(text[end])) ++end;
    if (!is_ident_start(text[start])) return std::nullopt;
    return Identifier{text.substr(start, end - start), start};
}

/// Finds `needle` in `haystack` ignoring all whitespace on both sides.
/// The match starts on a non-whitespace byte; the returned range ends after
/// the last matched byte.
inline std::optional<ByteRange> find_ignoring_whitespace(std::string_view haystack,
                                                         std::string_view needle,
                                                         std::size_t from = 0) {
    std::string compact;
    for (char c : needle) {
        if (!is_space(c)) compact.push_back(c);
    }
    if (compact.empty()) return std::nullopt;
    for (std::size_t start = haystack.find(compact.front(), from); start != std::string_view::npos;
         start = haystack.find(compact.front(), start + 1)) {
        std::size_t h = start;
        std::size_t k = 0;
        while (k < compact.size() && h < haystack.size()) {
            if (is_space(haystack[h])) {
                ++h;
                continue;
            }
            if (haystack[h] != compact[k]) break;
            ++h;
            ++k;
        }
        if (k == compact.size()) return ByteRange{start, h};
    }
    return std::nullopt;
}

/// Whole-word search.
inline std::optional<std::size_t> find_word(std::string_view text, std::string_view word,
                                            std::size_t from = 0, std::size_t to = std::string_view::npos) {
    to = std::min(to, text.size());
    for (auto pos = text.find(word, from); pos != std::string_view::npos && pos + word.size() <= to;
         pos = text.find(word, pos + 1)) {
        const bool left = pos == 0 || !is_ident_char(text[pos - 1]);
        const bool right = pos + word.size() >= text.size() || !is_ident_char(text[pos + word.size()]);
        if (left && right) return pos;
    }
    return std::nullopt;
}

}  // namespace repoctx::lex
