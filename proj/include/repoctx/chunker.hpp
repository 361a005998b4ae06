#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "repoctx/common.hpp"
#include "repoctx/language_profile.hpp"

namespace repoctx {

/// Split-point classes, highest priority first. 0 marks a file start.
enum SplitPriority : int {
    kFileStart = 0,
    kTypeDefinition = 1,
    kFunctionDefinition = 2,
    kControlFlow = 3,
    kNewLine = 4,
};

struct SplitPoint {
    std::size_t offset = 0;
    int priority = kNewLine;
    friend bool operator==(const SplitPoint&, const SplitPoint&) = default;
};

struct CodeChunk {
    std::string doc_id;
    std::string file_path;
    ByteRange byte_range;
    std::string text;
    int split_priority = kFileStart;
    bool oversized = false;  // no legal split point inside; emitted whole

    friend bool operator==(const CodeChunk&, const CodeChunk&) = default;
};

inline std::string make_doc_id(std::string_view path, std::size_t start) {
    return std::string(path) + "#" + std::to_string(start);
}

/// One point per line start. A line whose first non-blank text opens a type
/// definition, function definition or control-flow statement is tagged with
/// that class instead of the plain newline class. The split lands on the line
/// start so indentation stays with the construct it introduces.
inline std::vector<SplitPoint> detect_split_points(std::string_view text, const LanguageProfile& profile) {
    std::vector<SplitPoint> points;
    std::size_t line_start = 0;
    while (line_start < text.size()) {
        std::size_t line_end = line_start;
        std::size_t next = text.size();
        while (line_end < text.size()) {
            bool matched = false;
            for (const auto& token : profile.newline_tokens) {
                if (!token.empty() && text.compare(line_end, token.size(), token) == 0) {
                    next = line_end + token.size();
                    matched = true;
                    break;
                }
            }
            if (matched) break;
            ++line_end;
        }

        std::size_t first = line_start;
        while (first < line_end && (text[first] == ' ' || text[first] == '\t')) ++first;

        int priority = kNewLine;
        if (first < line_end) {
            const char* b = text.data() + first;
            const char* e = text.data() + line_end;
            auto hit = [&](const std::vector<LinePattern>& pats) {
                return std::any_of(pats.begin(), pats.end(), [&](const LinePattern& p) {
                    return std::regex_search(b, e, p.regex, std::regex_constants::match_continuous);
                });
            };
            if (hit(profile.type_def_patterns)) {
                priority = kTypeDefinition;
            } else if (hit(profile.fn_def_patterns)) {
                priority = kFunctionDefinition;
            } else if (hit(profile.ctrl_flow_patterns)) {
                priority = kControlFlow;
            }
        }
        points.push_back({line_start, priority});
        line_start = next;
    }
    return points;
}

/// Greedy structure-aware splitting. While the remaining fragment exceeds the
/// budget, cut at the highest-priority point whose left part fits, taking the
/// furthest such point within that priority. With no fitting point, cut at
/// the nearest point and flag the oversized left part.
inline std::vector<CodeChunk> split_source(std::string_view text, const LanguageProfile& profile,
                                           std::size_t max_chunk_size, std::string_view file_path = {}) {
    if (max_chunk_size == 0) {
        throw Error("max_chunk_size must be positive");
    }
    std::vector<CodeChunk> chunks;
    if (text.empty()) return chunks;

    const auto points = detect_split_points(text, profile);
    auto emit = [&](std::size_t start, std::size_t end, int priority) {
        CodeChunk c;
        c.doc_id = make_doc_id(file_path, start);
        c.file_path = std::string(file_path);
        c.byte_range = {start, end};
        c.text = std::string(text.substr(start, end - start));
        c.split_priority = priority;
        c.oversized = end - start > max_chunk_size;
        chunks.push_back(std::move(c));
    };

    std::size_t start = 0;
    int start_priority = kFileStart;
    const std::size_t n = text.size();
    while (start < n) {
        if (n - start <= max_chunk_size) {
            emit(start, n, start_priority);
            break;
        }
        auto first = std::upper_bound(points.begin(), points.end(), start,
                                      [](std::size_t v, const SplitPoint& p) { return v < p.offset; });
        auto last = std::upper_bound(first, points.end(), start + max_chunk_size,
                                     [](std::size_t v, const SplitPoint& p) { return v < p.offset; });
        const SplitPoint* chosen = nullptr;
        for (int prio = kTypeDefinition; prio <= kNewLine && chosen == nullptr; ++prio) {
            for (auto it = last; it != first;) {
                --it;
                if (it->priority == prio) {
                    chosen = &*it;
                    break;
                }
            }
        }
        if (chosen == nullptr && first != points.end()) {
            chosen = &*first;
        }
        if (chosen == nullptr) {
            emit(start, n, start_priority);
            break;
        }
        emit(start, chosen->offset, start_priority);
        start = chosen->offset;
        start_priority = chosen->priority;
    }
    return chunks;
}

struct ChunkCorpus {
    std::vector<CodeChunk> chunks;
    std::vector<std::string> warnings;
    std::size_t file_count = 0;
};

/// Repository-relative source paths selected by the profile, sorted.
/// Hidden directories (".git", cache folders) are not descended into.
inline std::vector<std::string> list_source_files(const fs::path& root, const LanguageProfile& profile) {
    std::vector<std::string> files;
    if (!fs::is_directory(root)) {
        throw Error("repository root is not a directory: " + root.string());
    }
    std::error_code ec;
    for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied, ec);
         it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) break;
        const auto name = it->path().filename().string();
        if (it->is_directory() && !name.empty() && name[0] == '.') {
            it.disable_recursion_pending();
            continue;
        }
        if (it->is_regular_file() && profile.matches_extension(it->path())) {
            files.push_back(fs::relative(it->path(), root).generic_string());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

inline ChunkCorpus chunk_repository(const fs::path& root, const LanguageProfile& profile,
                                    std::size_t max_chunk_size) {
    ChunkCorpus corpus;
    for (const auto& rel : list_source_files(root, profile)) {
        std::string text;
        try {
            text = read_file(root / rel);
        } catch (const Error& e) {
            corpus.warnings.push_back(std::string("skipped unreadable file: ") + e.what());
            continue;
        }
        ++corpus.file_count;
        auto chunks = split_source(text, profile, max_chunk_size, rel);
        corpus.chunks.insert(corpus.chunks.end(), std::make_move_iterator(chunks.begin()),
                             std::make_move_iterator(chunks.end()));
    }
    return corpus;
}

/// Line-delimited JSON, one record per chunk.
inline std::string chunk_manifest(const std::vector<CodeChunk>& chunks) {
    std::string out;
    for (const auto& c : chunks) {
        nlohmann::ordered_json rec;
        rec["doc_id"] = c.doc_id;
        rec["path"] = c.file_path;
        rec["start"] = c.byte_range.start;
        rec["end"] = c.byte_range.end;
        rec["priority"] = c.split_priority;
        if (c.oversized) rec["oversized"] = true;
        out += rec.dump();
        out += '\n';
    }
    return out;
}

/// Content hash of a corpus: ids, spans and texts.
inline std::string corpus_hash(const std::vector<CodeChunk>& chunks) {
    Sha256 h;
    for (const auto& c : chunks) {
        h.field(c.doc_id).field(c.file_path).field(std::to_string(c.byte_range.start));
        h.field(std::to_string(c.byte_range.end)).field(c.text);
    }
    return h.hex();
}

}  // namespace repoctx
