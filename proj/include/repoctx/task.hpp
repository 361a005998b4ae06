#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repoctx/common.hpp"
#include "repoctx/lexical.hpp"

namespace repoctx {

struct VerifierCommands {
    std::string compile;
    std::string test;
    std::chrono::seconds compile_timeout{120};
    std::chrono::seconds test_timeout{600};
};

/// A function to generate. `insertion_span` covers the function from the
/// first byte of its signature to its closing brace; the docstring (if any)
/// sits just before it and is left in place.
struct GenerationTask {
    std::string id;
    std::string file_path;  // repository-relative
    std::string signature;
    std::string docstring;
    ByteRange insertion_span;
    std::string language;
    VerifierCommands verifier;
};

struct BenchmarkManifest {
    fs::path repository;
    std::string language;
    std::vector<GenerationTask> tasks;

    const GenerationTask* find(std::string_view id) const {
        for (const auto& t : tasks) {
            if (t.id == id) return &t;
        }
        return nullptr;
    }
};

/// Locates `signature` (whitespace-insensitive) and the body that follows it.
/// Returns [signature start, closing brace + 1).
inline std::optional<ByteRange> locate_function_span(std::string_view file_text, std::string_view signature) {
    auto sig = lex::find_ignoring_whitespace(file_text, signature);
    if (!sig) return std::nullopt;
    auto open = lex::find_code_char(file_text, sig->end, '{');
    if (!open) return std::nullopt;
    // nothing but whitespace, `where` clauses or `throws` lists may separate signature and body
    if (lex::find_code_char(file_text.substr(0, *open), sig->end, ';')) return std::nullopt;
    auto close = lex::find_matching_brace(file_text, *open);
    if (!close) return std::nullopt;
    return ByteRange{sig->start, *close + 1};
}

namespace detail {

inline GenerationTask parse_task(const nlohmann::json& j, const fs::path& repo, const std::string& default_language) {
    GenerationTask t;
    t.id = j.at("id").get<std::string>();
    t.file_path = j.at("file").get<std::string>();
    t.signature = j.at("signature").get<std::string>();
    t.docstring = j.value("docstring", std::string());
    t.language = j.value("language", default_language);
    if (t.signature.empty()) throw ConfigError("task " + t.id + ": empty signature");
    if (j.contains("compile")) t.verifier.compile = j.at("compile").get<std::string>();
    if (j.contains("test")) t.verifier.test = j.at("test").get<std::string>();
    if (j.contains("compile_timeout")) t.verifier.compile_timeout = std::chrono::seconds(j.at("compile_timeout").get<int>());
    if (j.contains("test_timeout")) t.verifier.test_timeout = std::chrono::seconds(j.at("test_timeout").get<int>());

    const fs::path file = repo / t.file_path;
    if (!fs::is_regular_file(file)) throw ConfigError("task " + t.id + ": file not found: " + file.string());
    const std::string text = read_file(file);
    if (j.contains("insertion_span")) {
        const auto& span = j.at("insertion_span");
        t.insertion_span = {span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()};
    } else {
        auto located = locate_function_span(text, t.signature);
        if (!located) throw ConfigError("task " + t.id + ": cannot locate signature in " + t.file_path);
        t.insertion_span = *located;
    }
    if (t.insertion_span.start >= t.insertion_span.end || t.insertion_span.end > text.size()) {
        throw ConfigError("task " + t.id + ": insertion span out of bounds");
    }
    return t;
}

}  // namespace detail

/// Manifest schema (JSON):
///   { "repository": "<dir, relative to the manifest>", "language": "java"|"rust",
///     "tasks": [ { "id", "file", "signature", "docstring"?, "insertion_span"?: [start, end],
///                  "compile", "test", "compile_timeout"?, "test_timeout"? } ] }
/// A missing insertion_span is located from the signature.
inline BenchmarkManifest load_manifest(const fs::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("manifest " + path.string() + ": " + e.what());
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    BenchmarkManifest m;
    const fs::path base = path.parent_path();
    m.repository = fs::weakly_canonical(base / j.value("repository", std::string(".")));
    m.language = j.value("language", std::string("java"));
    try {
        for (const auto& tj : j.at("tasks")) m.tasks.push_back(detail::parse_task(tj, m.repository, m.language));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("manifest " + path.string() + ": " + e.what());
    }
    return m;
}

/// A single task file: the same fields as one manifest task entry.
inline GenerationTask load_task(const fs::path& path, const fs::path& repository, const std::string& language) {
    try {
        return detail::parse_task(nlohmann::json::parse(read_file(path)), repository, language);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("task " + path.string() + ": " + e.what());
    }
}

}  // namespace repoctx
