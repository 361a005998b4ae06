#pragma once

#include <cstddef>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "repoctx/common.hpp"

namespace repoctx {

/// A regex tried at the first non-blank byte of each line.
struct LinePattern {
    std::string source;
    std::regex regex;

    explicit LinePattern(std::string src)
        : source(std::move(src)), regex(source, std::regex::ECMAScript | std::regex::optimize) {}
};

enum class FieldSyntax {
    type_then_name,  // private double[] sigma;
    name_colon_type  // pub rows: usize,
};

struct LanguageProfile {
    std::string name;
    std::vector<std::string> extensions;
    std::vector<LinePattern> type_def_patterns;
    std::vector<LinePattern> fn_def_patterns;
    std::vector<LinePattern> ctrl_flow_patterns;
    std::vector<std::string> newline_tokens{"\r\n", "\n"};
    std::vector<std::string> stdlib_prefixes;
    std::string line_comment = "//";
    FieldSyntax field_syntax = FieldSyntax::type_then_name;
    std::size_t default_chunk_size = 2000;
    std::size_t default_k = 4;

    bool matches_extension(const fs::path& path) const {
        const auto ext = path.extension().string();
        for (const auto& e : extensions) {
            if (ext == e) return true;
        }
        return false;
    }
};

namespace detail {
inline std::vector<LinePattern> patterns(std::initializer_list<const char*> sources) {
    std::vector<LinePattern> out;
    for (const char* s : sources) out.emplace_back(s);
    return out;
}
}  // namespace detail

inline LanguageProfile java_profile() {
    LanguageProfile p;
    p.name = "java";
    p.extensions = {".java"};
    p.type_def_patterns = detail::patterns({
        R"(^(?:(?:public|protected|private|abstract|static|final|sealed|non-sealed|strictfp)\s+)*(?:class|interface|enum|record|@interface)\s+[A-Za-z_$][\w$]*)",
    });
    p.fn_def_patterns = detail::patterns({
        R"(^(?!(?:return|new|throw|else|if|for|while|switch|case|catch|do|try|assert|yield|super|this)\b)(?:(?:public|protected|private|abstract|static|final|synchronized|native|default|strictfp)\s+)*(?:<[^>]*>\s+)?[\w$<>\[\],.?]+(?:\s*<[^;{}()]*>)?(?:\[\])*\s+[A-Za-z_$][\w$]*\s*\()",
        R"(^(?:(?:public|protected|private)\s+)[A-Z][\w$]*\s*\()",
    });
    p.ctrl_flow_patterns = detail::patterns({
        R"(^(?:if|else|for|while|do|switch|try)\b)",
    });
    p.stdlib_prefixes = {"java.", "javax.", "jdk.", "sun."};
    p.field_syntax = FieldSyntax::type_then_name;
    p.default_chunk_size = 2000;
    p.default_k = 4;
    return p;
}

inline LanguageProfile rust_profile() {
    LanguageProfile p;
    p.name = "rust";
    p.extensions = {".rs"};
    p.type_def_patterns = detail::patterns({
        R"(^(?:pub(?:\([^)]*\))?\s+)?(?:unsafe\s+)?(?:struct|enum|trait|union|impl|mod|type)\b)",
    });
    p.fn_def_patterns = detail::patterns({
        R"(^(?:pub(?:\([^)]*\))?\s+)?(?:(?:const|async|unsafe|extern(?:\s+"[^"]*")?)\s+)*fn\s+[A-Za-z_]\w*)",
    });
    p.ctrl_flow_patterns = detail::patterns({
        R"(^(?:if|else|for|while|loop|match)\b)",
    });
    p.stdlib_prefixes = {"std::", "core::", "alloc::"};
    p.field_syntax = FieldSyntax::name_colon_type;
    p.default_chunk_size = 1000;
    p.default_k = 8;
    return p;
}

/// Looks up a built-in profile by name ("java", "rust").
inline LanguageProfile profile_by_name(std::string_view name) {
    if (name == "java") return java_profile();
    if (name == "rust") return rust_profile();
    throw ConfigError("unknown language profile '" + std::string(name) + "'");
}

}  // namespace repoctx
