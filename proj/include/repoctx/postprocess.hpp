#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "repoctx/common.hpp"
#include "repoctx/lexical.hpp"

namespace repoctx {

namespace detail {

inline bool is_fence_line(std::string_view line) { return trim(line).starts_with("```"); }

/// Removes Markdown code fences. When the text before the first fence
/// already holds the signature, only the fence lines go; otherwise the first
/// fenced block is kept and everything around it dropped.
inline std::string strip_fences(std::string_view raw, std::string_view signature) {
    std::vector<std::string_view> lines;
    for (std::size_t pos = 0; pos < raw.size();) {
        auto nl = raw.find('\n', pos);
        const std::size_t end = nl == std::string_view::npos ? raw.size() : nl + 1;
        lines.push_back(raw.substr(pos, end - pos));
        pos = end;
    }
    std::size_t first = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (is_fence_line(lines[i])) {
            first = i;
            break;
        }
    }
    if (first == lines.size()) return std::string(raw);

    std::string before;
    for (std::size_t i = 0; i < first; ++i) before += lines[i];
    std::string out;
    if (lex::find_ignoring_whitespace(before, signature)) {
        for (const auto& l : lines) {
            if (!is_fence_line(l)) out += l;
        }
        return out;
    }
    for (std::size_t i = first + 1; i < lines.size() && !is_fence_line(lines[i]); ++i) out += lines[i];
    return out;
}

}  // namespace detail

/// Turns a raw completion into a candidate function:
///  1. Markdown fences are removed.
///  2. Text before the signature is dropped; a missing signature is prepended.
///  3. The text is cut where the function's braces balance back to zero.
/// Output that never balances is returned unchanged after steps 1 and 2.
inline std::string postprocess(std::string_view raw, std::string_view signature) {
    std::string text = detail::strip_fences(raw, signature);
    std::string code;
    if (auto at = lex::find_ignoring_whitespace(text, signature)) {
        code = text.substr(at->start);
    } else {
        std::string_view body = text;
        // drop leading blank lines, keep the first line's indentation
        for (std::size_t nl; (nl = body.find('\n')) != std::string_view::npos && trim(body.substr(0, nl)).empty();) {
            body.remove_prefix(nl + 1);
        }
        if (trim(body).empty()) body = {};
        // a body that opens its block on the first line ("throws X {", "where T: Ord {") follows the signature
        const auto first_line = body.substr(0, body.find('\n'));
        const auto brace = lex::find_code_char(first_line, 0, '{');
        const auto semi = lex::find_code_char(first_line, 0, ';');
        code = std::string(signature);
        if (brace && (!semi || *brace < *semi)) {
            while (!body.empty() && is_space(body.front())) body.remove_prefix(1);
            code += " ";
        } else {
            code += " {\n";
        }
        code += body;
    }

    const std::size_t sig_end = lex::find_ignoring_whitespace(code, signature)->end;
    int depth = 0;
    bool opened = false;
    for (std::size_t i = sig_end; i < code.size();) {
        if (auto skip = lex::skip_non_code(code, i)) {
            i = *skip;
            continue;
        }
        if (code[i] == '{') {
            ++depth;
            opened = true;
        } else if (code[i] == '}' && opened) {
            if (--depth == 0) return code.substr(0, i + 1);
        } else if (code[i] == ';' && !opened) {
            // abstract or bodiless declaration
            return code.substr(0, i + 1);
        }
        ++i;
    }
    return code;
}

}  // namespace repoctx
