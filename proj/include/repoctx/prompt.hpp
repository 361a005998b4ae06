#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "repoctx/chunker.hpp"
#include "repoctx/common.hpp"
#include "repoctx/task.hpp"

namespace repoctx {

inline constexpr std::size_t kDefaultPromptBudget = 24576;

struct PromptBundle {
    std::string context_block;
    std::string code_block_prefix;  // docstring then signature
    std::string full_prompt;        // ends right after the signature
    std::vector<std::string> included_chunks;  // doc ids, in prompt order
    std::vector<std::string> dropped_chunks;   // doc ids cut by the budget
};

/// The CODE part: docstring (if any) on its own line(s), then the signature.
inline std::string code_block(const GenerationTask& task) {
    const auto doc = trim_right(task.docstring);
    if (doc.empty()) return task.signature;
    return std::string(doc) + "\n" + task.signature;
}

inline std::string render_prompt(std::string_view context_block, std::string_view code) {
    std::string out = "CONTEXT:\n";
    out += context_block;
    if (!context_block.empty() && context_block.back() != '\n') out += '\n';
    out += "CODE:\n";
    out += code;
    return out;
}

/// A retrieved chunk under a one-line path header.
inline std::string render_chunk(const CodeChunk& chunk, std::string_view comment = "//") {
    std::string out = std::string(comment) + " " + chunk.file_path + "\n" + chunk.text;
    if (out.back() != '\n') out += '\n';
    return out;
}

/// Type context first, then the chunks with the best-ranked one last (closest
/// to the code). `chunks` arrive best first. Chunks are dropped worst first
/// until the whole prompt fits `budget` bytes; the type context is never cut.
inline PromptBundle build_prompt(std::string_view type_context, const std::vector<CodeChunk>& chunks,
                                 const GenerationTask& task, std::size_t budget = kDefaultPromptBudget,
                                 std::string_view comment = "//") {
    PromptBundle b;
    b.code_block_prefix = code_block(task);
    std::string type_part(type_context);
    if (!type_part.empty() && type_part.back() != '\n') type_part += '\n';

    const std::size_t fixed = render_prompt(type_part, b.code_block_prefix).size();
    if (fixed > budget) {
        throw Error("prompt budget " + std::to_string(budget) + " is smaller than type context plus code (" +
                    std::to_string(fixed) + " bytes)");
    }

    std::vector<std::string> rendered;
    for (const auto& c : chunks) rendered.push_back(render_chunk(c, comment));
    // keep the longest best-first prefix of chunks that fits
    std::size_t used = fixed;
    std::size_t keep = 0;
    for (; keep < rendered.size(); ++keep) {
        const std::size_t extra = rendered[keep].size() + ((type_part.empty() && keep == 0) ? 0 : 1);
        if (used + extra > budget) break;
        used += extra;
    }
    for (std::size_t i = keep; i < chunks.size(); ++i) b.dropped_chunks.push_back(chunks[i].doc_id);

    std::vector<std::string> pieces;
    if (!type_part.empty()) pieces.push_back(type_part);
    for (std::size_t i = keep; i-- > 0;) {
        pieces.push_back(rendered[i]);
        b.included_chunks.push_back(chunks[i].doc_id);
    }
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        if (i > 0) b.context_block += '\n';
        b.context_block += pieces[i];
    }
    b.full_prompt = render_prompt(b.context_block, b.code_block_prefix);
    return b;
}

/// File bytes before the target function, excluding its docstring when the
/// docstring sits directly above the signature.
inline std::string_view text_before_target(std::string_view file_text, const GenerationTask& task) {
    std::string_view prefix = file_text.substr(0, std::min(task.insertion_span.start, file_text.size()));
    const auto doc = trim(task.docstring);
    if (!doc.empty()) {
        const auto head = trim_right(prefix);
        if (head.ends_with(doc)) {
            prefix = prefix.substr(0, head.size() - doc.size());
            // and the docstring's indentation
            const auto line = prefix.rfind('\n') + 1;  // npos + 1 == 0
            if (trim(prefix.substr(line)).empty()) prefix = prefix.substr(0, line);
        }
    }
    return prefix;
}

/// In-file context: everything before the target, trimmed from the front to
/// fit the budget. A front cut lands on the next line start.
inline PromptBundle build_in_file_prompt(std::string_view file_text, const GenerationTask& task,
                                         std::size_t budget = kDefaultPromptBudget) {
    PromptBundle b;
    b.code_block_prefix = code_block(task);
    const std::size_t fixed = render_prompt("", b.code_block_prefix).size();
    if (fixed > budget) throw Error("prompt budget is smaller than the code block");
    std::string_view before = text_before_target(file_text, task);
    // one byte reserved for the newline added after a context that lacks one
    const std::size_t room = budget - fixed;
    if (before.size() + (before.empty() || before.back() == '\n' ? 0 : 1) > room) {
        std::size_t cut = before.size() - (room > 0 ? room - 1 : 0);
        auto nl = before.find('\n', cut == 0 ? 0 : cut - 1);
        before = nl == std::string_view::npos ? std::string_view() : before.substr(nl + 1);
    }
    b.context_block = std::string(before);
    b.full_prompt = render_prompt(b.context_block, b.code_block_prefix);
    return b;
}

}  // namespace repoctx
