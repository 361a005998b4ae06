#pragma once

#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repoctx/common.hpp"
#include "repoctx/lexical.hpp"
#include "repoctx/type_context.hpp"

namespace repoctx {

/// In-memory analyzer backed by a manifest of known types:
///
///   { "types": [ { "qualified_name": "linear.RealMatrix", "kind": "interface",
///                  "origin": "repository", "file": "src/linear/RealMatrix.java",
///                  "fields": [ { "name", "type", "visibility" } ],
///                  "methods": [ { "signature", "visibility" } ] }, ... ] }
///
/// Extents are located in the source file from the declaration keyword and
/// brace matching; Rust `impl` blocks for the type are added as extra extents.
/// Types without a file (library types) resolve by simple name only.
class FixtureAnalyzer final : public AnalyzerSession {
public:
    explicit FixtureAnalyzer(fs::path manifest_path) : manifest_path_(std::move(manifest_path)) {}

    void open(const fs::path& root) override {
        AnalyzerSession::open(root);
        types_.clear();
        nlohmann::json j;
        std::string raw;
        try {
            raw = read_file(manifest_path_);
            j = nlohmann::json::parse(raw);
        } catch (const std::exception& e) {
            throw AnalyzerError("analyzer manifest " + manifest_path_.string() + ": " + e.what());
        }
        manifest_hash_ = sha256_hex(raw);
        ++open_count_;
        if (restore_imported()) return;
        for (const auto& tj : j.at("types")) {
            TypeInfo t = type_info_from_json(tj);
            if (tj.contains("file")) {
                const auto file = tj.at("file").get<std::string>();
                locate_extents(t, file);
            }
            types_.push_back(std::move(t));
        }
    }

    std::optional<TypeInfo> enclosing_type(const SourceLocation& where) override {
        const TypeInfo* best = nullptr;
        std::size_t best_size = 0;
        for (const auto& t : types_) {
            for (const auto& e : t.extents) {
                if (e.file != where.file || !e.range.contains(where.offset)) continue;
                if (best == nullptr || e.range.size() < best_size) {
                    best = &t;
                    best_size = e.range.size();
                }
            }
        }
        if (best == nullptr) return std::nullopt;
        return *best;
    }

    std::optional<TypeInfo> resolve_type_at(const SourceLocation& where) override {
        const auto& text = file_text(where.file);
        auto ident = lex::identifier_at(text, where.offset);
        if (!ident) return std::nullopt;
        return resolve_name(std::string(ident->name), where.file);
    }

    std::optional<TypeInfo> resolve_name(const std::string& name, const std::string& from_file = {}) const {
        const TypeInfo* found = nullptr;
        for (const auto& t : types_) {
            if (t.qualified_name != name && t.simple_name() != name) continue;
            const bool same_file = !t.extents.empty() && t.extents.front().file == from_file;
            if (found == nullptr || same_file) found = &t;
            if (same_file) break;
        }
        if (found == nullptr) return std::nullopt;
        return *found;
    }

    const std::vector<TypeInfo>& types() const noexcept { return types_; }
    std::size_t open_count() const noexcept { return open_count_; }

    nlohmann::json export_state() const override {
        nlohmann::json j;
        j["manifest_hash"] = manifest_hash_;
        auto& arr = j["types"] = nlohmann::json::array();
        for (const auto& t : types_) arr.push_back(type_info_to_json(t));
        auto& files = j["files"] = nlohmann::json::object();
        for (const auto& [path, text] : files_) files[path] = sha256_hex(text);
        return j;
    }

    /// Takes effect at the next open(): located types are reused when the
    /// manifest and every source file they came from are unchanged.
    bool import_state(const nlohmann::json& state) override {
        if (!state.is_object() || !state.contains("manifest_hash") || !state.contains("files")) return false;
        imported_ = state;
        return true;
    }

    bool restored() const noexcept { return restored_; }

private:
    bool restore_imported() {
        restored_ = false;
        if (imported_.is_null()) return false;
        const auto state = std::move(imported_);
        imported_ = nullptr;
        if (state.at("manifest_hash") != manifest_hash_) return false;
        for (const auto& [path, hash] : state.at("files").items()) {
            std::error_code ec;
            if (!fs::is_regular_file(root_ / path, ec) || sha256_hex(file_text(path)) != hash.get<std::string>()) {
                files_.clear();
                return false;
            }
        }
        for (const auto& tj : state.at("types")) types_.push_back(type_info_from_json(tj));
        restored_ = true;
        return true;
    }

    void locate_extents(TypeInfo& t, const std::string& file) {
        const auto& text = file_text(file);
        const auto name = t.simple_name();
        if (t.kind == TypeKind::module_kind) {
            t.extents.push_back({file, {0, text.size()}});
            return;
        }
        const std::regex decl("\\b(?:class|interface|enum|record|struct|trait|union)\\s+" + name + "\\b");
        std::cmatch m;
        if (!std::regex_search(text.data(), text.data() + text.size(), m, decl)) {
            throw AnalyzerError("declaration of " + t.qualified_name + " not found in " + file);
        }
        const std::size_t start = line_start(text, static_cast<std::size_t>(m.position(0)));
        t.extents.push_back({file, {start, block_end(text, static_cast<std::size_t>(m.position(0) + m.length(0)))}});

        const std::regex impl("\\bimpl(?:<[^>{]*>)?\\s+(?:[\\w:<>, ]+\\s+for\\s+)?" + name + "\\b");
        for (auto it = std::cregex_iterator(text.data(), text.data() + text.size(), impl);
             it != std::cregex_iterator(); ++it) {
            const auto pos = static_cast<std::size_t>(it->position(0));
            t.extents.push_back({file, {line_start(text, pos), block_end(text, pos + it->length(0))}});
        }
    }

    static std::size_t line_start(std::string_view text, std::size_t pos) {
        while (pos > 0 && text[pos - 1] != '\n') --pos;
        return pos;
    }

    /// End of the `{...}` block (or `;` item) following `from`.
    static std::size_t block_end(std::string_view text, std::size_t from) {
        auto brace = lex::find_code_char(text, from, '{');
        auto semi = lex::find_code_char(text, from, ';');
        if (semi && (!brace || *semi < *brace)) return *semi + 1;
        if (!brace) return text.size();
        auto close = lex::find_matching_brace(text, *brace);
        return close ? *close + 1 : text.size();
    }

    fs::path manifest_path_;
    std::string manifest_hash_;
    std::vector<TypeInfo> types_;
    std::size_t open_count_ = 0;
    nlohmann::json imported_;
    bool restored_ = false;
};

}  // namespace repoctx
