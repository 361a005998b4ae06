#pragma once

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <map>
#include <memory>
#include <regex>
#include <set>
#include <sstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repoctx/common.hpp"
#include "repoctx/language_profile.hpp"
#include "repoctx/lexical.hpp"
#include "repoctx/subprocess.hpp"
#include "repoctx/type_context.hpp"

namespace repoctx {
namespace lsp {

using nlohmann::json;

/// Byte offset <-> LSP position (line, UTF-16 code unit) conversion.
class LineIndex {
public:
    explicit LineIndex(std::string_view text) : text_(text) {
        starts_.push_back(0);
        for (std::size_t i = 0; i < text.size(); ++i) {
            if (text[i] == '\n') starts_.push_back(i + 1);
        }
    }

    json position(std::size_t offset) const {
        offset = std::min(offset, text_.size());
        auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
        const std::size_t line = static_cast<std::size_t>(it - starts_.begin()) - 1;
        std::size_t units = 0;
        for (std::size_t i = starts_[line]; i < offset;) {
            const auto [len, u16] = decode(i);
            units += u16;
            i += len;
        }
        return {{"line", line}, {"character", units}};
    }

    std::size_t offset(const json& pos) const {
        const auto line = pos.at("line").get<std::size_t>();
        if (line >= starts_.size()) return text_.size();
        std::size_t want = pos.at("character").get<std::size_t>();
        std::size_t i = starts_[line];
        while (want > 0 && i < text_.size() && text_[i] != '\n') {
            const auto [len, u16] = decode(i);
            if (u16 > want) break;
            want -= u16;
            i += len;
        }
        return i;
    }

    ByteRange range(const json& r) const { return {offset(r.at("start")), offset(r.at("end"))}; }

private:
    std::pair<std::size_t, std::size_t> decode(std::size_t i) const {
        const auto c = static_cast<unsigned char>(text_[i]);
        if (c < 0x80) return {1, 1};
        if ((c >> 5) == 0x6) return {2, 1};
        if ((c >> 4) == 0xE) return {3, 1};
        if ((c >> 3) == 0x1E) return {4, 2};
        return {1, 1};
    }

    std::string_view text_;
    std::vector<std::size_t> starts_;
};

inline std::string path_to_uri(const fs::path& path) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out = "file://";
    for (unsigned char c : fs::absolute(path).generic_string()) {
        if (std::isalnum(c) || c == '/' || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 0xf]);
        }
    }
    return out;
}

inline std::string percent_decode(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            out.push_back(static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16)));
            i += 2;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

inline std::optional<fs::path> uri_to_path(std::string_view uri) {
    if (!uri.starts_with("file://")) return std::nullopt;
    return fs::path(percent_decode(uri.substr(7)));
}

/// JSON-RPC 2.0 with Content-Length framing over a child's stdio.
class Connection {
public:
    Connection(const std::vector<std::string>& command, const fs::path& cwd, std::chrono::milliseconds timeout)
        : proc_(command, cwd), timeout_(timeout) {}

    void send(const json& message) {
        const auto body = message.dump();
        proc_.write_all("Content-Length: " + std::to_string(body.size()) + "\r\n\r\n" + body);
    }

    json read_message() {
        std::size_t length = 0;
        bool have_length = false;
        for (;;) {
            const auto line = proc_.read_line(timeout_);
            if (line.empty()) break;
            const auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            std::string key = line.substr(0, colon);
            std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
            if (key == "content-length") {
                length = std::stoul(line.substr(colon + 1));
                have_length = true;
            }
        }
        if (!have_length) throw AnalyzerError("language server sent a message without Content-Length");
        return json::parse(proc_.read_exact(length, timeout_));
    }

    void notify(const std::string& method, json params) {
        send({{"jsonrpc", "2.0"}, {"method", method}, {"params", std::move(params)}});
    }

    /// Sends a request and pumps messages until its response arrives. Server
    /// requests in between are answered with a null result.
    json request(const std::string& method, json params) {
        const int id = next_id_++;
        send({{"jsonrpc", "2.0"}, {"id", id}, {"method", method}, {"params", std::move(params)}});
        for (;;) {
            json msg = read_message();
            if (msg.contains("method")) {
                if (msg.contains("id")) send({{"jsonrpc", "2.0"}, {"id", msg["id"]}, {"result", nullptr}});
                continue;
            }
            if (!msg.contains("id") || msg["id"] != id) continue;
            if (msg.contains("error")) {
                throw AnalyzerError(method + " failed: " + msg["error"].value("message", std::string("unknown error")));
            }
            return msg.value("result", json());
        }
    }

    void shutdown() {
        try {
            request("shutdown", nullptr);
            notify("exit", nullptr);
        } catch (const std::exception&) {
        }
        proc_.terminate();
    }

private:
    ChildProcess proc_;
    std::chrono::milliseconds timeout_;
    int next_id_ = 1;
};

// LSP SymbolKind values used below.
enum SymbolKind : int {
    kModule = 2,
    kNamespace = 3,
    kPackage = 4,
    kClass = 5,
    kMethod = 6,
    kProperty = 7,
    kField = 8,
    kConstructor = 9,
    kEnum = 10,
    kInterface = 11,
    kFunction = 12,
    kConstant = 14,
    kObject = 19,
    kEnumMember = 22,
    kStruct = 23,
};

/// Skips whitespace, comments, Java annotations and Rust attributes.
inline std::size_t skip_preamble(std::string_view text, std::size_t i, std::size_t end) {
    while (i < end) {
        if (is_space(text[i])) {
            ++i;
        } else if (auto skip = lex::skip_non_code(text, i); skip && text[i] == '/') {
            i = *skip;
        } else if (text[i] == '@' && i + 1 < end && lex::is_ident_start(text[i + 1])) {
            ++i;
            while (i < end && (lex::is_ident_char(text[i]) || text[i] == '.')) ++i;
            std::size_t j = i;
            while (j < end && (text[j] == ' ' || text[j] == '\t')) ++j;
            if (j < end && text[j] == '(') {
                int depth = 0;
                for (; j < end; ++j) {
                    if (text[j] == '(') ++depth;
                    if (text[j] == ')' && --depth == 0) break;
                }
                i = j + 1;
            }
        } else if (text[i] == '#' && i + 1 < end && (text[i + 1] == '[' || text[i + 1] == '!')) {
            auto close = text.find(']', i);
            i = close == std::string_view::npos ? end : close + 1;
        } else {
            break;
        }
    }
    return i;
}

}  // namespace lsp

struct LspConfig {
    std::vector<std::string> command;   // server argv
    std::string language;               // "java" or "rust"
    std::vector<std::string> stdlib_prefixes;
    std::chrono::milliseconds timeout{60000};
};

/// Analyzer backed by a language server: documentSymbol for type layout,
/// typeDefinition (falling back to definition) for resolution.
class LspAnalyzer final : public AnalyzerSession {
public:
    explicit LspAnalyzer(LspConfig config) : config_(std::move(config)) {
        if (config_.command.empty()) throw ConfigError("language server command is empty");
    }

    ~LspAnalyzer() override {
        if (conn_) conn_->shutdown();
    }

    void open(const fs::path& root) override {
        AnalyzerSession::open(fs::absolute(root));
        if (conn_) conn_->shutdown();
        symbols_.clear();
        opened_.clear();
        resolved_.clear();
        conn_ = std::make_unique<lsp::Connection>(config_.command, root_, config_.timeout);
        lsp::json caps = {
            {"textDocument",
             {{"documentSymbol", {{"hierarchicalDocumentSymbolSupport", true}}},
              {"typeDefinition", {{"linkSupport", true}}},
              {"definition", {{"linkSupport", true}}}}}};
        conn_->request("initialize", {{"processId", static_cast<int>(::getpid())},
                                      {"rootUri", lsp::path_to_uri(root_)},
                                      {"capabilities", caps},
                                      {"workspaceFolders", {{{"uri", lsp::path_to_uri(root_)}, {"name", "repo"}}}}});
        conn_->notify("initialized", lsp::json::object());
    }

    std::optional<TypeInfo> enclosing_type(const SourceLocation& where) override {
        const auto& file = symbols(where.file);
        const TypeInfo* best = nullptr;
        std::size_t best_size = 0;
        for (const auto& t : file.types) {
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
        const auto key = where.file + "#" + std::to_string(where.offset);
        if (auto it = resolved_.find(key); it != resolved_.end()) return it->second;
        auto result = resolve_uncached(where);
        resolved_.emplace(key, result);
        return result;
    }

    /// Per-file symbol tables with the hash of the text they were built from.
    nlohmann::json export_state() const override {
        nlohmann::json files = nlohmann::json::object();
        for (const auto& [path, fs_] : symbols_) {
            if (fs::path(path).is_absolute()) continue;
            auto types = nlohmann::json::array();
            for (const auto& t : fs_.types) types.push_back(type_info_to_json(t));
            files[path] = {{"hash", fs_.hash}, {"types", types}};
        }
        return {{"language", config_.language}, {"files", files}};
    }

    bool import_state(const nlohmann::json& state) override {
        if (!state.is_object() || state.value("language", std::string()) != config_.language) return false;
        for (const auto& [path, entry] : state.at("files").items()) {
            FileSymbols f;
            f.hash = entry.at("hash").get<std::string>();
            for (const auto& t : entry.at("types")) f.types.push_back(type_info_from_json(t));
            imported_[path] = std::move(f);
        }
        return true;
    }

    std::size_t symbol_requests() const noexcept { return symbol_requests_; }

private:
    struct FileSymbols {
        std::string hash;
        std::vector<TypeInfo> types;
    };

    /// `path` is repository-relative, or absolute for files outside the root.
    const FileSymbols& symbols(const std::string& path) {
        if (auto it = symbols_.find(path); it != symbols_.end()) return it->second;
        const auto& text = file_text(path);
        const auto hash = sha256_hex(text);
        if (auto it = imported_.find(path); it != imported_.end() && it->second.hash == hash) {
            return symbols_.emplace(path, it->second).first->second;
        }
        ensure_open(path);
        ++symbol_requests_;
        const auto reply =
            conn_->request("textDocument/documentSymbol", {{"textDocument", {{"uri", uri_of(path)}}}});
        FileSymbols f;
        f.hash = hash;
        build_types(path, text, reply, f);
        return symbols_.emplace(path, std::move(f)).first->second;
    }

    std::string uri_of(const std::string& path) const {
        const fs::path p(path);
        return lsp::path_to_uri(p.is_absolute() ? p : root_ / p);
    }

    void ensure_open(const std::string& path) {
        if (!opened_.insert(path).second) return;
        conn_->notify("textDocument/didOpen", {{"textDocument",
                                                {{"uri", uri_of(path)},
                                                 {"languageId", config_.language},
                                                 {"version", 1},
                                                 {"text", file_text(path)}}}});
    }

    std::string package_prefix(const std::string& path, const std::string& text) const {
        if (config_.language == "rust") return rust_module_path(path);
        static const std::regex package_decl(R"(^\s*package\s+([\w.]+)\s*;)", std::regex::multiline);
        std::smatch m;
        if (std::regex_search(text, m, package_decl)) return m[1].str();
        return {};
    }

    static std::string rust_module_path(const std::string& path) {
        fs::path p(path);
        std::vector<std::string> parts;
        for (const auto& part : p) parts.push_back(part.string());
        std::string head = "crate";
        auto src = std::find(parts.begin(), parts.end(), "src");
        if (p.is_absolute()) {
            // library sources: .../library/<crate>/src/... or .../<crate>-<version>/src/...
            auto lib = std::find(parts.begin(), parts.end(), "library");
            if (lib != parts.end() && lib + 1 != parts.end()) {
                head = *(lib + 1);
                src = std::find(lib, parts.end(), "src");
            } else if (src != parts.begin() && src != parts.end()) {
                head = *(src - 1);
                if (auto dash = head.rfind('-'); dash != std::string::npos) head = head.substr(0, dash);
                std::replace(head.begin(), head.end(), '-', '_');
            }
        }
        std::string out = head;
        const auto first = src == parts.end() ? parts.begin() : src + 1;
        for (auto it = first; it != parts.end(); ++it) {
            std::string part = *it;
            const bool last = it + 1 == parts.end();
            if (last) {
                if (part.ends_with(".rs")) part.resize(part.size() - 3);
                if (part == "lib" || part == "main" || part == "mod") break;
            }
            out += "::" + part;
        }
        return out;
    }

    std::string join(const std::string& prefix, const std::string& name) const {
        if (prefix.empty()) return name;
        return prefix + (config_.language == "rust" ? "::" : ".") + name;
    }

    static std::optional<TypeKind> type_kind(int kind, bool rust) {
        switch (kind) {
            case lsp::kClass: return TypeKind::class_kind;
            case lsp::kInterface: return rust ? TypeKind::trait_kind : TypeKind::interface_kind;
            case lsp::kEnum: return TypeKind::enum_kind;
            case lsp::kStruct: return TypeKind::struct_kind;
            case lsp::kModule:
            case lsp::kNamespace: return rust ? std::optional(TypeKind::module_kind) : std::nullopt;
            default: return std::nullopt;
        }
    }

    Visibility visibility_of(std::string_view decl, bool in_interface) const {
        if (config_.language == "rust") {
            return decl.starts_with("pub") ? Visibility::public_access : Visibility::private_access;
        }
        if (in_interface) return Visibility::public_access;
        if (lex::find_word(decl, "public")) return Visibility::public_access;
        if (lex::find_word(decl, "protected")) return Visibility::protected_access;
        if (lex::find_word(decl, "private")) return Visibility::private_access;
        return Visibility::package_access;
    }

    /// Declaration text up to the body or terminator, whitespace collapsed.
    static std::string declaration_text(std::string_view text, ByteRange range) {
        const std::size_t start = lsp::skip_preamble(text, range.start, range.end);
        std::size_t stop = range.end;
        if (auto brace = lex::find_code_char(text.substr(0, range.end), start, '{')) stop = std::min(stop, *brace);
        if (auto semi = lex::find_code_char(text.substr(0, range.end), start, ';')) stop = std::min(stop, *semi);
        return collapse_whitespace(text.substr(start, stop - start));
    }

    FieldInfo field_of(std::string_view text, ByteRange range, const std::string& name, bool in_interface) const {
        std::string decl = declaration_text(text, range);
        while (!decl.empty() && (decl.back() == ',' || decl.back() == ';')) decl.pop_back();
        FieldInfo f;
        f.name = name;
        f.visibility = visibility_of(decl, in_interface);
        if (config_.language == "rust") {
            auto colon = decl.find(':');
            if (colon != std::string::npos) f.type = std::string(trim(std::string_view(decl).substr(colon + 1)));
            return f;
        }
        if (auto eq = decl.find('='); eq != std::string::npos) decl.resize(eq);
        static const std::set<std::string> kModifiers{"public", "protected", "private", "static", "final", "transient", "volatile"};
        std::vector<std::string> words;
        std::istringstream in(decl);
        for (std::string w; in >> w;) words.push_back(w);
        if (!words.empty() && words.back() == name) words.pop_back();
        std::string type;
        for (const auto& w : words) {
            if (kModifiers.count(w) != 0 && type.empty()) continue;
            if (!type.empty()) type += ' ';
            type += w;
        }
        f.type = type;
        return f;
    }

    void add_members(TypeInfo& t, std::string_view text, const lsp::LineIndex& lines, const lsp::json& children,
                     bool in_interface) const {
        for (const auto& c : children) {
            const int kind = c.value("kind", 0);
            const auto range = lines.range(c.at("range"));
            const auto name = c.value("name", std::string());
            if (kind == lsp::kField || kind == lsp::kProperty || kind == lsp::kConstant || kind == lsp::kEnumMember) {
                t.fields.push_back(field_of(text, range, name, in_interface));
            } else if (kind == lsp::kMethod || kind == lsp::kConstructor || kind == lsp::kFunction) {
                const auto decl = declaration_text(text, range);
                t.methods.push_back({decl, visibility_of(decl, in_interface)});
            }
        }
    }

    void walk(const std::string& path, std::string_view text, const lsp::LineIndex& lines, const lsp::json& symbols,
              const std::string& prefix, FileSymbols& out, std::vector<std::pair<std::string, lsp::json>>& impls) const {
        const bool rust = config_.language == "rust";
        for (const auto& s : symbols) {
            if (!s.contains("range")) continue;  // flat SymbolInformation is not supported
            const int kind = s.value("kind", 0);
            const auto name = s.value("name", std::string());
            const auto children = s.value("children", lsp::json::array());
            if (rust && kind == lsp::kObject && name.starts_with("impl")) {
                impls.emplace_back(name, s);
                continue;
            }
            if (kind == lsp::kPackage) continue;
            auto tk = type_kind(kind, rust);
            if (!tk) continue;
            TypeInfo t;
            t.qualified_name = join(prefix, name);
            t.kind = *tk;
            t.extents.push_back({path, lines.range(s.at("range"))});
            t.origin = origin_of(t.qualified_name, path);
            add_members(t, text, lines, children, *tk == TypeKind::interface_kind);
            const auto qualified = t.qualified_name;
            out.types.push_back(std::move(t));
            walk(path, text, lines, children, qualified, out, impls);
        }
    }

    void build_types(const std::string& path, const std::string& text, const lsp::json& reply, FileSymbols& out) const {
        const lsp::LineIndex lines(text);
        const auto prefix = package_prefix(path, text);
        std::vector<std::pair<std::string, lsp::json>> impls;
        if (config_.language == "rust") {
            // the file itself is a module holding free functions
            TypeInfo module;
            module.qualified_name = prefix;
            module.kind = TypeKind::module_kind;
            module.extents.push_back({path, {0, text.size()}});
            module.origin = origin_of(prefix, path);
            if (reply.is_array()) {
                add_members(module, text, lines,
                            [&] {
                                auto fns = lsp::json::array();
                                for (const auto& s : reply)
                                    if (s.value("kind", 0) == lsp::kFunction) fns.push_back(s);
                                return fns;
                            }(),
                            false);
            }
            out.types.push_back(std::move(module));
        }
        if (reply.is_array()) walk(path, text, lines, reply, prefix, out, impls);
        for (const auto& [name, s] : impls) {
            // "impl Name", "impl<T> Name<T>", "impl Trait for Name"
            std::string target = name;
            if (auto pos = target.find(" for "); pos != std::string::npos) target = target.substr(pos + 5);
            else target = target.substr(4);
            target = std::string(trim(target));
            if (target.starts_with("<")) {
                auto close = target.find('>');
                target = std::string(trim(std::string_view(target).substr(close == std::string::npos ? 0 : close + 1)));
            }
            if (auto lt = target.find('<'); lt != std::string::npos) target.resize(lt);
            for (auto& t : out.types) {
                if (t.simple_name() != target || t.kind == TypeKind::module_kind) continue;
                t.extents.push_back({path, lines.range(s.at("range"))});
                add_members(t, text, lines, s.value("children", lsp::json::array()), false);
                break;
            }
        }
    }

    TypeOrigin origin_of(const std::string& qualified, const std::string& path) const {
        for (const auto& p : config_.stdlib_prefixes) {
            if (!p.empty() && qualified.starts_with(p)) return TypeOrigin::standard_library;
        }
        return fs::path(path).is_absolute() ? TypeOrigin::third_party : TypeOrigin::repository;
    }

    std::optional<TypeInfo> resolve_uncached(const SourceLocation& where) {
        ensure_open(where.file);
        const auto& text = file_text(where.file);
        const auto ident = lex::identifier_at(text, where.offset);
        if (!ident) return std::nullopt;
        const lsp::LineIndex lines(text);
        const lsp::json params = {{"textDocument", {{"uri", uri_of(where.file)}}},
                                  {"position", lines.position(ident->offset)}};
        auto reply = conn_->request("textDocument/typeDefinition", params);
        if (reply.is_null() || (reply.is_array() && reply.empty())) {
            reply = conn_->request("textDocument/definition", params);
        }
        if (reply.is_null() || (reply.is_array() && reply.empty())) return std::nullopt;
        const auto& loc = reply.is_array() ? reply.front() : reply;
        const auto uri = loc.contains("targetUri") ? loc.at("targetUri").get<std::string>() : loc.value("uri", std::string());
        const auto& range = loc.contains("targetSelectionRange") ? loc.at("targetSelectionRange")
                            : loc.contains("targetRange")         ? loc.at("targetRange")
                                                                  : loc.at("range");
        const std::string name(ident->name);

        const auto path = lsp::uri_to_path(uri);
        if (!path) return external_type(uri, name);
        std::error_code ec;
        const auto rel = fs::relative(*path, root_, ec);
        const bool inside = !ec && !rel.empty() && *rel.begin() != "..";
        const std::string key = inside ? rel.generic_string() : path->string();
        if (!fs::is_regular_file(*path)) return external_type(uri, name);
        const auto& target = symbols(key);
        const lsp::LineIndex target_lines(file_text(key));
        const auto at = target_lines.offset(range.at("start"));
        const TypeInfo* best = nullptr;
        for (const auto& t : target.types) {
            if (t.kind == TypeKind::module_kind && t.simple_name() != name) continue;
            for (const auto& e : t.extents) {
                if (!e.range.contains(at)) continue;
                if (best == nullptr || e.range.size() < best->extents.front().range.size()) best = &t;
            }
        }
        if (best == nullptr) return external_type(uri, name);
        return *best;
    }

    /// A type known only by location, e.g. "jdt://contents/rt.jar/java.util/List.class?=...".
    TypeInfo external_type(const std::string& uri, const std::string& name) const {
        TypeInfo t;
        std::string path = lsp::percent_decode(uri.substr(0, uri.find('?')));
        std::vector<std::string> parts;
        for (std::size_t pos = 0; pos <= path.size();) {
            auto slash = path.find('/', pos);
            if (slash == std::string::npos) slash = path.size();
            if (slash > pos) parts.push_back(path.substr(pos, slash - pos));
            pos = slash + 1;
        }
        std::string qualified = name;
        if (parts.size() >= 2 && parts.back().ends_with(".class")) {
            qualified = parts[parts.size() - 2] + "." + parts.back().substr(0, parts.back().size() - 6);
        }
        t.qualified_name = qualified;
        t.origin = origin_of(qualified, "/");
        return t;
    }

    LspConfig config_;
    std::unique_ptr<lsp::Connection> conn_;
    std::map<std::string, FileSymbols> symbols_;
    std::map<std::string, FileSymbols> imported_;
    std::set<std::string> opened_;
    std::map<std::string, std::optional<TypeInfo>> resolved_;
    std::size_t symbol_requests_ = 0;
};

}  // namespace repoctx
