#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "repoctx/common.hpp"
#include "repoctx/language_profile.hpp"
#include "repoctx/lexical.hpp"
#include "repoctx/task.hpp"

namespace repoctx {

class AnalyzerError : public Error {
public:
    using Error::Error;
};

enum class TypeKind { class_kind, interface_kind, enum_kind, struct_kind, trait_kind, module_kind };
enum class Visibility { public_access, protected_access, package_access, private_access };
enum class TypeOrigin { repository, standard_library, third_party };

inline std::string_view to_string(TypeKind k) {
    switch (k) {
        case TypeKind::class_kind: return "class";
        case TypeKind::interface_kind: return "interface";
        case TypeKind::enum_kind: return "enum";
        case TypeKind::struct_kind: return "struct";
        case TypeKind::trait_kind: return "trait";
        case TypeKind::module_kind: return "mod";
    }
    return "class";
}

inline TypeKind parse_type_kind(std::string_view s) {
    if (s == "class" || s == "record") return TypeKind::class_kind;
    if (s == "interface") return TypeKind::interface_kind;
    if (s == "enum") return TypeKind::enum_kind;
    if (s == "struct" || s == "union") return TypeKind::struct_kind;
    if (s == "trait") return TypeKind::trait_kind;
    if (s == "mod" || s == "module") return TypeKind::module_kind;
    throw Error("unknown type kind '" + std::string(s) + "'");
}

inline std::string_view to_string(Visibility v) {
    switch (v) {
        case Visibility::public_access: return "public";
        case Visibility::protected_access: return "protected";
        case Visibility::package_access: return "package";
        case Visibility::private_access: return "private";
    }
    return "package";
}

inline Visibility parse_visibility(std::string_view s) {
    if (s == "public" || s == "pub") return Visibility::public_access;
    if (s == "protected") return Visibility::protected_access;
    if (s == "private") return Visibility::private_access;
    return Visibility::package_access;
}

inline std::string_view to_string(TypeOrigin o) {
    switch (o) {
        case TypeOrigin::repository: return "repository";
        case TypeOrigin::standard_library: return "standard-library";
        case TypeOrigin::third_party: return "third-party";
    }
    return "repository";
}

inline TypeOrigin parse_type_origin(std::string_view s) {
    if (s == "standard-library" || s == "standard_library" || s == "stdlib") return TypeOrigin::standard_library;
    if (s == "third-party" || s == "third_party") return TypeOrigin::third_party;
    return TypeOrigin::repository;
}

struct FieldInfo {
    std::string name;
    std::string type;
    Visibility visibility = Visibility::package_access;
    friend bool operator==(const FieldInfo&, const FieldInfo&) = default;
};

/// `signature` is the declaration text without a body, as the analyzer reported it.
struct MethodInfo {
    std::string signature;
    Visibility visibility = Visibility::package_access;
    friend bool operator==(const MethodInfo&, const MethodInfo&) = default;
};

struct SourceSpan {
    std::string file;
    ByteRange range;
    friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

struct TypeInfo {
    std::string qualified_name;
    TypeKind kind = TypeKind::class_kind;
    std::vector<FieldInfo> fields;
    std::vector<MethodInfo> methods;
    TypeOrigin origin = TypeOrigin::repository;
    /// Declaration first, then any out-of-line blocks (Rust impls). Empty for library types.
    std::vector<SourceSpan> extents;

    std::string simple_name() const {
        std::string_view n = qualified_name;
        auto dot = n.rfind('.');
        auto colons = n.rfind("::");
        std::size_t cut = 0;
        if (dot != std::string_view::npos) cut = dot + 1;
        if (colons != std::string_view::npos && colons + 2 > cut) cut = colons + 2;
        return std::string(n.substr(cut));
    }

    friend bool operator==(const TypeInfo&, const TypeInfo&) = default;
};

inline nlohmann::json type_info_to_json(const TypeInfo& t) {
    nlohmann::json j;
    j["qualified_name"] = t.qualified_name;
    j["kind"] = to_string(t.kind);
    j["origin"] = to_string(t.origin);
    auto& fields = j["fields"] = nlohmann::json::array();
    for (const auto& f : t.fields) {
        fields.push_back({{"name", f.name}, {"type", f.type}, {"visibility", to_string(f.visibility)}});
    }
    auto& methods = j["methods"] = nlohmann::json::array();
    for (const auto& m : t.methods) {
        methods.push_back({{"signature", m.signature}, {"visibility", to_string(m.visibility)}});
    }
    auto& extents = j["extents"] = nlohmann::json::array();
    for (const auto& e : t.extents) extents.push_back({{"file", e.file}, {"start", e.range.start}, {"end", e.range.end}});
    return j;
}

inline TypeInfo type_info_from_json(const nlohmann::json& j) {
    TypeInfo t;
    t.qualified_name = j.at("qualified_name").get<std::string>();
    t.kind = parse_type_kind(j.value("kind", std::string("class")));
    t.origin = parse_type_origin(j.value("origin", std::string("repository")));
    for (const auto& f : j.value("fields", nlohmann::json::array())) {
        t.fields.push_back({f.at("name").get<std::string>(), f.value("type", std::string()),
                            parse_visibility(f.value("visibility", std::string("package")))});
    }
    for (const auto& m : j.value("methods", nlohmann::json::array())) {
        t.methods.push_back({m.at("signature").get<std::string>(),
                             parse_visibility(m.value("visibility", std::string("package")))});
    }
    for (const auto& e : j.value("extents", nlohmann::json::array())) {
        t.extents.push_back({e.at("file").get<std::string>(),
                             {e.at("start").get<std::size_t>(), e.at("end").get<std::size_t>()}});
    }
    return t;
}

struct TypeReference {
    std::string name;
    SourceLocation location;
};

/// Candidate type names in text[range): CamelCase identifiers (upper-case
/// first letter, at least one lower-case letter), first occurrence of each.
inline std::vector<TypeReference> scan_type_references(std::string_view text, ByteRange range,
                                                       const std::string& file, std::string_view self_name = {}) {
    static const std::set<std::string_view> kIgnored{"Self", "Override", "Deprecated", "Ok", "Err", "Some", "None"};
    std::vector<TypeReference> out;
    std::set<std::string_view> seen;
    for (const auto& id : lex::scan_identifiers(text, range)) {
        const auto name = id.name;
        if (name.empty() || name.front() < 'A' || name.front() > 'Z') continue;
        if (std::none_of(name.begin(), name.end(), [](char c) { return c >= 'a' && c <= 'z'; })) continue;
        if (name == self_name || kIgnored.count(name) != 0) continue;
        if (!seen.insert(name).second) continue;
        out.push_back({std::string(name), {file, id.offset}});
    }
    return out;
}

/// Static-analyzer access. Implementations resolve locations to types; the
/// reference scan over a type's source extents is shared.
class AnalyzerSession {
public:
    virtual ~AnalyzerSession() = default;

    virtual void open(const fs::path& root) {
        root_ = root;
        files_.clear();
    }

    /// Innermost type whose extent contains the location.
    virtual std::optional<TypeInfo> enclosing_type(const SourceLocation& where) = 0;

    /// The type named by the identifier at the location.
    virtual std::optional<TypeInfo> resolve_type_at(const SourceLocation& where) = 0;

    /// Type names occurring in the type's source, skipping `hidden`.
    virtual std::vector<TypeReference> types_referenced_by(const TypeInfo& type,
                                                           const std::optional<SourceSpan>& hidden = std::nullopt) {
        std::vector<TypeReference> out;
        std::set<std::string> seen;
        const auto self = type.simple_name();
        for (const auto& extent : type.extents) {
            const auto& text = file_text(extent.file);
            std::vector<ByteRange> pieces{extent.range};
            if (hidden && hidden->file == extent.file && hidden->range.overlaps(extent.range)) {
                pieces = {{extent.range.start, std::max(extent.range.start, hidden->range.start)},
                          {std::min(extent.range.end, hidden->range.end), extent.range.end}};
            }
            for (const auto& piece : pieces) {
                for (auto& ref : scan_type_references(text, piece, extent.file, self)) {
                    if (seen.insert(ref.name).second) out.push_back(std::move(ref));
                }
            }
        }
        return out;
    }

    /// Serializable warm state (parsed symbols, resolved types). Null when there is none.
    virtual nlohmann::json export_state() const { return nullptr; }
    /// Returns false when the state does not apply (different inputs).
    virtual bool import_state(const nlohmann::json&) { return false; }

    const fs::path& root() const noexcept { return root_; }

    const std::string& file_text(const std::string& rel) {
        auto it = files_.find(rel);
        if (it == files_.end()) it = files_.emplace(rel, read_file(root_ / rel)).first;
        return it->second;
    }

protected:
    fs::path root_;
    std::map<std::string, std::string> files_;
};

struct TypeVertex {
    TypeInfo info;
    int depth = 0;
};

/// Directed graph; an edge A -> B means A references B.
class TypeDependencyGraph {
public:
    /// Keeps the smaller depth if the vertex already exists.
    bool add_vertex(TypeInfo info, int depth) {
        if (auto* v = find_mut(info.qualified_name)) {
            v->depth = std::min(v->depth, depth);
            return false;
        }
        index_.emplace(info.qualified_name, vertices_.size());
        vertices_.push_back({std::move(info), depth});
        return true;
    }

    void add_edge(const std::string& from, const std::string& to) {
        if (find(from) == nullptr || find(to) == nullptr) throw Error("edge endpoint not in graph");
        edges_.emplace(from, to);
    }

    const TypeVertex* find(std::string_view name) const {
        auto it = index_.find(std::string(name));
        return it == index_.end() ? nullptr : &vertices_[it->second];
    }

    void remove_vertex(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) return;
        vertices_.erase(vertices_.begin() + static_cast<std::ptrdiff_t>(it->second));
        std::erase_if(edges_, [&](const auto& e) { return e.first == name || e.second == name; });
        index_.clear();
        for (std::size_t i = 0; i < vertices_.size(); ++i) index_.emplace(vertices_[i].info.qualified_name, i);
    }

    const std::vector<TypeVertex>& vertices() const noexcept { return vertices_; }
    const std::set<std::pair<std::string, std::string>>& edges() const noexcept { return edges_; }
    std::size_t size() const noexcept { return vertices_.size(); }
    bool empty() const noexcept { return vertices_.empty(); }

    /// Reference names the analyzer could not resolve, for diagnostics.
    std::vector<std::string> unresolved;

private:
    TypeVertex* find_mut(std::string_view name) {
        auto it = index_.find(std::string(name));
        return it == index_.end() ? nullptr : &vertices_[it->second];
    }

    std::vector<TypeVertex> vertices_;
    std::map<std::string, std::size_t> index_;
    std::set<std::pair<std::string, std::string>> edges_;
};

struct SeedSet {
    TypeInfo enclosing;
    std::vector<TypeInfo> signature_types;

    std::vector<TypeInfo> all() const {
        std::vector<TypeInfo> out{enclosing};
        out.insert(out.end(), signature_types.begin(), signature_types.end());
        return out;
    }
};

/// Byte range of the task's signature inside its file.
inline ByteRange signature_range(std::string_view file_text, const GenerationTask& task) {
    if (auto at = lex::find_ignoring_whitespace(file_text, task.signature, task.insertion_span.start);
        at && at->start == task.insertion_span.start) {
        return *at;
    }
    if (auto anywhere = lex::find_ignoring_whitespace(file_text, task.signature)) return *anywhere;
    return {task.insertion_span.start, task.insertion_span.start};
}

/// The type the target function belongs to plus every type named in its signature.
inline SeedSet seed_types(const GenerationTask& task, AnalyzerSession& session) {
    const auto& text = session.file_text(task.file_path);
    const auto sig = signature_range(text, task);
    auto enclosing = session.enclosing_type({task.file_path, sig.start});
    if (!enclosing) {
        throw AnalyzerError("cannot resolve the type enclosing " + task.file_path + ":" + std::to_string(sig.start));
    }
    SeedSet seeds{*enclosing, {}};
    std::set<std::string> seen{enclosing->qualified_name};
    for (const auto& ref : scan_type_references(text, sig, task.file_path)) {
        auto t = session.resolve_type_at(ref.location);
        if (t && seen.insert(t->qualified_name).second) seeds.signature_types.push_back(std::move(*t));
    }
    return seeds;
}

/// Seeds at depth 0 and every type they reference at depth 1. Nothing further.
/// References located inside `hidden` (the body being generated) are ignored.
inline TypeDependencyGraph expand_direct_neighbors(const std::vector<TypeInfo>& seeds, AnalyzerSession& session,
                                                   const std::optional<SourceSpan>& hidden = std::nullopt) {
    if (seeds.empty()) throw Error("expand_direct_neighbors: empty seed set");
    TypeDependencyGraph graph;
    for (const auto& s : seeds) graph.add_vertex(s, 0);
    for (const auto& s : seeds) {
        for (const auto& ref : session.types_referenced_by(s, hidden)) {
            if (hidden && ref.location.file == hidden->file && hidden->range.contains(ref.location.offset)) continue;
            auto t = session.resolve_type_at(ref.location);
            if (!t) {
                graph.unresolved.push_back(ref.name);
                continue;
            }
            if (t->qualified_name == s.qualified_name) continue;
            const auto name = t->qualified_name;
            graph.add_vertex(std::move(*t), 1);
            graph.add_edge(s.qualified_name, name);
        }
    }
    return graph;
}

/// Graph for a task: expansion starts from the enclosing type alone; the
/// signature's types join as its direct neighbours and are not expanded
/// further, so anything they reference stays at distance 2.
inline TypeDependencyGraph build_type_graph(const SeedSet& seeds, AnalyzerSession& session,
                                            const std::optional<SourceSpan>& hidden = std::nullopt) {
    auto graph = expand_direct_neighbors({seeds.enclosing}, session, hidden);
    for (const auto& t : seeds.signature_types) {
        graph.add_vertex(t, 1);
        graph.add_edge(seeds.enclosing.qualified_name, t.qualified_name);
    }
    return graph;
}

/// Drops non-seed vertices whose qualified name starts with any prefix.
inline TypeDependencyGraph prune_stdlib(const TypeDependencyGraph& graph, const std::vector<std::string>& prefixes) {
    TypeDependencyGraph out = graph;
    for (const auto& v : graph.vertices()) {
        if (v.depth == 0) continue;
        for (const auto& p : prefixes) {
            if (!p.empty() && v.info.qualified_name.starts_with(p)) {
                out.remove_vertex(v.info.qualified_name);
                break;
            }
        }
    }
    return out;
}

struct RenderOptions {
    std::size_t byte_budget = 8192;
    FieldSyntax field_syntax = FieldSyntax::type_then_name;
    /// Type whose private members are visible (the one owning the target function).
    std::string private_access_type;
};

inline std::string render_type(const TypeInfo& type, const RenderOptions& options) {
    const bool show_private = type.qualified_name == options.private_access_type;
    std::string out;
    out += to_string(type.kind);
    out += ' ';
    out += type.simple_name();
    out += '\n';
    for (const auto& f : type.fields) {
        if (f.visibility == Visibility::private_access && !show_private) continue;
        out += "    ";
        if (options.field_syntax == FieldSyntax::type_then_name) {
            if (f.visibility != Visibility::package_access) {
                out += to_string(f.visibility);
                out += ' ';
            }
            out += f.type + " " + f.name + ";\n";
        } else {
            if (f.visibility == Visibility::public_access) out += "pub ";
            out += f.name + ": " + f.type + ",\n";
        }
    }
    for (const auto& m : type.methods) {
        if (m.visibility == Visibility::private_access && !show_private) continue;
        out += "    ";
        out += m.signature;
        if (!m.signature.ends_with(";")) out += ';';
        out += '\n';
    }
    return out;
}

/// Seeds first (insertion order), then depth-1 types by qualified name.
/// Over budget, depth-1 types are dropped from the end; seeds always stay.
inline std::string render_type_context(const TypeDependencyGraph& graph, const RenderOptions& options = {}) {
    std::vector<const TypeVertex*> seeds;
    std::vector<const TypeVertex*> neighbors;
    for (const auto& v : graph.vertices()) (v.depth == 0 ? seeds : neighbors).push_back(&v);
    std::sort(neighbors.begin(), neighbors.end(), [](const TypeVertex* a, const TypeVertex* b) {
        return a->info.qualified_name < b->info.qualified_name;
    });

    std::vector<std::string> blocks;
    std::size_t seed_blocks = seeds.size();
    for (const auto* v : seeds) blocks.push_back(render_type(v->info, options));
    for (const auto* v : neighbors) blocks.push_back(render_type(v->info, options));

    auto total = [&] {
        std::size_t n = 0;
        for (const auto& b : blocks) n += b.size();
        return n + (blocks.empty() ? 0 : blocks.size() - 1);
    };
    while (blocks.size() > seed_blocks && total() > options.byte_budget) blocks.pop_back();

    std::string out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i > 0) out += '\n';
        out += blocks[i];
    }
    return out;
}

/// The part of the task's insertion span after its signature: the body that
/// is generated and must not leak into the type context.
inline SourceSpan hidden_body(std::string_view file_text, const GenerationTask& task) {
    const auto sig = signature_range(file_text, task);
    const std::size_t from = sig.empty() ? task.insertion_span.start : sig.end;
    return {task.file_path, {std::max(from, task.insertion_span.start), task.insertion_span.end}};
}

struct TypeContext {
    SeedSet seeds;
    TypeDependencyGraph graph;  // after pruning
    std::string text;
};

/// Seeds, direct neighbours, standard-library pruning and rendering for one task.
inline TypeContext extract_type_context(const GenerationTask& task, AnalyzerSession& session,
                                        const std::vector<std::string>& stdlib_prefixes,
                                        RenderOptions options = {}) {
    TypeContext out;
    out.seeds = seed_types(task, session);
    const auto hidden = hidden_body(session.file_text(task.file_path), task);
    out.graph = prune_stdlib(build_type_graph(out.seeds, session, hidden), stdlib_prefixes);
    options.private_access_type = out.seeds.enclosing.qualified_name;
    out.text = render_type_context(out.graph, options);
    return out;
}

}  // namespace repoctx
