#include <gtest/gtest.h>

#include "repoctx/fixture_analyzer.hpp"
#include "repoctx/type_context.hpp"
#include "support/test_support.hpp"

using namespace repoctx;
using repoctx::testing::fixture_dir;
using repoctx::testing::TempDir;

namespace {

const char* kTriuSignature = "private static RealMatrix triu(final RealMatrix m, int k)";

GenerationTask task_for(const fs::path& repo, const std::string& file, const std::string& signature,
                        const std::string& language = "java") {
    GenerationTask t;
    t.id = "t";
    t.file_path = file;
    t.signature = signature;
    t.language = language;
    const auto span = locate_function_span(read_file(repo / file), signature);
    if (!span) throw Error("signature not found in fixture");
    t.insertion_span = *span;
    return t;
}

struct OptimizerRepo {
    fs::path repo = fixture_dir() / "typectx_repo";
    FixtureAnalyzer analyzer{fixture_dir() / "typectx_analyzer.json"};
    GenerationTask task;
    OptimizerRepo() {
        analyzer.open(repo);
        task = task_for(repo, "src/optim/CMAESOptimizer.java", kTriuSignature);
    }
};

std::vector<std::string> names(const std::vector<TypeInfo>& types) {
    std::vector<std::string> out;
    for (const auto& t : types) out.push_back(t.qualified_name);
    return out;
}

TypeInfo type(const std::string& name, const std::string& file = {}) {
    TypeInfo t;
    t.qualified_name = name;
    if (!file.empty()) t.extents.push_back({file, {0, 0}});
    return t;
}

// Two-type repository in a scratch directory, with its analyzer manifest.
struct RustRepo {
    TempDir dir;
    std::unique_ptr<FixtureAnalyzer> analyzer;
    RustRepo() {
        write_file(dir.path() / "src/lib.rs",
                   "pub struct Point {\n    pub x: f64,\n    pub y: f64,\n}\n\n"
                   "impl Point {\n    pub fn norm(&self) -> f64 {\n        (self.x * self.x + self.y * self.y).sqrt()\n    }\n}\n\n"
                   "pub fn add(a: i32, b: i32) -> i32 {\n    a + b\n}\n\n"
                   "pub fn centroid(points: &[Point]) -> Point {\n    Point { x: 0.0, y: 0.0 }\n}\n");
        write_file(dir.path() / "analyzer.json", R"({"types": [
            {"qualified_name": "geo", "kind": "mod", "file": "src/lib.rs"},
            {"qualified_name": "geo::Point", "kind": "struct", "file": "src/lib.rs",
             "fields": [{"name": "x", "type": "f64", "visibility": "pub"}, {"name": "y", "type": "f64", "visibility": "pub"}],
             "methods": [{"signature": "pub fn norm(&self) -> f64", "visibility": "pub"}]}]})");
        analyzer = std::make_unique<FixtureAnalyzer>(dir.path() / "analyzer.json");
        analyzer->open(dir.path());
    }
};

}  // namespace

TEST(SeedTypes, EnclosingClassAndSignatureType) {
    OptimizerRepo f;
    const auto seeds = seed_types(f.task, f.analyzer);
    EXPECT_EQ(names(seeds.all()), (std::vector<std::string>{"optim.CMAESOptimizer", "linear.RealMatrix"}));
}

TEST(SeedTypes, PrimitiveFreeFunctionSeedsOnlyModule) {
    RustRepo r;
    const auto t = task_for(r.dir.path(), "src/lib.rs", "pub fn add(a: i32, b: i32) -> i32", "rust");
    const auto seeds = seed_types(t, *r.analyzer);
    EXPECT_EQ(names(seeds.all()), (std::vector<std::string>{"geo"}));
}

TEST(SeedTypes, SignatureStructJoinsSeeds) {
    RustRepo r;
    const auto t = task_for(r.dir.path(), "src/lib.rs", "pub fn centroid(points: &[Point]) -> Point", "rust");
    const auto seeds = seed_types(t, *r.analyzer);
    EXPECT_EQ(names(seeds.all()), (std::vector<std::string>{"geo", "geo::Point"}));
}

TEST(SeedTypes, UnresolvedEnclosingTypeIsAnError) {
    RustRepo r;
    auto t = task_for(r.dir.path(), "src/lib.rs", "pub fn add(a: i32, b: i32) -> i32", "rust");
    write_file(r.dir.path() / "empty.json", R"({"types": []})");
    FixtureAnalyzer none(r.dir.path() / "empty.json");
    none.open(r.dir.path());
    EXPECT_THROW(seed_types(t, none), AnalyzerError);
}

TEST(ExpandDirectNeighbors, DistanceTwoTypeIsAbsent) {
    OptimizerRepo f;
    const auto seeds = seed_types(f.task, f.analyzer);
    const auto graph = build_type_graph(seeds, f.analyzer, hidden_body(f.analyzer.file_text(f.task.file_path), f.task));
    ASSERT_NE(graph.find("linear.RealMatrix"), nullptr);
    EXPECT_EQ(graph.find("linear.RealMatrix")->depth, 1);
    EXPECT_EQ(graph.find("optim.CMAESOptimizer")->depth, 0);
    EXPECT_EQ(graph.find("linear.RealVector"), nullptr);
    for (const auto& v : graph.vertices()) EXPECT_LE(v.depth, 1);
    EXPECT_EQ(graph.edges().count({"optim.CMAESOptimizer", "linear.RealMatrix"}), 1u);
    for (const auto& [from, to] : graph.edges()) {
        EXPECT_NE(graph.find(from), nullptr);
        EXPECT_NE(graph.find(to), nullptr);
    }
}

TEST(ExpandDirectNeighbors, SeedWithoutReferences) {
    OptimizerRepo f;
    const auto vector = f.analyzer.resolve_name("linear.RealVector");
    ASSERT_TRUE(vector);
    const auto graph = expand_direct_neighbors({*vector}, f.analyzer);
    EXPECT_EQ(graph.size(), 1u);
    EXPECT_TRUE(graph.edges().empty());
}

TEST(ExpandDirectNeighbors, MutuallyReferencingSeeds) {
    TempDir dir;
    write_file(dir.path() / "Alpha.java", "class Alpha {\n    Beta peer;\n}\n");
    write_file(dir.path() / "Beta.java", "class Beta {\n    Alpha peer;\n}\n");
    write_file(dir.path() / "types.json", R"({"types": [
        {"qualified_name": "p.Alpha", "kind": "class", "file": "Alpha.java"},
        {"qualified_name": "p.Beta", "kind": "class", "file": "Beta.java"}]})");
    FixtureAnalyzer a(dir.path() / "types.json");
    a.open(dir.path());
    const auto graph = expand_direct_neighbors({*a.resolve_name("p.Alpha"), *a.resolve_name("p.Beta")}, a);
    EXPECT_EQ(graph.size(), 2u);
    EXPECT_EQ(graph.find("p.Alpha")->depth, 0);
    EXPECT_EQ(graph.find("p.Beta")->depth, 0);
    EXPECT_EQ(graph.edges(),
              (std::set<std::pair<std::string, std::string>>{{"p.Alpha", "p.Beta"}, {"p.Beta", "p.Alpha"}}));
}

TEST(ExpandDirectNeighbors, TargetBodyDoesNotLeak) {
    TempDir dir;
    repoctx::testing::copy_tree(fixture_dir() / "typectx_repo", dir.path());
    const auto file = dir.path() / "src/optim/CMAESOptimizer.java";
    auto text = read_file(file);
    const std::string marker = "return new Array2DRowRealMatrix(d, false);";
    text.replace(text.find(marker), marker.size(), "RealVector unused = null; " + marker);
    write_file(file, text);
    FixtureAnalyzer a(fixture_dir() / "typectx_analyzer.json");
    a.open(dir.path());
    const auto t = task_for(dir.path(), "src/optim/CMAESOptimizer.java", kTriuSignature);
    const auto ctx = extract_type_context(t, a, java_profile().stdlib_prefixes);
    EXPECT_EQ(ctx.graph.find("linear.RealVector"), nullptr);
    // without hiding the body the reference would surface
    const auto leaky = build_type_graph(seed_types(t, a), a);
    EXPECT_NE(leaky.find("linear.RealVector"), nullptr);
}

TEST(PruneStdlib, RemovesLibraryTypesKeepsSeeds) {
    TypeDependencyGraph g;
    g.add_vertex(type("app.Main"), 0);
    g.add_vertex(type("java.util.Seed"), 0);
    g.add_vertex(type("app.Model"), 1);
    for (const char* lib : {"java.util.List", "java.util.Map", "javax.swing.JPanel"}) {
        g.add_vertex(type(lib), 1);
        g.add_edge("app.Main", lib);
    }
    g.add_edge("app.Main", "app.Model");
    const auto pruned = prune_stdlib(g, java_profile().stdlib_prefixes);
    std::vector<std::string> left;
    for (const auto& v : pruned.vertices()) left.push_back(v.info.qualified_name);
    EXPECT_EQ(left, (std::vector<std::string>{"app.Main", "java.util.Seed", "app.Model"}));
    EXPECT_EQ(pruned.edges().size(), 1u);

    const auto twice = prune_stdlib(pruned, java_profile().stdlib_prefixes);
    EXPECT_EQ(render_type_context(twice), render_type_context(pruned));
    EXPECT_EQ(prune_stdlib(g, {}).size(), g.size());
}

TEST(PruneStdlib, OptimizerFixtureKeepsTwoRepositoryNeighbours) {
    OptimizerRepo f;
    const auto seeds = seed_types(f.task, f.analyzer);
    const auto graph = build_type_graph(seeds, f.analyzer, hidden_body(f.analyzer.file_text(f.task.file_path), f.task));
    ASSERT_NE(graph.find("java.util.List"), nullptr);
    ASSERT_NE(graph.find("java.util.ArrayList"), nullptr);
    ASSERT_NE(graph.find("java.lang.Double"), nullptr);
    const auto pruned = prune_stdlib(graph, java_profile().stdlib_prefixes);
    std::vector<std::string> left;
    for (const auto& v : pruned.vertices()) {
        if (v.depth == 1) left.push_back(v.info.qualified_name);
    }
    std::sort(left.begin(), left.end());
    EXPECT_EQ(left, (std::vector<std::string>{"linear.Array2DRowRealMatrix", "linear.RealMatrix"}));
}

TEST(RenderTypeContext, EmptyGraph) { EXPECT_EQ(render_type_context(TypeDependencyGraph{}), ""); }

TEST(RenderTypeContext, SingleTypeGolden) {
    TypeInfo t = type("geom.Point");
    t.fields.push_back({"x", "int", Visibility::public_access});
    t.methods.push_back({"public double norm()", Visibility::public_access});
    TypeDependencyGraph g;
    g.add_vertex(t, 0);
    EXPECT_EQ(render_type_context(g), read_file(fixture_dir() / "golden/render_single_type.txt"));
}

TEST(RenderTypeContext, OptimizerGolden) {
    OptimizerRepo f;
    const auto ctx = extract_type_context(f.task, f.analyzer, java_profile().stdlib_prefixes);
    EXPECT_EQ(ctx.text, read_file(fixture_dir() / "golden/typectx_triu.txt"));
    EXPECT_NE(ctx.text.find("int getRowDimension();"), std::string::npos);
    EXPECT_EQ(ctx.text.find("RealVector"), std::string::npos);
    EXPECT_EQ(ctx.text.find("double[][] data"), std::string::npos);  // private member of a foreign type
}

TEST(RenderTypeContext, BudgetDropsAlphabeticallyLastNeighbourFirst) {
    OptimizerRepo f;
    RenderOptions opts;
    const auto full = extract_type_context(f.task, f.analyzer, java_profile().stdlib_prefixes, opts);
    opts.byte_budget = full.text.size() - 1;
    const auto cut = extract_type_context(f.task, f.analyzer, java_profile().stdlib_prefixes, opts);
    EXPECT_EQ(cut.text.find("interface RealMatrix"), std::string::npos);
    EXPECT_NE(cut.text.find("class Array2DRowRealMatrix"), std::string::npos);
    opts.byte_budget = 1;
    const auto seeds_only = extract_type_context(f.task, f.analyzer, java_profile().stdlib_prefixes, opts);
    EXPECT_EQ(seeds_only.text.rfind("class CMAESOptimizer", 0), 0u);
    EXPECT_EQ(seeds_only.text.find("Array2DRowRealMatrix\n"), std::string::npos);
}

TEST(RenderTypeContext, RustFieldSyntax) {
    RustRepo r;
    const auto t = task_for(r.dir.path(), "src/lib.rs", "pub fn centroid(points: &[Point]) -> Point", "rust");
    RenderOptions opts;
    opts.field_syntax = FieldSyntax::name_colon_type;
    const auto ctx = extract_type_context(t, *r.analyzer, rust_profile().stdlib_prefixes, opts);
    EXPECT_EQ(ctx.text, "mod geo\n\nstruct Point\n    pub x: f64,\n    pub y: f64,\n    pub fn norm(&self) -> f64;\n");
}

TEST(FixtureAnalyzer, ExtentsAndRoundTrip) {
    RustRepo r;
    const auto point = r.analyzer->resolve_name("Point");
    ASSERT_TRUE(point);
    EXPECT_EQ(point->extents.size(), 2u);  // struct body and impl block
    const auto text = read_file(r.dir.path() / "src/lib.rs");
    const auto inside_impl = text.find("sqrt");
    const auto enclosing = r.analyzer->enclosing_type({"src/lib.rs", inside_impl});
    ASSERT_TRUE(enclosing);
    EXPECT_EQ(enclosing->qualified_name, "geo::Point");
    EXPECT_EQ(type_info_from_json(type_info_to_json(*point)), *point);
}
