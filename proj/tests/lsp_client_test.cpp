#include <gtest/gtest.h>

#include "repoctx/lsp_client.hpp"
#include "support/test_support.hpp"

using namespace repoctx;
using repoctx::testing::fixture_dir;

namespace {

LspAnalyzer fake_server() {
    LspConfig c;
    c.command = {REPOCTX_FAKE_LSP, (fixture_dir() / "typectx_analyzer.json").string()};
    c.language = "java";
    c.stdlib_prefixes = java_profile().stdlib_prefixes;
    c.timeout = std::chrono::milliseconds(10000);
    return LspAnalyzer(std::move(c));
}

GenerationTask triu_task(const fs::path& repo) {
    GenerationTask t;
    t.id = "triu";
    t.file_path = "src/optim/CMAESOptimizer.java";
    t.signature = "private static RealMatrix triu(final RealMatrix m, int k)";
    t.language = "java";
    t.insertion_span = *locate_function_span(read_file(repo / t.file_path), t.signature);
    return t;
}

}  // namespace

TEST(LineIndex, Utf16Columns) {
    // "é" is 2 bytes and 1 unit, the emoji 4 bytes and 2 units
    const std::string text = "ab\n\xC3\xA9x\xF0\x9F\x98\x80y\n";
    const lsp::LineIndex idx(text);
    EXPECT_EQ(idx.position(3), (nlohmann::json{{"line", 1}, {"character", 0}}));
    EXPECT_EQ(idx.position(5)["character"], 1);
    EXPECT_EQ(idx.position(6)["character"], 2);
    EXPECT_EQ(idx.position(10)["character"], 4);
    for (std::size_t off : {0u, 2u, 3u, 5u, 6u, 10u, 11u}) EXPECT_EQ(idx.offset(idx.position(off)), off);
}

TEST(Uri, RoundTripWithEscapes) {
    const fs::path p = "/tmp/a dir/x#y.java";
    const auto uri = lsp::path_to_uri(p);
    EXPECT_EQ(uri, "file:///tmp/a%20dir/x%23y.java");
    EXPECT_EQ(*lsp::uri_to_path(uri), p);
    EXPECT_FALSE(lsp::uri_to_path("jdt://contents/x").has_value());
}

TEST(LspAnalyzer, DocumentSymbolsBecomeTypes) {
    const auto repo = fixture_dir() / "typectx_repo";
    auto a = fake_server();
    a.open(repo);
    const auto text = read_file(repo / "src/optim/CMAESOptimizer.java");
    const auto enclosing = a.enclosing_type({"src/optim/CMAESOptimizer.java", text.find("triu(")});
    ASSERT_TRUE(enclosing.has_value());
    EXPECT_EQ(enclosing->qualified_name, "optim.CMAESOptimizer");
    ASSERT_EQ(enclosing->fields.size(), 3u);
    EXPECT_EQ(enclosing->fields[1].type, "List<Double>");
    EXPECT_EQ(enclosing->fields[1].visibility, Visibility::private_access);
    ASSERT_EQ(enclosing->methods.size(), 3u);
    EXPECT_EQ(enclosing->methods[2].signature, "private static RealMatrix triu(final RealMatrix m, int k)");
}

TEST(LspAnalyzer, ResolvesRepositoryAndLibraryTypes) {
    const auto repo = fixture_dir() / "typectx_repo";
    auto a = fake_server();
    a.open(repo);
    const std::string file = "src/optim/CMAESOptimizer.java";
    const auto text = read_file(repo / file);
    const auto matrix = a.resolve_type_at({file, text.find("RealMatrix covariance")});
    ASSERT_TRUE(matrix.has_value());
    EXPECT_EQ(matrix->qualified_name, "linear.RealMatrix");
    EXPECT_EQ(matrix->kind, TypeKind::interface_kind);
    const auto list = a.resolve_type_at({file, text.find("List<Double>")});
    ASSERT_TRUE(list.has_value());
    EXPECT_EQ(list->qualified_name, "java.util.List");
    EXPECT_EQ(list->origin, TypeOrigin::standard_library);
}

TEST(LspAnalyzer, TypeContextMatchesFixtureAnalyzerGolden) {
    const auto repo = fixture_dir() / "typectx_repo";
    auto a = fake_server();
    a.open(repo);
    const auto ctx = extract_type_context(triu_task(repo), a, java_profile().stdlib_prefixes);
    EXPECT_EQ(ctx.text, read_file(fixture_dir() / "golden/typectx_triu.txt"));
}

TEST(LspAnalyzer, ExportedSymbolsSkipRequestsWhenUnchanged) {
    const auto repo = fixture_dir() / "typectx_repo";
    auto a = fake_server();
    a.open(repo);
    extract_type_context(triu_task(repo), a, java_profile().stdlib_prefixes);
    EXPECT_GT(a.symbol_requests(), 0u);
    const auto state = a.export_state();
    auto b = fake_server();
    b.open(repo);
    ASSERT_TRUE(b.import_state(state));
    const auto ctx = extract_type_context(triu_task(repo), b, java_profile().stdlib_prefixes);
    EXPECT_EQ(b.symbol_requests(), 0u);
    EXPECT_EQ(ctx.text, read_file(fixture_dir() / "golden/typectx_triu.txt"));
}

TEST(LspAnalyzer, MissingServerFails) {
    LspConfig c;
    c.command = {"/nonexistent/lsp-server"};
    c.language = "java";
    c.timeout = std::chrono::milliseconds(2000);
    LspAnalyzer a(c);
    EXPECT_THROW(a.open(fixture_dir() / "typectx_repo"), Error);
}
