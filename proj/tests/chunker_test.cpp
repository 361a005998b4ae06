#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <string>

#include "repoctx/chunker.hpp"
#include "support/test_support.hpp"

using namespace repoctx;
using repoctx::testing::TempDir;

namespace {

std::vector<SplitPoint> pts(std::initializer_list<std::pair<std::size_t, int>> list) {
    std::vector<SplitPoint> out;
    for (auto [o, p] : list) out.push_back({o, p});
    return out;
}

// Function of exactly `bytes` bytes: header, filler statements, padding comment, closing brace.
std::string java_function(const std::string& name, std::size_t bytes) {
    std::string s = "    public int " + name + "(int x) {\n";
    const std::string stmt = "        x += 1;\n";
    const std::string tail = "        return x;\n    }\n";
    while (s.size() + stmt.size() + tail.size() + 12 <= bytes) s += stmt;
    std::string pad = "        //";
    while (s.size() + pad.size() + 1 + tail.size() < bytes) pad += '-';
    s += pad + "\n" + tail;
    return s;
}

void expect_reconstructs(const std::string& text, const std::vector<CodeChunk>& chunks) {
    std::string joined;
    std::size_t expected_start = 0;
    for (const auto& c : chunks) {
        EXPECT_EQ(c.byte_range.start, expected_start);
        EXPECT_LT(c.byte_range.start, c.byte_range.end);
        EXPECT_EQ(c.text, text.substr(c.byte_range.start, c.byte_range.size()));
        joined += c.text;
        expected_start = c.byte_range.end;
    }
    EXPECT_EQ(joined, text);
}

}  // namespace

TEST(SplitPoints, EmptyText) { EXPECT_TRUE(detect_split_points("", java_profile()).empty()); }

TEST(SplitPoints, ClassWithMethod) {
    const std::string text = "class A {\n void f(){}\n}";
    EXPECT_EQ(detect_split_points(text, java_profile()), pts({{0, 1}, {10, 2}, {22, 4}}));
}

TEST(SplitPoints, PlainStatementsAreNewlinesOnly) {
    const std::string text = "int a = 1;\nint b = 2;\nint c = 3;";
    EXPECT_EQ(detect_split_points(text, java_profile()), pts({{0, 4}, {11, 4}, {22, 4}}));
}

TEST(SplitPoints, ControlFlowAndIndentation) {
    const std::string text = "  if (x) {\n    y();\n  } else {\n  for (;;) {}\n";
    EXPECT_EQ(detect_split_points(text, java_profile()), pts({{0, 3}, {11, 4}, {20, 4}, {31, 3}}));
}

TEST(SplitPoints, ReturnCallIsNotAFunctionDefinition) {
    const std::string text = "return foo(x);\nnew Bar(1);\n";
    EXPECT_EQ(detect_split_points(text, java_profile()), pts({{0, 4}, {15, 4}}));
}

TEST(SplitPoints, RustItems) {
    const std::string text = "impl Foo {\n    pub fn bar(&self) {\n        match x {}\n    }\n}\n";
    EXPECT_EQ(detect_split_points(text, rust_profile()), pts({{0, 1}, {11, 2}, {35, 3}, {54, 4}, {60, 4}}));
}

TEST(SplitPoints, CrLfLineEndings) {
    const std::string text = "class A {\r\n}\r\n";
    EXPECT_EQ(detect_split_points(text, java_profile()), pts({{0, 1}, {11, 4}}));
}

TEST(SplitPoints, OffsetsStrictlyIncrease) {
    repoctx::testing::SyntheticSource gen(7);
    const auto text = gen.java_class("p", "K", 20);
    const auto points = detect_split_points(text, java_profile());
    ASSERT_FALSE(points.empty());
    for (std::size_t i = 1; i < points.size(); ++i) EXPECT_LT(points[i - 1].offset, points[i].offset);
    for (const auto& p : points) {
        EXPECT_GE(p.priority, 1);
        EXPECT_LE(p.priority, 4);
    }
}

TEST(SplitSource, UnderBudgetIsOneChunk) {
    const std::string text(100, 'x');
    const auto chunks = split_source(text, java_profile(), 2000, "F.java");
    ASSERT_EQ(chunks.size(), 1u);
    EXPECT_EQ(chunks[0].text, text);
    EXPECT_EQ(chunks[0].doc_id, "F.java#0");
    EXPECT_FALSE(chunks[0].oversized);
}

TEST(SplitSource, TwoFunctionsSplitAtSecondDefinition) {
    const auto f1 = java_function("first", 1500);
    const auto f2 = java_function("second", 1500);
    ASSERT_EQ(f1.size(), 1500u);
    ASSERT_EQ(f2.size(), 1500u);
    const auto text = f1 + f2;
    const auto points = detect_split_points(text, java_profile());
    ASSERT_EQ(points.front(), (SplitPoint{0, kFunctionDefinition}));

    const auto chunks = split_source(text, java_profile(), 2000);
    ASSERT_EQ(chunks.size(), 2u);
    EXPECT_EQ(chunks[0].byte_range, (ByteRange{0, 1500}));
    EXPECT_EQ(chunks[1].byte_range, (ByteRange{1500, 3000}));
    EXPECT_EQ(chunks[1].split_priority, kFunctionDefinition);
    EXPECT_EQ(chunks[0].split_priority, kFileStart);
}

TEST(SplitSource, SingleLongLineIsOversized) {
    const std::string text(5000, 'a');
    const auto chunks = split_source(text, java_profile(), 2000);
    ASSERT_EQ(chunks.size(), 1u);
    EXPECT_TRUE(chunks[0].oversized);
    EXPECT_EQ(chunks[0].text.size(), 5000u);
}

TEST(SplitSource, ZeroBudgetRejected) { EXPECT_THROW(split_source("x", java_profile(), 0), Error); }

TEST(SplitSource, PrefersHigherPriorityOverFurtherPoint) {
    // a type definition early, many newline points later; budget reaches both
    std::string text = "int a;\nclass B {\n";
    for (int i = 0; i < 10; ++i) text += "  int f" + std::to_string(i) + ";\n";
    text += "}\n";
    const auto chunks = split_source(text, java_profile(), text.size() - 1);
    ASSERT_GE(chunks.size(), 2u);
    EXPECT_EQ(chunks[1].byte_range.start, 7u);
    EXPECT_EQ(chunks[1].split_priority, kTypeDefinition);
}

// Recomputes the choice the splitter must make at each boundary from the split points alone.
TEST(SplitSource, BoundariesAreLegalAndRespectPriority) {
    repoctx::testing::SyntheticSource gen(11);
    for (int round = 0; round < 20; ++round) {
        const bool rust = round % 2 == 1;
        const auto profile = rust ? rust_profile() : java_profile();
        const auto text = rust ? gen.rust_module("R", gen.pick(3, 15)) : gen.java_class("p", "J", gen.pick(3, 15));
        const std::size_t budget = static_cast<std::size_t>(gen.pick(40, 1500));
        const auto points = detect_split_points(text, profile);
        const auto chunks = split_source(text, profile, budget);
        expect_reconstructs(text, chunks);

        for (std::size_t i = 0; i + 1 < chunks.size(); ++i) {
            const auto start = chunks[i].byte_range.start;
            const auto cut = chunks[i].byte_range.end;
            auto hit = std::find_if(points.begin(), points.end(), [&](const SplitPoint& p) { return p.offset == cut; });
            ASSERT_NE(hit, points.end()) << "boundary " << cut << " is not a split point";
            EXPECT_EQ(chunks[i + 1].split_priority, hit->priority);

            int best = 99;
            std::size_t furthest = 0;
            for (const auto& p : points) {
                if (p.offset <= start || p.offset > start + budget) continue;
                if (p.priority < best || (p.priority == best && p.offset > furthest)) {
                    best = p.priority;
                    furthest = p.offset;
                }
            }
            if (best == 99) {
                // nothing fits: nearest point, oversized left part
                auto next = std::upper_bound(points.begin(), points.end(), start,
                                             [](std::size_t v, const SplitPoint& p) { return v < p.offset; });
                EXPECT_EQ(cut, next->offset);
                EXPECT_TRUE(chunks[i].oversized);
            } else {
                EXPECT_EQ(cut, furthest);
                EXPECT_FALSE(chunks[i].oversized);
            }
        }
    }
}

TEST(ChunkRepository, EmptyDirectory) {
    TempDir dir;
    const auto corpus = chunk_repository(dir.path(), java_profile(), 2000);
    EXPECT_TRUE(corpus.chunks.empty());
    EXPECT_EQ(corpus.file_count, 0u);
}

TEST(ChunkRepository, MatchesHandAnnotatedManifest) {
    const auto root = repoctx::testing::fixture_dir() / "chunk_repo";
    const auto corpus = chunk_repository(root, java_profile(), 60);
    EXPECT_EQ(corpus.file_count, 3u);
    EXPECT_EQ(chunk_manifest(corpus.chunks), read_file(repoctx::testing::fixture_dir() / "chunk_repo_budget60.jsonl"));
}

TEST(ChunkRepository, DeterministicAcrossRuns) {
    TempDir dir;
    repoctx::testing::write_synthetic_repo(dir.path(), 6, 4, 3);
    const auto a = chunk_repository(dir.path(), java_profile(), 500);
    const auto b = chunk_repository(dir.path(), java_profile(), 500);
    EXPECT_EQ(a.chunks, b.chunks);
    EXPECT_EQ(corpus_hash(a.chunks), corpus_hash(b.chunks));
    std::set<std::string> ids;
    for (const auto& c : a.chunks) EXPECT_TRUE(ids.insert(c.doc_id).second);
    EXPECT_TRUE(std::is_sorted(a.chunks.begin(), a.chunks.end(), [](const CodeChunk& x, const CodeChunk& y) {
        return std::tie(x.file_path, x.byte_range.start) < std::tie(y.file_path, y.byte_range.start);
    }));
}

TEST(ChunkRepository, SkipsHiddenDirectoriesAndForeignExtensions) {
    TempDir dir;
    write_file(dir.path() / "A.java", "class A {}\n");
    write_file(dir.path() / ".cache" / "B.java", "class B {}\n");
    write_file(dir.path() / "build.gradle", "apply plugin\n");
    const auto corpus = chunk_repository(dir.path(), java_profile(), 2000);
    ASSERT_EQ(corpus.chunks.size(), 1u);
    EXPECT_EQ(corpus.chunks[0].file_path, "A.java");
}

TEST(ChunkRepository, ContentChangeAltersHash) {
    TempDir dir;
    repoctx::testing::write_synthetic_repo(dir.path(), 3, 0, 5);
    const auto before = corpus_hash(chunk_repository(dir.path(), java_profile(), 400).chunks);
    const auto files = list_source_files(dir.path(), java_profile());
    write_file(dir.path() / files.front(), read_file(dir.path() / files.front()) + "// edit\n");
    const auto after = corpus_hash(chunk_repository(dir.path(), java_profile(), 400).chunks);
    EXPECT_NE(before, after);
}

// Monotonicity is checked on realistic generated sources across a budget sweep.
TEST(ChunkRepository, LargerBudgetNeverAddsChunksOnGeneratedSources) {
    repoctx::testing::SyntheticSource gen(23);
    for (int round = 0; round < 10; ++round) {
        const bool rust = round % 2 == 1;
        const auto profile = rust ? rust_profile() : java_profile();
        const auto text = rust ? gen.rust_module("M", 12) : gen.java_class("p", "C", 12);
        std::size_t previous = SIZE_MAX;
        for (std::size_t budget = 200; budget <= 4000; budget += 100) {
            const auto n = split_source(text, profile, budget).size();
            EXPECT_LE(n, previous) << "budget " << budget << " round " << round;
            previous = n;
        }
    }
}
