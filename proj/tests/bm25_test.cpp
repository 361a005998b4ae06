#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "repoctx/bm25.hpp"
#include "support/oracles.hpp"

using namespace repoctx;

namespace {

TermIndex index_of(std::initializer_list<std::pair<const char*, const char*>> docs) {
    std::vector<Document> v;
    for (auto [id, text] : docs) v.push_back({id, text});
    return build_index(std::span<const Document>(v));
}

using Terms = std::vector<std::string>;

}  // namespace

TEST(Tokenize, CamelCase) { EXPECT_EQ(tokenize("addKeySerializer"), (Terms{"add", "key", "serializer"})); }
TEST(Tokenize, Empty) { EXPECT_TRUE(tokenize("").empty()); }
TEST(Tokenize, SnakeCaseKeepsDuplicates) {
    EXPECT_EQ(tokenize("foo_bar foo_bar"), (Terms{"foo", "bar", "foo", "bar"}));
}
TEST(Tokenize, AcronymsDigitsAndPunctuation) {
    EXPECT_EQ(tokenize("HTTPServer parse2D(x); -> {}"), (Terms{"http", "server", "parse2", "d", "x"}));
    EXPECT_TRUE(tokenize("+-*/ {}();").empty());
}

TEST(StripCommentSyntax, JavadocAndRustDoc) {
    EXPECT_EQ(strip_comment_syntax("/**\n * Returns the upper\n * triangle.\n */"), "Returns the upper triangle.");
    EXPECT_EQ(strip_comment_syntax("/// Adds one.\n/// Twice."), "Adds one. Twice.");
    EXPECT_EQ(make_query("/** Sum. */", "int sum(int a)"), "Sum. int sum(int a)");
}

TEST(BuildIndex, Empty) {
    const auto idx = build_index(std::span<const Document>());
    EXPECT_EQ(idx.doc_count(), 0u);
    EXPECT_TRUE(idx.postings.empty());
    EXPECT_EQ(idx.avg_doc_length, 0.0);
}

TEST(BuildIndex, HandCountedStatistics) {
    const auto idx = index_of({{"d1", "a"}, {"d2", "a b"}, {"d3", "b"}});
    EXPECT_EQ(idx.doc_freq("a"), 2u);
    EXPECT_EQ(idx.doc_freq("b"), 2u);
    EXPECT_DOUBLE_EQ(idx.avg_doc_length, 4.0 / 3.0);
}

TEST(BuildIndex, TermFrequency) {
    const auto idx = index_of({{"d", "x x x"}});
    EXPECT_EQ(idx.term_frequency("x", 0), 3u);
    EXPECT_EQ(idx.doc_lengths[0], 3u);
}

TEST(BuildIndex, RebuildIsIdenticalAndRoundTrips) {
    const auto a = index_of({{"d1", "alpha beta"}, {"d2", "beta gamma gamma"}});
    const auto b = index_of({{"d1", "alpha beta"}, {"d2", "beta gamma gamma"}});
    EXPECT_EQ(a, b);
    const auto c = TermIndex::from_json(nlohmann::json::parse(a.to_json().dump()));
    EXPECT_EQ(a, c);
    EXPECT_EQ(c.avg_doc_length, a.avg_doc_length);
    EXPECT_TRUE(c.find_doc("d2").has_value());
}

TEST(BuildIndex, DuplicateIdsRejected) { EXPECT_THROW(index_of({{"d", "a"}, {"d", "b"}}), Error); }

TEST(Idf, FormulaValues) {
    const auto idx = index_of({{"d1", "t u"}, {"d2", "u"}, {"d3", "u"}});
    EXPECT_NEAR(idf("t", idx), std::log(2.5 / 1.5), 1e-15);
    EXPECT_NEAR(idf("t", idx), 0.5108, 5e-5);
    EXPECT_NEAR(idf("u", idx), -1.9459, 5e-5);
    EXPECT_NEAR(idf("absent", idx), 1.9459, 5e-5);
}

TEST(Bm25Score, AbsentTermContributesZero) {
    const auto idx = index_of({{"d1", "a"}, {"d2", "b"}});
    const Terms q{"b"};
    EXPECT_EQ(bm25_score(q, "d1", idx), 0.0);
}

TEST(Bm25Score, AverageLengthSingleOccurrenceEqualsIdf) {
    // every doc has length 2, so |D| = avg and the length factor is 1
    const auto idx = index_of({{"d1", "k z"}, {"d2", "y z"}, {"d3", "w z"}});
    const Terms q{"k"};
    EXPECT_NEAR(bm25_score(q, "d1", idx), idf("k", idx), 1e-15);
}

TEST(Bm25Score, MatchesBruteForceOnSmallCorpus) {
    const std::vector<std::pair<std::string, std::string>> docs{
        {"d1", "parse matrix rows"}, {"d2", "matrix matrix vector"}, {"d3", "row parse token token token"}};
    std::vector<Document> dv;
    for (const auto& [id, t] : docs) dv.push_back({id, t});
    const auto idx = build_index(std::span<const Document>(dv));
    const auto expected = oracle::bm25_rank(docs, "matrix parse");
    for (const auto& e : expected) {
        EXPECT_DOUBLE_EQ(bm25_score(tokenize("matrix parse"), e.id, idx), e.score);
    }
}

TEST(Bm25Score, UnknownDocRejected) {
    const auto idx = index_of({{"d1", "a"}});
    EXPECT_THROW(bm25_score(Terms{"a"}, "nope", idx), Error);
}

TEST(SparseTopK, EmptyIndex) {
    const auto idx = build_index(std::span<const Document>());
    EXPECT_TRUE(sparse_top_k("anything", 3, idx).entries.empty());
}

TEST(SparseTopK, LargeKRanksEverything) {
    const auto idx = index_of({{"d1", "a"}, {"d2", "b"}, {"d3", "a a"}, {"d4", "c"}, {"d5", "d"}});
    const auto r = sparse_top_k("a", 10, idx);
    ASSERT_EQ(r.entries.size(), 5u);
    EXPECT_GT(r.entries[0].score, 0.0);
    // zero-score ties fall back to doc_id order
    EXPECT_EQ(r.entries[2].doc_id, "d2");
    EXPECT_EQ(r.entries[3].doc_id, "d4");
    EXPECT_EQ(r.entries[4].doc_id, "d5");
}

TEST(SparseTopK, NegativeIdfRanksMatchesBelowNonMatches) {
    // "a" occurs in 2 of 3 docs, so its IDF is negative and is not clamped
    const auto idx = index_of({{"d1", "a"}, {"d2", "b"}, {"d3", "a a"}});
    const auto r = sparse_top_k("a", 3, idx);
    ASSERT_EQ(r.entries.size(), 3u);
    EXPECT_EQ(r.entries[0].doc_id, "d2");
    EXPECT_LT(r.entries[1].score, 0.0);
}

TEST(SparseTopK, FiveDocTopTwoMatchesOracle) {
    const std::vector<std::pair<std::string, std::string>> docs{{"a", "getRowDimension rows"},
                                                                {"b", "getEntry row column"},
                                                                {"c", "vector norm"},
                                                                {"d", "row row row column"},
                                                                {"e", "matrix triangle upper"}};
    std::vector<Document> dv;
    for (const auto& [id, t] : docs) dv.push_back({id, t});
    const auto idx = build_index(std::span<const Document>(dv));
    const auto got = sparse_top_k("upper row column", 2, idx);
    const auto want = oracle::bm25_rank(docs, "upper row column");
    ASSERT_EQ(got.entries.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(got.entries[i].doc_id, want[i].id);
        EXPECT_EQ(got.entries[i].score, want[i].score);
    }
}

TEST(SparseTopK, TfMonotonicityWhenIdfPositive) {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Document> docs;
        for (int d = 0; d < 8; ++d) {
            std::string text = "w" + std::to_string(d);
            for (int f = std::uniform_int_distribution<int>(0, 6)(rng); f > 0; --f) text += " filler";
            docs.push_back({"d" + std::to_string(d), text});
        }
        docs[0].text = "w0 filler filler filler filler filler hit";
        const auto base = build_index(std::span<const Document>(docs));
        double previous = bm25_score(Terms{"hit"}, "d0", base);
        // turn fillers of d0 into "hit": lengths stay fixed, DF stays 1 so IDF stays positive
        for (int extra = 1; extra < 6; ++extra) {
            docs[0].text.replace(docs[0].text.find("filler"), 6, "hit");
            const auto idx = build_index(std::span<const Document>(docs));
            ASSERT_GT(idf("hit", idx), 0.0);
            const double s = bm25_score(Terms{"hit"}, "d0", idx);
            EXPECT_GE(s, previous);
            previous = s;
        }
    }
}

TEST(Bm25Params, Validation) {
    EXPECT_THROW((Bm25Params{-0.1, 0.5}.validate()), ConfigError);
    EXPECT_THROW((Bm25Params{1.0, 1.5}.validate()), ConfigError);
    EXPECT_NO_THROW(Bm25Params{}.validate());
}
