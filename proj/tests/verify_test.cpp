#include <gtest/gtest.h>

#include "repoctx/verify.hpp"
#include "support/test_support.hpp"

using namespace repoctx;
using repoctx::testing::TempDir;

namespace {

const std::string kOriginal = "header\nint f() { return 0; }\nfooter\n";

GenerationTask task_for(const std::string& compile, const std::string& test) {
    GenerationTask t;
    t.id = "f";
    t.file_path = "src/f.txt";
    t.signature = "int f()";
    const auto start = kOriginal.find("int f()");
    t.insertion_span = {start, kOriginal.find('}') + 1};
    t.verifier.compile = compile;
    t.verifier.test = test;
    t.verifier.compile_timeout = std::chrono::seconds(5);
    t.verifier.test_timeout = std::chrono::seconds(1);
    return t;
}

}  // namespace

TEST(SpliceGuard, RestoresOnScopeExitAndOnThrow) {
    TempDir dir;
    const auto file = dir.path() / "a.txt";
    write_file(file, "0123456789");
    {
        SpliceGuard g(file, {2, 5}, "XY");
        EXPECT_EQ(read_file(file), "01XY56789");
    }
    EXPECT_EQ(read_file(file), "0123456789");
    try {
        SpliceGuard g(file, {0, 1}, "Z");
        throw std::runtime_error("boom");
    } catch (const std::runtime_error&) {
    }
    EXPECT_EQ(read_file(file), "0123456789");
    EXPECT_THROW(SpliceGuard(file, {5, 50}, ""), Error);
}

TEST(Verifier, SplicesCandidateAndRestoresFile) {
    TempDir dir;
    write_file(dir.path() / "src/f.txt", kOriginal);
    Verifier v(dir.path());
    const auto task = task_for("grep -q 'return 42' src/f.txt", "grep -q '^footer$' src/f.txt");
    const auto good = v.verify(task, "int f() { return 42; }");
    EXPECT_TRUE(good.compiled);
    EXPECT_TRUE(good.passed);
    EXPECT_EQ(read_file(dir.path() / "src/f.txt"), kOriginal);

    const auto bad = v.verify(task, "int f() { return 1; }");
    EXPECT_FALSE(bad.compiled);
    EXPECT_FALSE(bad.passed);
    EXPECT_EQ(read_file(dir.path() / "src/f.txt"), kOriginal);
}

TEST(Verifier, TestRunsOnlyAfterCompileAndIsMemoised) {
    TempDir dir;
    write_file(dir.path() / "src/f.txt", kOriginal);
    Verifier v(dir.path());
    const auto task = task_for("false", "touch ran-test");
    const auto out = v.verify(task, "x");
    EXPECT_FALSE(out.compiled);
    EXPECT_FALSE(fs::exists(dir.path() / "ran-test"));
    v.verify(task, "x");
    EXPECT_EQ(v.runs(), 1u);
    v.verify(task, "y");
    EXPECT_EQ(v.runs(), 2u);
}

TEST(Verifier, TimeoutCountsAsFailure) {
    TempDir dir;
    write_file(dir.path() / "src/f.txt", kOriginal);
    Verifier v(dir.path());
    const auto out = v.verify(task_for("true", "sleep 5"), "int f() { return 0; }");
    EXPECT_TRUE(out.compiled);
    EXPECT_FALSE(out.passed);
    EXPECT_TRUE(out.test_timed_out);
    EXPECT_LT(out.test_ms, 4000.0);
}

TEST(Verifier, MissingCommandsAreConfigErrors) {
    TempDir dir;
    write_file(dir.path() / "src/f.txt", kOriginal);
    Verifier v(dir.path());
    EXPECT_THROW(v.verify(task_for("", "true"), "x"), ConfigError);
    EXPECT_THROW(v.verify(task_for("true", ""), "x"), ConfigError);
}

TEST(CopyCheckout, SkipsHiddenAndBuildDirectories) {
    TempDir dir;
    write_file(dir.path() / "from/src/a.txt", "a");
    write_file(dir.path() / "from/.git/HEAD", "ref");
    write_file(dir.path() / "from/target/debug/x", "bin");
    copy_checkout(dir.path() / "from", dir.path() / "to");
    EXPECT_TRUE(fs::exists(dir.path() / "to/src/a.txt"));
    EXPECT_FALSE(fs::exists(dir.path() / "to/.git"));
    EXPECT_FALSE(fs::exists(dir.path() / "to/target"));
}
