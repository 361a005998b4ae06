#pragma once

#include <map>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "repoctx/common.hpp"
#include "repoctx/subprocess.hpp"
#include "repoctx/task.hpp"

namespace repoctx {

struct VerifyOutcome {
    bool compiled = false;
    bool passed = false;
    bool compile_timed_out = false;
    bool test_timed_out = false;
    std::string compile_log;
    std::string test_log;
    double compile_ms = 0.0;
    double test_ms = 0.0;

    nlohmann::json to_json() const {
        return {{"compiled", compiled},     {"passed", passed},         {"compile_timed_out", compile_timed_out},
                {"test_timed_out", test_timed_out}, {"compile_ms", compile_ms}, {"test_ms", test_ms},
                {"compile_log", compile_log}, {"test_log", test_log}};
    }
};

/// Replaces a byte range of a file for the lifetime of the object and puts
/// the original bytes back afterwards, also when unwinding.
class SpliceGuard {
public:
    SpliceGuard(fs::path file, ByteRange span, std::string_view replacement) : file_(std::move(file)) {
        original_ = read_file(file_);
        if (span.end > original_.size() || span.start > span.end) {
            throw Error("insertion span out of bounds for " + file_.string());
        }
        std::string spliced = original_.substr(0, span.start);
        spliced += replacement;
        spliced += original_.substr(span.end);
        write_file(file_, spliced);
    }

    SpliceGuard(const SpliceGuard&) = delete;
    SpliceGuard& operator=(const SpliceGuard&) = delete;

    ~SpliceGuard() {
        try {
            write_file(file_, original_);
        } catch (...) {
        }
    }

private:
    fs::path file_;
    std::string original_;
};

/// Splices candidates into a checkout and runs the task's compile and test
/// commands. Calls on one Verifier are serialised (one checkout); outcomes
/// are memoised per (task, candidate).
class Verifier {
public:
    explicit Verifier(fs::path checkout) : checkout_(std::move(checkout)) {}

    const fs::path& checkout() const noexcept { return checkout_; }
    std::size_t runs() const noexcept { return runs_; }

    VerifyOutcome verify(const GenerationTask& task, const std::string& candidate) {
        if (task.verifier.compile.empty()) throw ConfigError("task " + task.id + " has no compile command");
        if (task.verifier.test.empty()) throw ConfigError("task " + task.id + " has no test command");
        std::lock_guard lock(mutex_);
        const auto key = Sha256().field(task.id).field(task.file_path).field(candidate).hex();
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;

        ++runs_;
        VerifyOutcome out;
        {
            SpliceGuard guard(checkout_ / task.file_path, task.insertion_span, candidate);
            const auto compile = run_shell(task.verifier.compile, checkout_, task.verifier.compile_timeout);
            out.compiled = compile.ok();
            out.compile_timed_out = compile.timed_out;
            out.compile_log = compile.output;
            out.compile_ms = compile.elapsed_ms;
            if (out.compiled) {
                const auto test = run_shell(task.verifier.test, checkout_, task.verifier.test_timeout);
                out.passed = test.ok();
                out.test_timed_out = test.timed_out;
                out.test_log = test.output;
                out.test_ms = test.elapsed_ms;
            }
        }
        memo_.emplace(key, out);
        return out;
    }

private:
    fs::path checkout_;
    std::mutex mutex_;
    std::map<std::string, VerifyOutcome> memo_;
    std::size_t runs_ = 0;
};

/// Copies a repository for verification, leaving out hidden directories and
/// build output folders.
inline void copy_checkout(const fs::path& from, const fs::path& to) {
    fs::create_directories(to);
    for (auto it = fs::recursive_directory_iterator(from); it != fs::recursive_directory_iterator(); ++it) {
        const auto name = it->path().filename().string();
        if (it->is_directory() && (name.starts_with(".") || name == "target" || name == "build")) {
            it.disable_recursion_pending();
            continue;
        }
        const auto dest = to / fs::relative(it->path(), from);
        if (it->is_directory()) {
            fs::create_directories(dest);
        } else if (it->is_regular_file()) {
            fs::copy_file(it->path(), dest, fs::copy_options::overwrite_existing);
        }
    }
}

}  // namespace repoctx
