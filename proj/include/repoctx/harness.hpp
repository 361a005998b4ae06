#pragma once

#include <cstdio>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repoctx/generation.hpp"
#include "repoctx/metrics.hpp"
#include "repoctx/postprocess.hpp"
#include "repoctx/task.hpp"
#include "repoctx/verify.hpp"
#include "repoctx/workspace.hpp"

namespace repoctx {

/// Per-run folder:
///   prompts/<strategy>/<task>[.iterN].txt   samples/<strategy>/<task>/[iterN/]<i>.json
///   candidates/<strategy>/<task>/<i>.<ext> logs/<strategy>/<task>/<i>.log
///   timings/<strategy>/<task>.json          results.jsonl   summary.txt
class RunDirectory {
public:
    explicit RunDirectory(fs::path root) : root_(std::move(root)), archive_(root_ / "samples") {
        fs::create_directories(root_);
    }

    const fs::path& root() const noexcept { return root_; }
    const SampleArchive& archive() const noexcept { return archive_; }

    static std::string safe(std::string_view name) {
        std::string out;
        for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
        return out.empty() ? "_" : out;
    }

    void write_prompt(StrategyKind s, const std::string& task, int iteration, int iterations, const std::string& text) const {
        std::string name = safe(task);
        if (iterations > 1) name += ".iter" + std::to_string(iteration);
        write_file(root_ / "prompts" / std::string(to_string(s)) / (name + ".txt"), text);
    }

    void write_candidate(StrategyKind s, const std::string& task, int index, const std::string& ext,
                         const std::string& code) const {
        write_file(root_ / "candidates" / std::string(to_string(s)) / safe(task) / (std::to_string(index) + ext), code);
    }

    void write_log(StrategyKind s, const std::string& task, int index, const std::string& text) const {
        write_file(root_ / "logs" / std::string(to_string(s)) / safe(task) / (std::to_string(index) + ".log"), text);
    }

    void write_timings(StrategyKind s, const std::string& task, const nlohmann::json& j) const {
        write_file(root_ / "timings" / std::string(to_string(s)) / (safe(task) + ".json"), j.dump(2) + "\n");
    }

    /// Earlier per-sample records keyed by (strategy, task, sample, candidate hash).
    std::map<std::string, nlohmann::json> load_results() const {
        std::map<std::string, nlohmann::json> out;
        const auto path = root_ / "results.jsonl";
        if (!fs::exists(path)) return out;
        for (const auto& line : split_lines(read_file(path))) {
            if (trim(line).empty()) continue;
            try {
                auto j = nlohmann::json::parse(line);
                out[result_key(j.at("strategy"), j.at("task"), j.at("sample"), j.at("candidate_sha256"))] = j;
            } catch (const std::exception&) {
            }
        }
        return out;
    }

    void append_result(const nlohmann::json& j) {
        std::lock_guard lock(mutex_);
        std::ofstream out(root_ / "results.jsonl", std::ios::app | std::ios::binary);
        out << j.dump() << '\n';
    }

    static std::string result_key(const std::string& strategy, const std::string& task, int sample,
                                  const std::string& candidate_hash) {
        return strategy + "\x1f" + task + "\x1f" + std::to_string(sample) + "\x1f" + candidate_hash;
    }

private:
    fs::path root_;
    SampleArchive archive_;
    std::mutex mutex_;
};

struct HarnessOptions {
    std::string run_id = "run";
    int parallelism = 4;
    int max_retries = 3;
    int repocoder_iterations = 2;
};

struct TaskRun {
    TaskResult result;
    std::vector<std::string> candidates;  // postprocessed, by sample index
    std::vector<std::string> queries;     // retrieval query per iteration
    std::vector<std::string> prompts;     // prompt per iteration
    PromptOutcome final_prompt;
};

inline std::string candidate_extension(const GenerationTask& task) {
    return task.language == "rust" ? ".rs" : ".java";
}

/// Prompt, samples and candidates for one task. Repocoder runs its
/// intermediate iterations with a single sample and feeds the processed
/// candidate back as the next retrieval query; only the final iteration's
/// samples are returned.
inline TaskRun generate_for_task(StrategyKind strategy, const GenerationTask& task, Workspace& ws,
                                 CompletionEndpoint& endpoint, const GenParams& params, RunDirectory* run,
                                 const HarnessOptions& options) {
    TaskRun out;
    out.result.task_id = task.id;
    const int iterations = strategy == StrategyKind::repocoder ? options.repocoder_iterations : 1;
    std::optional<std::string> query;
    for (int it = 1; it <= iterations; ++it) {
        auto prompt = ws.prompt_for(strategy, task, query);
        out.queries.push_back(prompt.query);
        out.prompts.push_back(prompt.bundle.full_prompt);
        if (run) run->write_prompt(strategy, task.id, it, iterations, prompt.bundle.full_prompt);

        const bool last = it == iterations;
        GenParams p = params;
        if (!last) p.n = 1;
        GenerateOptions g;
        g.task_id = task.id;
        g.run_id = options.run_id;
        g.slot = std::string(to_string(strategy)) + "/" + RunDirectory::safe(task.id) +
                 (iterations > 1 ? "/iter" + std::to_string(it) : "");
        g.parallelism = options.parallelism;
        g.max_retries = options.max_retries;
        g.archive = run ? &run->archive() : nullptr;
        GenerateReport samples;
        try {
            samples = generate(prompt.bundle.full_prompt, p, endpoint, g);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError("generate", e.what());
        }
        if (!last) {
            query = postprocess(samples.samples.front(), task.signature);
            continue;
        }
        for (std::size_t i = 0; i < samples.samples.size(); ++i) {
            out.candidates.push_back(postprocess(samples.samples[i], task.signature));
            if (run) run->write_candidate(strategy, task.id, static_cast<int>(i), candidate_extension(task), out.candidates.back());
        }
        out.final_prompt = std::move(prompt);
    }
    if (run) run->write_timings(strategy, task.id, out.final_prompt.timings_json());
    return out;
}

/// Generates and verifies every task. Task failures are recorded in the
/// result's `error` and the run continues.
inline std::vector<TaskResult> run_strategy(StrategyKind strategy, const BenchmarkManifest& manifest, Workspace& ws,
                                            CompletionEndpoint& endpoint, const GenParams& params, Verifier& verifier,
                                            RunDirectory& run, const HarnessOptions& options = {}) {
    std::vector<TaskResult> results;
    const auto previous = run.load_results();
    for (const auto& task : manifest.tasks) {
        TaskRun tr;
        try {
            tr = generate_for_task(strategy, task, ws, endpoint, params, &run, options);
            for (std::size_t i = 0; i < tr.candidates.size(); ++i) {
                const auto& code = tr.candidates[i];
                const auto hash = sha256_hex(code);
                const auto key = RunDirectory::result_key(std::string(to_string(strategy)), task.id, static_cast<int>(i), hash);
                bool compiled = false;
                bool passed = false;
                if (auto it = previous.find(key); it != previous.end()) {
                    compiled = it->second.at("compiled").get<bool>();
                    passed = it->second.at("passed").get<bool>();
                } else {
                    const auto v = verifier.verify(task, code);
                    compiled = v.compiled;
                    passed = v.passed;
                    run.write_log(strategy, task.id, static_cast<int>(i),
                                  "$ " + task.verifier.compile + "\n" + v.compile_log +
                                      (v.compile_timed_out ? "\n[timed out]\n" : "") +
                                      (v.compiled ? "$ " + task.verifier.test + "\n" + v.test_log : std::string()) +
                                      (v.test_timed_out ? "\n[timed out]\n" : ""));
                    nlohmann::ordered_json rec;
                    rec["strategy"] = to_string(strategy);
                    rec["task"] = task.id;
                    rec["sample"] = i;
                    rec["candidate_sha256"] = hash;
                    rec["compiled"] = compiled;
                    rec["passed"] = passed;
                    rec["compile_timed_out"] = v.compile_timed_out;
                    rec["test_timed_out"] = v.test_timed_out;
                    run.append_result(nlohmann::json::parse(rec.dump()));
                }
                tr.result.compile_flags.push_back(compiled);
                tr.result.pass_flags.push_back(passed);
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            tr.result.task_id = task.id;
            tr.result.compile_flags.clear();
            tr.result.pass_flags.clear();
            tr.result.error = e.what();
        }
        results.push_back(std::move(tr.result));
    }
    return results;
}

struct SummaryRow {
    std::string strategy;
    std::vector<TaskResult> results;
};

inline std::string format_percent(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *v * 100.0);
    return buf;
}

/// Markdown table of compile@{1,3,5} and pass@{1,3,5} in percent over the
/// completed tasks of each row; "-" where k exceeds the sample count.
inline std::string summary_table(const std::vector<SummaryRow>& rows) {
    static constexpr int kKs[] = {1, 3, 5};
    std::ostringstream out;
    out << "| strategy | tasks | compile@1 | compile@3 | compile@5 | pass@1 | pass@3 | pass@5 |\n";
    out << "|---|---|---|---|---|---|---|---|\n";
    std::vector<std::string> warnings;
    for (const auto& row : rows) {
        std::vector<TaskResult> done;
        for (const auto& r : row.results) {
            if (r.error.empty()) done.push_back(r);
        }
        int min_n = 0;
        for (std::size_t i = 0; i < done.size(); ++i) min_n = i == 0 ? done[i].n() : std::min(min_n, done[i].n());
        out << "| " << row.strategy << " | " << done.size() << "/" << row.results.size();
        for (Metric m : {Metric::compile, Metric::pass}) {
            for (int k : kKs) {
                std::optional<double> v;
                if (!done.empty() && k <= min_n) v = aggregate(done, k, m);
                out << " | " << format_percent(v);
            }
        }
        out << " |\n";
        if (done.size() != row.results.size()) {
            warnings.push_back("warning: " + row.strategy + ": " + std::to_string(row.results.size() - done.size()) +
                               " of " + std::to_string(row.results.size()) +
                               " tasks failed; scores cover completed tasks only");
        }
    }
    for (const auto& w : warnings) out << "\n" << w;
    if (!warnings.empty()) out << "\n";
    return out.str();
}

}  // namespace repoctx
