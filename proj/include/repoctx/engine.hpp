#pragma once

#include <cstdlib>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repoctx/cache.hpp"
#include "repoctx/config.hpp"
#include "repoctx/generation.hpp"
#include "repoctx/harness.hpp"
#include "repoctx/http_clients.hpp"
#include "repoctx/task.hpp"
#include "repoctx/verify.hpp"
#include "repoctx/workspace.hpp"

namespace repoctx {

inline constexpr const char* kTokenVariable = "REPOCTX_API_TOKEN";

inline std::string env_token() {
    const char* v = std::getenv(kTokenVariable);
    return v == nullptr ? std::string() : std::string(v);
}

/// "replay:<file>" or an http(s) URL. No network traffic happens here.
inline std::unique_ptr<CompletionEndpoint> make_endpoint(const std::string& spec) {
    if (spec.empty()) throw ConfigError("no generation endpoint configured (--endpoint or \"endpoint\")");
    if (spec.starts_with("replay:")) {
        return std::make_unique<ReplayStubEndpoint>(ReplayStubEndpoint::from_file(spec.substr(7)));
    }
    if (spec.starts_with("http://") || spec.starts_with("https://")) {
        return std::make_unique<HttpCompletionEndpoint>(spec, env_token());
    }
    throw ConfigError("endpoint must be replay:<file> or an http(s) URL: " + spec);
}

inline std::shared_ptr<EmbeddingProvider> make_embedding_provider(const EmbeddingConfig& e) {
    if (e.backend == "http") return std::make_shared<HttpEmbeddingProvider>(e.url, e.model, e.dimension, env_token());
    return std::make_shared<HashEmbeddingProvider>(e.dimension, e.seed);
}

inline Workspace open_workspace(const RunConfig& config, std::shared_ptr<EmbeddingProvider> provider = nullptr) {
    return Workspace(config, provider ? std::move(provider) : make_embedding_provider(config.embedding));
}

struct IndexReport {
    std::size_t files = 0;
    std::size_t chunks = 0;
    std::vector<StageTiming> stages;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const {
        auto arr = nlohmann::json::array();
        for (const auto& s : stages) arr.push_back(s.to_json());
        return {{"files", files}, {"chunks", chunks}, {"stages", arr}, {"warnings", warnings}};
    }
};

/// Chunks the repository, builds or loads both indexes and warms the analyzer.
inline IndexReport cmd_index(const RunConfig& config, std::shared_ptr<EmbeddingProvider> provider = nullptr) {
    auto ws = open_workspace(config, std::move(provider));
    IndexReport report;
    const auto& idx = ws.index(&report.stages);
    report.chunks = idx.chunks.size();
    std::set<std::string> files;
    for (const auto& c : idx.chunks) files.insert(c.file_path);
    report.files = files.size();
    ws.analyzer(&report.stages);
    ws.persist();
    return report;
}

struct GenerateResult {
    std::string best;  // most frequent candidate, earliest on ties
    std::vector<std::string> candidates;
    PromptOutcome prompt;
    fs::path run_dir;
};

inline std::string majority_candidate(const std::vector<std::string>& candidates) {
    std::map<std::string, int> votes;
    for (const auto& c : candidates) ++votes[c];
    const std::string* best = nullptr;
    for (const auto& c : candidates) {
        if (best == nullptr || votes[c] > votes[*best]) best = &c;
    }
    return best == nullptr ? std::string() : *best;
}

inline HarnessOptions harness_options(const RunConfig& config) {
    HarnessOptions o;
    o.run_id = config.run_id;
    o.parallelism = config.parallelism;
    o.max_retries = config.max_retries;
    o.repocoder_iterations = config.repocoder_iterations;
    return o;
}

/// Builds the strategy's prompt, samples, post-processes and writes the
/// prompt and candidates under the run directory.
inline GenerateResult cmd_generate(RunConfig config, const GenerationTask& task, StrategyKind strategy,
                                   CompletionEndpoint* endpoint_override = nullptr,
                                   std::shared_ptr<EmbeddingProvider> provider = nullptr) {
    if (config.run_id.empty()) config.run_id = default_run_id();
    config.validate();
    std::unique_ptr<CompletionEndpoint> owned;
    CompletionEndpoint* endpoint = endpoint_override;
    if (endpoint == nullptr) {
        owned = make_endpoint(config.endpoint);
        endpoint = owned.get();
    }
    auto ws = open_workspace(config, std::move(provider));
    RunDirectory run(config.effective_run_dir());
    auto tr = generate_for_task(strategy, task, ws, *endpoint, config.gen, &run, harness_options(config));
    ws.persist();
    GenerateResult out;
    out.best = majority_candidate(tr.candidates);
    out.candidates = std::move(tr.candidates);
    out.prompt = std::move(tr.final_prompt);
    out.run_dir = run.root();
    return out;
}

struct EvalResult {
    std::vector<SummaryRow> rows;
    std::string summary;
    fs::path run_dir;
};

/// Runs each strategy over the manifest, verifies in a scratch copy of the
/// repository and writes results.jsonl and summary.txt.
inline EvalResult cmd_eval(RunConfig config, const BenchmarkManifest& manifest,
                           const std::vector<StrategyKind>& strategies, CompletionEndpoint* endpoint_override = nullptr,
                           std::shared_ptr<EmbeddingProvider> provider = nullptr) {
    if (manifest.tasks.empty()) throw ConfigError("manifest has no tasks");
    if (strategies.empty()) throw ConfigError("no strategy given");
    for (const auto& t : manifest.tasks) {
        if (t.verifier.compile.empty() || t.verifier.test.empty()) {
            throw ConfigError("task " + t.id + " needs compile and test commands");
        }
    }
    config.repository = manifest.repository;
    config.language = manifest.language;
    if (config.run_id.empty()) config.run_id = default_run_id();
    config.validate();
    std::unique_ptr<CompletionEndpoint> owned;
    CompletionEndpoint* endpoint = endpoint_override;
    if (endpoint == nullptr) {
        owned = make_endpoint(config.endpoint);
        endpoint = owned.get();
    }
    auto ws = open_workspace(config, std::move(provider));
    RunDirectory run(config.effective_run_dir());
    const auto scratch = run.root() / "scratch";
    fs::remove_all(scratch);
    copy_checkout(ws.repository(), scratch);
    Verifier verifier(scratch);

    EvalResult out;
    out.run_dir = run.root();
    for (auto s : strategies) {
        auto results = run_strategy(s, manifest, ws, *endpoint, config.gen, verifier, run, harness_options(config));
        out.rows.push_back({std::string(to_string(s)), std::move(results)});
    }
    ws.persist();
    out.summary = summary_table(out.rows);
    write_file(run.root() / "summary.txt", out.summary);
    return out;
}

}  // namespace repoctx
