#pragma once

#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repoctx/bm25.hpp"
#include "repoctx/cache.hpp"
#include "repoctx/chunker.hpp"
#include "repoctx/config.hpp"
#include "repoctx/dense.hpp"
#include "repoctx/fixture_analyzer.hpp"
#include "repoctx/fusion.hpp"
#include "repoctx/lsp_client.hpp"
#include "repoctx/prompt.hpp"
#include "repoctx/type_context.hpp"

namespace repoctx {

enum class StrategyKind { vanilla, in_file, repocoder, full };

inline std::string_view to_string(StrategyKind s) {
    switch (s) {
        case StrategyKind::vanilla: return "vanilla";
        case StrategyKind::in_file: return "in_file";
        case StrategyKind::repocoder: return "repocoder";
        case StrategyKind::full: return "full";
    }
    return "?";
}

inline StrategyKind parse_strategy(std::string_view s) {
    if (s == "vanilla") return StrategyKind::vanilla;
    if (s == "in_file" || s == "in-file" || s == "infile") return StrategyKind::in_file;
    if (s == "repocoder") return StrategyKind::repocoder;
    if (s == "full") return StrategyKind::full;
    throw ConfigError("unknown strategy '" + std::string(s) + "' (vanilla, in_file, repocoder, full)");
}

inline bool uses_retrieval(StrategyKind s) { return s == StrategyKind::repocoder || s == StrategyKind::full; }

struct StageTiming {
    std::string stage;
    double ms = 0.0;
    std::string cache;  // "hit", "miss" or empty when not cached

    nlohmann::json to_json() const {
        nlohmann::json j = {{"stage", stage}, {"ms", ms}};
        if (!cache.empty()) j["cache"] = cache;
        return j;
    }
};

struct PromptOutcome {
    PromptBundle bundle;
    std::string query;  // retrieval query, empty when none
    std::vector<std::string> retrieved;  // fused order, best first
    std::vector<StageTiming> stages;     // set-up work done during this call, then per-prompt stages
    double total_ms = 0.0;

    nlohmann::json timings_json() const {
        auto arr = nlohmann::json::array();
        for (const auto& s : stages) arr.push_back(s.to_json());
        return {{"stages", arr}, {"total_ms", total_ms}};
    }
};

/// One repository with its indexes and analyzer session. Indexes and the
/// analyzer are built on first use (cold), loaded from the cache when a valid
/// entry exists, and kept in memory for later tasks (warm).
class Workspace {
public:
    /// `provider` overrides the configured embedding backend (tests, benchmarks).
    explicit Workspace(RunConfig config, std::shared_ptr<EmbeddingProvider> provider = nullptr)
        : config_(std::move(config)), profile_(config_.profile()), store_(config_.effective_cache_dir()) {
        config_.validate();
        repo_ = fs::absolute(config_.repository);
        if (!fs::is_directory(repo_)) throw ConfigError("repository not found: " + repo_.string());
        provider_ = provider ? std::move(provider) : make_provider();
    }

    ~Workspace() {
        try {
            persist();
        } catch (...) {
        }
    }

    const RunConfig& config() const noexcept { return config_; }
    const LanguageProfile& profile() const noexcept { return profile_; }
    const fs::path& repository() const noexcept { return repo_; }
    const CacheStore& cache() const noexcept { return store_; }
    EmbeddingProvider& provider() noexcept { return *provider_; }

    /// Chunks plus both indexes; set-up timings are appended to `stages`.
    const HybridIndex& index(std::vector<StageTiming>* stages = nullptr) {
        std::lock_guard lock(index_mutex_);
        if (!index_) build_index(stages);
        return *index_;
    }

    bool index_ready() const {
        std::lock_guard lock(index_mutex_);
        return index_.has_value();
    }

    /// Opens the analyzer if needed; null when the configuration has none.
    AnalyzerSession* analyzer(std::vector<StageTiming>* stages = nullptr) {
        std::lock_guard lock(analyzer_mutex_);
        return analyzer_locked(stages);
    }

    RetrievalResult retrieve(const std::string& query, const GenerationTask& task,
                             std::vector<StageTiming>* stages = nullptr) {
        const auto& idx = index(stages);
        return retrieve_context(query, config_.k(), idx, *provider_, config_.fusion, config_.bm25,
                                ExcludedSpan{task.file_path, task.insertion_span});
    }

    std::string type_context(const GenerationTask& task, std::vector<StageTiming>* stages = nullptr) {
        std::lock_guard lock(analyzer_mutex_);
        auto* session = analyzer_locked(stages);
        if (session == nullptr) {
            throw ConfigError("the full strategy needs a static analyzer (set analyzer.backend to fixture or lsp)");
        }
        RenderOptions options;
        options.byte_budget = config_.type_context_budget;
        options.field_syntax = profile_.field_syntax;
        try {
            return extract_type_context(task, *session, profile_.stdlib_prefixes, options).text;
        } catch (const AnalyzerError& e) {
            throw StageError("type_context", e.what());
        }
    }

    std::string file_text(const std::string& rel) const { return read_file(repo_ / rel); }

    /// Builds the prompt for a strategy. For retrieval strategies `query`
    /// replaces the default docstring-plus-signature query. Retrieval and
    /// type-context extraction run concurrently for the full strategy.
    PromptOutcome prompt_for(StrategyKind strategy, const GenerationTask& task,
                             const std::optional<std::string>& query = std::nullopt) {
        const Stopwatch total;
        PromptOutcome out;
        const auto budget = config_.prompt_budget;
        switch (strategy) {
            case StrategyKind::vanilla:
                out.bundle = build_prompt("", {}, task, budget, profile_.line_comment);
                break;
            case StrategyKind::in_file:
                out.bundle = build_in_file_prompt(file_text(task.file_path), task, budget);
                break;
            case StrategyKind::repocoder:
            case StrategyKind::full: {
                out.query = query.value_or(make_query(task.docstring, task.signature));
                std::vector<StageTiming> retrieval_setup;
                std::vector<StageTiming> analyzer_setup;
                double retrieval_ms = 0.0;
                double type_ms = 0.0;
                auto retrieval = std::async(std::launch::async, [&] {
                    index(&retrieval_setup);
                    const Stopwatch sw;
                    auto r = retrieve(out.query, task);
                    retrieval_ms = sw.elapsed_ms();
                    return r;
                });
                std::string type_ctx;
                std::exception_ptr type_error;
                if (strategy == StrategyKind::full) {
                    try {
                        analyzer(&analyzer_setup);
                        const Stopwatch sw;
                        type_ctx = type_context(task);
                        type_ms = sw.elapsed_ms();
                    } catch (...) {
                        type_error = std::current_exception();
                    }
                }
                RetrievalResult r;
                try {
                    r = retrieval.get();
                } catch (const ConfigError&) {
                    throw;
                } catch (const StageError&) {
                    throw;
                } catch (const std::exception& e) {
                    throw StageError("retrieval", e.what());
                }
                if (type_error) std::rethrow_exception(type_error);
                out.stages.insert(out.stages.end(), retrieval_setup.begin(), retrieval_setup.end());
                out.stages.insert(out.stages.end(), analyzer_setup.begin(), analyzer_setup.end());
                out.stages.push_back({"retrieval", retrieval_ms, ""});
                if (strategy == StrategyKind::full) out.stages.push_back({"type_context", type_ms, ""});
                for (const auto& c : r.chunks) out.retrieved.push_back(c.doc_id);
                const Stopwatch sw;
                out.bundle = build_prompt(type_ctx, r.chunks, task, budget, profile_.line_comment);
                out.stages.push_back({"assemble", sw.elapsed_ms(), ""});
                break;
            }
        }
        out.total_ms = total.elapsed_ms();
        return out;
    }

    /// Writes pending embeddings and the analyzer state to the cache.
    void persist() {
        if (cached_provider_) cached_provider_->flush();
        std::lock_guard lock(analyzer_mutex_);
        if (analyzer_ && analyzer_state_key_) {
            auto state = analyzer_->export_state();
            if (!state.is_null()) store_.put("analyzer_state", *analyzer_state_key_, analyzer_state_inputs_, state);
        }
    }

    /// Cache keys of the artifacts this configuration would use.
    nlohmann::json sparse_key_inputs(const std::string& corpus) const {
        return {{"kind", "sparse_index"}, {"format", 1}, {"corpus", corpus}, {"profile", profile_.name},
                {"chunk_size", config_.chunk_size()}};
    }
    nlohmann::json vector_key_inputs(const std::string& corpus) const {
        return {{"kind", "vector_index"}, {"format", 1}, {"corpus", corpus}, {"profile", profile_.name},
                {"chunk_size", config_.chunk_size()}, {"provider", provider_->identity()}};
    }

private:
    std::shared_ptr<EmbeddingProvider> make_provider() const {
        const auto& e = config_.embedding;
        if (e.backend == "http") {
            throw ConfigError("http embedding backend is created by the command layer");
        }
        return std::make_shared<HashEmbeddingProvider>(e.dimension, e.seed);
    }

    void build_index(std::vector<StageTiming>* stages) {
        std::vector<StageTiming> local;
        Stopwatch sw;
        ChunkCorpus corpus;
        try {
            corpus = chunk_repository(repo_, profile_, config_.chunk_size());
        } catch (const Error& e) {
            throw StageError("chunk", e.what());
        }
        const auto corpus_id = corpus_hash(corpus.chunks);
        local.push_back({"chunk", sw.elapsed_ms(), ""});

        if (!cached_provider_) cached_provider_ = std::make_unique<CachedEmbeddingProvider>(*provider_, store_);
        const auto sparse_inputs = sparse_key_inputs(corpus_id);
        const auto vector_inputs = vector_key_inputs(corpus_id);
        const auto sparse_key = CacheStore::make_key(sparse_inputs);
        const auto vector_key = CacheStore::make_key(vector_inputs);

        StageTiming sparse_t{"sparse_index", 0.0, "hit"};
        StageTiming dense_t{"vector_index", 0.0, "hit"};
        auto sparse_job = std::async(std::launch::async, [&] {
            const Stopwatch t;
            TermIndex idx;
            if (auto hit = store_.get("sparse_index", sparse_key)) {
                idx = TermIndex::from_json(*hit);
            } else {
                sparse_t.cache = "miss";
                idx = build_index_from(corpus.chunks);
                store_.put("sparse_index", sparse_key, sparse_inputs, idx.to_json());
            }
            sparse_t.ms = t.elapsed_ms();
            return idx;
        });
        VectorIndex dense;
        {
            const Stopwatch t;
            try {
                if (auto hit = store_.get("vector_index", vector_key)) {
                    dense = VectorIndex::from_json(*hit);
                } else {
                    dense_t.cache = "miss";
                    dense = build_vector_index(corpus.chunks, *cached_provider_);
                    store_.put("vector_index", vector_key, vector_inputs, dense.to_json());
                    cached_provider_->flush();
                }
            } catch (const ProviderError& e) {
                sparse_job.wait();
                throw StageError("vector_index", e.what());
            }
            dense_t.ms = t.elapsed_ms();
        }
        TermIndex sparse;
        try {
            sparse = sparse_job.get();
        } catch (const std::exception& e) {
            throw StageError("sparse_index", e.what());
        }
        local.push_back(sparse_t);
        local.push_back(dense_t);
        warnings_ = corpus.warnings;
        index_.emplace(std::move(corpus.chunks), std::move(sparse), std::move(dense));
        if (stages) stages->insert(stages->end(), local.begin(), local.end());
    }

    static TermIndex build_index_from(const std::vector<CodeChunk>& chunks) {
        return repoctx::build_index(std::span<const CodeChunk>(chunks));
    }

    AnalyzerSession* analyzer_locked(std::vector<StageTiming>* stages) {
        if (analyzer_) return analyzer_.get();
        const auto& a = config_.analyzer;
        if (a.backend == "none") return nullptr;
        const Stopwatch sw;
        StageTiming t{"analyzer", 0.0, ""};
        try {
            analyzer_state_inputs_ = {{"kind", "analyzer_state"}, {"format", 1}, {"profile", profile_.name},
                                      {"backend", a.backend}, {"repository", repo_.string()}};
            if (a.backend == "fixture") {
                analyzer_state_inputs_["manifest"] = fs::absolute(a.manifest).string();
                analyzer_ = std::make_unique<FixtureAnalyzer>(a.manifest);
            } else {
                analyzer_state_inputs_["command"] = a.command;
                LspConfig lc;
                lc.command = a.command;
                lc.language = profile_.name;
                lc.stdlib_prefixes = profile_.stdlib_prefixes;
                lc.timeout = std::chrono::seconds(a.timeout_s);
                analyzer_ = std::make_unique<LspAnalyzer>(lc);
            }
            analyzer_state_key_ = CacheStore::make_key(analyzer_state_inputs_);
            // imported state is checked against file hashes by the session itself
            t.cache = "miss";
            if (auto hit = store_.get("analyzer_state", *analyzer_state_key_)) {
                if (analyzer_->import_state(*hit)) t.cache = "hit";
            }
            analyzer_->open(repo_);
        } catch (const ConfigError&) {
            analyzer_.reset();
            throw;
        } catch (const Error& e) {
            analyzer_.reset();
            throw StageError("analyzer", e.what());
        }
        t.ms = sw.elapsed_ms();
        if (stages) stages->push_back(t);
        return analyzer_.get();
    }

    RunConfig config_;
    LanguageProfile profile_;
    CacheStore store_;
    fs::path repo_;
    std::shared_ptr<EmbeddingProvider> provider_;
    std::unique_ptr<CachedEmbeddingProvider> cached_provider_;

    mutable std::mutex index_mutex_;
    std::optional<HybridIndex> index_;
    std::vector<std::string> warnings_;

    std::mutex analyzer_mutex_;
    std::unique_ptr<AnalyzerSession> analyzer_;
    nlohmann::json analyzer_state_inputs_;
    std::optional<std::string> analyzer_state_key_;
};

}  // namespace repoctx
