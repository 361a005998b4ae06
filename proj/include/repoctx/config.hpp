#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repoctx/bm25.hpp"
#include "repoctx/common.hpp"
#include "repoctx/fusion.hpp"
#include "repoctx/generation.hpp"
#include "repoctx/language_profile.hpp"
#include "repoctx/prompt.hpp"

namespace repoctx {

struct EmbeddingConfig {
    std::string backend = "hash";  // "hash" | "http"
    std::size_t dimension = 64;
    std::uint64_t seed = 0;
    std::string url;
    std::string model;
};

struct AnalyzerConfig {
    std::string backend = "none";  // "none" | "fixture" | "lsp"
    fs::path manifest;             // fixture
    std::vector<std::string> command;  // lsp
    int timeout_s = 60;
};

/// Configuration file (JSON); every key is optional:
///   { "repository", "language": "java"|"rust", "max_chunk_size", "k_per_retriever",
///     "fusion_weights": [sparse, dense], "bm25": {"k1", "b"},
///     "prompt_budget", "type_context_budget", "repocoder_iterations",
///     "generation": {"temperature", "top_p", "max_new_tokens", "n", "parallelism", "max_retries"},
///     "endpoint": "http(s)://..." | "replay:<file>",
///     "embedding": {"backend": "hash"|"http", "dimension", "seed", "url", "model"},
///     "analyzer": {"backend": "none"|"fixture"|"lsp", "manifest", "command": [...], "timeout_s"},
///     "stdlib_prefixes": [...], "cache_dir", "run_dir", "run_id" }
/// Relative paths are resolved against the configuration file's directory.
struct RunConfig {
    fs::path repository;
    std::string language = "java";
    std::optional<std::size_t> max_chunk_size;   // profile default when unset
    std::optional<std::size_t> k_per_retriever;  // profile default when unset
    FusionConfig fusion;
    Bm25Params bm25;
    std::size_t prompt_budget = kDefaultPromptBudget;
    std::size_t type_context_budget = 8192;
    int repocoder_iterations = 2;
    GenParams gen;
    int parallelism = 4;
    int max_retries = 3;
    std::string endpoint;
    EmbeddingConfig embedding;
    AnalyzerConfig analyzer;
    std::optional<std::vector<std::string>> stdlib_prefixes;
    fs::path cache_dir;  // <repository>/.repoctx-cache when unset
    fs::path run_dir;    // runs/<run_id> when unset
    std::string run_id;

    LanguageProfile profile() const {
        auto p = profile_by_name(language);
        if (stdlib_prefixes) p.stdlib_prefixes = *stdlib_prefixes;
        return p;
    }
    std::size_t chunk_size() const { return max_chunk_size.value_or(profile().default_chunk_size); }
    std::size_t k() const { return k_per_retriever.value_or(profile().default_k); }
    fs::path effective_cache_dir() const { return cache_dir.empty() ? repository / ".repoctx-cache" : cache_dir; }
    fs::path effective_run_dir() const { return run_dir.empty() ? fs::path("runs") / run_id : run_dir; }

    void validate() const {
        if (repository.empty()) throw ConfigError("no repository given");
        profile_by_name(language);
        if (max_chunk_size && *max_chunk_size == 0) throw ConfigError("max_chunk_size must be positive");
        if (k_per_retriever && *k_per_retriever == 0) throw ConfigError("k_per_retriever must be positive");
        if (fusion.weights.size() != 2) throw ConfigError("fusion_weights needs two values (sparse, dense)");
        fusion.validate();
        bm25.validate();
        gen.validate();
        if (prompt_budget == 0 || type_context_budget == 0) throw ConfigError("budgets must be positive");
        if (repocoder_iterations < 1) throw ConfigError("repocoder_iterations must be >= 1");
        if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
        if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
        if (embedding.backend != "hash" && embedding.backend != "http") {
            throw ConfigError("embedding backend must be hash or http");
        }
        if (embedding.dimension == 0) throw ConfigError("embedding dimension must be positive");
        if (embedding.backend == "http" && embedding.url.empty()) throw ConfigError("http embedding needs a url");
        const auto& a = analyzer.backend;
        if (a != "none" && a != "fixture" && a != "lsp") throw ConfigError("analyzer backend must be none, fixture or lsp");
        if (a == "fixture" && analyzer.manifest.empty()) throw ConfigError("fixture analyzer needs a manifest");
        if (a == "lsp" && analyzer.command.empty()) throw ConfigError("lsp analyzer needs a command");
    }
};

inline std::string default_run_id() {
    std::string ts = utc_timestamp();
    std::erase_if(ts, [](char c) { return c == '-' || c == ':'; });
    return "run-" + ts;
}

inline RunConfig parse_run_config(const nlohmann::json& j, const fs::path& base = {}) {
    auto path_of = [&](const std::string& key) {
        fs::path p = j.at(key).get<std::string>();
        return p.is_relative() && !base.empty() ? base / p : p;
    };
    RunConfig c;
    try {
        if (j.contains("repository")) c.repository = path_of("repository");
        c.language = j.value("language", c.language);
        if (j.contains("max_chunk_size")) c.max_chunk_size = j.at("max_chunk_size").get<std::size_t>();
        if (j.contains("k_per_retriever")) c.k_per_retriever = j.at("k_per_retriever").get<std::size_t>();
        if (j.contains("fusion_weights")) c.fusion.weights = j.at("fusion_weights").get<std::vector<double>>();
        if (j.contains("bm25")) {
            c.bm25.k1 = j["bm25"].value("k1", c.bm25.k1);
            c.bm25.b = j["bm25"].value("b", c.bm25.b);
        }
        c.prompt_budget = j.value("prompt_budget", c.prompt_budget);
        c.type_context_budget = j.value("type_context_budget", c.type_context_budget);
        c.repocoder_iterations = j.value("repocoder_iterations", c.repocoder_iterations);
        if (j.contains("generation")) {
            const auto& g = j["generation"];
            c.gen.temperature = g.value("temperature", c.gen.temperature);
            c.gen.top_p = g.value("top_p", c.gen.top_p);
            c.gen.max_new_tokens = g.value("max_new_tokens", c.gen.max_new_tokens);
            c.gen.n = g.value("n", c.gen.n);
            c.parallelism = g.value("parallelism", c.parallelism);
            c.max_retries = g.value("max_retries", c.max_retries);
        }
        if (j.contains("endpoint")) {
            c.endpoint = j.at("endpoint").get<std::string>();
            if (c.endpoint.starts_with("replay:") && !base.empty()) {
                fs::path p = c.endpoint.substr(7);
                if (p.is_relative()) c.endpoint = "replay:" + (base / p).string();
            }
        }
        if (j.contains("embedding")) {
            const auto& e = j["embedding"];
            c.embedding.backend = e.value("backend", c.embedding.backend);
            c.embedding.dimension = e.value("dimension", c.embedding.dimension);
            c.embedding.seed = e.value("seed", c.embedding.seed);
            c.embedding.url = e.value("url", c.embedding.url);
            c.embedding.model = e.value("model", c.embedding.model);
        }
        if (j.contains("analyzer")) {
            const auto& a = j["analyzer"];
            c.analyzer.backend = a.value("backend", c.analyzer.backend);
            if (a.contains("manifest")) {
                c.analyzer.manifest = a.at("manifest").get<std::string>();
                if (c.analyzer.manifest.is_relative() && !base.empty()) c.analyzer.manifest = base / c.analyzer.manifest;
            }
            c.analyzer.command = a.value("command", c.analyzer.command);
            c.analyzer.timeout_s = a.value("timeout_s", c.analyzer.timeout_s);
        }
        if (j.contains("stdlib_prefixes")) c.stdlib_prefixes = j.at("stdlib_prefixes").get<std::vector<std::string>>();
        if (j.contains("cache_dir")) c.cache_dir = path_of("cache_dir");
        if (j.contains("run_dir")) c.run_dir = path_of("run_dir");
        c.run_id = j.value("run_id", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("configuration: ") + e.what());
    }
    return c;
}

inline RunConfig load_run_config(const fs::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("configuration " + path.string() + ": " + e.what());
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return parse_run_config(j, fs::absolute(path).parent_path());
}

}  // namespace repoctx
