// repoctx: index a repository, generate a function, evaluate strategies, manage the cache.

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>
#include <sstream>

#include "repoctx/repoctx.hpp"

using namespace repoctx;

namespace {

struct Flags {
    std::string repo;
    std::string config;
    std::string strategy = "full";
    std::string task;
    std::string manifest;
    std::string endpoint;
    std::string cache_dir;
    std::string run_dir;
    std::string language;
    std::string weights;
    std::size_t k = 0;
    std::size_t chunk_size = 0;
    int samples = 0;
    bool json = false;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--repo", f.repo, "Repository root");
    cmd->add_option("--config", f.config, "Configuration file (JSON)");
    cmd->add_option("--cache-dir", f.cache_dir, "Cache directory (default <repo>/.repoctx-cache)");
    cmd->add_option("--language", f.language, "Language profile: java or rust");
    cmd->add_option("--k", f.k, "Chunks per retriever");
    cmd->add_option("--chunk-size", f.chunk_size, "Maximum chunk size in bytes");
    cmd->add_option("--weights", f.weights, "Fusion weights sparse,dense (e.g. 0.3,0.7)");
}

void add_generation(CLI::App* cmd, Flags& f) {
    cmd->add_option("--strategy", f.strategy, "vanilla, in_file, repocoder or full");
    cmd->add_option("--endpoint", f.endpoint, "http(s)://... or replay:<file>; token from " + std::string(kTokenVariable));
    cmd->add_option("--run-dir", f.run_dir, "Run directory (default runs/<run id>)");
    cmd->add_option("--samples", f.samples, "Samples per task (default 10)");
}

std::vector<double> parse_weights(const std::string& s) {
    std::vector<double> out;
    std::stringstream in(s);
    for (std::string part; std::getline(in, part, ',');) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw ConfigError("bad --weights value: " + s);
        }
    }
    return out;
}

RunConfig make_config(const Flags& f) {
    RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
    if (!f.repo.empty()) c.repository = f.repo;
    if (!f.language.empty()) c.language = f.language;
    if (!f.cache_dir.empty()) c.cache_dir = f.cache_dir;
    if (!f.run_dir.empty()) c.run_dir = f.run_dir;
    if (!f.endpoint.empty()) c.endpoint = f.endpoint;
    if (f.k > 0) c.k_per_retriever = f.k;
    if (f.chunk_size > 0) c.max_chunk_size = f.chunk_size;
    if (!f.weights.empty()) c.fusion.weights = parse_weights(f.weights);
    if (f.samples > 0) c.gen.n = f.samples;
    return c;
}

std::vector<StrategyKind> parse_strategies(const std::string& s) {
    std::vector<StrategyKind> out;
    std::stringstream in(s);
    for (std::string part; std::getline(in, part, ',');) out.push_back(parse_strategy(part));
    if (out.empty()) throw ConfigError("no strategy given");
    return out;
}

void print_stages(std::ostream& out, const std::vector<StageTiming>& stages) {
    for (const auto& s : stages) {
        out << "  " << std::left << std::setw(16) << s.stage << std::right << std::setw(10) << std::fixed
            << std::setprecision(1) << s.ms << " ms";
        if (!s.cache.empty()) out << "  cache " << s.cache;
        out << "\n";
    }
}

int run_index(const Flags& f) {
    auto config = make_config(f);
    const auto report = cmd_index(config);
    if (f.json) {
        std::cout << report.to_json().dump(2) << "\n";
        return 0;
    }
    std::cout << "files " << report.files << ", chunks " << report.chunks << "\n";
    print_stages(std::cout, report.stages);
    return 0;
}

int run_generate(const Flags& f) {
    auto config = make_config(f);
    const auto strategy = parse_strategy(f.strategy);
    if (f.task.empty()) throw ConfigError("--task is required");
    GenerationTask task;
    if (!f.manifest.empty()) {
        const auto manifest = load_manifest(f.manifest);
        const auto* t = manifest.find(f.task);
        if (t == nullptr) throw ConfigError("task " + f.task + " not in manifest");
        task = *t;
        config.repository = manifest.repository;
        config.language = manifest.language;
    } else {
        config.validate();
        task = load_task(f.task, config.repository, config.language);
    }
    // fail on a missing endpoint before any index work
    make_endpoint(config.endpoint);
    const auto result = cmd_generate(config, task, strategy);
    std::cerr << "run directory " << result.run_dir.string() << "\n";
    print_stages(std::cerr, result.prompt.stages);
    std::cerr << "  prompt total " << std::fixed << std::setprecision(1) << result.prompt.total_ms << " ms\n";
    std::cout << result.best << "\n";
    return 0;
}

int run_eval(const Flags& f) {
    auto config = make_config(f);
    if (f.manifest.empty()) throw ConfigError("--manifest is required");
    const auto manifest = load_manifest(f.manifest);
    const auto strategies = parse_strategies(f.strategy);
    make_endpoint(config.endpoint);
    const auto result = cmd_eval(config, manifest, strategies);
    std::cerr << "run directory " << result.run_dir.string() << "\n";
    std::cout << result.summary;
    return 0;
}

fs::path cache_dir_of(const Flags& f) {
    if (!f.cache_dir.empty()) return f.cache_dir;
    auto config = make_config(f);
    if (config.repository.empty()) throw ConfigError("--repo or --cache-dir is required");
    return config.effective_cache_dir();
}

int run_cache_inspect(const Flags& f) {
    const CacheStore store(cache_dir_of(f));
    const auto entries = store.list();
    if (f.json) {
        auto arr = nlohmann::json::array();
        for (const auto& e : entries) {
            arr.push_back({{"kind", e.kind}, {"key", e.key}, {"bytes", e.bytes}, {"created_at", e.created_at}});
        }
        std::cout << arr.dump(2) << "\n";
        return 0;
    }
    for (const auto& e : entries) {
        std::cout << std::left << std::setw(16) << e.kind << e.key.substr(0, 16) << "  " << std::right << std::setw(10)
                  << e.bytes << "  " << e.created_at << "\n";
    }
    std::cout << entries.size() << " entries in " << store.dir().string() << "\n";
    return 0;
}

int run_cache_clear(const Flags& f, const std::string& kind) {
    const CacheStore store(cache_dir_of(f));
    const auto removed = store.clear(kind.empty() ? std::nullopt : std::optional<std::string>(kind));
    std::cout << "removed " << removed << " entries\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Repository-aware code generation: retrieval, type context, evaluation"};
    app.require_subcommand(1);
    Flags f;
    std::string kind;

    auto* index = app.add_subcommand("index", "Chunk the repository and build or refresh the caches");
    add_common(index, f);
    index->add_flag("--json", f.json, "Print the report as JSON");

    auto* generate = app.add_subcommand("generate", "Generate one function");
    add_common(generate, f);
    add_generation(generate, f);
    generate->add_option("--task", f.task, "Task file (JSON), or a task id with --manifest");
    generate->add_option("--manifest", f.manifest, "Benchmark manifest holding the task");

    auto* eval = app.add_subcommand("eval", "Run strategies over a manifest and report compile@k / pass@k");
    add_common(eval, f);
    add_generation(eval, f);
    eval->add_option("--manifest", f.manifest, "Benchmark manifest")->required();
    eval->add_option("--task", f.task, "Unused; accepted for symmetry");

    auto* cache = app.add_subcommand("cache", "Inspect or clear the cache");
    cache->require_subcommand(1);
    auto* inspect = cache->add_subcommand("inspect", "List cache entries");
    add_common(inspect, f);
    inspect->add_flag("--json", f.json, "Print entries as JSON");
    auto* clear = cache->add_subcommand("clear", "Remove cache entries");
    add_common(clear, f);
    clear->add_option("--kind", kind, "Only this kind (sparse_index, vector_index, embeddings, analyzer_state)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (index->parsed()) return run_index(f);
        if (generate->parsed()) return run_generate(f);
        if (eval->parsed()) return run_eval(f);
        if (inspect->parsed()) return run_cache_inspect(f);
        if (clear->parsed()) return run_cache_clear(f, kind);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const StageError& e) {
        std::cerr << "stage " << e.stage() << " failed: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
