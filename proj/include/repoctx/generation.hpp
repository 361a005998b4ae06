#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "repoctx/common.hpp"

namespace repoctx {

struct GenParams {
    double temperature = 0.6;
    double top_p = 0.7;
    int max_new_tokens = 512;
    int n = 10;

    void validate() const {
        if (!(temperature >= 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be >= 0");
        if (!(top_p >= 0.0 && top_p <= 1.0)) throw ConfigError("top_p must lie in [0, 1]");
        if (max_new_tokens < 1) throw ConfigError("max_new_tokens must be >= 1");
        if (n < 1) throw ConfigError("samples n must be >= 1");
    }

    nlohmann::json to_json() const {
        return {{"temperature", temperature}, {"top_p", top_p}, {"max_new_tokens", max_new_tokens}, {"n", n}};
    }
};

struct CompletionRequest {
    std::string prompt;
    double temperature = 0.6;
    double top_p = 0.7;
    int max_tokens = 512;
    int sample_index = 0;
    std::string task_id;
    std::string run_id;
};

class EndpointError : public Error {
public:
    EndpointError(const std::string& what, bool retriable) : Error(what), retriable_(retriable) {}
    bool retriable() const noexcept { return retriable_; }

private:
    bool retriable_;
};

/// Text-completion service. Implementations must be safe to call from
/// several threads at once.
class CompletionEndpoint {
public:
    virtual ~CompletionEndpoint() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
    virtual std::string identity() const = 0;
};

/// Canned completions for hermetic runs. Replay file:
///   { "rules": [ { "match": "<substring of the prompt>", "completions": ["...", ...] } ],
///     "default": ["..."]?, "echo_signature": false? }
/// The first rule whose `match` occurs in the prompt answers; sample i gets
/// completions[i % size]. With echo_signature the prompt's last line (the
/// signature) is put in front of the completion.
class ReplayStubEndpoint final : public CompletionEndpoint {
public:
    struct Rule {
        std::string match;
        std::vector<std::string> completions;
    };

    ReplayStubEndpoint() = default;
    explicit ReplayStubEndpoint(std::vector<Rule> rules, std::vector<std::string> fallback = {},
                                bool echo_signature = false, std::string source_hash = "inline")
        : rules_(std::move(rules)),
          fallback_(std::move(fallback)),
          echo_signature_(echo_signature),
          source_hash_(std::move(source_hash)) {}

    static ReplayStubEndpoint from_json(const nlohmann::json& j, std::string source_hash = "inline") {
        std::vector<Rule> rules;
        for (const auto& r : j.value("rules", nlohmann::json::array())) {
            Rule rule{r.value("match", std::string()), r.at("completions").get<std::vector<std::string>>()};
            if (rule.completions.empty()) throw ConfigError("replay rule with no completions");
            rules.push_back(std::move(rule));
        }
        return ReplayStubEndpoint(std::move(rules), j.value("default", std::vector<std::string>()),
                                  j.value("echo_signature", false), std::move(source_hash));
    }

    static ReplayStubEndpoint from_file(const fs::path& path) {
        try {
            const auto raw = read_file(path);
            return from_json(nlohmann::json::parse(raw), sha256_hex(raw));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("replay file " + path.string() + ": " + e.what());
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }

    std::string complete(const CompletionRequest& request) override {
        {
            std::lock_guard lock(log_->mutex);
            log_->prompts.push_back(request.prompt);
        }
        const std::vector<std::string>* pool = nullptr;
        for (const auto& r : rules_) {
            if (request.prompt.find(r.match) != std::string::npos) {
                pool = &r.completions;
                break;
            }
        }
        if (pool == nullptr && !fallback_.empty()) pool = &fallback_;
        if (pool == nullptr) throw EndpointError("replay stub has no completion for task " + request.task_id, false);
        std::string text = (*pool)[static_cast<std::size_t>(request.sample_index) % pool->size()];
        if (echo_signature_) {
            const auto nl = request.prompt.rfind('\n');
            text = request.prompt.substr(nl == std::string::npos ? 0 : nl + 1) + text;
        }
        return text;
    }

    std::string identity() const override { return "replay:" + source_hash_; }

    /// Prompts received so far, in arrival order.
    std::vector<std::string> prompts() const {
        std::lock_guard lock(log_->mutex);
        return log_->prompts;
    }

private:
    std::vector<Rule> rules_;
    std::vector<std::string> fallback_;
    bool echo_signature_ = false;
    std::string source_hash_ = "inline";
    struct Log {
        std::mutex mutex;
        std::vector<std::string> prompts;
    };
    std::shared_ptr<Log> log_ = std::make_shared<Log>();
};

/// Raw samples on disk, one JSON file per sample:
///   <root>/<slot>/<index>.json  { task, index, run_id, prompt_sha256, params, text, attempts }
/// A stored sample is reused only when its prompt hash and parameters match.
class SampleArchive {
public:
    explicit SampleArchive(fs::path root) : root_(std::move(root)) {}

    fs::path path(const std::string& slot, int index) const {
        return root_ / slot / (std::to_string(index) + ".json");
    }

    std::optional<std::string> load(const std::string& slot, int index, const std::string& prompt_hash,
                                    const GenParams& params) const {
        const auto p = path(slot, index);
        if (!fs::exists(p)) return std::nullopt;
        try {
            const auto j = nlohmann::json::parse(read_file(p));
            if (j.at("prompt_sha256") != prompt_hash || j.at("params") != params.to_json()) return std::nullopt;
            return j.at("text").get<std::string>();
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }

    void store(const std::string& slot, int index, const CompletionRequest& request, const std::string& prompt_hash,
               const GenParams& params, const std::string& text, int attempts) const {
        nlohmann::ordered_json j;
        j["task"] = request.task_id;
        j["index"] = index;
        j["run_id"] = request.run_id;
        j["prompt_sha256"] = prompt_hash;
        j["params"] = params.to_json();
        j["text"] = text;
        j["attempts"] = attempts;
        write_file_atomic(path(slot, index), j.dump(2) + "\n");
    }

private:
    fs::path root_;
};

struct GenerateOptions {
    std::string task_id;
    std::string run_id;
    std::string slot;  // archive sub-directory; defaults to task_id
    int parallelism = 4;
    int max_retries = 3;
    std::chrono::milliseconds backoff{200};  // doubled per retry
    const SampleArchive* archive = nullptr;
    int first_index = 0;  // sample indices start here (distinct draws across calls)
};

struct GenerateReport {
    std::vector<std::string> samples;  // by sample index
    int requested = 0;                 // endpoint calls made
    int reused = 0;                    // samples loaded from the archive
};

/// Draws params.n samples, up to `parallelism` at a time. Results are ordered
/// by sample index. Retriable endpoint errors are retried with backoff; once
/// retries run out the first error is rethrown after all workers stop, and
/// samples already archived stay on disk for a resumed run.
inline GenerateReport generate(const std::string& prompt, const GenParams& params, CompletionEndpoint& endpoint,
                               const GenerateOptions& options = {}) {
    params.validate();
    const auto prompt_hash = sha256_hex(prompt);
    const std::string slot = options.slot.empty() ? options.task_id : options.slot;
    GenerateReport report;
    report.samples.resize(static_cast<std::size_t>(params.n));
    std::atomic<int> next{0};
    std::atomic<int> requested{0};
    std::atomic<int> reused{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&] {
        for (int i = next++; i < params.n; i = next++) {
            {
                std::lock_guard lock(error_mutex);
                if (first_error) return;
            }
            const int index = options.first_index + i;
            if (options.archive != nullptr) {
                if (auto stored = options.archive->load(slot, index, prompt_hash, params)) {
                    report.samples[static_cast<std::size_t>(i)] = std::move(*stored);
                    ++reused;
                    continue;
                }
            }
            CompletionRequest req{prompt, params.temperature, params.top_p, params.max_new_tokens,
                                  index, options.task_id, options.run_id};
            try {
                int attempt = 0;
                for (;;) {
                    ++attempt;
                    try {
                        ++requested;
                        auto text = endpoint.complete(req);
                        if (options.archive != nullptr) {
                            options.archive->store(slot, index, req, prompt_hash, params, text, attempt);
                        }
                        report.samples[static_cast<std::size_t>(i)] = std::move(text);
                        break;
                    } catch (const EndpointError& e) {
                        if (!e.retriable() || attempt > options.max_retries) throw;
                        std::this_thread::sleep_for(options.backoff * (1 << (attempt - 1)));
                    }
                }
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int threads = std::max(1, std::min(options.parallelism, params.n));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    report.requested = requested;
    report.reused = reused;
    return report;
}

}  // namespace repoctx
