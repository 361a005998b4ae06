#pragma once

// HTTP endpoints for completions and embeddings. Needs OpenSSL::SSL for https.

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <chrono>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repoctx/dense.hpp"
#include "repoctx/generation.hpp"

namespace repoctx {

struct HttpTarget {
    std::string base;  // scheme://host[:port]
    std::string path;  // starts with '/'

    static HttpTarget parse(const std::string& url) {
        const auto scheme = url.find("://");
        if (scheme == std::string::npos || (url.compare(0, scheme, "http") != 0 && url.compare(0, scheme, "https") != 0)) {
            throw ConfigError("not an http(s) URL: " + url);
        }
        const auto slash = url.find('/', scheme + 3);
        if (slash == std::string::npos) return {url, "/"};
        return {url.substr(0, slash), url.substr(slash)};
    }
};

namespace detail {

/// POSTs JSON and returns the parsed reply. Transport failures, 429 and 5xx
/// are retriable; other statuses are not.
inline nlohmann::json post_json(const HttpTarget& target, const std::string& token, const nlohmann::json& body,
                                std::chrono::seconds timeout) {
    httplib::Client client(target.base);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    auto res = client.Post(target.path, headers, body.dump(), "application/json");
    if (!res) {
        throw EndpointError(target.base + target.path + ": " + httplib::to_string(res.error()), true);
    }
    if (res->status != 200) {
        const bool retriable = res->status == 429 || res->status >= 500;
        throw EndpointError(target.base + target.path + ": HTTP " + std::to_string(res->status), retriable);
    }
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw EndpointError(std::string("malformed reply: ") + e.what(), false);
    }
}

}  // namespace detail

/// request {prompt, temperature, top_p, max_tokens} -> reply {text}
class HttpCompletionEndpoint final : public CompletionEndpoint {
public:
    HttpCompletionEndpoint(const std::string& url, std::string token, std::chrono::seconds timeout = std::chrono::seconds(120))
        : url_(url), target_(HttpTarget::parse(url)), token_(std::move(token)), timeout_(timeout) {}

    std::string complete(const CompletionRequest& r) override {
        const nlohmann::json body = {
            {"prompt", r.prompt}, {"temperature", r.temperature}, {"top_p", r.top_p}, {"max_tokens", r.max_tokens}};
        const auto reply = detail::post_json(target_, token_, body, timeout_);
        if (!reply.contains("text") || !reply["text"].is_string()) throw EndpointError("reply has no text field", false);
        return reply["text"].get<std::string>();
    }

    std::string identity() const override { return "http:" + url_; }

private:
    std::string url_;
    HttpTarget target_;
    std::string token_;
    std::chrono::seconds timeout_;
};

/// request {model, input: [text...]} -> reply {embeddings: [[float...]...]}
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(const std::string& url, std::string model, std::size_t dimension, std::string token,
                          std::chrono::seconds timeout = std::chrono::seconds(120))
        : url_(url), target_(HttpTarget::parse(url)), model_(std::move(model)), dimension_(dimension),
          token_(std::move(token)), timeout_(timeout) {}

    std::size_t dimension() const override { return dimension_; }
    std::string identity() const override {
        return "http:" + url_ + "|" + model_ + "|" + std::to_string(dimension_);
    }

    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override {
        const nlohmann::json body = {{"model", model_}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
        nlohmann::json reply;
        try {
            reply = detail::post_json(target_, token_, body, timeout_);
        } catch (const EndpointError& e) {
            throw ProviderError(e.what(), e.retriable());
        }
        try {
            return reply.at("embeddings").get<std::vector<EmbeddingVector>>();
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError(std::string("malformed embedding reply: ") + e.what(), false);
        }
    }

private:
    std::string url_;
    HttpTarget target_;
    std::string model_;
    std::size_t dimension_;
    std::string token_;
    std::chrono::seconds timeout_;
};

}  // namespace repoctx
