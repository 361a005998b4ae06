#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "repoctx/common.hpp"
#include "repoctx/dense.hpp"

namespace repoctx {

inline const std::vector<std::string>& cache_kinds() {
    static const std::vector<std::string> kinds{"sparse_index", "vector_index", "embeddings", "analyzer_state"};
    return kinds;
}

struct CacheEntryInfo {
    std::string kind;
    std::string key;
    fs::path path;
    std::uintmax_t bytes = 0;
    std::string created_at;
};

/// Exclusive advisory lock on <dir>/.lock for the lifetime of the object.
class DirectoryLock {
public:
    explicit DirectoryLock(const fs::path& dir) {
        fs::create_directories(dir);
        const auto path = dir / ".lock";
        fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
        if (fd_ < 0) throw Error("cannot open lock " + path.string() + ": " + std::strerror(errno));
        while (::flock(fd_, LOCK_EX) != 0) {
            if (errno != EINTR) {
                ::close(fd_);
                throw Error("cannot lock " + path.string() + ": " + std::strerror(errno));
            }
        }
    }
    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;
    ~DirectoryLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }

private:
    int fd_ = -1;
};

/// Content-addressed store. Each entry is one file "<kind>-<key>.json"
///   { kind, key, created_at, inputs, payload }
/// where key = sha256 of the canonical dump of `inputs`. An entry whose
/// embedded kind/key disagree with its name, or that fails to parse, is
/// treated as missing.
class CacheStore {
public:
    explicit CacheStore(fs::path dir) : dir_(std::move(dir)) {}

    const fs::path& dir() const noexcept { return dir_; }

    static std::string make_key(const nlohmann::json& inputs) { return sha256_hex(inputs.dump()); }

    fs::path entry_path(const std::string& kind, const std::string& key) const {
        return dir_ / (kind + "-" + key + ".json");
    }

    std::optional<nlohmann::json> get(const std::string& kind, const std::string& key) const {
        check_kind(kind);
        DirectoryLock lock(dir_);
        return read_entry(kind, key);
    }

    void put(const std::string& kind, const std::string& key, const nlohmann::json& inputs,
             const nlohmann::json& payload) const {
        check_kind(kind);
        DirectoryLock lock(dir_);
        write_entry(kind, key, inputs, payload);
    }

    /// Read-modify-write of one entry under a single lock hold.
    template <class Fn>
    void update(const std::string& kind, const std::string& key, const nlohmann::json& inputs, Fn&& fn) const {
        check_kind(kind);
        DirectoryLock lock(dir_);
        auto payload = read_entry(kind, key).value_or(nlohmann::json());
        fn(payload);
        write_entry(kind, key, inputs, payload);
    }

    std::vector<CacheEntryInfo> list() const {
        std::vector<CacheEntryInfo> out;
        if (!fs::is_directory(dir_)) return out;
        DirectoryLock lock(dir_);
        for (const auto& e : fs::directory_iterator(dir_)) {
            const auto name = e.path().filename().string();
            if (!e.is_regular_file() || !name.ends_with(".json")) continue;
            for (const auto& kind : cache_kinds()) {
                if (!name.starts_with(kind + "-")) continue;
                CacheEntryInfo info;
                info.kind = kind;
                info.key = name.substr(kind.size() + 1, name.size() - kind.size() - 6);
                info.path = e.path();
                info.bytes = e.file_size();
                try {
                    info.created_at = nlohmann::json::parse(read_file(e.path())).value("created_at", std::string());
                } catch (const std::exception&) {
                    info.created_at = "corrupt";
                }
                out.push_back(std::move(info));
                break;
            }
        }
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
            return std::tie(a.kind, a.key) < std::tie(b.kind, b.key);
        });
        return out;
    }

    /// Removes all entries, or those of one kind. Returns the count removed.
    std::size_t clear(const std::optional<std::string>& kind = std::nullopt) const {
        if (kind) check_kind(*kind);
        std::size_t removed = 0;
        for (const auto& info : list()) {
            if (kind && info.kind != *kind) continue;
            DirectoryLock lock(dir_);
            removed += fs::remove(info.path) ? 1 : 0;
        }
        return removed;
    }

private:
    static void check_kind(const std::string& kind) {
        for (const auto& k : cache_kinds()) {
            if (k == kind) return;
        }
        throw ConfigError("unknown cache kind: " + kind);
    }

    std::optional<nlohmann::json> read_entry(const std::string& kind, const std::string& key) const {
        const auto path = entry_path(kind, key);
        if (!fs::exists(path)) return std::nullopt;
        try {
            auto j = nlohmann::json::parse(read_file(path));
            if (j.value("kind", std::string()) != kind || j.value("key", std::string()) != key) return std::nullopt;
            if (make_key(j.at("inputs")) != key) return std::nullopt;
            return std::move(j.at("payload"));
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }

    void write_entry(const std::string& kind, const std::string& key, const nlohmann::json& inputs,
                     const nlohmann::json& payload) const {
        if (make_key(inputs) != key) throw Error("cache key does not match its inputs");
        const nlohmann::json j = {
            {"kind", kind}, {"key", key}, {"created_at", utc_timestamp()}, {"inputs", inputs}, {"payload", payload}};
        write_file_atomic(entry_path(kind, key), j.dump());
    }

    fs::path dir_;
};

/// Embedding provider that remembers vectors by text hash in the cache
/// ("embeddings" kind, one entry per provider identity). Unchanged chunks are
/// not re-embedded after an edit elsewhere in the repository.
class CachedEmbeddingProvider final : public EmbeddingProvider {
public:
    CachedEmbeddingProvider(EmbeddingProvider& inner, const CacheStore& store) : inner_(inner), store_(store) {
        inputs_ = {{"provider", inner_.identity()}};
        key_ = CacheStore::make_key(inputs_);
    }

    std::size_t dimension() const override { return inner_.dimension(); }
    std::string identity() const override { return inner_.identity(); }

    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override {
        std::lock_guard lock(mutex_);
        load();
        std::vector<EmbeddingVector> out(texts.size());
        std::vector<std::string> missing;
        std::vector<std::size_t> slots;
        std::vector<std::string> hashes(texts.size());
        for (std::size_t i = 0; i < texts.size(); ++i) {
            hashes[i] = sha256_hex(texts[i]);
            if (auto it = memory_.find(hashes[i]); it != memory_.end()) {
                out[i] = it->second;
                ++hits_;
            } else {
                missing.push_back(texts[i]);
                slots.push_back(i);
            }
        }
        if (!missing.empty()) {
            auto fresh = inner_.embed_batch(missing);
            if (fresh.size() != missing.size()) throw ProviderError("provider returned a short batch", true);
            for (std::size_t j = 0; j < slots.size(); ++j) {
                memory_[hashes[slots[j]]] = fresh[j];
                pending_[hashes[slots[j]]] = fresh[j];
                out[slots[j]] = std::move(fresh[j]);
                ++misses_;
            }
        }
        return out;
    }

    /// Writes vectors computed since the last flush, merging with what other
    /// processes stored meanwhile.
    void flush() {
        std::lock_guard lock(mutex_);
        if (pending_.empty()) return;
        store_.update("embeddings", key_, inputs_, [&](nlohmann::json& payload) {
            if (!payload.is_object()) payload = nlohmann::json::object();
            for (const auto& [h, v] : pending_) payload[h] = v;
        });
        pending_.clear();
    }

    std::size_t hits() const noexcept { return hits_; }
    std::size_t misses() const noexcept { return misses_; }

private:
    void load() {
        if (loaded_) return;
        loaded_ = true;
        if (auto payload = store_.get("embeddings", key_); payload && payload->is_object()) {
            for (auto& [h, v] : payload->items()) memory_.emplace(h, v.get<EmbeddingVector>());
        }
    }

    EmbeddingProvider& inner_;
    const CacheStore& store_;
    nlohmann::json inputs_;
    std::string key_;
    std::mutex mutex_;
    bool loaded_ = false;
    std::map<std::string, EmbeddingVector> memory_;
    std::map<std::string, EmbeddingVector> pending_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

}  // namespace repoctx
