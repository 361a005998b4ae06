#pragma once

#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

#include "repoctx/common.hpp"

namespace repoctx {

using Rational = boost::multiprecision::cpp_rational;

/// 1 - C(n-c, k) / C(n, k), evaluated as 1 - prod_{i=0}^{k-1} (n-c-i)/(n-i)
/// so nothing overflows for large n.
inline Rational score_at_k_exact(int n, int c, int k) {
    if (n < 1 || c < 0 || c > n || k < 1 || k > n) {
        throw Error("score@k needs 0 <= c <= n and 1 <= k <= n (n=" + std::to_string(n) + ", c=" +
                    std::to_string(c) + ", k=" + std::to_string(k) + ")");
    }
    if (n - c < k) return Rational(1);
    Rational miss(1);
    for (int i = 0; i < k; ++i) miss *= Rational(n - c - i, n - i);
    return Rational(1) - miss;
}

inline double score_at_k(int n, int c, int k) { return score_at_k_exact(n, c, k).convert_to<double>(); }

enum class Metric { compile, pass };

struct TaskResult {
    std::string task_id;
    std::vector<bool> compile_flags;
    std::vector<bool> pass_flags;
    std::string error;  // set when the task could not be run

    int n() const noexcept { return static_cast<int>(compile_flags.size()); }

    int count(Metric m) const {
        const auto& flags = m == Metric::compile ? compile_flags : pass_flags;
        int c = 0;
        for (bool f : flags) c += f ? 1 : 0;
        return c;
    }

    void validate() const {
        if (compile_flags.size() != pass_flags.size()) throw Error("task " + task_id + ": flag lists differ in length");
        for (std::size_t i = 0; i < pass_flags.size(); ++i) {
            if (pass_flags[i] && !compile_flags[i]) throw Error("task " + task_id + ": a sample passed without compiling");
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json j = {{"task", task_id}, {"n", n()}, {"compile", compile_flags}, {"pass", pass_flags}};
        if (!error.empty()) j["error"] = error;
        return j;
    }
};

/// Mean of per-task score@k over the results, exact until the final conversion.
inline Rational aggregate_exact(const std::vector<TaskResult>& results, int k, Metric metric) {
    if (results.empty()) throw Error("aggregate over an empty result set");
    Rational sum(0);
    for (const auto& r : results) {
        r.validate();
        if (r.n() < k) throw Error("task " + r.task_id + " has " + std::to_string(r.n()) + " samples, fewer than k=" +
                                   std::to_string(k));
        sum += score_at_k_exact(r.n(), r.count(metric), k);
    }
    return sum / static_cast<int>(results.size());
}

inline double aggregate(const std::vector<TaskResult>& results, int k, Metric metric) {
    return aggregate_exact(results, k, metric).convert_to<double>();
}

}  // namespace repoctx
