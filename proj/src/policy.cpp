#include "htg/policy.hpp"

#include <algorithm>
#include <cmath>

#include "htg/errors.hpp"

namespace htg {

void PolicyConfig::validate() const {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be a positive finite number");
}

double PolicyRng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

GlobalDistribution global_distribution(const std::map<NodeId, double>& scores,
                                       const PolicyConfig& config) {
    config.validate();
    if (scores.empty()) throw NoCandidatesError("global policy has no candidate directions");
    double max_score = -INFINITY;
    for (const auto& [id, s] : scores) {
        if (!std::isfinite(s)) throw ConfigError("non-finite score for global '" + id + "'");
        max_score = std::max(max_score, s);
    }
    double z = 0.0;
    std::map<NodeId, double> expv;
    for (const auto& [id, s] : scores) z += expv[id] = std::exp((s - max_score) / config.tau);

    const double uniform = 1.0 / static_cast<double>(scores.size());
    GlobalDistribution dist;
    for (const auto& [id, e] : expv) {
        dist.probs[id] = config.epsilon * uniform + (1.0 - config.epsilon) * (e / z);
    }
    return dist;
}

NodeId sample_global(const GlobalDistribution& dist, PolicyRng& rng) {
    if (dist.probs.empty()) throw NoCandidatesError("cannot sample from an empty distribution");
    const double u = rng.uniform();
    double cdf = 0.0;
    for (const auto& [id, p] : dist.probs) {
        cdf += p;
        if (u < cdf) return id;
    }
    // Rounding left the CDF just below 1; the last positive-mass id absorbs it.
    for (auto it = dist.probs.rbegin(); it != dist.probs.rend(); ++it) {
        if (it->second > 0.0) return it->first;
    }
    return dist.probs.rbegin()->first;
}

}  // namespace htg
