#pragma once

#include <cstdint>
#include <map>
#include <random>

#include "htg/types.hpp"

namespace htg {

struct PolicyConfig {
    double epsilon = 0.1;
    double tau = 1.0;
    std::uint64_t seed = 42;

    /// Throws ConfigError unless 0 <= epsilon <= 1 and tau > 0.
    void validate() const;
};

/// mu_g over candidate ids. Iteration order (id-lexicographic) is the CDF order.
struct GlobalDistribution {
    std::map<NodeId, double> probs;
};

/// Deterministic per-run random stream. Draws use the top 53 bits of
/// mt19937_64 so sequences are identical across standard libraries.
class PolicyRng {
public:
    explicit PolicyRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform();

private:
    std::mt19937_64 engine_;
};

/// epsilon/|G| + (1 - epsilon) * softmax(score / tau), max-subtracted.
/// Throws NoCandidatesError on an empty map and ConfigError on non-finite scores.
GlobalDistribution global_distribution(const std::map<NodeId, double>& scores,
                                       const PolicyConfig& config);

/// Inverse-CDF draw over the id-ordered candidates.
NodeId sample_global(const GlobalDistribution& dist, PolicyRng& rng);

}  // namespace htg
