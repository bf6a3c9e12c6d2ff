#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string_view>
#include <vector>

#include "htg/memory.hpp"

namespace htg {

inline constexpr std::size_t kFeatureCount = 12;

/// Fixed component order of the transition feature vector and of the weight
/// vector: r_imm, r_fut, p_pos, p_succ, p_comp, p_corr, p_safe, h_ctx,
/// -p_cfail, -p_corfail, -p_neg, -rho_risk.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "r_imm", "r_fut", "p_pos", "p_succ", "p_comp", "p_corr",
    "p_safe", "h_ctx", "neg_p_cfail", "neg_p_corfail", "neg_p_neg", "neg_rho_risk",
};

struct TransitionFeatures {
    // improvement
    double r_imm = 0.0;
    double r_fut = 0.0;
    double p_pos = 0.5;
    // reliability
    double p_succ = 0.5;
    double p_comp = 0.5;
    double p_corr = 0.5;
    double p_safe = 0.5;
    double h_ctx = 0.0;
    // risk (stored un-negated; negated in the vector)
    double p_cfail = 0.5;
    double p_corfail = 0.5;
    double p_neg = 0.5;
    double rho_risk = 0.5;

    std::array<double, kFeatureCount> vector() const noexcept;
};

struct ScoringWeights {
    std::array<double, kFeatureCount> w{1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};

    static ScoringWeights zeros() { return ScoringWeights{{}}; }
    static ScoringWeights unit(std::size_t index);
    /// Throws ConfigError on non-finite entries.
    void validate() const;
};

struct ScoringConfig {
    ScoringWeights weights;
    double lambda = 0.5;
    /// Observations a bucket needs before it is trusted over the aggregate.
    std::int64_t n_min = 3;
};

/// Feature vector from raw counters. `bucket_used` sets h_ctx.
TransitionFeatures features_from_stats(const TransitionStats& stats, bool bucket_used);

/// Bucket for bucket_key(state) when it has >= n_min observations, else the
/// aggregate.
TransitionFeatures extract_features(const TransitionEdgeMemory& edge, const DecisionState& state,
                                    std::int64_t n_min = 3);

double dot(const ScoringWeights& weights, const TransitionFeatures& z) noexcept;

/// phi(g_i, g_t | s_t) = w . z over edge (g_i, g_t). Pure.
double phi(const NodeId& from, const NodeId& to, const DecisionState& state, const MemoryBank& bank,
           const ScoringWeights& weights, std::int64_t n_min = 3);

/// alpha_i = exp(-lambda * (len - i)), i = 1..len.
std::vector<double> alpha_weights(std::size_t prefix_len, double lambda);

/// sum_i alpha_i * phi(prefix[i], candidate | state). Requires a non-empty prefix.
double score_global(const NodeId& candidate, const std::vector<NodeId>& prefix,
                    const DecisionState& state, const MemoryBank& bank, const ScoringConfig& config);

/// Node-level features: edge-only quantities (future gain, h_ctx) are 0.
TransitionFeatures node_features(const NodeStats& stats);

/// Scores for t = 1 from global-node statistics; edges are not read.
std::map<NodeId, double> first_step_scores(const DecisionState& state, const MemoryBank& bank,
                                           const ScoringWeights& weights);

/// first_step_scores for an empty prefix, score_global for every global otherwise.
std::map<NodeId, double> score_all_globals(const std::vector<NodeId>& prefix,
                                           const DecisionState& state, const MemoryBank& bank,
                                           const ScoringConfig& config);

}  // namespace htg
