#include "htg/scoring.hpp"

#include <cmath>

#include "htg/errors.hpp"

namespace htg {

std::array<double, kFeatureCount> TransitionFeatures::vector() const noexcept {
    return {r_imm, r_fut, p_pos, p_succ, p_comp, p_corr, p_safe, h_ctx,
            -p_cfail, -p_corfail, -p_neg, -rho_risk};
}

ScoringWeights ScoringWeights::unit(std::size_t index) {
    ScoringWeights w = zeros();
    w.w.at(index) = 1.0;
    return w;
}

void ScoringWeights::validate() const {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (!std::isfinite(w[i])) {
            throw ConfigError("scoring weight '" + std::string(kFeatureNames[i]) + "' is not finite");
        }
    }
}

TransitionFeatures features_from_stats(const TransitionStats& s, bool bucket_used) {
    TransitionFeatures z;
    const double n = static_cast<double>(s.n);
    z.r_imm = s.n > 0 ? s.imm_gain_sum / n : 0.0;
    z.r_fut = s.n > 0 ? s.fut_gain_sum / n : 0.0;
    z.p_pos = smoothed_rate(s.pos, s.n);
    z.p_succ = smoothed_rate(s.succ, s.n);
    z.p_comp = smoothed_rate(s.comp, s.n);
    z.p_corr = smoothed_rate(s.corr, s.n);
    z.p_safe = smoothed_rate(s.safe, s.n);
    z.h_ctx = bucket_used ? 1.0 : 0.0;
    z.p_cfail = smoothed_rate(s.cfail, s.n);
    z.p_corfail = smoothed_rate(s.corfail, s.n);
    z.p_neg = smoothed_rate(s.neg, s.n);
    z.rho_risk = smoothed_rate(s.risk_events, s.corr);
    return z;
}

TransitionFeatures extract_features(const TransitionEdgeMemory& edge, const DecisionState& state,
                                    std::int64_t n_min) {
    auto it = edge.buckets.find(bucket_key(state));
    if (it != edge.buckets.end() && it->second.n >= n_min) {
        return features_from_stats(it->second, true);
    }
    return features_from_stats(edge.aggregate, false);
}

double dot(const ScoringWeights& weights, const TransitionFeatures& z) noexcept {
    const auto v = z.vector();
    double sum = 0.0;
    for (std::size_t i = 0; i < kFeatureCount; ++i) sum += weights.w[i] * v[i];
    return sum;
}

double phi(const NodeId& from, const NodeId& to, const DecisionState& state, const MemoryBank& bank,
           const ScoringWeights& weights, std::int64_t n_min) {
    return dot(weights, extract_features(bank.edge(from, to), state, n_min));
}

std::vector<double> alpha_weights(std::size_t prefix_len, double lambda) {
    if (lambda < 0.0 || !std::isfinite(lambda)) {
        throw ConfigError("prefix decay lambda must be finite and >= 0");
    }
    // exp(-lambda * k) as a power of exp(-lambda), so lambda = ln 2 gives exact 2^-k.
    const double ratio = std::exp(-lambda);
    std::vector<double> alpha(prefix_len);
    for (std::size_t i = 1; i <= prefix_len; ++i) {
        alpha[i - 1] = std::pow(ratio, static_cast<double>(prefix_len - i));
    }
    return alpha;
}

double score_global(const NodeId& candidate, const std::vector<NodeId>& prefix,
                    const DecisionState& state, const MemoryBank& bank, const ScoringConfig& config) {
    if (prefix.empty()) {
        throw ConfigError("score_global needs a non-empty prefix; use first_step_scores at t = 1");
    }
    const auto alpha = alpha_weights(prefix.size(), config.lambda);
    double score = 0.0;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        score += alpha[i] * phi(prefix[i], candidate, state, bank, config.weights, config.n_min);
    }
    return score;
}

TransitionFeatures node_features(const NodeStats& s) {
    TransitionFeatures z;
    const auto n = s.attempts;
    const std::int64_t executable_misses = s.correct_passes - s.successes;
    z.r_imm = n > 0 ? s.gain_log_sum / static_cast<double>(n) : 0.0;
    z.r_fut = 0.0;
    z.p_pos = smoothed_rate(s.successes, n);
    z.p_succ = smoothed_rate(s.successes, n);
    z.p_comp = smoothed_rate(s.compile_passes, n);
    z.p_corr = smoothed_rate(s.correct_passes, n);
    z.p_safe = smoothed_rate(s.successes, n);
    z.h_ctx = 0.0;
    z.p_cfail = smoothed_rate(n - s.compile_passes, n);
    z.p_corfail = smoothed_rate(s.compile_passes - s.correct_passes, n);
    z.p_neg = smoothed_rate(executable_misses, n);
    z.rho_risk = smoothed_rate(executable_misses, s.correct_passes);
    return z;
}

std::map<NodeId, double> first_step_scores(const DecisionState&, const MemoryBank& bank,
                                           const ScoringWeights& weights) {
    std::map<NodeId, double> scores;
    for (const auto& [id, node] : bank.globals()) scores[id] = dot(weights, node_features(node.runtime));
    return scores;
}

std::map<NodeId, double> score_all_globals(const std::vector<NodeId>& prefix,
                                           const DecisionState& state, const MemoryBank& bank,
                                           const ScoringConfig& config) {
    if (prefix.empty()) return first_step_scores(state, bank, config.weights);
    std::map<NodeId, double> scores;
    for (const auto& [id, _] : bank.globals()) scores[id] = score_global(id, prefix, state, bank, config);
    return scores;
}

}  // namespace htg
