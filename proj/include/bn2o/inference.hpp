#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "bn2o/error.hpp"
#include "bn2o/network.hpp"

namespace bn2o {

/// Enumeration caps and the impossible-evidence threshold. These are
/// configuration; the defaults bound desk-scale runtime.
struct InferenceLimits {
    std::size_t max_enumerated_diseases = 24;
    std::size_t max_positive_findings = 24;
    /// P(E) below this is treated as impossible by the signed-sum engine.
    double impossible_evidence_threshold = 1e-12;
};

namespace detail {

inline void require_state_size(const Bn2oNetwork& net, const DiseaseState& state) {
    if (state.size() != net.n_diseases()) {
        throw ValidationError("disease state has " + std::to_string(state.size()) +
                              " entries, network has " + std::to_string(net.n_diseases()) +
                              " diseases");
    }
}

inline double prior_of(const Bn2oNetwork& net, const DiseaseState& state) {
    double p = 1.0;
    for (std::size_t j = 0; j < net.n_diseases(); ++j) {
        p *= state[j] ? net.prior(j) : 1.0 - net.prior(j);
    }
    return p;
}

/// Prior probability of the configuration encoded by `mask`.
inline double prior_of_mask(std::span<const double> priors, StateMask mask) {
    double p = 1.0;
    for (std::size_t j = 0; j < priors.size(); ++j) {
        p *= ((mask >> j) & 1U) ? priors[j] : 1.0 - priors[j];
    }
    return p;
}

/// Noisy-OR conditional p(f_i = true | mask); only active diseases contribute.
inline double conditional_of_mask(const Bn2oNetwork& net, std::size_t finding, StateMask mask) {
    auto row = net.coeff_row(finding);
    double off = 1.0 - net.leak(finding);
    while (mask != 0) {
        off *= 1.0 - row[static_cast<std::size_t>(std::countr_zero(mask))];
        mask &= mask - 1;
    }
    return 1.0 - off;
}

inline void require_enumerable(const Bn2oNetwork& net, const InferenceLimits& limits) {
    if (net.n_diseases() > limits.max_enumerated_diseases ||
        net.n_diseases() >= kMaxMaskDiseases) {
        throw InfeasibleError("cannot enumerate 2^" + std::to_string(net.n_diseases()) +
                              " disease states (cap is " +
                              std::to_string(limits.max_enumerated_diseases) + " diseases)");
    }
}

inline double clamp_probability(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace detail

/// p(f_i = true | state) = 1 - (1 - leak_i) * prod_j (1 - c_ij x_j).
inline double finding_conditional(const Bn2oNetwork& net, std::size_t finding,
                                  const DiseaseState& state) {
    detail::require_state_size(net, state);
    auto row = net.coeff_row(finding);
    double off = 1.0 - net.leak(finding);
    for (std::size_t j = 0; j < net.n_diseases(); ++j) {
        if (state[j]) off *= 1.0 - row[j];
    }
    return 1.0 - off;
}

/// Prior marginal p(f_i = true), linear in the number of diseases.
inline double prior_finding_marginal(const Bn2oNetwork& net, std::size_t finding) {
    auto row = net.coeff_row(finding);
    double off = 1.0 - net.leak(finding);
    for (std::size_t k = 0; k < net.n_diseases(); ++k) {
        off *= (1.0 - net.prior(k)) + net.prior(k) * (1.0 - row[k]);
    }
    return 1.0 - off;
}

/// P(state, evidence) with unobserved findings summed out.
inline double joint_probability(const Bn2oNetwork& net, const DiseaseState& state,
                                const Evidence& evidence) {
    detail::require_state_size(net, state);
    evidence.validate(net.n_findings());
    double p = detail::prior_of(net, state);
    for (auto i : evidence.positive()) p *= finding_conditional(net, i, state);
    for (auto i : evidence.negative()) p *= 1.0 - finding_conditional(net, i, state);
    return p;
}

/// Exact posteriors by summing the joint over all 2^n disease states.
inline Posteriors brute_force_posteriors(const Bn2oNetwork& net, const Evidence& evidence,
                                         const InferenceLimits& limits = {}) {
    evidence.validate(net.n_findings());
    detail::require_enumerable(net, limits);

    const std::size_t n = net.n_diseases();
    const StateMask n_states = StateMask{1} << n;
    std::vector<double> mass(n, 0.0);
    double total = 0.0;
    for (StateMask s = 0; s < n_states; ++s) {
        double w = detail::prior_of_mask(net.priors(), s);
        for (auto i : evidence.positive()) w *= detail::conditional_of_mask(net, i, s);
        for (auto i : evidence.negative()) w *= 1.0 - detail::conditional_of_mask(net, i, s);
        if (w == 0.0) continue;
        total += w;
        for (StateMask m = s; m != 0; m &= m - 1) {
            mass[static_cast<std::size_t>(std::countr_zero(m))] += w;
        }
    }
    if (!(total > 0.0)) {
        throw ImpossibleEvidenceError("evidence has zero probability under the network");
    }
    Posteriors out;
    out.evidence_probability = detail::clamp_probability(total);
    out.per_disease.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.per_disease[k] = detail::clamp_probability(mass[k] / total);
    return out;
}

/// Closed-form posteriors when every observed finding is negative. Diseases
/// stay independent, so each posterior is a two-term normalization.
inline Posteriors negative_evidence_posteriors(const Bn2oNetwork& net,
                                               const std::vector<std::size_t>& negative) {
    Evidence evidence({}, negative);
    evidence.validate(net.n_findings());

    const std::size_t n = net.n_diseases();
    std::vector<double> survive(n, 1.0);
    double leak_factor = 1.0;
    for (auto i : evidence.negative()) {
        auto row = net.coeff_row(i);
        leak_factor *= 1.0 - net.leak(i);
        for (std::size_t k = 0; k < n; ++k) survive[k] *= 1.0 - row[k];
    }

    Posteriors out;
    out.per_disease.resize(n);
    double p_evidence = leak_factor;
    for (std::size_t k = 0; k < n; ++k) {
        const double present = net.prior(k) * survive[k];
        const double norm = (1.0 - net.prior(k)) + present;
        p_evidence *= norm;
        out.per_disease[k] = norm > 0.0 ? present / norm : 0.0;
    }
    if (!(p_evidence > 0.0)) {
        throw ImpossibleEvidenceError("negative evidence has zero probability under the network");
    }
    out.evidence_probability = detail::clamp_probability(p_evidence);
    return out;
}

namespace detail {

/// Signed-sum accumulator for the subset expansion over positive findings.
/// Subsets are visited in reflected Gray-code order; each tree level keeps
/// its own survival products so no term ever divides by (1 - c).
class QuickscoreExpansion {
public:
    QuickscoreExpansion(const Bn2oNetwork& net, const Evidence& evidence)
        : net_(net), positive_(evidence.positive()), n_(net.n_diseases()),
          levels_(positive_.size() + 1, std::vector<double>(n_, 1.0)),
          prefix_(n_ + 1), factor_(n_), numer_(n_, 0.0) {
        auto& base = levels_[0];
        double leak = 1.0;
        for (auto i : evidence.negative()) {
            auto row = net.coeff_row(i);
            leak *= 1.0 - net.leak(i);
            for (std::size_t k = 0; k < n_; ++k) base[k] *= 1.0 - row[k];
        }
        visit(0, 0, leak, false, false);
    }

    double evidence_probability() const { return total_; }
    const std::vector<double>& numerators() const { return numer_; }

private:
    // `level` indexes positive findings; `buffer` is the level whose
    // survival products are current for the subset chosen so far.
    void visit(std::size_t level, std::size_t buffer, double leak, bool odd, bool reversed) {
        if (level == positive_.size()) {
            emit(levels_[buffer], leak, odd);
            return;
        }
        const bool order[2] = {reversed, !reversed};
        for (int child = 0; child < 2; ++child) {
            const bool include = order[child];
            const bool child_reversed = child == 1;
            if (!include) {
                visit(level + 1, buffer, leak, odd, child_reversed);
                continue;
            }
            const std::size_t finding = positive_[level];
            auto row = net_.coeff_row(finding);
            const auto& src = levels_[buffer];
            auto& dst = levels_[level + 1];
            for (std::size_t k = 0; k < n_; ++k) dst[k] = src[k] * (1.0 - row[k]);
            visit(level + 1, level + 1, leak * (1.0 - net_.leak(finding)), !odd, child_reversed);
        }
    }

    void emit(const std::vector<double>& survive, double leak, bool odd) {
        prefix_[0] = 1.0;
        for (std::size_t k = 0; k < n_; ++k) {
            factor_[k] = (1.0 - net_.prior(k)) + net_.prior(k) * survive[k];
            prefix_[k + 1] = prefix_[k] * factor_[k];
        }
        const double sign = odd ? -1.0 : 1.0;
        total_ += sign * leak * prefix_[n_];
        double suffix = 1.0;
        for (std::size_t k = n_; k-- > 0;) {
            numer_[k] += sign * leak * prefix_[k] * net_.prior(k) * survive[k] * suffix;
            suffix *= factor_[k];
        }
    }

    const Bn2oNetwork& net_;
    const std::vector<std::size_t>& positive_;
    std::size_t n_;
    std::vector<std::vector<double>> levels_;
    std::vector<double> prefix_;
    std::vector<double> factor_;
    std::vector<double> numer_;
    double total_ = 0.0;
};

}  // namespace detail

/// Exact posteriors via inclusion-exclusion over the positive findings.
/// Cost is O(2^|positive| * n_diseases); negative findings fold into every
/// term. The signed sum can lose precision to cancellation when many
/// findings are positive; P(E) under the threshold is reported as impossible.
inline Posteriors quickscore_posteriors(const Bn2oNetwork& net, const Evidence& evidence,
                                        const InferenceLimits& limits = {}) {
    evidence.validate(net.n_findings());
    if (evidence.positive().size() > limits.max_positive_findings) {
        throw InfeasibleError("inclusion-exclusion over " +
                              std::to_string(evidence.positive().size()) +
                              " positive findings exceeds cap of " +
                              std::to_string(limits.max_positive_findings));
    }
    detail::QuickscoreExpansion expansion(net, evidence);
    const double total = expansion.evidence_probability();
    if (!(total >= limits.impossible_evidence_threshold)) {
        throw ImpossibleEvidenceError("evidence probability " + std::to_string(total) +
                                      " is below the impossible-evidence threshold");
    }
    Posteriors out;
    out.evidence_probability = detail::clamp_probability(total);
    out.per_disease.resize(net.n_diseases());
    for (std::size_t k = 0; k < net.n_diseases(); ++k) {
        out.per_disease[k] = detail::clamp_probability(expansion.numerators()[k] / total);
    }
    return out;
}

}  // namespace bn2o
