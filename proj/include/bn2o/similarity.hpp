#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "bn2o/inference.hpp"
#include "bn2o/network.hpp"

namespace bn2o {

/// Default tolerance for comparing conditional-probability columns.
inline constexpr double kSimilarityTolerance = 1e-9;

/// Column test: two disease states are similar iff every finding has the
/// same conditional probability under both (findings are independent given
/// the full disease state, so the columns determine all likelihood ratios).
inline bool states_similar(const Bn2oNetwork& net, const DiseaseState& a, const DiseaseState& b,
                           double tol = kSimilarityTolerance) {
    detail::require_state_size(net, a);
    detail::require_state_size(net, b);
    if (!(tol >= 0.0)) throw ValidationError("similarity tolerance must be nonnegative");
    for (std::size_t i = 0; i < net.n_findings(); ++i) {
        if (std::abs(finding_conditional(net, i, a) - finding_conditional(net, i, b)) > tol) {
            return false;
        }
    }
    return true;
}

/// Largest finding count for which every evidence instantiation is checked.
inline constexpr std::size_t kMaxRatioCheckFindings = 16;

/// Definition-level similarity test: the posterior ratio P(a|E)/P(b|E) must
/// match the prior ratio (relative deviation <= tol) for every instantiation
/// of the findings, each finding being positive, negative or unobserved.
inline bool likelihood_ratio_invariant(const Bn2oNetwork& net, const DiseaseState& a,
                                       const DiseaseState& b, double tol = kSimilarityTolerance) {
    detail::require_state_size(net, a);
    detail::require_state_size(net, b);
    if (!(tol >= 0.0)) throw ValidationError("ratio tolerance must be nonnegative");
    if (net.n_findings() > kMaxRatioCheckFindings) {
        throw InfeasibleError("exhaustive ratio check limited to " +
                              std::to_string(kMaxRatioCheckFindings) + " findings");
    }
    const double prior_a = detail::prior_of(net, a);
    const double prior_b = detail::prior_of(net, b);
    if (!(prior_a > 0.0) || !(prior_b > 0.0)) {
        throw ValidationError("likelihood ratio undefined for a zero-probability state");
    }

    const std::size_t m = net.n_findings();
    std::vector<double> on_a(m), on_b(m);
    for (std::size_t i = 0; i < m; ++i) {
        on_a[i] = finding_conditional(net, i, a);
        on_b[i] = finding_conditional(net, i, b);
    }

    // Base-3 counter over findings: 0 unobserved, 1 positive, 2 negative.
    // P(a|E)/P(b|E) over the prior ratio is the likelihood ratio P(E|a)/P(E|b).
    std::vector<int> digit(m, 0);
    while (true) {
        double like_a = 1.0, like_b = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (digit[i] == 1) {
                like_a *= on_a[i];
                like_b *= on_b[i];
            } else if (digit[i] == 2) {
                like_a *= 1.0 - on_a[i];
                like_b *= 1.0 - on_b[i];
            }
        }
        if (like_a > 0.0 && like_b > 0.0) {
            if (std::abs(like_a / like_b - 1.0) > tol) return false;
        } else if ((like_a > 0.0) != (like_b > 0.0)) {
            // One state is ruled out while the other is not: the ratio moves to 0 or infinity.
            return false;
        }
        std::size_t i = 0;
        while (i < m && digit[i] == 2) digit[i++] = 0;
        if (i == m) break;
        ++digit[i];
    }
    return true;
}

}  // namespace bn2o
