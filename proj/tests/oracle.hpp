#pragma once

// Test-only reference computations. They enumerate disease configurations as
// plain boolean vectors and apply the noisy-OR definition directly, sharing
// no code with the library's engines.

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "bn2o/network.hpp"

namespace oracle {

struct Joint {
    std::vector<double> marginal;  // P(d_k, E)
    double evidence = 0.0;         // P(E)
};

inline std::vector<bool> nth_state(std::size_t n, std::uint64_t index) {
    std::vector<bool> x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = (index >> j) & 1U;
    return x;
}

inline double noisy_or(const bn2o::Bn2oNetwork& net, std::size_t finding,
                       const std::vector<bool>& x) {
    double none = 1.0 - net.leak(finding);
    for (std::size_t j = 0; j < x.size(); ++j) {
        none *= 1.0 - net.coeff(finding, j) * (x[j] ? 1.0 : 0.0);
    }
    return 1.0 - none;
}

inline double state_prior(const bn2o::Bn2oNetwork& net, const std::vector<bool>& x) {
    double p = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) p *= x[j] ? net.prior(j) : 1.0 - net.prior(j);
    return p;
}

inline Joint enumerate(const bn2o::Bn2oNetwork& net, const std::vector<std::size_t>& positive,
                       const std::vector<std::size_t>& negative) {
    const std::size_t n = net.n_diseases();
    Joint out;
    out.marginal.assign(n, 0.0);
    for (std::uint64_t idx = 0; idx < (std::uint64_t{1} << n); ++idx) {
        const auto x = nth_state(n, idx);
        double p = state_prior(net, x);
        for (auto i : positive) p *= noisy_or(net, i, x);
        for (auto i : negative) p *= 1.0 - noisy_or(net, i, x);
        out.evidence += p;
        for (std::size_t k = 0; k < n; ++k) {
            if (x[k]) out.marginal[k] += p;
        }
    }
    return out;
}

inline std::vector<double> posteriors(const bn2o::Bn2oNetwork& net,
                                      const std::vector<std::size_t>& positive,
                                      const std::vector<std::size_t>& negative) {
    auto joint = enumerate(net, positive, negative);
    for (auto& m : joint.marginal) m /= joint.evidence;
    return joint.marginal;
}

inline double finding_marginal(const bn2o::Bn2oNetwork& net, std::size_t finding) {
    return enumerate(net, {finding}, {}).evidence;
}

/// Random network with coefficients in [0, 1], priors in [0.01, 0.5] and
/// leaks in [0, 0.2].
inline bn2o::Bn2oNetwork random_network(std::mt19937_64& rng, std::size_t n, std::size_t m) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> priors(n), leaks(m);
    for (auto& p : priors) p = 0.01 + 0.49 * unit(rng);
    for (auto& l : leaks) l = 0.2 * unit(rng);
    std::vector<std::vector<double>> coeffs(m, std::vector<double>(n));
    for (auto& row : coeffs) {
        for (auto& c : row) c = unit(rng);
    }
    return bn2o::Bn2oNetwork(priors, leaks, coeffs);
}

/// Every (positive, negative) split of the findings as a base-3 counter.
template <typename Fn>
void for_each_evidence(std::size_t m, Fn&& fn) {
    std::vector<int> digit(m, 0);
    while (true) {
        std::vector<std::size_t> pos, neg;
        for (std::size_t i = 0; i < m; ++i) {
            if (digit[i] == 1) pos.push_back(i);
            if (digit[i] == 2) neg.push_back(i);
        }
        fn(pos, neg);
        std::size_t i = 0;
        while (i < m && digit[i] == 2) digit[i++] = 0;
        if (i == m) return;
        ++digit[i];
    }
}

}  // namespace oracle
