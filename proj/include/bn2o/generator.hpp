#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "bn2o/error.hpp"
#include "bn2o/network.hpp"

namespace bn2o {

/// Seeded generator. Uniform doubles are built from the top 53 bits of the
/// 64-bit Mersenne Twister output so draws do not depend on the standard
/// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::size_t index(std::size_t size) {
        return std::min(static_cast<std::size_t>(uniform() * static_cast<double>(size)), size - 1);
    }

private:
    std::mt19937_64 engine_;
};

/// One Beta(2, 4) draw: the 2nd smallest of 5 uniforms.
inline double sample_beta_2_4(Rng& rng) {
    std::array<double, 5> u{};
    for (auto& x : u) x = rng.uniform();
    std::nth_element(u.begin(), u.begin() + 1, u.end());
    return u[1];
}

struct Beta24Coefficients {
    friend bool operator==(const Beta24Coefficients&, const Beta24Coefficients&) = default;
};
/// Coefficients drawn with replacement from a fixed list.
struct PoolCoefficients {
    std::vector<double> values;
    friend bool operator==(const PoolCoefficients&, const PoolCoefficients&) = default;
};
using CoefficientSource = std::variant<Beta24Coefficients, PoolCoefficients>;

struct UniformValue {
    double lo = 0.0;
    double hi = 1.0;
    friend bool operator==(const UniformValue&, const UniformValue&) = default;
};
struct FixedValue {
    double value = 0.0;
    friend bool operator==(const FixedValue&, const FixedValue&) = default;
};
using ValueSource = std::variant<UniformValue, FixedValue>;

struct GeneratorConfig {
    std::size_t n_diseases = 12;
    std::size_t n_findings = 12;
    CoefficientSource coeff_source = Beta24Coefficients{};
    ValueSource prior_source = UniformValue{0.01, 0.2};
    ValueSource leak_source = UniformValue{0.0, 0.1};
    std::uint64_t seed = 1;

    void validate() const {
        if (n_diseases == 0 || n_findings == 0) {
            throw ValidationError("generator needs at least one disease and one finding");
        }
        for (const auto* src : {&prior_source, &leak_source}) {
            if (const auto* u = std::get_if<UniformValue>(src)) {
                if (!(0.0 <= u->lo && u->lo <= u->hi && u->hi <= 1.0)) {
                    throw ValidationError("uniform source needs 0 <= lo <= hi <= 1");
                }
            } else {
                detail::require_probability(std::get<FixedValue>(*src).value, "fixed value");
            }
        }
        if (const auto* pool = std::get_if<PoolCoefficients>(&coeff_source)) {
            if (pool->values.empty()) throw ValidationError("coefficient pool is empty");
            for (double v : pool->values) detail::require_probability(v, "pool value");
        }
    }

    friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

namespace detail {

inline double draw_value(const ValueSource& source, Rng& rng) {
    if (const auto* u = std::get_if<UniformValue>(&source)) {
        return u->lo + (u->hi - u->lo) * rng.uniform();
    }
    return std::get<FixedValue>(source).value;
}

}  // namespace detail

/// Fully connected random network. Draw order is priors, leaks, then
/// coefficients row by row, so a seed fixes the network completely.
inline Bn2oNetwork generate_network(const GeneratorConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    std::vector<double> priors(cfg.n_diseases);
    for (auto& p : priors) p = detail::draw_value(cfg.prior_source, rng);
    std::vector<double> leaks(cfg.n_findings);
    for (auto& l : leaks) l = detail::draw_value(cfg.leak_source, rng);

    std::vector<std::vector<double>> coeffs(cfg.n_findings, std::vector<double>(cfg.n_diseases));
    const auto* pool = std::get_if<PoolCoefficients>(&cfg.coeff_source);
    for (auto& row : coeffs) {
        for (auto& c : row) {
            c = pool != nullptr ? pool->values[rng.index(pool->values.size())]
                                : sample_beta_2_4(rng);
        }
    }
    return Bn2oNetwork(std::move(priors), std::move(leaks), std::move(coeffs));
}

/// Stand-in for a clinical coefficient distribution: clusters around the
/// round values 0, 0.2, 0.5, 0.8 and 1, with 55% of the values within 0.04
/// of 0 or 1. Cluster sizes (out of 200): 95 near 0, 35 near 0.2, 30 near
/// 0.5, 25 near 0.8, 15 near 1. Values inside a cluster are evenly spaced.
inline std::vector<double> synthetic_cpcs_pool() {
    struct Cluster {
        double center;
        double half_width;
        int count;
    };
    constexpr std::array<Cluster, 5> clusters{{
        {0.0, 0.04, 95},
        {0.2, 0.04, 35},
        {0.5, 0.04, 30},
        {0.8, 0.04, 25},
        {1.0, 0.04, 15},
    }};
    std::vector<double> pool;
    pool.reserve(200);
    for (const auto& c : clusters) {
        for (int k = 0; k < c.count; ++k) {
            const double t = (k + 0.5) / c.count;
            double v = 0.0;
            if (c.center == 0.0) {
                v = c.half_width * t;
            } else if (c.center == 1.0) {
                v = 1.0 - c.half_width * t;
            } else {
                v = c.center + c.half_width * (2.0 * t - 1.0);
            }
            pool.push_back(v);
        }
    }
    return pool;
}

}  // namespace bn2o
