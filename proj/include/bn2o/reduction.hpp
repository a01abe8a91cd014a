#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "bn2o/error.hpp"
#include "bn2o/inference.hpp"
#include "bn2o/network.hpp"

namespace bn2o {

/// Keep every state with at most `d_max` diseases present.
struct DMaxPolicy {
    std::size_t d_max = 0;
    friend bool operator==(const DMaxPolicy&, const DMaxPolicy&) = default;
};

/// Keep every state under which some finding has conditional probability
/// below `threshold`; states driving all findings to at least the threshold
/// are merged.
struct LambdaPolicy {
    double threshold = 0.5;
    friend bool operator==(const LambdaPolicy&, const LambdaPolicy&) = default;
};

/// Caller-supplied base states.
struct ExplicitPolicy {
    std::vector<DiseaseState> states;
    friend bool operator==(const ExplicitPolicy&, const ExplicitPolicy&) = default;
};

using SelectionPolicy = std::variant<DMaxPolicy, LambdaPolicy, ExplicitPolicy>;

inline std::string policy_kind(const SelectionPolicy& policy) {
    struct {
        std::string operator()(const DMaxPolicy&) const { return "dmax"; }
        std::string operator()(const LambdaPolicy&) const { return "lambda"; }
        std::string operator()(const ExplicitPolicy&) const { return "explicit"; }
    } visitor;
    return std::visit(visitor, policy);
}

/// Numeric parameter used to order report rows (state count for explicit lists).
inline double policy_parameter(const SelectionPolicy& policy) {
    struct {
        double operator()(const DMaxPolicy& p) const { return static_cast<double>(p.d_max); }
        double operator()(const LambdaPolicy& p) const { return p.threshold; }
        double operator()(const ExplicitPolicy& p) const {
            return static_cast<double>(p.states.size());
        }
    } visitor;
    return std::visit(visitor, policy);
}

/// Human-readable descriptor, e.g. "dmax:6" or "lambda:0.5".
inline std::string describe(const SelectionPolicy& policy) {
    std::ostringstream out;
    out << policy_kind(policy) << ':';
    if (const auto* d = std::get_if<DMaxPolicy>(&policy)) out << d->d_max;
    if (const auto* l = std::get_if<LambdaPolicy>(&policy)) out << l->threshold;
    if (const auto* e = std::get_if<ExplicitPolicy>(&policy)) out << e->states.size();
    return out.str();
}

/// Base states S_b in ascending mask order plus their prior masses.
struct BaseStateSet {
    std::size_t n_diseases = 0;
    std::vector<StateMask> states;
    SelectionPolicy policy;
    double base_prior_mass = 0.0;
    std::vector<double> per_disease_base_mass;

    std::size_t size() const { return states.size(); }
    DiseaseState state(std::size_t index) const {
        return DiseaseState::from_mask(n_diseases, states.at(index));
    }
    /// N_sigma = 2^n - N_b, or max() when that does not fit.
    std::uint64_t similar_count() const {
        if (n_diseases >= 64) return std::numeric_limits<std::uint64_t>::max();
        return (std::uint64_t{1} << n_diseases) - states.size();
    }
};

/// Number of states with at most `d_max` of `n1` diseases present.
inline std::uint64_t base_state_count(std::size_t n1, std::size_t d_max) {
    if (d_max > n1) {
        throw ValidationError("d_max = " + std::to_string(d_max) + " exceeds n_diseases = " +
                              std::to_string(n1));
    }
    // Pascal row n1 truncated at d_max, with checked additions.
    std::vector<std::uint64_t> row(d_max + 1, 0);
    row[0] = 1;
    for (std::size_t n = 1; n <= n1; ++n) {
        for (std::size_t k = std::min(n, d_max); k >= 1; --k) {
            if (__builtin_add_overflow(row[k], row[k - 1], &row[k])) {
                throw InfeasibleError("base state count C(" + std::to_string(n1) +
                                      ", <=" + std::to_string(d_max) + ") overflows 64 bits");
            }
        }
    }
    std::uint64_t total = 0;
    for (auto c : row) {
        if (__builtin_add_overflow(total, c, &total)) {
            throw InfeasibleError("base state count overflows 64 bits");
        }
    }
    return total;
}

/// Largest base set materialized by select_base_states.
inline constexpr std::uint64_t kMaxBaseStates = std::uint64_t{1} << 24;

namespace detail {

inline void fill_base_masses(const Bn2oNetwork& net, BaseStateSet& base) {
    base.base_prior_mass = 0.0;
    base.per_disease_base_mass.assign(net.n_diseases(), 0.0);
    for (auto s : base.states) {
        const double p = prior_of_mask(net.priors(), s);
        base.base_prior_mass += p;
        for (StateMask m = s; m != 0; m &= m - 1) {
            base.per_disease_base_mass[static_cast<std::size_t>(std::countr_zero(m))] += p;
        }
    }
}

inline void collect_low_popcount(std::size_t n, std::size_t d_max, std::size_t next,
                                 StateMask mask, std::size_t used, std::vector<StateMask>& out) {
    out.push_back(mask);
    if (used == d_max) return;
    for (std::size_t j = next; j < n; ++j) {
        collect_low_popcount(n, d_max, j + 1, mask | (StateMask{1} << j), used + 1, out);
    }
}

}  // namespace detail

inline BaseStateSet select_base_states(const Bn2oNetwork& net, const SelectionPolicy& policy,
                                       const InferenceLimits& limits = {}) {
    const std::size_t n = net.n_diseases();
    if (n >= kMaxMaskDiseases) {
        throw InfeasibleError("state masks support at most 63 diseases");
    }
    BaseStateSet base;
    base.n_diseases = n;
    base.policy = policy;

    if (const auto* dmax = std::get_if<DMaxPolicy>(&policy)) {
        const auto count = base_state_count(n, dmax->d_max);
        if (count > kMaxBaseStates) {
            throw InfeasibleError("d_max = " + std::to_string(dmax->d_max) + " selects " +
                                  std::to_string(count) + " base states");
        }
        base.states.reserve(count);
        detail::collect_low_popcount(n, dmax->d_max, 0, 0, 0, base.states);
        std::sort(base.states.begin(), base.states.end());
    } else if (const auto* lambda = std::get_if<LambdaPolicy>(&policy)) {
        if (!(lambda->threshold > 0.0 && lambda->threshold < 1.0)) {
            throw ValidationError("lambda must lie in (0, 1)");
        }
        detail::require_enumerable(net, limits);
        const StateMask n_states = StateMask{1} << n;
        for (StateMask s = 0; s < n_states; ++s) {
            for (std::size_t i = 0; i < net.n_findings(); ++i) {
                if (detail::conditional_of_mask(net, i, s) < lambda->threshold) {
                    base.states.push_back(s);
                    break;
                }
            }
        }
        if (base.states.empty()) throw ValidationError("policy selects no base states");
    } else {
        const auto& given = std::get<ExplicitPolicy>(policy).states;
        if (given.empty()) throw ValidationError("policy selects no base states");
        for (const auto& st : given) {
            detail::require_state_size(net, st);
            base.states.push_back(st.mask());
        }
        std::sort(base.states.begin(), base.states.end());
        if (std::adjacent_find(base.states.begin(), base.states.end()) != base.states.end()) {
            throw ValidationError("explicit base states must be distinct");
        }
    }
    detail::fill_base_masses(net, base);
    return base;
}

/// Band around [0, 1] inside which derived probabilities are clamped.
inline constexpr double kClampBand = 1e-12;
/// Aggregate mass at or below this makes the reduction exact.
inline constexpr double kDegenerateMass = 1e-15;

/// Reduced model: base states keep their exact noisy-OR conditionals, all
/// other states collapse into one aggregate state whose finding conditionals
/// preserve the prior finding marginals and whose alpha coefficients
/// preserve the prior disease marginals.
class AggregatedModel {
public:
    AggregatedModel(Bn2oNetwork source, BaseStateSet base, double aggregate_prior,
                    std::vector<double> aggregate_conditionals, std::vector<double> alpha)
        : source_(std::move(source)), base_(std::move(base)), aggregate_prior_(aggregate_prior),
          aggregate_conditionals_(std::move(aggregate_conditionals)), alpha_(std::move(alpha)) {
        const std::size_t n = source_.n_diseases();
        const std::size_t m = source_.n_findings();
        if (base_.n_diseases != n) throw ValidationError("base states do not match network");
        if (alpha_.size() != n) throw ValidationError("alpha must have one entry per disease");
        if (aggregate_conditionals_.size() != m) {
            throw ValidationError("aggregate conditionals must have one entry per finding");
        }
        detail::require_probability(aggregate_prior_, "aggregate_prior");
        for (std::size_t i = 0; i < n; ++i) {
            detail::require_probability(alpha_[i], "alpha[" + std::to_string(i) + "]");
        }
        for (std::size_t j = 0; j < m; ++j) {
            detail::require_probability(aggregate_conditionals_[j],
                                        "aggregate_conditionals[" + std::to_string(j) + "]");
        }
        for (auto s : base_.states) {
            if (n < 64 && (s >> n) != 0) throw ValidationError("base state mask out of range");
        }
        degenerate_ = aggregate_prior_ <= kDegenerateMass;

        base_priors_.reserve(base_.size());
        base_conditionals_.reserve(base_.size() * m);
        for (auto s : base_.states) {
            base_priors_.push_back(detail::prior_of_mask(source_.priors(), s));
            for (std::size_t j = 0; j < m; ++j) {
                base_conditionals_.push_back(detail::conditional_of_mask(source_, j, s));
            }
        }
    }

    const Bn2oNetwork& source() const { return source_; }
    const BaseStateSet& base() const { return base_; }
    std::size_t n_diseases() const { return source_.n_diseases(); }
    std::size_t n_findings() const { return source_.n_findings(); }

    double aggregate_prior() const { return aggregate_prior_; }
    const std::vector<double>& aggregate_conditionals() const { return aggregate_conditionals_; }
    const std::vector<double>& alpha() const { return alpha_; }
    /// The aggregate state has no mass; inference over base states is exact.
    bool degenerate() const { return degenerate_; }

    const std::vector<double>& base_priors() const { return base_priors_; }
    /// p(f_j | base state s), row-major [s][j].
    double base_conditional(std::size_t s, std::size_t finding) const {
        return base_conditionals_[s * n_findings() + finding];
    }
    std::span<const double> base_conditional_row(std::size_t s) const {
        return std::span<const double>(base_conditionals_).subspan(s * n_findings(), n_findings());
    }

private:
    Bn2oNetwork source_;
    BaseStateSet base_;
    double aggregate_prior_;
    std::vector<double> aggregate_conditionals_;
    std::vector<double> alpha_;
    bool degenerate_ = false;
    std::vector<double> base_priors_;
    std::vector<double> base_conditionals_;
};

namespace detail {

/// Sums over the similar states S_sigma: prior mass, per-disease mass, and
/// per-finding mass of the noisy-OR "all causes fail" product (leak excluded).
struct ComplementSums {
    double mass = 0.0;
    std::vector<double> per_disease;
    std::vector<double> finding_off;
};

/// Sum over configurations with at least `threshold` present items of
/// prod(absent[k] or present[k]), skipping index `skip`.
inline double popcount_tail(std::span<const double> absent, std::span<const double> present,
                            std::size_t threshold, std::size_t skip) {
    // dist[c] is the mass with exactly c present; the last bucket means ">= threshold".
    std::vector<double> dist(threshold + 1, 0.0);
    dist[0] = 1.0;
    for (std::size_t k = 0; k < absent.size(); ++k) {
        if (k == skip) continue;
        const double a = absent[k];
        const double p = present[k];
        if (threshold == 0) {
            dist[0] *= a + p;
            continue;
        }
        dist[threshold] = dist[threshold] * (a + p) + dist[threshold - 1] * p;
        for (std::size_t c = threshold - 1; c >= 1; --c) dist[c] = dist[c] * a + dist[c - 1] * p;
        dist[0] *= a;
    }
    return dist[threshold];
}

inline ComplementSums complement_by_popcount(const Bn2oNetwork& net, std::size_t d_max) {
    const std::size_t n = net.n_diseases();
    ComplementSums out;
    out.per_disease.assign(n, 0.0);
    out.finding_off.assign(net.n_findings(), 0.0);
    if (d_max >= n) return out;

    std::vector<double> absent(n), present(n);
    for (std::size_t k = 0; k < n; ++k) {
        absent[k] = 1.0 - net.prior(k);
        present[k] = net.prior(k);
    }
    constexpr auto kNone = std::numeric_limits<std::size_t>::max();
    out.mass = popcount_tail(absent, present, d_max + 1, kNone);
    for (std::size_t i = 0; i < n; ++i) {
        out.per_disease[i] = net.prior(i) * popcount_tail(absent, present, d_max, i);
    }
    std::vector<double> present_off(n);
    for (std::size_t j = 0; j < net.n_findings(); ++j) {
        auto row = net.coeff_row(j);
        for (std::size_t k = 0; k < n; ++k) present_off[k] = net.prior(k) * (1.0 - row[k]);
        out.finding_off[j] = popcount_tail(absent, present_off, d_max + 1, kNone);
    }
    return out;
}

inline ComplementSums complement_by_enumeration(const Bn2oNetwork& net, const BaseStateSet& base) {
    const std::size_t n = net.n_diseases();
    ComplementSums out;
    out.per_disease.assign(n, 0.0);
    out.finding_off.assign(net.n_findings(), 0.0);
    const StateMask n_states = StateMask{1} << n;
    auto next_base = base.states.begin();
    for (StateMask s = 0; s < n_states; ++s) {
        if (next_base != base.states.end() && *next_base == s) {
            ++next_base;
            continue;
        }
        const double p = prior_of_mask(net.priors(), s);
        out.mass += p;
        for (StateMask m = s; m != 0; m &= m - 1) {
            out.per_disease[static_cast<std::size_t>(std::countr_zero(m))] += p;
        }
        for (std::size_t j = 0; j < net.n_findings(); ++j) {
            auto row = net.coeff_row(j);
            double off = p;
            for (StateMask m = s; m != 0; m &= m - 1) {
                off *= 1.0 - row[static_cast<std::size_t>(std::countr_zero(m))];
            }
            out.finding_off[j] += off;
        }
    }
    return out;
}

/// Totals minus base sums; used only when S_sigma is too large to visit.
inline ComplementSums complement_by_subtraction(const Bn2oNetwork& net, const BaseStateSet& base) {
    const std::size_t n = net.n_diseases();
    ComplementSums out;
    out.mass = 1.0 - base.base_prior_mass;
    out.per_disease.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.per_disease[i] = net.prior(i) - base.per_disease_base_mass[i];
    }
    out.finding_off.resize(net.n_findings());
    for (std::size_t j = 0; j < net.n_findings(); ++j) {
        auto row = net.coeff_row(j);
        double total = 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            total *= (1.0 - net.prior(k)) + net.prior(k) * (1.0 - row[k]);
        }
        double in_base = 0.0;
        for (auto s : base.states) {
            double off = prior_of_mask(net.priors(), s);
            for (StateMask m = s; m != 0; m &= m - 1) {
                off *= 1.0 - row[static_cast<std::size_t>(std::countr_zero(m))];
            }
            in_base += off;
        }
        out.finding_off[j] = total - in_base;
    }
    // Cancellation can push the differences slightly outside [0, mass];
    // errors of that size scale with the aggregate mass, so project them back.
    constexpr double kSlack = 1e-9;
    auto project = [&](double& v, double hi) {
        if (v > -kSlack && v < hi + kSlack) v = std::clamp(v, 0.0, std::max(hi, 0.0));
    };
    project(out.mass, 1.0);
    for (auto& v : out.per_disease) project(v, out.mass);
    for (auto& v : out.finding_off) project(v, out.mass);
    return out;
}

inline double checked_probability(double value, const std::string& what) {
    if (value < -kClampBand || value > 1.0 + kClampBand || std::isnan(value)) {
        throw ValidationError(what + " = " + std::to_string(value) +
                              " outside [0, 1]; base state set is inconsistent with the network");
    }
    return std::clamp(value, 0.0, 1.0);
}

}  // namespace detail

/// Builds the reduced model for `base`. Aggregate quantities are summed over
/// the similar states directly (closed form for d_max sets, enumeration when
/// the state space is within the cap) so they stay accurate when the
/// aggregate mass is tiny.
inline AggregatedModel build_aggregated_model(const Bn2oNetwork& net, const BaseStateSet& base,
                                              const InferenceLimits& limits = {}) {
    if (base.n_diseases != net.n_diseases() ||
        base.per_disease_base_mass.size() != net.n_diseases()) {
        throw ValidationError("base state set does not match the network");
    }
    detail::ComplementSums sums;
    const auto* dmax = std::get_if<DMaxPolicy>(&base.policy);
    const bool is_dmax_set =
        dmax != nullptr && dmax->d_max <= net.n_diseases() &&
        base.size() == base_state_count(net.n_diseases(), dmax->d_max) &&
        std::all_of(base.states.begin(), base.states.end(), [&](StateMask s) {
            return static_cast<std::size_t>(std::popcount(s)) <= dmax->d_max;
        });
    if (is_dmax_set) {
        sums = detail::complement_by_popcount(net, dmax->d_max);
    } else if (net.n_diseases() <= limits.max_enumerated_diseases) {
        sums = detail::complement_by_enumeration(net, base);
    } else {
        sums = detail::complement_by_subtraction(net, base);
    }

    const double sigma = detail::checked_probability(sums.mass, "aggregate prior");
    std::vector<double> alpha(net.n_diseases(), 0.0);
    std::vector<double> conditionals(net.n_findings(), 0.0);
    if (sigma > kDegenerateMass) {
        for (std::size_t i = 0; i < net.n_diseases(); ++i) {
            alpha[i] = detail::checked_probability(sums.per_disease[i] / sigma,
                                                   "alpha[" + std::to_string(i) + "]");
        }
        for (std::size_t j = 0; j < net.n_findings(); ++j) {
            conditionals[j] = detail::checked_probability(
                1.0 - (1.0 - net.leak(j)) * sums.finding_off[j] / sigma,
                "aggregate conditional[" + std::to_string(j) + "]");
        }
    }
    return AggregatedModel(net, base, sigma, std::move(conditionals), std::move(alpha));
}

namespace detail {

inline double base_state_weight(const AggregatedModel& model, std::size_t s,
                                const Evidence& evidence) {
    auto cond = model.base_conditional_row(s);
    double w = model.base_priors()[s];
    for (auto j : evidence.positive()) w *= cond[j];
    for (auto j : evidence.negative()) w *= 1.0 - cond[j];
    return w;
}

inline Posteriors reduced_posteriors(const AggregatedModel& model, const Evidence& evidence,
                                     bool with_aggregate) {
    evidence.validate(model.n_findings());
    const std::size_t n = model.n_diseases();
    std::vector<double> mass(n, 0.0);
    double total = 0.0;
    for (std::size_t s = 0; s < model.base().size(); ++s) {
        const double w = base_state_weight(model, s, evidence);
        if (w == 0.0) continue;
        total += w;
        for (StateMask m = model.base().states[s]; m != 0; m &= m - 1) {
            mass[static_cast<std::size_t>(std::countr_zero(m))] += w;
        }
    }
    if (with_aggregate && !model.degenerate()) {
        double w = model.aggregate_prior();
        for (auto j : evidence.positive()) w *= model.aggregate_conditionals()[j];
        for (auto j : evidence.negative()) w *= 1.0 - model.aggregate_conditionals()[j];
        total += w;
        for (std::size_t i = 0; i < n; ++i) mass[i] += model.alpha()[i] * w;
    }
    if (!(total > 0.0)) {
        throw ImpossibleEvidenceError(with_aggregate
                                          ? "evidence is impossible under the aggregated model"
                                          : "evidence is impossible under the abstraction");
    }
    Posteriors out;
    out.evidence_probability = clamp_probability(total);
    out.per_disease.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.per_disease[i] = clamp_probability(mass[i] / total);
    return out;
}

}  // namespace detail

/// Posteriors under the reduced model: the cluster of all diseases is a
/// single node whose states are the base states plus the aggregate, and
/// findings are conditionally independent given that node.
inline Posteriors aggregated_posteriors(const AggregatedModel& model, const Evidence& evidence) {
    return detail::reduced_posteriors(model, evidence, true);
}

/// Baseline that sums over base states only and ignores the aggregate mass.
inline Posteriors abstraction_posteriors(const AggregatedModel& model, const Evidence& evidence) {
    return detail::reduced_posteriors(model, evidence, false);
}

}  // namespace bn2o
