#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "bn2o/error.hpp"
#include "bn2o/generator.hpp"
#include "bn2o/inference.hpp"
#include "bn2o/network.hpp"
#include "bn2o/reduction.hpp"

namespace bn2o {

enum class EvidenceMode { AllPositiveSubsets, PositiveUpTo };

/// How findings outside the positive set are treated during a sweep.
enum class UnobservedFindings { Absent, Negative };

enum class ExactEngine { BruteForce, Quickscore };

inline std::string to_string(ExactEngine engine) {
    return engine == ExactEngine::BruteForce ? "brute_force" : "quickscore";
}

/// Limits on sweep size. Exact work counts joint evaluations for the
/// brute-force engine (evidence sets x 2^n_diseases) and signed terms for
/// the inclusion-exclusion engine (sum of 2^|positive|).
struct SweepBudget {
    std::uint64_t max_evidence_sets = std::uint64_t{1} << 18;
    double max_exact_work = 2e8;

    static SweepBudget desk() { return {std::uint64_t{1} << 18, 2e8}; }
    static SweepBudget large() { return {std::uint64_t{1} << 24, 1e12}; }

    friend bool operator==(const SweepBudget&, const SweepBudget&) = default;
};

struct SweepConfig {
    EvidenceMode evidence_mode = EvidenceMode::AllPositiveSubsets;
    /// Cap on |positive| for PositiveUpTo.
    std::size_t max_positive = 0;
    UnobservedFindings unobserved = UnobservedFindings::Absent;
    ExactEngine exact_engine = ExactEngine::BruteForce;
    std::vector<SelectionPolicy> reductions;
    SweepBudget budget = SweepBudget::desk();
    /// Worker threads; results do not depend on this.
    std::size_t threads = 1;

    std::size_t positive_limit(std::size_t n_findings) const {
        return evidence_mode == EvidenceMode::PositiveUpTo ? std::min(max_positive, n_findings)
                                                           : n_findings;
    }
};

/// Positive-finding masks of the sweep in ascending integer order.
inline std::vector<StateMask> evidence_masks(const SweepConfig& cfg, std::size_t n_findings) {
    if (n_findings >= kMaxMaskDiseases) {
        throw InfeasibleError("evidence sweeps support at most 63 findings");
    }
    const std::size_t k = cfg.positive_limit(n_findings);
    const auto count = base_state_count(n_findings, k);
    if (count > cfg.budget.max_evidence_sets) {
        throw InfeasibleError("sweep needs " + std::to_string(count) +
                              " evidence sets; budget allows " +
                              std::to_string(cfg.budget.max_evidence_sets));
    }
    std::vector<StateMask> masks;
    masks.reserve(count);
    const StateMask end = StateMask{1} << n_findings;
    for (StateMask m = 0; m < end; ++m) {
        if (static_cast<std::size_t>(std::popcount(m)) <= k) masks.push_back(m);
    }
    return masks;
}

/// Evidence sets of the sweep: positive sets in ascending integer encoding;
/// the remaining findings are either unobserved or negative.
inline std::vector<Evidence> enumerate_evidence(const SweepConfig& cfg, std::size_t n_findings) {
    const auto masks = evidence_masks(cfg, n_findings);
    const StateMask all = (StateMask{1} << n_findings) - 1;
    std::vector<Evidence> out;
    out.reserve(masks.size());
    for (auto m : masks) {
        out.push_back(Evidence::from_masks(
            m, cfg.unobserved == UnobservedFindings::Negative ? (all & ~m) : 0));
    }
    return out;
}

/// Maximum absolute and relative posterior errors of one reduced method,
/// with deterministic argmax (ties go to the smaller evidence mask, then
/// the smaller disease index).
struct ErrorStats {
    /// Exact posteriors below this are left out of the relative metric.
    static constexpr double kRelativeFloor = 1e-12;

    double max_abs = 0.0;
    StateMask abs_evidence = 0;
    std::size_t abs_disease = 0;
    double exact_at_abs = 0.0;
    double max_rel = 0.0;
    StateMask rel_evidence = 0;
    std::size_t rel_disease = 0;
    std::uint64_t evaluated = 0;
    std::uint64_t rel_skipped = 0;
    /// Evidence sets impossible under the reduced model but not the exact one.
    std::uint64_t failures = 0;
    /// Per positive-finding count.
    std::vector<double> curve_abs;
    std::vector<double> curve_rel;

    explicit ErrorStats(std::size_t n_findings = 0)
        : curve_abs(n_findings + 1, 0.0), curve_rel(n_findings + 1, 0.0) {}

    void record(StateMask evidence, std::size_t n_positive, std::size_t disease, double approx,
                double exact) {
        const double abs_err = std::abs(approx - exact);
        if (beats(abs_err, evidence, disease, max_abs, abs_evidence, abs_disease)) {
            max_abs = abs_err;
            abs_evidence = evidence;
            abs_disease = disease;
            exact_at_abs = exact;
        }
        curve_abs[n_positive] = std::max(curve_abs[n_positive], abs_err);
        if (exact < kRelativeFloor) {
            ++rel_skipped;
            return;
        }
        const double rel_err = abs_err / exact;
        if (beats(rel_err, evidence, disease, max_rel, rel_evidence, rel_disease)) {
            max_rel = rel_err;
            rel_evidence = evidence;
            rel_disease = disease;
        }
        curve_rel[n_positive] = std::max(curve_rel[n_positive], rel_err);
    }

    void merge(const ErrorStats& other) {
        if (beats(other.max_abs, other.abs_evidence, other.abs_disease, max_abs, abs_evidence,
                  abs_disease)) {
            max_abs = other.max_abs;
            abs_evidence = other.abs_evidence;
            abs_disease = other.abs_disease;
            exact_at_abs = other.exact_at_abs;
        }
        if (beats(other.max_rel, other.rel_evidence, other.rel_disease, max_rel, rel_evidence,
                  rel_disease)) {
            max_rel = other.max_rel;
            rel_evidence = other.rel_evidence;
            rel_disease = other.rel_disease;
        }
        evaluated += other.evaluated;
        rel_skipped += other.rel_skipped;
        failures += other.failures;
        for (std::size_t i = 0; i < curve_abs.size(); ++i) {
            curve_abs[i] = std::max(curve_abs[i], other.curve_abs[i]);
            curve_rel[i] = std::max(curve_rel[i], other.curve_rel[i]);
        }
    }

    friend bool operator==(const ErrorStats&, const ErrorStats&) = default;

private:
    static bool beats(double value, StateMask ev, std::size_t disease, double best,
                      StateMask best_ev, std::size_t best_disease) {
        if (value != best) return value > best;
        return std::tie(ev, disease) < std::tie(best_ev, best_disease);
    }
};

struct PolicyRow {
    SelectionPolicy policy;
    std::uint64_t n_base = 0;
    /// N_b / 2^n_diseases.
    double fraction = 0.0;
    double sigma_prior_mass = 0.0;
    ErrorStats aggregation;
    ErrorStats abstraction;
    double wall_ms = 0.0;
};

struct ErrorReport {
    std::size_t n_diseases = 0;
    std::size_t n_findings = 0;
    SweepConfig sweep;
    /// Set when the swept network came from the generator.
    std::optional<GeneratorConfig> generator;
    std::uint64_t evidence_sets = 0;
    /// Evidence sets impossible under the exact model; excluded from all metrics.
    std::uint64_t exact_impossible = 0;
    double exact_wall_ms = 0.0;
    /// Sorted by policy kind, then parameter.
    std::vector<PolicyRow> rows;
};

namespace detail {

/// Weighted list of cluster states with finding conditionals, optionally
/// extended by one aggregate state. Walks the evidence sets of a sweep as a
/// prefix tree so each visited set costs one pass over the states.
class StateTable {
public:
    /// Every disease configuration of `net` (exact enumeration).
    static StateTable full(const Bn2oNetwork& net) {
        StateTable t(net.n_diseases(), net.n_findings());
        const StateMask n_states = StateMask{1} << net.n_diseases();
        t.masks_.resize(n_states);
        t.priors_.resize(n_states);
        t.cond_.resize(net.n_findings() * n_states);
        for (StateMask s = 0; s < n_states; ++s) {
            t.masks_[s] = s;
            t.priors_[s] = prior_of_mask(net.priors(), s);
            for (std::size_t j = 0; j < net.n_findings(); ++j) {
                t.cond_[j * n_states + s] = conditional_of_mask(net, j, s);
            }
        }
        t.finish();
        return t;
    }

    static StateTable reduced(const AggregatedModel& model) {
        StateTable t(model.n_diseases(), model.n_findings());
        const std::size_t n_states = model.base().size();
        t.masks_ = model.base().states;
        t.priors_ = model.base_priors();
        t.cond_.resize(model.n_findings() * n_states);
        for (std::size_t s = 0; s < n_states; ++s) {
            for (std::size_t j = 0; j < model.n_findings(); ++j) {
                t.cond_[j * n_states + s] = model.base_conditional(s, j);
            }
        }
        if (!model.degenerate()) {
            t.has_aggregate_ = true;
            t.aggregate_prior_ = model.aggregate_prior();
            t.aggregate_cond_ = model.aggregate_conditionals();
        }
        t.finish();
        return t;
    }

    std::size_t n_diseases() const { return n_diseases_; }
    bool has_aggregate() const { return has_aggregate_; }

    /// Called per evidence set with the positive mask, the base-state
    /// weights and the aggregate weight.
    using Visitor = std::function<void(StateMask, std::span<const double>, double)>;

    /// Number of independent walk tasks; tasks partition the evidence sets.
    std::size_t task_count(bool negative_mode) const {
        return negative_mode ? (std::size_t{1} << split_depth()) : n_findings_ + 1;
    }

    void walk_task(std::size_t task, bool negative_mode, std::size_t max_positive,
                   const Visitor& visit) const {
        Walker w(*this, max_positive, visit);
        if (!negative_mode) {
            if (task == 0) {
                visit(0, priors_, aggregate_prior_);
                return;
            }
            if (max_positive == 0) return;
            const std::size_t j = task - 1;
            w.multiply(1, priors_, j, true);
            w.absent(StateMask{1} << j, j + 1, 1, 1, aggregate_prior_ * aggregate_factor(j, true));
            return;
        }
        // Negative mode: the task fixes the assignment of the first findings.
        const std::size_t depth = split_depth();
        std::span<const double> src = priors_;
        double agg = aggregate_prior_;
        StateMask positive = 0;
        for (std::size_t j = 0; j < depth; ++j) {
            const bool pos = ((task >> j) & 1U) != 0;
            if (pos) positive |= StateMask{1} << j;
            w.multiply(j + 1, src, j, pos);
            src = w.level(j + 1);
            agg *= aggregate_factor(j, pos);
        }
        if (static_cast<std::size_t>(std::popcount(positive)) > max_positive) return;
        w.negative(positive, depth, depth, agg);
    }

    /// Total weight and per-disease weight of the base states.
    void masses(std::span<const double> weights, double& total, std::vector<double>& mass) const {
        total = 0.0;
        std::fill(mass.begin(), mass.end(), 0.0);
        for (std::size_t s = 0; s < masks_.size(); ++s) {
            const double w = weights[s];
            if (w == 0.0) continue;
            total += w;
            for (StateMask m = masks_[s]; m != 0; m &= m - 1) {
                mass[static_cast<std::size_t>(std::countr_zero(m))] += w;
            }
        }
    }

private:
    StateTable(std::size_t n, std::size_t m) : n_diseases_(n), n_findings_(m) {}

    void finish() {
        off_.resize(cond_.size());
        for (std::size_t i = 0; i < cond_.size(); ++i) off_[i] = 1.0 - cond_[i];
    }

    std::size_t split_depth() const { return std::min<std::size_t>(n_findings_, 4); }

    std::span<const double> column(std::size_t finding, bool positive) const {
        const auto& src = positive ? cond_ : off_;
        return std::span<const double>(src).subspan(finding * masks_.size(), masks_.size());
    }

    double aggregate_factor(std::size_t finding, bool positive) const {
        if (!has_aggregate_) return 0.0;
        return positive ? aggregate_cond_[finding] : 1.0 - aggregate_cond_[finding];
    }

    class Walker {
    public:
        Walker(const StateTable& table, std::size_t max_positive, const Visitor& visit)
            : t_(table), max_positive_(max_positive), visit_(visit),
              levels_(table.n_findings_ + 1, std::vector<double>(table.masks_.size())) {}

        std::span<const double> level(std::size_t i) const { return levels_[i]; }

        void multiply(std::size_t dst, std::span<const double> src, std::size_t finding,
                      bool positive) {
            auto col = t_.column(finding, positive);
            auto& out = levels_[dst];
            for (std::size_t s = 0; s < out.size(); ++s) out[s] = src[s] * col[s];
        }

        // Prefix tree over positive sets: children add a finding above `next`.
        void absent(StateMask positive, std::size_t next, std::size_t count, std::size_t lvl,
                    double agg) {
            visit_(positive, levels_[lvl], agg);
            if (count == max_positive_) return;
            for (std::size_t j = next; j < t_.n_findings_; ++j) {
                multiply(lvl + 1, levels_[lvl], j, true);
                absent(positive | (StateMask{1} << j), j + 1, count + 1, lvl + 1,
                       agg * t_.aggregate_factor(j, true));
            }
        }

        // Binary tree: every finding is positive or negative.
        void negative(StateMask positive, std::size_t finding, std::size_t lvl, double agg) {
            if (finding == t_.n_findings_) {
                visit_(positive, levels_[lvl], agg);
                return;
            }
            if (static_cast<std::size_t>(std::popcount(positive)) < max_positive_) {
                multiply(lvl + 1, levels_[lvl], finding, true);
                negative(positive | (StateMask{1} << finding), finding + 1, lvl + 1,
                         agg * t_.aggregate_factor(finding, true));
            }
            multiply(lvl + 1, levels_[lvl], finding, false);
            negative(positive, finding + 1, lvl + 1, agg * t_.aggregate_factor(finding, false));
        }

    private:
        const StateTable& t_;
        std::size_t max_positive_;
        const Visitor& visit_;
        std::vector<std::vector<double>> levels_;
    };

    std::size_t n_diseases_;
    std::size_t n_findings_;
    std::vector<StateMask> masks_;
    std::vector<double> priors_;
    std::vector<double> cond_;  // finding-major: [j][s]
    std::vector<double> off_;   // 1 - cond_
    bool has_aggregate_ = false;
    double aggregate_prior_ = 0.0;
    std::vector<double> aggregate_cond_;
};

/// Runs `task(i, worker)` for i in [0, n) on up to `threads` workers; task i
/// always goes to worker i % workers.
inline void run_tasks(std::size_t n, std::size_t threads,
                      const std::function<void(std::size_t, std::size_t)>& task) {
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) task(i, 0);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) task(i, w);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
        .count();
}

inline double exact_work(const SweepConfig& cfg, std::size_t n_diseases,
                         std::span<const StateMask> masks) {
    if (cfg.exact_engine == ExactEngine::BruteForce) {
        return static_cast<double>(masks.size()) * std::ldexp(1.0, static_cast<int>(n_diseases));
    }
    double work = 0.0;
    for (auto m : masks) work += std::ldexp(1.0, std::popcount(m));
    return work;
}

}  // namespace detail

/// Exact vs reduced posteriors over every evidence set of the sweep, one
/// report row per reduction policy.
inline ErrorReport error_sweep(const Bn2oNetwork& net, const SweepConfig& sweep,
                               const InferenceLimits& limits = {}) {
    const std::size_t n = net.n_diseases();
    const std::size_t m = net.n_findings();
    const auto masks = evidence_masks(sweep, m);
    const bool negative_mode = sweep.unobserved == UnobservedFindings::Negative;
    const std::size_t k = sweep.positive_limit(m);
    if (sweep.exact_engine == ExactEngine::BruteForce) detail::require_enumerable(net, limits);
    const double work = detail::exact_work(sweep, n, masks);
    if (work > sweep.budget.max_exact_work) {
        throw InfeasibleError("exact engine " + to_string(sweep.exact_engine) + " needs " +
                              std::to_string(work) + " work units; budget allows " +
                              std::to_string(sweep.budget.max_exact_work));
    }

    ErrorReport report;
    report.n_diseases = n;
    report.n_findings = m;
    report.sweep = sweep;
    report.evidence_sets = masks.size();

    auto index_of = [&](StateMask positive) {
        return static_cast<std::size_t>(std::lower_bound(masks.begin(), masks.end(), positive) -
                                        masks.begin());
    };

    // Exact posteriors for every evidence set, indexed like `masks`.
    std::vector<double> exact(masks.size() * n, 0.0);
    std::vector<char> possible(masks.size(), 0);
    const auto exact_start = std::chrono::steady_clock::now();
    if (sweep.exact_engine == ExactEngine::BruteForce) {
        const auto table = detail::StateTable::full(net);
        detail::run_tasks(table.task_count(negative_mode), sweep.threads,
                          [&](std::size_t task, std::size_t) {
                              std::vector<double> mass(n);
                              table.walk_task(task, negative_mode, k,
                                              [&](StateMask pos, std::span<const double> w, double) {
                                                  double total = 0.0;
                                                  table.masses(w, total, mass);
                                                  const auto idx = index_of(pos);
                                                  if (!(total > 0.0)) return;
                                                  possible[idx] = 1;
                                                  for (std::size_t i = 0; i < n; ++i) {
                                                      exact[idx * n + i] = detail::clamp_probability(
                                                          mass[i] / total);
                                                  }
                                              });
                          });
    } else {
        const StateMask all = (StateMask{1} << m) - 1;
        detail::run_tasks(masks.size(), sweep.threads, [&](std::size_t idx, std::size_t) {
            const auto pos = masks[idx];
            const auto ev = Evidence::from_masks(pos, negative_mode ? (all & ~pos) : 0);
            try {
                const auto post = quickscore_posteriors(net, ev, limits);
                possible[idx] = 1;
                std::copy(post.per_disease.begin(), post.per_disease.end(),
                          exact.begin() + static_cast<std::ptrdiff_t>(idx * n));
            } catch (const ImpossibleEvidenceError&) {
            }
        });
    }
    report.exact_wall_ms = detail::elapsed_ms(exact_start);
    report.exact_impossible =
        static_cast<std::uint64_t>(std::count(possible.begin(), possible.end(), 0));

    for (const auto& policy : sweep.reductions) {
        const auto start = std::chrono::steady_clock::now();
        const auto base = select_base_states(net, policy, limits);
        const auto model = build_aggregated_model(net, base, limits);
        const auto table = detail::StateTable::reduced(model);

        const std::size_t tasks = table.task_count(negative_mode);
        const std::size_t workers = std::max<std::size_t>(1, std::min(sweep.threads, tasks));
        std::vector<ErrorStats> agg_stats(workers, ErrorStats(m));
        std::vector<ErrorStats> abs_stats(workers, ErrorStats(m));
        const auto& alpha = model.alpha();

        detail::run_tasks(tasks, workers, [&](std::size_t task, std::size_t worker) {
            std::vector<double> mass(n);
            auto& agg = agg_stats[worker];
            auto& abst = abs_stats[worker];
            table.walk_task(task, negative_mode, k,
                            [&](StateMask pos, std::span<const double> w, double w_agg) {
                                const auto idx = index_of(pos);
                                if (!possible[idx]) return;
                                const auto n_pos = static_cast<std::size_t>(std::popcount(pos));
                                double total = 0.0;
                                table.masses(w, total, mass);
                                const double* truth = &exact[idx * n];

                                const double agg_total = total + (table.has_aggregate() ? w_agg : 0.0);
                                if (agg_total > 0.0) {
                                    ++agg.evaluated;
                                    for (std::size_t i = 0; i < n; ++i) {
                                        const double extra = table.has_aggregate() ? alpha[i] * w_agg : 0.0;
                                        agg.record(pos, n_pos, i,
                                                   detail::clamp_probability((mass[i] + extra) / agg_total),
                                                   truth[i]);
                                    }
                                } else {
                                    ++agg.failures;
                                }
                                if (total > 0.0) {
                                    ++abst.evaluated;
                                    for (std::size_t i = 0; i < n; ++i) {
                                        abst.record(pos, n_pos, i,
                                                    detail::clamp_probability(mass[i] / total), truth[i]);
                                    }
                                } else {
                                    ++abst.failures;
                                }
                            });
        });

        PolicyRow row;
        row.policy = policy;
        row.n_base = base.size();
        row.fraction = static_cast<double>(base.size()) / std::ldexp(1.0, static_cast<int>(n));
        row.sigma_prior_mass = model.aggregate_prior();
        row.aggregation = ErrorStats(m);
        row.abstraction = ErrorStats(m);
        for (std::size_t w = 0; w < workers; ++w) {
            row.aggregation.merge(agg_stats[w]);
            row.abstraction.merge(abs_stats[w]);
        }
        row.wall_ms = detail::elapsed_ms(start);
        report.rows.push_back(std::move(row));
    }

    std::stable_sort(report.rows.begin(), report.rows.end(),
                     [](const PolicyRow& a, const PolicyRow& b) {
                         const auto ka = a.policy.index();
                         const auto kb = b.policy.index();
                         if (ka != kb) return ka < kb;
                         return policy_parameter(a.policy) < policy_parameter(b.policy);
                     });
    return report;
}

}  // namespace bn2o
