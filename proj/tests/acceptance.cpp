// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bn2o/bn2o.hpp"
#include "oracle.hpp"

using namespace bn2o;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

Bn2oNetwork beta_net(std::size_t n, std::size_t m, std::uint64_t seed) {
    GeneratorConfig cfg;
    cfg.n_diseases = n;
    cfg.n_findings = m;
    cfg.seed = seed;
    return generate_network(cfg);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// 1. Quickscore and the negative-evidence closed form against brute force.
Outcome oracle_equivalence() {
    double worst_qs = 0.0, worst_neg = 0.0;
    std::size_t evidence_sets = 0;
    for (std::uint64_t k = 0; k < 50; ++k) {
        const std::size_t n = 4 + k % 5;
        const std::size_t m = 4 + (k / 5) % 5;
        const auto net = beta_net(n, m, 1000 + k);
        oracle::for_each_evidence(m, [&](const auto& pos, const auto& neg) {
            const Evidence ev(pos, neg);
            const auto bf = brute_force_posteriors(net, ev);
            const auto qs = quickscore_posteriors(net, ev);
            for (std::size_t i = 0; i < n; ++i) {
                worst_qs = std::max(worst_qs, std::abs(qs.per_disease[i] - bf.per_disease[i]));
            }
            if (pos.empty()) {
                const auto fast = negative_evidence_posteriors(net, neg);
                for (std::size_t i = 0; i < n; ++i) {
                    worst_neg = std::max(worst_neg, std::abs(fast.per_disease[i] - bf.per_disease[i]));
                }
            }
            ++evidence_sets;
        });
    }
    return {worst_qs <= 1e-9 && worst_neg <= 1e-12,
            std::to_string(evidence_sets) + " evidence sets on 50 nets; quickscore max diff " +
                fmt(worst_qs) + " (tol 1e-9), negative max diff " + fmt(worst_neg) + " (tol 1e-12)"};
}

// 2. Priors and finding marginals reproduced by every reduced model.
Outcome prior_preservation() {
    double worst_prior = 0.0, worst_marginal = 0.0;
    std::size_t models = 0;
    std::mt19937_64 rng(77);
    for (std::uint64_t k = 0; k < 20; ++k) {
        GeneratorConfig cfg;
        cfg.n_diseases = 3 + k % 8;
        cfg.n_findings = 2 + (k * 3) % 9;
        cfg.seed = 2000 + k;
        if (k % 2 == 1) cfg.coeff_source = PoolCoefficients{synthetic_cpcs_pool()};
        const auto net = generate_network(cfg);
        const std::size_t n = net.n_diseases();

        std::vector<SelectionPolicy> policies;
        for (std::size_t d = 0; d <= n; ++d) policies.push_back(DMaxPolicy{d});
        for (double l : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) policies.push_back(LambdaPolicy{l});
        for (int e = 0; e < 3; ++e) {
            ExplicitPolicy p;
            for (StateMask s = 0; s < (StateMask{1} << n); ++s) {
                if (rng() % 3 == 0) p.states.push_back(DiseaseState::from_mask(n, s));
            }
            if (!p.states.empty()) policies.push_back(p);
        }

        for (const auto& policy : policies) {
            BaseStateSet base;
            try {
                base = select_base_states(net, policy);
            } catch (const ValidationError&) {
                continue;  // lambda below every conditional selects nothing
            }
            const auto model = build_aggregated_model(net, base);
            ++models;
            const auto post = aggregated_posteriors(model, {});
            for (std::size_t i = 0; i < n; ++i) {
                worst_prior = std::max(worst_prior, std::abs(post.per_disease[i] - net.prior(i)));
            }
            for (std::size_t j = 0; j < net.n_findings(); ++j) {
                double rebuilt = model.aggregate_conditionals()[j] * model.aggregate_prior();
                for (std::size_t s = 0; s < base.size(); ++s) {
                    rebuilt += model.base_conditional(s, j) * model.base_priors()[s];
                }
                worst_marginal =
                    std::max(worst_marginal, std::abs(rebuilt - oracle::finding_marginal(net, j)));
            }
        }
    }
    return {worst_prior <= 1e-12 && worst_marginal <= 1e-12,
            std::to_string(models) + " models; prior max diff " + fmt(worst_prior) +
                ", finding-marginal max diff " + fmt(worst_marginal) + " (tol 1e-12)"};
}

// 3. The full-base reduction is exact.
Outcome degenerate_collapse() {
    double worst = 0.0;
    for (std::uint64_t k = 0; k < 10; ++k) {
        const auto net = beta_net(6, 6, 3000 + k);
        const auto model = build_aggregated_model(net, select_base_states(net, DMaxPolicy{6}));
        oracle::for_each_evidence(6, [&](const auto& pos, const auto& neg) {
            const Evidence ev(pos, neg);
            const auto exact = oracle::posteriors(net, pos, neg);
            const auto agg = aggregated_posteriors(model, ev);
            const auto abst = abstraction_posteriors(model, ev);
            for (std::size_t i = 0; i < 6; ++i) {
                worst = std::max(worst, std::abs(agg.per_disease[i] - exact[i]));
                worst = std::max(worst, std::abs(abst.per_disease[i] - exact[i]));
            }
        });
    }
    return {worst <= 1e-9, "10 nets x 729 evidence sets; max diff " + fmt(worst) + " (tol 1e-9)"};
}

// 4. Equal conditional columns <=> invariant likelihood ratio.
Outcome similarity_equivalence() {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> unit(0.05, 0.95);
    std::size_t pairs = 0, similar = 0, mismatches = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = trial % 2 == 0 ? 4 : 3;
        std::vector<std::vector<double>> coeffs(3, std::vector<double>(n));
        for (auto& row : coeffs) {
            for (auto& c : row) c = unit(rng);
            row[1] = row[0];                      // interchangeable diseases
            if (n == 4 && trial % 4 == 0) row[3] = 0.0;  // disease without edges
        }
        if (trial % 3 == 0) coeffs[1][2] = 0.0;  // sparse edge
        std::vector<double> priors(n), leaks(3);
        for (auto& p : priors) p = 0.5 * unit(rng);
        for (auto& l : leaks) l = 0.1 * unit(rng);
        const Bn2oNetwork net(priors, leaks, coeffs);
        for (StateMask a = 0; a < (StateMask{1} << n); ++a) {
            for (StateMask b = 0; b < (StateMask{1} << n); ++b) {
                const auto sa = DiseaseState::from_mask(n, a);
                const auto sb = DiseaseState::from_mask(n, b);
                const bool column = states_similar(net, sa, sb, 0.0);
                const bool ratio = likelihood_ratio_invariant(net, sa, sb, 1e-9);
                ++pairs;
                similar += (column && a != b) ? 1 : 0;
                mismatches += column != ratio ? 1 : 0;
            }
        }
    }
    return {mismatches == 0 && similar > 0,
            std::to_string(pairs) + " state pairs on 40 nets (3x3, 4x3), " + std::to_string(similar) +
                " distinct similar pairs, " + std::to_string(mismatches) + " mismatches"};
}

// 5. Desk-scale d_max sweep on 12x12 Beta(2,4) networks.
Outcome dmax_headline() {
    bool pass = true;
    std::ostringstream out;
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto net = beta_net(12, 12, seed);
        SweepConfig cfg;
        for (std::size_t d = 0; d <= 12; ++d) cfg.reductions.push_back(DMaxPolicy{d});
        const auto report = error_sweep(net, cfg);
        const auto& rows = report.rows;
        const double at6 = rows[6].aggregation.max_abs;
        bool below = true, sigma_down = true;
        for (std::size_t d = 3; d <= 6; ++d) {
            below &= rows[d].aggregation.max_abs <= rows[d].abstraction.max_abs;
        }
        for (std::size_t d = 1; d <= 12; ++d) {
            sigma_down &= rows[d].sigma_prior_mass < rows[d - 1].sigma_prior_mass;
        }
        const bool ok = at6 < 0.01 && below && sigma_down;
        pass &= ok;
        out << "seed " << seed << ": agg(d=6) " << fmt(at6) << ", agg/abs d=3..6";
        for (std::size_t d = 3; d <= 6; ++d) {
            out << " " << fmt(rows[d].aggregation.max_abs) << "/" << fmt(rows[d].abstraction.max_abs);
        }
        out << (sigma_down ? ", sigma decreasing" : ", sigma NOT decreasing") << "; ";
    }
    return {pass, out.str()};
}

// 6. Lambda sweep on an 18x18 network with the CPCS-like pool. Every
// finding is instantiated: positive as enumerated, negative otherwise.
Outcome lambda_table() {
    GeneratorConfig gen;
    gen.n_diseases = 18;
    gen.n_findings = 18;
    gen.seed = 1;
    gen.coeff_source = PoolCoefficients{synthetic_cpcs_pool()};
    const auto net = generate_network(gen);
    SweepConfig cfg;
    cfg.evidence_mode = EvidenceMode::PositiveUpTo;
    cfg.max_positive = 10;
    cfg.unobserved = UnobservedFindings::Negative;
    cfg.exact_engine = ExactEngine::Quickscore;
    cfg.budget = SweepBudget::large();
    cfg.threads = std::max(1u, std::thread::hardware_concurrency());
    cfg.reductions = {LambdaPolicy{0.3}, LambdaPolicy{0.4}, LambdaPolicy{0.5}, LambdaPolicy{0.6}};
    const auto report = error_sweep(net, cfg);
    const auto& rows = report.rows;
    std::vector<std::string> broken;
    std::ostringstream out;
    out << report.evidence_sets << " evidence sets; lambda fraction max_abs max_rel:";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& cur = rows[r];
        out << " [" << policy_parameter(cur.policy) << " " << fmt(100 * cur.fraction) << "% "
            << fmt(cur.aggregation.max_abs) << " " << fmt(cur.aggregation.max_rel) << "]";
        if (r == 0) continue;
        const auto& prev = rows[r - 1];
        const std::string step = "lambda " + fmt(policy_parameter(prev.policy)) + "->" +
                                 fmt(policy_parameter(cur.policy));
        char buf[160];
        if (!(cur.fraction > prev.fraction)) broken.push_back("fraction not increasing at " + step);
        if (!(cur.aggregation.max_abs <= prev.aggregation.max_abs)) {
            std::snprintf(buf, sizeof buf, "max_abs rises at %s (%.9g -> %.9g)", step.c_str(),
                          prev.aggregation.max_abs, cur.aggregation.max_abs);
            broken.push_back(buf);
        }
        if (!(cur.aggregation.max_rel <= prev.aggregation.max_rel)) {
            std::snprintf(buf, sizeof buf, "max_rel rises at %s (%.9g -> %.9g)", step.c_str(),
                          prev.aggregation.max_rel, cur.aggregation.max_rel);
            broken.push_back(buf);
        }
    }
    const double ratio = rows.front().aggregation.max_rel / rows.back().aggregation.max_rel;
    out << "; max_rel ratio 0.3/0.6 = " << fmt(ratio);
    if (!(ratio >= 10.0)) broken.push_back("max_rel ratio below 10");
    for (const auto& b : broken) out << "; " << b;
    return {broken.empty(), out.str()};
}

// 7. Aggregated inference cost is linear in N_b + 1.
Outcome linear_cost() {
    const auto net = beta_net(16, 16, 7);
    std::mt19937_64 rng(99);
    std::vector<Evidence> evidence;
    for (int e = 0; e < 64; ++e) {
        std::vector<std::size_t> pos, neg;
        for (std::size_t j = 0; j < 16; ++j) {
            const auto r = rng() % 4;
            if (r == 0) pos.push_back(j);
            if (r == 1) neg.push_back(j);
        }
        evidence.emplace_back(pos, neg);
    }

    std::vector<double> xs, ys;
    for (std::size_t d = 1; d <= 6; ++d) {
        const auto model = build_aggregated_model(net, select_base_states(net, DMaxPolicy{d}));
        const auto size = static_cast<double>(model.base().size() + 1);
        // Enough calls for every measurement to take roughly the same time.
        const int reps = std::max(1, static_cast<int>(2e5 / size));
        double best = 1e300;
        double sink = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            const auto start = std::chrono::steady_clock::now();
            for (int r = 0; r < reps; ++r) {
                sink += aggregated_posteriors(model, evidence[static_cast<std::size_t>(r) % evidence.size()])
                            .per_disease[0];
            }
            const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
            best = std::min(best, dt.count() / reps);
        }
        if (sink < 0.0) std::puts("");
        xs.push_back(size);
        ys.push_back(best);
    }

    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i] / n;
        my += ys[i] / n;
    }
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    const double r2 = sxy * sxy / (sxx * syy);
    const double span = xs.back() / xs.front();
    std::ostringstream out;
    out << "N_b+1 from " << xs.front() << " to " << xs.back() << " (x" << fmt(span) << "), us per call:";
    for (double y : ys) out << " " << fmt(y * 1e6);
    out << "; linear fit R^2 " << fmt(r2);
    return {r2 > 0.95 && span >= 100.0, out.str()};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"1 oracle equivalence", oracle_equivalence},
        {"2 prior preservation", prior_preservation},
        {"3 degenerate collapse", degenerate_collapse},
        {"4 similarity equivalence", similarity_equivalence},
        {"5 d_max sweep 12x12", dmax_headline},
        {"6 lambda sweep 18x18", lambda_table},
        {"7 linear inference cost", linear_cost},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome result;
        try {
            result = check();
        } catch (const std::exception& e) {
            result = {false, std::string("exception: ") + e.what()};
        }
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
        std::printf("%s criterion %s: %s [%.1fs]\n", result.pass ? "PASS" : "FAIL", name,
                    result.detail.c_str(), dt.count());
        std::fflush(stdout);
        failed += result.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
