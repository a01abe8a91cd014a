#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bn2o/bn2o.hpp"

namespace bn2o::cli {

enum ExitCode : int {
    kOk = 0,
    kValidation = 1,
    kInfeasible = 2,
    kImpossibleEvidence = 3,
};

/// Environment variable holding the default for --budget.
inline constexpr const char* kBudgetEnv = "BN2O_BUDGET";

inline SweepBudget parse_budget(const std::string& name) {
    if (name == "desk") return SweepBudget::desk();
    if (name == "large") return SweepBudget::large();
    throw ValidationError("budget must be 'desk' or 'large', got '" + name + "'");
}

inline std::pair<std::string, std::string> split_spec(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) return {text, ""};
    return {text.substr(0, colon), text.substr(colon + 1)};
}

inline double parse_double(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(what + ": '" + text + "' is not a number");
    }
}

inline std::size_t parse_count(const std::string& text, const std::string& what) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
        throw ValidationError(what + ": '" + text + "' is not a nonnegative integer");
    }
    return static_cast<std::size_t>(std::stoull(text));
}

/// `dmax:K`, `lambda:X` or `explicit:FILE` (FILE holds an array of bitstrings
/// or an object with a "states" array).
inline SelectionPolicy parse_policy(const std::string& text) {
    const auto [kind, arg] = split_spec(text);
    if (kind == "dmax") return DMaxPolicy{parse_count(arg, "--policy dmax")};
    if (kind == "lambda") return LambdaPolicy{parse_double(arg, "--policy lambda")};
    if (kind == "explicit") {
        const auto j = read_json_file(arg);
        const Json& list = j.is_object() ? j.at("states") : j;
        if (!list.is_array()) throw ValidationError("explicit policy file needs a state list");
        ExplicitPolicy p;
        for (const auto& s : list) {
            if (!s.is_string()) throw ValidationError("explicit states must be bitstrings");
            p.states.push_back(DiseaseState::from_bitstring(s.get<std::string>()));
        }
        return p;
    }
    throw ValidationError("--policy must be dmax:K, lambda:X or explicit:FILE, got '" + text + "'");
}

/// `uniform:LO:HI` or `fixed:V`.
inline ValueSource parse_value_source(const std::string& text) {
    const auto [kind, arg] = split_spec(text);
    if (kind == "fixed") return FixedValue{parse_double(arg, "fixed value")};
    if (kind == "uniform") {
        const auto [lo, hi] = split_spec(arg);
        return UniformValue{parse_double(lo, "uniform lo"), parse_double(hi, "uniform hi")};
    }
    throw ValidationError("value source must be uniform:LO:HI or fixed:V, got '" + text + "'");
}

/// `beta24`, `cpcs` or `pool:FILE` (FILE holds a JSON array of probabilities).
inline CoefficientSource parse_coeff_source(const std::string& text) {
    const auto [kind, arg] = split_spec(text);
    if (kind == "beta24") return Beta24Coefficients{};
    if (kind == "cpcs") return PoolCoefficients{synthetic_cpcs_pool()};
    if (kind == "pool") {
        const auto j = read_json_file(arg);
        if (!j.is_array()) throw ValidationError("pool file must hold a JSON array");
        return PoolCoefficients{j.get<std::vector<double>>()};
    }
    throw ValidationError("--coeffs must be beta24, cpcs or pool:FILE, got '" + text + "'");
}

inline void log_config(std::ostream& err, const std::string& command, const Json& config) {
    err << "bn2o " << command << ": resolved configuration " << config.dump() << "\n";
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Exact and reduced inference for two-layer noisy-OR networks", "bn2o"};
    app.require_subcommand(1);

    std::string default_budget = "desk";
    if (const char* env = std::getenv(kBudgetEnv); env != nullptr && *env != '\0') {
        default_budget = env;
    }

    // generate
    auto* gen = app.add_subcommand("generate", "Generate a random network");
    std::size_t gen_diseases = 12, gen_findings = 12;
    std::uint64_t gen_seed = 1;
    std::string gen_coeffs = "beta24", gen_priors = "uniform:0.01:0.2", gen_leaks = "uniform:0:0.1";
    std::string gen_config, gen_out;
    auto* opt_gd = gen->add_option("--diseases", gen_diseases, "Number of diseases");
    auto* opt_gf = gen->add_option("--findings", gen_findings, "Number of findings");
    auto* opt_gs = gen->add_option("--seed", gen_seed, "Random seed");
    auto* opt_gc = gen->add_option("--coeffs", gen_coeffs, "beta24 | cpcs | pool:FILE");
    auto* opt_gp = gen->add_option("--priors", gen_priors, "uniform:LO:HI | fixed:V");
    auto* opt_gl = gen->add_option("--leaks", gen_leaks, "uniform:LO:HI | fixed:V");
    gen->add_option("--config", gen_config, "Generator config JSON (flags override it)");
    gen->add_option("--out", gen_out, "Output network file")->required();

    // reduce
    auto* red = app.add_subcommand("reduce", "Build a reduced model");
    std::string red_net, red_policy, red_out;
    red->add_option("network", red_net, "Network file")->required();
    red->add_option("--policy", red_policy, "dmax:K | lambda:X | explicit:FILE")->required();
    red->add_option("--out", red_out, "Output model file")->required();

    // infer
    auto* inf = app.add_subcommand("infer", "Posterior disease probabilities");
    std::string inf_input, inf_evidence, inf_engine;
    inf->add_option("input", inf_input, "Network or reduced-model file")->required();
    inf->add_option("evidence", inf_evidence, "Evidence file")->required();
    inf->add_option("--engine", inf_engine, "brute | quickscore | negative | aggregate | abstract");

    // sweep
    auto* swp = app.add_subcommand("sweep", "Exhaustive error sweep of reduced models");
    std::string swp_net, swp_evidence = "all", swp_unobserved = "absent", swp_engine, swp_config,
                swp_out, swp_budget = default_budget;
    std::vector<std::string> swp_policies;
    std::size_t swp_threads = 1;
    bool swp_reproducible = false;
    swp->add_option("network", swp_net, "Network file")->required();
    swp->add_option("--policy", swp_policies, "Reduction policy (repeatable)");
    auto* opt_se = swp->add_option("--evidence", swp_evidence, "all | upto:K");
    auto* opt_su =
        swp->add_option("--uninstantiated", swp_unobserved, "absent | negative");
    swp->add_option("--engine", swp_engine, "Exact engine: brute | quickscore");
    swp->add_option("--config", swp_config, "Sweep config JSON (flags override it)");
    swp->add_option("--budget", swp_budget, "desk | large");
    auto* opt_st = swp->add_option("--threads", swp_threads, "Worker threads");
    swp->add_flag("--reproducible", swp_reproducible, "Write zero wall times");
    swp->add_option("--out", swp_out, "Output directory")->required();

    // similar
    auto* sim = app.add_subcommand("similar", "Check whether two disease states are similar");
    std::string sim_net, sim_a, sim_b;
    double sim_tol = kSimilarityTolerance;
    sim->add_option("network", sim_net, "Network file")->required();
    sim->add_option("state_a", sim_a, "Bitstring, disease 0 leftmost")->required();
    sim->add_option("state_b", sim_b, "Bitstring, disease 0 leftmost")->required();
    sim->add_option("--tol", sim_tol, "Column tolerance");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "bn2o: " << e.what() << "\n";
        return kValidation;
    }

    try {
        if (gen->parsed()) {
            GeneratorConfig cfg;
            if (!gen_config.empty()) cfg = generator_config_from_json(read_json_file(gen_config));
            if (gen_config.empty() || opt_gd->count() > 0) cfg.n_diseases = gen_diseases;
            if (gen_config.empty() || opt_gf->count() > 0) cfg.n_findings = gen_findings;
            if (gen_config.empty() || opt_gs->count() > 0) cfg.seed = gen_seed;
            if (gen_config.empty() || opt_gc->count() > 0) cfg.coeff_source = parse_coeff_source(gen_coeffs);
            if (gen_config.empty() || opt_gp->count() > 0) cfg.prior_source = parse_value_source(gen_priors);
            if (gen_config.empty() || opt_gl->count() > 0) cfg.leak_source = parse_value_source(gen_leaks);
            cfg.validate();
            log_config(err, "generate", to_json(cfg));
            auto j = to_json(generate_network(cfg));
            j["provenance"] = Json{{"generator", to_json(cfg)}};
            write_json_file(gen_out, j);
            return kOk;
        }

        if (red->parsed()) {
            const auto net = network_from_json(read_json_file(red_net));
            const auto policy = parse_policy(red_policy);
            log_config(err, "reduce", Json{{"network", red_net}, {"policy", to_json(policy)}});
            const auto model = build_aggregated_model(net, select_base_states(net, policy));
            write_json_file(red_out, to_json(model));
            return kOk;
        }

        if (inf->parsed()) {
            const auto input = read_json_file(inf_input);
            const auto evidence = evidence_from_json(read_json_file(inf_evidence));
            const bool is_model = is_model_json(input);
            std::string engine = inf_engine.empty() ? (is_model ? "aggregate" : "quickscore") : inf_engine;
            log_config(err, "infer", Json{{"input", inf_input}, {"evidence", inf_evidence},
                                          {"engine", engine}});
            Posteriors post;
            if (engine == "aggregate" || engine == "abstract") {
                if (!is_model) throw ValidationError("engine '" + engine + "' needs a reduced-model file");
                const auto model = model_from_json(input);
                post = engine == "aggregate" ? aggregated_posteriors(model, evidence)
                                             : abstraction_posteriors(model, evidence);
            } else if (engine == "brute" || engine == "quickscore" || engine == "negative") {
                if (is_model) throw ValidationError("engine '" + engine + "' needs a network file");
                const auto net = network_from_json(input);
                if (engine == "brute") {
                    post = brute_force_posteriors(net, evidence);
                } else if (engine == "quickscore") {
                    post = quickscore_posteriors(net, evidence);
                } else {
                    if (!evidence.positive().empty()) {
                        throw ValidationError("engine 'negative' accepts only negative evidence");
                    }
                    evidence.validate(net.n_findings());
                    post = negative_evidence_posteriors(net, evidence.negative());
                }
            } else {
                throw ValidationError("unknown engine '" + engine + "'");
            }
            auto j = to_json(post);
            j["engine"] = engine;
            out << j.dump(2) << "\n";
            return kOk;
        }

        if (swp->parsed()) {
            const auto net_json = read_json_file(swp_net);
            const auto net = network_from_json(net_json);
            SweepConfig cfg;
            Json cfg_json = swp_config.empty() ? Json::object() : read_json_file(swp_config);
            if (!swp_config.empty()) cfg = sweep_config_from_json(cfg_json);
            if (!cfg_json.contains("budget") || swp->get_option("--budget")->count() > 0) {
                cfg.budget = parse_budget(swp_budget);
            }
            if (swp_config.empty() || opt_se->count() > 0) {
                const auto [kind, arg] = split_spec(swp_evidence);
                if (kind == "all") {
                    cfg.evidence_mode = EvidenceMode::AllPositiveSubsets;
                } else if (kind == "upto") {
                    cfg.evidence_mode = EvidenceMode::PositiveUpTo;
                    cfg.max_positive = parse_count(arg, "--evidence upto");
                } else {
                    throw ValidationError("--evidence must be all or upto:K");
                }
            }
            if (swp_config.empty() || opt_su->count() > 0) {
                if (swp_unobserved == "absent") {
                    cfg.unobserved = UnobservedFindings::Absent;
                } else if (swp_unobserved == "negative") {
                    cfg.unobserved = UnobservedFindings::Negative;
                } else {
                    throw ValidationError("--uninstantiated must be absent or negative");
                }
            }
            if (!swp_engine.empty()) {
                if (swp_engine == "brute") cfg.exact_engine = ExactEngine::BruteForce;
                else if (swp_engine == "quickscore") cfg.exact_engine = ExactEngine::Quickscore;
                else throw ValidationError("--engine must be brute or quickscore for sweeps");
            } else if (swp_config.empty()) {
                cfg.exact_engine = cfg.budget == SweepBudget::large() ? ExactEngine::Quickscore
                                                                       : ExactEngine::BruteForce;
            }
            for (const auto& p : swp_policies) cfg.reductions.push_back(parse_policy(p));
            if (swp_config.empty() || opt_st->count() > 0) cfg.threads = swp_threads;
            log_config(err, "sweep", Json{{"network", swp_net}, {"sweep", to_json(cfg)}});

            auto report = error_sweep(net, cfg);
            if (net_json.contains("provenance") && net_json["provenance"].contains("generator")) {
                report.generator = generator_config_from_json(net_json["provenance"]["generator"]);
            }
            emit_report(report, swp_out, ReportOptions{!swp_reproducible});
            return kOk;
        }

        if (sim->parsed()) {
            const auto net = network_from_json(read_json_file(sim_net));
            const auto a = DiseaseState::from_bitstring(sim_a);
            const auto b = DiseaseState::from_bitstring(sim_b);
            log_config(err, "similar", Json{{"network", sim_net}, {"a", sim_a}, {"b", sim_b},
                                            {"tol", sim_tol}});
            Json result{{"states_similar", states_similar(net, a, b, sim_tol)}};
            if (net.n_findings() <= kMaxRatioCheckFindings) {
                result["likelihood_ratio_invariant"] = likelihood_ratio_invariant(net, a, b, sim_tol);
            } else {
                result["likelihood_ratio_invariant"] = nullptr;
            }
            out << result.dump(2) << "\n";
            return kOk;
        }
    } catch (const ValidationError& e) {
        err << "bn2o: invalid input: " << e.what() << "\n";
        return kValidation;
    } catch (const InfeasibleError& e) {
        err << "bn2o: infeasible: " << e.what() << "\n";
        return kInfeasible;
    } catch (const ImpossibleEvidenceError& e) {
        err << "bn2o: impossible evidence: " << e.what() << "\n";
        return kImpossibleEvidence;
    } catch (const std::exception& e) {
        err << "bn2o: error: " << e.what() << "\n";
        return kValidation;
    }
    return kValidation;
}

}  // namespace bn2o::cli
