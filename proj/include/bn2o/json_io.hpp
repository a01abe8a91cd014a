#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "bn2o/error.hpp"
#include "bn2o/generator.hpp"
#include "bn2o/network.hpp"
#include "bn2o/reduction.hpp"
#include "bn2o/sweep.hpp"

namespace bn2o {

using Json = nlohmann::json;

/// Tag stored in serialized reduced models.
inline constexpr const char* kModelFormat = "bn2o-reduced-model";

namespace detail {

template <typename T>
T field(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw ValidationError(std::string("missing field '") + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace detail

inline Json to_json(const Bn2oNetwork& net) {
    return Json{{"n_diseases", net.n_diseases()},
                {"n_findings", net.n_findings()},
                {"priors", std::vector<double>(net.priors().begin(), net.priors().end())},
                {"leaks", std::vector<double>(net.leaks().begin(), net.leaks().end())},
                {"coeffs", net.coeff_matrix()}};
}

inline Bn2oNetwork network_from_json(const Json& j) {
    const auto n = detail::field<std::size_t>(j, "n_diseases");
    const auto m = detail::field<std::size_t>(j, "n_findings");
    auto priors = detail::field<std::vector<double>>(j, "priors");
    auto leaks = detail::field<std::vector<double>>(j, "leaks");
    auto coeffs = detail::field<std::vector<std::vector<double>>>(j, "coeffs");
    if (priors.size() != n) throw ValidationError("priors length does not match n_diseases");
    if (leaks.size() != m) throw ValidationError("leaks length does not match n_findings");
    return Bn2oNetwork(std::move(priors), std::move(leaks), std::move(coeffs));
}

inline Json to_json(const Evidence& ev) {
    return Json{{"positive", ev.positive()}, {"negative", ev.negative()}};
}

inline Evidence evidence_from_json(const Json& j) {
    auto read = [&](const char* key) {
        if (!j.contains(key)) return std::vector<std::size_t>{};
        const auto& arr = j.at(key);
        if (!arr.is_array()) throw ValidationError(std::string("'") + key + "' must be an array");
        std::vector<std::size_t> out;
        for (const auto& v : arr) {
            if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
                throw ValidationError(std::string("'") + key +
                                      "' must hold nonnegative finding indices");
            }
            out.push_back(v.get<std::size_t>());
        }
        return out;
    };
    if (!j.is_object()) throw ValidationError("evidence must be a JSON object");
    return Evidence(read("positive"), read("negative"));
}

inline Json to_json(const SelectionPolicy& policy) {
    if (const auto* d = std::get_if<DMaxPolicy>(&policy)) {
        return Json{{"kind", "dmax"}, {"d_max", d->d_max}};
    }
    if (const auto* l = std::get_if<LambdaPolicy>(&policy)) {
        return Json{{"kind", "lambda"}, {"threshold", l->threshold}};
    }
    std::vector<std::string> states;
    for (const auto& s : std::get<ExplicitPolicy>(policy).states) states.push_back(s.to_bitstring());
    return Json{{"kind", "explicit"}, {"states", states}};
}

inline SelectionPolicy policy_from_json(const Json& j) {
    const auto kind = detail::field<std::string>(j, "kind");
    if (kind == "dmax") return DMaxPolicy{detail::field<std::size_t>(j, "d_max")};
    if (kind == "lambda") return LambdaPolicy{detail::field<double>(j, "threshold")};
    if (kind == "explicit") {
        ExplicitPolicy p;
        for (const auto& s : detail::field<std::vector<std::string>>(j, "states")) {
            p.states.push_back(DiseaseState::from_bitstring(s));
        }
        return p;
    }
    throw ValidationError("unknown policy kind '" + kind + "'");
}

inline Json to_json(const ValueSource& src) {
    if (const auto* u = std::get_if<UniformValue>(&src)) {
        return Json{{"kind", "uniform"}, {"lo", u->lo}, {"hi", u->hi}};
    }
    return Json{{"kind", "fixed"}, {"value", std::get<FixedValue>(src).value}};
}

inline ValueSource value_source_from_json(const Json& j) {
    const auto kind = detail::field<std::string>(j, "kind");
    if (kind == "uniform") {
        return UniformValue{detail::field<double>(j, "lo"), detail::field<double>(j, "hi")};
    }
    if (kind == "fixed") return FixedValue{detail::field<double>(j, "value")};
    throw ValidationError("unknown value source kind '" + kind + "'");
}

inline Json to_json(const GeneratorConfig& cfg) {
    Json coeff;
    if (const auto* pool = std::get_if<PoolCoefficients>(&cfg.coeff_source)) {
        coeff = Json{{"kind", "pool"}, {"values", pool->values}};
    } else {
        coeff = Json{{"kind", "beta24"}};
    }
    return Json{{"n_diseases", cfg.n_diseases},
                {"n_findings", cfg.n_findings},
                {"coeff_source", coeff},
                {"prior_source", to_json(cfg.prior_source)},
                {"leak_source", to_json(cfg.leak_source)},
                {"seed", cfg.seed}};
}

/// Missing fields keep their defaults. Coefficient source "cpcs" selects the
/// built-in synthetic pool.
inline GeneratorConfig generator_config_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("generator config must be a JSON object");
    GeneratorConfig cfg;
    if (j.contains("n_diseases")) cfg.n_diseases = detail::field<std::size_t>(j, "n_diseases");
    if (j.contains("n_findings")) cfg.n_findings = detail::field<std::size_t>(j, "n_findings");
    if (j.contains("seed")) cfg.seed = detail::field<std::uint64_t>(j, "seed");
    if (j.contains("prior_source")) cfg.prior_source = value_source_from_json(j.at("prior_source"));
    if (j.contains("leak_source")) cfg.leak_source = value_source_from_json(j.at("leak_source"));
    if (j.contains("coeff_source")) {
        const auto& c = j.at("coeff_source");
        const auto kind = detail::field<std::string>(c, "kind");
        if (kind == "beta24") {
            cfg.coeff_source = Beta24Coefficients{};
        } else if (kind == "pool") {
            cfg.coeff_source = PoolCoefficients{detail::field<std::vector<double>>(c, "values")};
        } else if (kind == "cpcs") {
            cfg.coeff_source = PoolCoefficients{synthetic_cpcs_pool()};
        } else {
            throw ValidationError("unknown coefficient source kind '" + kind + "'");
        }
    }
    cfg.validate();
    return cfg;
}

inline Json to_json(const SweepConfig& cfg) {
    Json mode = cfg.evidence_mode == EvidenceMode::AllPositiveSubsets
                    ? Json{{"kind", "all_positive_subsets"}}
                    : Json{{"kind", "positive_up_to"}, {"k", cfg.max_positive}};
    Json policies = Json::array();
    for (const auto& p : cfg.reductions) policies.push_back(to_json(p));
    return Json{{"evidence_mode", mode},
                {"unobserved_findings",
                 cfg.unobserved == UnobservedFindings::Absent ? "absent" : "negative"},
                {"exact_engine", to_string(cfg.exact_engine)},
                {"reductions", policies},
                {"budget",
                 {{"max_evidence_sets", cfg.budget.max_evidence_sets},
                  {"max_exact_work", cfg.budget.max_exact_work}}},
                {"threads", cfg.threads}};
}

inline SweepConfig sweep_config_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("sweep config must be a JSON object");
    SweepConfig cfg;
    if (j.contains("evidence_mode")) {
        const auto& mode = j.at("evidence_mode");
        const auto kind = detail::field<std::string>(mode, "kind");
        if (kind == "all_positive_subsets") {
            cfg.evidence_mode = EvidenceMode::AllPositiveSubsets;
        } else if (kind == "positive_up_to") {
            cfg.evidence_mode = EvidenceMode::PositiveUpTo;
            cfg.max_positive = detail::field<std::size_t>(mode, "k");
        } else {
            throw ValidationError("unknown evidence mode '" + kind + "'");
        }
    }
    if (j.contains("unobserved_findings")) {
        const auto v = detail::field<std::string>(j, "unobserved_findings");
        if (v == "absent") {
            cfg.unobserved = UnobservedFindings::Absent;
        } else if (v == "negative") {
            cfg.unobserved = UnobservedFindings::Negative;
        } else {
            throw ValidationError("unobserved_findings must be 'absent' or 'negative'");
        }
    }
    if (j.contains("exact_engine")) {
        const auto v = detail::field<std::string>(j, "exact_engine");
        if (v == "brute_force" || v == "brute") {
            cfg.exact_engine = ExactEngine::BruteForce;
        } else if (v == "quickscore") {
            cfg.exact_engine = ExactEngine::Quickscore;
        } else {
            throw ValidationError("exact_engine must be 'brute_force' or 'quickscore'");
        }
    }
    if (j.contains("reductions")) {
        for (const auto& p : j.at("reductions")) cfg.reductions.push_back(policy_from_json(p));
    }
    if (j.contains("budget")) {
        const auto& b = j.at("budget");
        cfg.budget.max_evidence_sets = detail::field<std::uint64_t>(b, "max_evidence_sets");
        cfg.budget.max_exact_work = detail::field<double>(b, "max_exact_work");
    }
    if (j.contains("threads")) cfg.threads = detail::field<std::size_t>(j, "threads");
    return cfg;
}

inline Json to_json(const AggregatedModel& model) {
    return Json{{"format", kModelFormat},
                {"network", to_json(model.source())},
                {"policy", to_json(model.base().policy)},
                {"base_states", model.base().states},
                {"base_prior_mass", model.base().base_prior_mass},
                {"per_disease_base_mass", model.base().per_disease_base_mass},
                {"aggregate_prior", model.aggregate_prior()},
                {"aggregate_conditionals", model.aggregate_conditionals()},
                {"alpha", model.alpha()}};
}

inline bool is_model_json(const Json& j) {
    return j.is_object() && j.contains("format") && j.at("format") == kModelFormat;
}

inline AggregatedModel model_from_json(const Json& j) {
    if (!is_model_json(j)) throw ValidationError("not a reduced-model file");
    auto net = network_from_json(detail::field<Json>(j, "network"));
    BaseStateSet base;
    base.n_diseases = net.n_diseases();
    base.policy = policy_from_json(detail::field<Json>(j, "policy"));
    base.states = detail::field<std::vector<StateMask>>(j, "base_states");
    if (!std::is_sorted(base.states.begin(), base.states.end()) ||
        std::adjacent_find(base.states.begin(), base.states.end()) != base.states.end()) {
        throw ValidationError("base_states must be strictly ascending");
    }
    base.base_prior_mass = detail::field<double>(j, "base_prior_mass");
    base.per_disease_base_mass = detail::field<std::vector<double>>(j, "per_disease_base_mass");
    if (base.per_disease_base_mass.size() != net.n_diseases()) {
        throw ValidationError("per_disease_base_mass length does not match n_diseases");
    }
    return AggregatedModel(std::move(net), std::move(base), detail::field<double>(j, "aggregate_prior"),
                           detail::field<std::vector<double>>(j, "aggregate_conditionals"),
                           detail::field<std::vector<double>>(j, "alpha"));
}

inline Json to_json(const Posteriors& post) {
    return Json{{"posteriors", post.per_disease},
                {"evidence_probability", post.evidence_probability}};
}

inline Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

/// Writes via a sibling temporary file and a rename so readers never see a
/// partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot move '" + tmp.string() + "' to '" + path.string() +
                                 "': " + ec.message());
    }
}

inline void write_json_file(const std::filesystem::path& path, const Json& j) {
    write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace bn2o
