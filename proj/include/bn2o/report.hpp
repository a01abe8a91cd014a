#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <string>
#include <system_error>

#include "bn2o/json_io.hpp"
#include "bn2o/sweep.hpp"

namespace bn2o {

/// Locale-independent number text: scientific below 1e-3, shortest
/// round-trip form otherwise.
inline std::string format_number(double value) {
    std::array<char, 64> buf{};
    std::to_chars_result res{};
    if (value != 0.0 && std::abs(value) < 1e-3) {
        res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::scientific, 6);
    } else {
        res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed);
    }
    return std::string(buf.data(), res.ptr);
}

struct ReportOptions {
    /// When false, wall times are written as 0 so reruns are byte-identical.
    bool include_timing = true;
};

namespace detail {

inline std::string policy_param_text(const SelectionPolicy& policy) {
    if (const auto* d = std::get_if<DMaxPolicy>(&policy)) return std::to_string(d->d_max);
    return format_number(policy_parameter(policy));
}

inline Json stats_json(const ErrorStats& s) {
    auto evidence = [](StateMask mask) { return Evidence::from_masks(mask, 0).positive(); };
    return Json{{"max_abs_error", s.max_abs},
                {"max_abs_evidence_positive", evidence(s.abs_evidence)},
                {"max_abs_disease", s.abs_disease},
                {"max_rel_error", s.max_rel},
                {"max_rel_evidence_positive", evidence(s.rel_evidence)},
                {"max_rel_disease", s.rel_disease},
                {"evaluated_evidence_sets", s.evaluated},
                {"relative_skipped", s.rel_skipped},
                {"model_failures", s.failures}};
}

}  // namespace detail

/// Writes report.csv, curves.csv and meta.json into `directory`.
inline void emit_report(const ErrorReport& report, const std::filesystem::path& directory,
                        const ReportOptions& options = {}) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) {
        throw std::runtime_error("cannot create '" + directory.string() + "': " + ec.message());
    }
    const std::string engine = to_string(report.sweep.exact_engine);

    std::string csv =
        "policy,param,method,N_b,fraction,max_abs,max_rel,sigma_prior_mass,exact_engine,wall_ms\n";
    std::string curves = "policy,param,method,n_positive,max_abs,max_rel\n";
    Json rows = Json::array();
    for (const auto& row : report.rows) {
        const auto kind = policy_kind(row.policy);
        const auto param = detail::policy_param_text(row.policy);
        const double wall = options.include_timing ? row.wall_ms : 0.0;
        for (const auto& [method, stats] :
             {std::pair<const char*, const ErrorStats*>{"aggregation", &row.aggregation},
              std::pair<const char*, const ErrorStats*>{"abstraction", &row.abstraction}}) {
            csv += kind + "," + param + "," + method + "," + std::to_string(row.n_base) + "," +
                   format_number(row.fraction) + "," + format_number(stats->max_abs) + "," +
                   format_number(stats->max_rel) + "," + format_number(row.sigma_prior_mass) +
                   "," + engine + "," + format_number(wall) + "\n";
            for (std::size_t c = 0; c < stats->curve_abs.size(); ++c) {
                curves += kind + "," + param + "," + method + "," + std::to_string(c) + "," +
                          format_number(stats->curve_abs[c]) + "," +
                          format_number(stats->curve_rel[c]) + "\n";
            }
        }
        Json r{{"policy", to_json(row.policy)},
               {"N_b", row.n_base},
               {"fraction", row.fraction},
               {"sigma_prior_mass", row.sigma_prior_mass},
               {"aggregation", detail::stats_json(row.aggregation)},
               {"abstraction", detail::stats_json(row.abstraction)}};
        if (options.include_timing) r["wall_ms"] = row.wall_ms;
        rows.push_back(std::move(r));
    }

    Json meta{{"n_diseases", report.n_diseases},
              {"n_findings", report.n_findings},
              {"sweep", to_json(report.sweep)},
              {"evidence_sets", report.evidence_sets},
              {"exact_impossible_evidence_sets", report.exact_impossible},
              {"rows", rows}};
    meta["generator"] = report.generator ? to_json(*report.generator) : Json(nullptr);
    meta["seed"] = report.generator ? Json(report.generator->seed) : Json(nullptr);
    if (options.include_timing) meta["exact_wall_ms"] = report.exact_wall_ms;

    write_file_atomic(directory / "report.csv", csv);
    write_file_atomic(directory / "curves.csv", curves);
    write_json_file(directory / "meta.json", meta);
}

}  // namespace bn2o
