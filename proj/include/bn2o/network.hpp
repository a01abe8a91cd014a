#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bn2o/error.hpp"

namespace bn2o {

/// Integer encoding of a disease configuration: bit j is disease j.
using StateMask = std::uint64_t;

/// Largest disease count that fits a StateMask.
inline constexpr std::size_t kMaxMaskDiseases = 64;

namespace detail {

inline bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

inline void require_probability(double p, const std::string& what) {
    if (!is_probability(p)) {
        throw ValidationError(what + " = " + std::to_string(p) + " is not in [0, 1]");
    }
}

}  // namespace detail

/// Two-layer noisy-OR network: independent binary diseases, each finding a
/// noisy-OR of all diseases plus a leak. Coefficients are dense and stored
/// row-major as [finding][disease]; a zero coefficient means no edge.
class Bn2oNetwork {
public:
    Bn2oNetwork(std::vector<double> priors, std::vector<double> leaks,
                std::vector<std::vector<double>> coeffs)
        : priors_(std::move(priors)), leaks_(std::move(leaks)) {
        if (priors_.empty()) throw ValidationError("network needs at least one disease");
        if (leaks_.empty()) throw ValidationError("network needs at least one finding");
        if (coeffs.size() != leaks_.size()) {
            throw ValidationError("coefficient matrix has " + std::to_string(coeffs.size()) +
                                  " rows, expected n_findings = " + std::to_string(leaks_.size()));
        }
        for (std::size_t j = 0; j < priors_.size(); ++j) {
            detail::require_probability(priors_[j], "prior[" + std::to_string(j) + "]");
        }
        for (std::size_t i = 0; i < leaks_.size(); ++i) {
            detail::require_probability(leaks_[i], "leak[" + std::to_string(i) + "]");
        }
        coeffs_.reserve(leaks_.size() * priors_.size());
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            if (coeffs[i].size() != priors_.size()) {
                throw ValidationError("coefficient row " + std::to_string(i) + " has " +
                                      std::to_string(coeffs[i].size()) +
                                      " entries, expected n_diseases = " +
                                      std::to_string(priors_.size()));
            }
            for (std::size_t j = 0; j < coeffs[i].size(); ++j) {
                detail::require_probability(
                    coeffs[i][j], "coeff[" + std::to_string(i) + "][" + std::to_string(j) + "]");
                coeffs_.push_back(coeffs[i][j]);
            }
        }
    }

    std::size_t n_diseases() const { return priors_.size(); }
    std::size_t n_findings() const { return leaks_.size(); }

    double prior(std::size_t disease) const { return priors_.at(disease); }
    double leak(std::size_t finding) const { return leaks_.at(finding); }
    double coeff(std::size_t finding, std::size_t disease) const {
        return coeff_row(finding)[disease];
    }

    std::span<const double> priors() const { return priors_; }
    std::span<const double> leaks() const { return leaks_; }

    /// Coefficients of one finding across all diseases.
    std::span<const double> coeff_row(std::size_t finding) const {
        if (finding >= n_findings()) {
            throw ValidationError("finding index " + std::to_string(finding) +
                                  " out of range (n_findings = " + std::to_string(n_findings()) +
                                  ")");
        }
        return std::span<const double>(coeffs_).subspan(finding * n_diseases(), n_diseases());
    }

    std::vector<std::vector<double>> coeff_matrix() const {
        std::vector<std::vector<double>> rows;
        rows.reserve(n_findings());
        for (std::size_t i = 0; i < n_findings(); ++i) {
            auto row = coeff_row(i);
            rows.emplace_back(row.begin(), row.end());
        }
        return rows;
    }

    friend bool operator==(const Bn2oNetwork&, const Bn2oNetwork&) = default;

private:
    std::vector<double> priors_;
    std::vector<double> leaks_;
    std::vector<double> coeffs_;
};

/// Truth assignment to every disease of a network.
class DiseaseState {
public:
    DiseaseState() = default;
    explicit DiseaseState(std::vector<bool> bits) : bits_(std::move(bits)) {}

    static DiseaseState all_false(std::size_t n) { return DiseaseState(std::vector<bool>(n)); }

    static DiseaseState from_mask(std::size_t n, StateMask mask) {
        if (n > kMaxMaskDiseases) throw ValidationError("too many diseases for a state mask");
        if (n < kMaxMaskDiseases && (mask >> n) != 0) {
            throw ValidationError("state mask " + std::to_string(mask) + " has bits beyond " +
                                  std::to_string(n) + " diseases");
        }
        std::vector<bool> bits(n);
        for (std::size_t j = 0; j < n; ++j) bits[j] = ((mask >> j) & 1U) != 0;
        return DiseaseState(std::move(bits));
    }

    /// Parses a bitstring such as "001011" with disease 0 leftmost.
    static DiseaseState from_bitstring(std::string_view text) {
        std::vector<bool> bits;
        bits.reserve(text.size());
        for (char c : text) {
            if (c != '0' && c != '1') {
                throw ValidationError("state literal '" + std::string(text) +
                                      "' must contain only 0 and 1");
            }
            bits.push_back(c == '1');
        }
        return DiseaseState(std::move(bits));
    }

    std::size_t size() const { return bits_.size(); }
    bool operator[](std::size_t j) const { return bits_[j]; }
    void set(std::size_t j, bool value) { bits_.at(j) = value; }
    const std::vector<bool>& bits() const { return bits_; }

    std::size_t count() const {
        return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
    }

    StateMask mask() const {
        if (bits_.size() > kMaxMaskDiseases) {
            throw ValidationError("too many diseases for a state mask");
        }
        StateMask m = 0;
        for (std::size_t j = 0; j < bits_.size(); ++j) {
            if (bits_[j]) m |= StateMask{1} << j;
        }
        return m;
    }

    std::string to_bitstring() const {
        std::string out;
        out.reserve(bits_.size());
        for (bool b : bits_) out.push_back(b ? '1' : '0');
        return out;
    }

    friend bool operator==(const DiseaseState&, const DiseaseState&) = default;

private:
    std::vector<bool> bits_;
};

/// Observed findings. Index lists are kept sorted and duplicate-free.
class Evidence {
public:
    Evidence() = default;
    Evidence(std::vector<std::size_t> positive, std::vector<std::size_t> negative)
        : positive_(normalize(std::move(positive))), negative_(normalize(std::move(negative))) {
        std::vector<std::size_t> both;
        std::set_intersection(positive_.begin(), positive_.end(), negative_.begin(),
                              negative_.end(), std::back_inserter(both));
        if (!both.empty()) {
            throw ValidationError("finding " + std::to_string(both.front()) +
                                  " is observed both positive and negative");
        }
    }

    static Evidence from_masks(StateMask positive, StateMask negative) {
        return Evidence(indices_of(positive), indices_of(negative));
    }

    const std::vector<std::size_t>& positive() const { return positive_; }
    const std::vector<std::size_t>& negative() const { return negative_; }
    bool empty() const { return positive_.empty() && negative_.empty(); }

    StateMask positive_mask() const { return mask_of(positive_); }
    StateMask negative_mask() const { return mask_of(negative_); }

    void validate(std::size_t n_findings) const {
        for (const auto* list : {&positive_, &negative_}) {
            if (!list->empty() && list->back() >= n_findings) {
                throw ValidationError("evidence finding index " + std::to_string(list->back()) +
                                      " out of range (n_findings = " +
                                      std::to_string(n_findings) + ")");
            }
        }
    }

    friend bool operator==(const Evidence&, const Evidence&) = default;

private:
    static std::vector<std::size_t> normalize(std::vector<std::size_t> v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    }

    static std::vector<std::size_t> indices_of(StateMask mask) {
        std::vector<std::size_t> out;
        while (mask != 0) {
            out.push_back(static_cast<std::size_t>(std::countr_zero(mask)));
            mask &= mask - 1;
        }
        return out;
    }

    static StateMask mask_of(const std::vector<std::size_t>& idx) {
        StateMask m = 0;
        for (auto i : idx) {
            if (i >= kMaxMaskDiseases) throw ValidationError("finding index too large for a mask");
            m |= StateMask{1} << i;
        }
        return m;
    }

    std::vector<std::size_t> positive_;
    std::vector<std::size_t> negative_;
};

/// Posterior disease marginals together with the probability of the evidence.
struct Posteriors {
    std::vector<double> per_disease;
    double evidence_probability = 1.0;
};

}  // namespace bn2o
