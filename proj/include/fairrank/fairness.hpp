#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fairrank/error.hpp"

namespace fairrank {

enum class FairnessMode { none, race_only, country_only, combined };

inline const char* to_string(FairnessMode mode) {
    switch (mode) {
        case FairnessMode::none: return "none";
        case FairnessMode::race_only: return "race";
        case FairnessMode::country_only: return "country";
        case FairnessMode::combined: return "combined";
    }
    return "?";
}

inline FairnessMode fairness_mode_from_string(const std::string& s) {
    if (s == "none") return FairnessMode::none;
    if (s == "race") return FairnessMode::race_only;
    if (s == "country") return FairnessMode::country_only;
    if (s == "combined") return FairnessMode::combined;
    throw ConfigError("unknown fairness mode '" + s + "' (expected none|race|country|combined)");
}

struct FairnessSpec {
    FairnessMode mode = FairnessMode::none;
    double lambda = 0.0;    // regularization strength
    double w_race = 0.32;   // combined-mode weight for the race term
    double w_country = 0.68;

    void validate() const {
        if (lambda < 0.0) throw ConfigError("fairness: lambda must satisfy lambda >= 0");
        if (w_race < 0.0) throw ConfigError("fairness: w_race must satisfy w_race >= 0");
        if (w_country < 0.0) throw ConfigError("fairness: w_country must satisfy w_country >= 0");
    }
};

// Per-row protected-group membership, carried out of band of the feature
// matrix so the model never sees it.
struct GroupMasks {
    std::vector<bool> protected_race;
    std::vector<bool> protected_country;

    std::size_t size() const { return protected_race.size(); }
};

namespace detail {

inline std::size_t mask_count(const std::vector<bool>& mask) {
    std::size_t n = 0;
    for (bool b : mask) n += b ? 1 : 0;
    return n;
}

}  // namespace detail

// Mean predicted acceptance probability over the masked group; the soft
// estimator of P(y-hat = 1 | group).
inline double group_rate(const std::vector<double>& predictions, const std::vector<bool>& mask) {
    if (predictions.size() != mask.size())
        throw ShapeError("group_rate: mask length " + std::to_string(mask.size()) +
                         " != predictions length " + std::to_string(predictions.size()));
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) {
            sum += predictions[i];
            ++count;
        }
    }
    if (count == 0) throw EmptyGroupError("group_rate: mask selects no elements");
    return sum / static_cast<double>(count);
}

struct ParityResult {
    double loss = 0.0;
    std::vector<double> grad;  // dL/dprediction_i
};

// Squared statistical-parity gap between protected and non-protected means.
// Gradient: 2*(mu_p - mu_np)/N_p on protected rows, -2*(mu_p - mu_np)/N_np
// on the rest.
inline ParityResult parity_loss_single(const std::vector<double>& predictions,
                                       const std::vector<bool>& mask) {
    if (predictions.size() != mask.size())
        throw ShapeError("parity_loss_single: mask length mismatch");
    const std::size_t n = predictions.size();
    const std::size_t n_protected = detail::mask_count(mask);
    if (n_protected == 0) throw EmptyGroupError("parity_loss_single: protected group is empty");
    if (n_protected == n) throw EmptyGroupError("parity_loss_single: non-protected group is empty");

    double sum_p = 0.0, sum_np = 0.0;
    for (std::size_t i = 0; i < n; ++i) (mask[i] ? sum_p : sum_np) += predictions[i];
    const double mu_p = sum_p / static_cast<double>(n_protected);
    const double mu_np = sum_np / static_cast<double>(n - n_protected);
    const double gap = mu_p - mu_np;

    ParityResult out;
    out.loss = gap * gap;
    out.grad.resize(n);
    const double g_p = 2.0 * gap / static_cast<double>(n_protected);
    const double g_np = -2.0 * gap / static_cast<double>(n - n_protected);
    for (std::size_t i = 0; i < n; ++i) out.grad[i] = mask[i] ? g_p : g_np;
    return out;
}

// Weighted two-attribute loss: each protected-group mean is compared against
// the overall batch mean (this differs from the single-attribute gap on
// purpose; both formulations are kept as written). A row can sit in both
// groups and always contributes through the overall mean.
inline ParityResult parity_loss_combined(const std::vector<double>& predictions,
                                         const GroupMasks& masks, double w_race,
                                         double w_country) {
    const std::size_t n = predictions.size();
    if (masks.protected_race.size() != n || masks.protected_country.size() != n)
        throw ShapeError("parity_loss_combined: mask length mismatch");
    const std::size_t n_race = detail::mask_count(masks.protected_race);
    const std::size_t n_country = detail::mask_count(masks.protected_country);
    if (n_race == 0) throw EmptyGroupError("parity_loss_combined: race group is empty");
    if (n_country == 0) throw EmptyGroupError("parity_loss_combined: country group is empty");

    double sum_all = 0.0, sum_race = 0.0, sum_country = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum_all += predictions[i];
        if (masks.protected_race[i]) sum_race += predictions[i];
        if (masks.protected_country[i]) sum_country += predictions[i];
    }
    const double mu_all = sum_all / static_cast<double>(n);
    const double mu_race = sum_race / static_cast<double>(n_race);
    const double mu_country = sum_country / static_cast<double>(n_country);
    const double gap_race = mu_race - mu_all;
    const double gap_country = mu_country - mu_all;

    ParityResult out;
    out.loss = w_race * gap_race * gap_race + w_country * gap_country * gap_country;
    out.grad.resize(n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d_race =
            (masks.protected_race[i] ? 1.0 / static_cast<double>(n_race) : 0.0) - inv_n;
        const double d_country =
            (masks.protected_country[i] ? 1.0 / static_cast<double>(n_country) : 0.0) - inv_n;
        out.grad[i] =
            2.0 * w_race * gap_race * d_race + 2.0 * w_country * gap_country * d_country;
    }
    return out;
}

// Dispatch on the configured mode. Returns a zero term for FairnessMode::none.
inline ParityResult fairness_loss(const std::vector<double>& predictions, const GroupMasks& masks,
                                  const FairnessSpec& spec) {
    switch (spec.mode) {
        case FairnessMode::none:
            return ParityResult{0.0, std::vector<double>(predictions.size(), 0.0)};
        case FairnessMode::race_only:
            return parity_loss_single(predictions, masks.protected_race);
        case FairnessMode::country_only:
            return parity_loss_single(predictions, masks.protected_country);
        case FairnessMode::combined:
            return parity_loss_combined(predictions, masks, spec.w_race, spec.w_country);
    }
    throw InvariantError("fairness_loss: unreachable mode");
}

}  // namespace fairrank
