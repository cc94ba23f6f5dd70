#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "fairrank/error.hpp"
#include "fairrank/records.hpp"

namespace fairrank {

enum class ProtectedAttribute { race, country };

inline const char* to_string(ProtectedAttribute attr) {
    return attr == ProtectedAttribute::race ? "race" : "country";
}

enum class DistributionAxis { conference, tier };

struct MetricsReport {
    std::map<std::string, double> macro_gain;  // attribute name -> percent
    std::map<std::string, double> micro_gain;
    double utility_gain = 0.0;
    double diversity_gain = 0.0;
    double f_measure = 0.0;
    std::map<std::string, double> distribution;  // category -> percent share
    std::size_t n_features = 0;                  // attributes averaged into diversity_gain
};

namespace detail {

inline bool paper_protected(const Corpus& corpus, const PaperRecord& paper,
                            ProtectedAttribute attr) {
    return attr == ProtectedAttribute::race ? corpus.paper_protected_race(paper)
                                            : corpus.paper_protected_country(paper);
}

// Fraction of papers in the set whose derived protected flag is true.
inline double paper_share(const std::vector<std::string>& ids, const Corpus& corpus,
                          ProtectedAttribute attr) {
    if (ids.empty()) throw ConfigError("metrics: empty paper set");
    std::size_t hits = 0;
    for (const auto& id : ids)
        hits += paper_protected(corpus, corpus.paper(id), attr) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(ids.size());
}

// Fraction of protected author slots; an author counts once per paper
// appearance.
inline double author_share(const std::vector<std::string>& ids, const Corpus& corpus,
                           ProtectedAttribute attr) {
    if (ids.empty()) throw ConfigError("metrics: empty paper set");
    std::size_t hits = 0, slots = 0;
    for (const auto& id : ids) {
        for (const auto& author_id : corpus.paper(id).author_ids) {
            const AuthorRecord& a = corpus.author(author_id);
            const bool is_protected = attr == ProtectedAttribute::race ? a.is_protected_race()
                                                                       : a.is_protected_country();
            hits += is_protected ? 1 : 0;
            slots += 1;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(slots);
}

inline double relative_gain(double selected_share, double baseline_share, const char* what) {
    if (baseline_share == 0.0)
        throw UndefinedMetricError(std::string(what) + ": baseline share is zero, gain undefined");
    return 100.0 * (selected_share - baseline_share) / baseline_share;
}

}  // namespace detail

// Relative increase of the protected-paper share versus the baseline set.
inline double macro_gain(const std::vector<std::string>& selected,
                         const std::vector<std::string>& baseline, ProtectedAttribute attr,
                         const Corpus& corpus) {
    return detail::relative_gain(detail::paper_share(selected, corpus, attr),
                                 detail::paper_share(baseline, corpus, attr), "macro_gain");
}

// Same, at the author level.
inline double micro_gain(const std::vector<std::string>& selected,
                         const std::vector<std::string>& baseline, ProtectedAttribute attr,
                         const Corpus& corpus) {
    return detail::relative_gain(detail::author_share(selected, corpus, attr),
                                 detail::author_share(baseline, corpus, attr), "micro_gain");
}

// Mean career-stage-weighted h-index of a paper's authors.
inline double paper_utility(const PaperRecord& paper, const Corpus& corpus,
                            const StageWeights& stage_weights) {
    double sum = 0.0;
    for (const auto& id : paper.author_ids) {
        const AuthorRecord& a = corpus.author(id);
        sum += stage_weights[static_cast<std::size_t>(a.career_stage)] * a.h_index;
    }
    return sum / static_cast<double>(paper.author_ids.size());
}

inline double set_utility(const std::vector<std::string>& ids, const Corpus& corpus,
                          const StageWeights& stage_weights) {
    if (ids.empty()) throw ConfigError("metrics: empty paper set");
    double sum = 0.0;
    for (const auto& id : ids) sum += paper_utility(corpus.paper(id), corpus, stage_weights);
    return sum / static_cast<double>(ids.size());
}

inline double utility_gain(const std::vector<std::string>& selected,
                           const std::vector<std::string>& baseline, const Corpus& corpus,
                           const StageWeights& stage_weights = default_stage_weights()) {
    const double base = set_utility(baseline, corpus, stage_weights);
    if (base == 0.0)
        throw UndefinedMetricError("utility_gain: baseline utility is zero, gain undefined");
    return 100.0 * (set_utility(selected, corpus, stage_weights) - base) / base;
}

// Mean of the per-attribute macro gains, each capped above at 100. Negative
// gains pass through uncapped.
inline double diversity_gain(const std::vector<double>& macro_gains) {
    if (macro_gains.empty()) throw ConfigError("diversity_gain: no macro gains supplied");
    double sum = 0.0;
    for (double g : macro_gains) sum += std::min(100.0, g);
    return sum / static_cast<double>(macro_gains.size());
}

// F = 2 * D_G * (100 - UG) / (D_G + (100 - UG)), evaluated as written.
inline double f_measure(double diversity, double utility) {
    const double utility_term = 100.0 - utility;
    const double denominator = diversity + utility_term;
    if (denominator == 0.0)
        throw UndefinedMetricError("f_measure: zero denominator");
    return 2.0 * diversity * utility_term / denominator;
}

// Percent share of the selected set per conference or tier; shares sum
// to 100 across the axis categories.
inline std::map<std::string, double> distribution_report(const std::vector<std::string>& ids,
                                                         DistributionAxis axis,
                                                         const Corpus& corpus) {
    if (ids.empty()) throw ConfigError("distribution_report: empty paper set");
    std::map<std::string, double> counts;
    if (axis == DistributionAxis::conference) {
        for (int c = 1; c <= 3; ++c) counts[conference_name(c)] = 0.0;
        for (const auto& id : ids) counts[conference_name(corpus.paper(id).conference)] += 1.0;
    } else {
        counts[to_string(Tier::top)] = 0.0;
        counts[to_string(Tier::mid)] = 0.0;
        counts[to_string(Tier::low)] = 0.0;
        for (const auto& id : ids) {
            const PaperRecord& paper = corpus.paper(id);
            if (!paper.tier)
                throw ConfigError("distribution_report: paper '" + paper.paper_id +
                                  "' has no tier label");
            counts[to_string(*paper.tier)] += 1.0;
        }
    }
    for (auto& [name, value] : counts) value = 100.0 * value / static_cast<double>(ids.size());
    return counts;
}

// Full report for a selection versus a baseline. Diversity averages over the
// attributes the run actively constrained.
inline MetricsReport score_selection(const std::vector<std::string>& selected,
                                     const std::vector<std::string>& baseline,
                                     const Corpus& corpus,
                                     const std::vector<ProtectedAttribute>& active_attributes,
                                     const StageWeights& stage_weights = default_stage_weights(),
                                     DistributionAxis axis = DistributionAxis::conference) {
    MetricsReport report;
    for (ProtectedAttribute attr : {ProtectedAttribute::race, ProtectedAttribute::country}) {
        report.macro_gain[to_string(attr)] = macro_gain(selected, baseline, attr, corpus);
        report.micro_gain[to_string(attr)] = micro_gain(selected, baseline, attr, corpus);
    }
    report.utility_gain = utility_gain(selected, baseline, corpus, stage_weights);
    std::vector<double> active_macro;
    for (ProtectedAttribute attr : active_attributes)
        active_macro.push_back(report.macro_gain[to_string(attr)]);
    report.n_features = active_macro.size();
    report.diversity_gain = diversity_gain(active_macro);
    report.f_measure = f_measure(report.diversity_gain, report.utility_gain);
    report.distribution = distribution_report(selected, axis, corpus);
    return report;
}

}  // namespace fairrank
