#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "fairrank/error.hpp"
#include "fairrank/records.hpp"
#include "fairrank/rng.hpp"

namespace fairrank {

enum class BiasLevel { fair, moderate, high };

inline const char* to_string(BiasLevel level) {
    switch (level) {
        case BiasLevel::fair: return "fair";
        case BiasLevel::moderate: return "moderate";
        case BiasLevel::high: return "high";
    }
    return "?";
}

inline BiasLevel bias_level_from_string(const std::string& s) {
    if (s == "fair") return BiasLevel::fair;
    if (s == "moderate") return BiasLevel::moderate;
    if (s == "high") return BiasLevel::high;
    throw ConfigError("unknown bias regime '" + s + "' (expected fair|moderate|high)");
}

// Target paper-level protected shares (percent) per regime.
struct BiasRegime {
    BiasLevel level = BiasLevel::fair;
    double gender_share = 48.80;
    double race_share = 51.50;
    double country_share = 52.30;

    static BiasRegime preset(BiasLevel level) {
        switch (level) {
            case BiasLevel::fair: return {BiasLevel::fair, 48.80, 51.50, 52.30};
            case BiasLevel::moderate: return {BiasLevel::moderate, 28.10, 28.90, 31.50};
            case BiasLevel::high: return {BiasLevel::high, 8.50, 9.70, 10.00};
        }
        throw ConfigError("invalid bias level");
    }
};

// Generator knobs. The defaults produce corpora whose selected sets can
// plausibly mirror the real-stage distributions; everything here is
// overridable without recompiling callers.
struct GeneratorConfig {
    double tier_top = 0.60;
    double tier_mid = 0.25;  // low tier takes the remainder
    double accept_quota = 0.53;

    double h_mean_top = 25.0;
    double h_mean_mid = 12.0;
    double h_mean_low = 5.0;
    double h_sd_ratio = 0.4;

    // Labels come from a noisy quality score; under bias, protected papers'
    // scores take a multiplicative haircut per protected attribute.
    double quality_noise_sd = 0.25;
    double penalty_high = 0.30;
    double penalty_moderate = 0.15;
    double penalty_fair = 0.0;

    std::size_t min_authors = 1;
    std::size_t max_authors = 4;
    // Probability that each co-author beyond the first shares the paper's
    // protected attribute.
    double homophily = 0.85;

    std::array<double, 3> conference_mix{0.15, 0.25, 0.60};  // IUI, DIS, SIGCHI

    // Career-stage mixes indexed by CareerStage. Papers from protected
    // groups skew strongly junior; this is the indirect-bias channel the
    // features can pick up even with race/country excluded.
    std::array<double, kCareerStageCount> junior_stage_mix{0.01, 0.02, 0.05, 0.17, 0.70, 0.05};
    std::array<double, kCareerStageCount> senior_stage_mix{0.35, 0.22, 0.15, 0.08, 0.05, 0.15};

    double penalty(BiasLevel level) const {
        switch (level) {
            case BiasLevel::fair: return penalty_fair;
            case BiasLevel::moderate: return penalty_moderate;
            case BiasLevel::high: return penalty_high;
        }
        return 0.0;
    }
};

namespace detail {

// Exactly round(share/100 * n) true flags, uniformly placed, so realized
// shares match the regime targets up to integer rounding on every seed.
inline std::vector<bool> exact_share_flags(double share_percent, std::size_t n, Rng& rng) {
    auto count = static_cast<std::size_t>(std::llround(share_percent / 100.0 * static_cast<double>(n)));
    count = std::min(count, n);
    std::vector<std::size_t> positions(n);
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    rng.shuffle(positions);
    std::vector<bool> flags(n, false);
    for (std::size_t k = 0; k < count; ++k) flags[positions[k]] = true;
    return flags;
}

inline double truncated_normal(double mean, double sd, Rng& rng) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        const double x = rng.normal(mean, sd);
        if (x >= 0.0) return x;
    }
    return 0.0;
}

inline std::string zero_padded(std::size_t value, int width) {
    std::string digits = std::to_string(value);
    if (static_cast<int>(digits.size()) < width)
        digits.insert(digits.begin(), width - digits.size(), '0');
    return digits;
}

}  // namespace detail

// Builds a corpus whose paper-level protected shares hit the regime's
// targets, with a 60/25/15 tier mix, tier-dependent h-index, and acceptance
// labels taken as the top accept_quota fraction of a noisy quality score
// that penalizes protected papers proportionally to the regime severity.
inline Corpus generate_synthetic(const BiasRegime& regime, std::size_t n_papers, Rng& rng,
                                 const GeneratorConfig& config = {}) {
    if (n_papers < 50) throw ConfigError("generate_synthetic: n_papers must be >= 50");

    const auto female_flags = detail::exact_share_flags(regime.gender_share, n_papers, rng);
    const auto race_flags = detail::exact_share_flags(regime.race_share, n_papers, rng);
    const auto country_flags = detail::exact_share_flags(regime.country_share, n_papers, rng);

    const std::vector<double> tier_weights = {config.tier_top, config.tier_mid,
                                              1.0 - config.tier_top - config.tier_mid};
    const std::vector<double> conference_weights(config.conference_mix.begin(),
                                                 config.conference_mix.end());
    const double penalty = config.penalty(regime.level);

    std::vector<PaperRecord> papers;
    std::vector<AuthorRecord> authors;
    papers.reserve(n_papers);
    std::vector<double> quality(n_papers);

    std::size_t next_author = 0;
    for (std::size_t i = 0; i < n_papers; ++i) {
        PaperRecord paper;
        paper.paper_id = "P" + detail::zero_padded(i + 1, 5);
        paper.title = "Synthetic paper " + detail::zero_padded(i + 1, 5);
        paper.tier = static_cast<Tier>(rng.categorical(tier_weights));
        paper.conference = static_cast<int>(rng.categorical(conference_weights)) + 1;

        const std::size_t n_authors =
            config.min_authors + rng.below(config.max_authors - config.min_authors + 1);
        const bool disadvantaged = race_flags[i] || country_flags[i];

        // Flagged attributes are realized by at least one author; co-authors
        // share them with probability `homophily`.
        auto member_flags = [&](bool paper_flag) {
            std::vector<bool> flags(n_authors, false);
            if (!paper_flag) return flags;
            flags[0] = true;
            for (std::size_t a = 1; a < n_authors; ++a) flags[a] = rng.uniform() < config.homophily;
            return flags;
        };
        const auto author_female = member_flags(female_flags[i]);
        const auto author_race = member_flags(race_flags[i]);
        const auto author_country = member_flags(country_flags[i]);

        const auto& stage_mix = disadvantaged ? config.junior_stage_mix : config.senior_stage_mix;
        const std::vector<double> stage_weights_vec(stage_mix.begin(), stage_mix.end());
        const double h_mean = *paper.tier == Tier::top   ? config.h_mean_top
                              : *paper.tier == Tier::mid ? config.h_mean_mid
                                                         : config.h_mean_low;

        double mean_h = 0.0;
        for (std::size_t a = 0; a < n_authors; ++a) {
            AuthorRecord author;
            author.author_id = "A" + detail::zero_padded(++next_author, 6);
            author.gender = author_female[a] ? 1 : 0;
            author.race = author_race[a] ? (rng.uniform() < 0.5 ? Race::hispanic : Race::black)
                                         : (rng.uniform() < 0.5 ? Race::white : Race::asian);
            author.country_class =
                author_country[a] ? CountryClass::underdeveloped : CountryClass::developed;
            author.career_stage = static_cast<CareerStage>(rng.categorical(stage_weights_vec));
            author.h_index = detail::truncated_normal(h_mean, config.h_sd_ratio * h_mean, rng);
            mean_h += author.h_index;
            paper.author_ids.push_back(author.author_id);
            authors.push_back(std::move(author));
        }
        mean_h /= static_cast<double>(n_authors);

        // The quality score deliberately uses the raw mean h-index, keeping
        // the career-stage mix out of the ground truth: stages act only as an
        // indirect proxy for protection, which is what the label penalty
        // turns into learnable bias.
        double mult = 1.0;
        if (race_flags[i]) mult *= 1.0 - penalty;
        if (country_flags[i]) mult *= 1.0 - penalty;
        quality[i] = mean_h * mult * (1.0 + config.quality_noise_sd * rng.normal());

        papers.push_back(std::move(paper));
    }

    // Top accept_quota fraction by quality score becomes the accepted set.
    const auto n_accepted = static_cast<std::size_t>(
        std::floor(config.accept_quota * static_cast<double>(n_papers)));
    std::vector<std::size_t> order(n_papers);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return quality[a] > quality[b]; });
    for (std::size_t k = 0; k < n_accepted; ++k) papers[order[k]].accepted = 1;

    return Corpus(std::move(papers), std::move(authors));
}

// Paper-level protected shares in percent, for regime-fidelity checks and
// the generate command's summary output.
struct RealizedShares {
    double gender = 0.0;
    double race = 0.0;
    double country = 0.0;
};

inline RealizedShares protected_shares(const Corpus& corpus) {
    RealizedShares shares;
    if (corpus.papers.empty()) return shares;
    for (const PaperRecord& p : corpus.papers) {
        shares.gender += corpus.paper_any_female(p) ? 1.0 : 0.0;
        shares.race += corpus.paper_protected_race(p) ? 1.0 : 0.0;
        shares.country += corpus.paper_protected_country(p) ? 1.0 : 0.0;
    }
    const double n = static_cast<double>(corpus.papers.size());
    shares.gender *= 100.0 / n;
    shares.race *= 100.0 / n;
    shares.country *= 100.0 / n;
    return shares;
}

}  // namespace fairrank
