#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fairrank/csv.hpp"
#include "fairrank/error.hpp"
#include "fairrank/fairness.hpp"
#include "fairrank/matrix.hpp"
#include "fairrank/records.hpp"
#include "fairrank/rng.hpp"

namespace fairrank {

struct FeatureColumn {
    std::string name;
    bool scaled = false;      // min-max scaled numeric column
    double min_value = 0.0;   // fit on the full dataset before splitting
    double max_value = 0.0;
};

// Model-ready view of a corpus. The feature matrix never contains a column
// derived from race or country; those live out of band in `masks`.
struct EncodedDataset {
    Matrix features;
    std::vector<double> labels;
    GroupMasks masks;
    std::vector<std::string> paper_ids;  // row -> paper
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> valid_idx;
    std::vector<FeatureColumn> feature_schema;
    std::vector<std::string> warnings;

    std::size_t size() const { return features.rows; }
};

namespace detail {

inline double parse_double_field(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw ParseError("");
        return v;
    } catch (...) {
        throw ParseError(where + ": not a number: '" + s + "'");
    }
}

inline int parse_int_field(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) throw ParseError("");
        return v;
    } catch (...) {
        throw ParseError(where + ": not an integer: '" + s + "'");
    }
}

inline std::vector<std::string> split_ids(const std::string& joined) {
    std::vector<std::string> ids;
    std::string current;
    for (char c : joined) {
        if (c == ';') {
            if (!current.empty()) ids.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) ids.push_back(std::move(current));
    return ids;
}

}  // namespace detail

inline const std::vector<std::string> kPapersHeader = {"paper_id", "title",  "conference",
                                                       "accepted", "author_ids", "tier"};
inline const std::vector<std::string> kAuthorsHeader = {"author_id",     "gender",
                                                        "race",          "country_class",
                                                        "career_stage",  "h_index"};

// Reads papers.csv / authors.csv with full validation and referential
// integrity. Errors name the offending row and column.
inline Corpus load_records(const std::filesystem::path& papers_path,
                           const std::filesystem::path& authors_path) {
    const CsvTable author_table = read_csv(authors_path);
    expect_header(author_table, kAuthorsHeader, authors_path.string());
    std::vector<AuthorRecord> authors;
    authors.reserve(author_table.rows.size());
    for (std::size_t r = 0; r < author_table.rows.size(); ++r) {
        const auto& row = author_table.rows[r];
        const std::string where = authors_path.string() + " row " + std::to_string(r + 2);
        AuthorRecord a;
        a.author_id = row[0];
        if (a.author_id.empty()) throw ParseError(where + ", column author_id: empty id");
        const int gender = detail::parse_int_field(row[1], where + ", column gender");
        if (gender != 0 && gender != 1)
            throw ParseError(where + ", column gender: expected 0 or 1, got '" + row[1] + "'");
        a.gender = gender;
        try {
            a.race = race_from_string(row[2]);
        } catch (const ParseError& e) {
            throw ParseError(where + ", column race: " + e.what());
        }
        try {
            a.country_class = country_class_from_string(row[3]);
        } catch (const ParseError& e) {
            throw ParseError(where + ", column country_class: " + e.what());
        }
        try {
            a.career_stage = career_stage_from_string(row[4]);
        } catch (const ParseError& e) {
            throw ParseError(where + ", column career_stage: " + e.what());
        }
        a.h_index = detail::parse_double_field(row[5], where + ", column h_index");
        if (a.h_index < 0.0) throw ParseError(where + ", column h_index: must be >= 0");
        authors.push_back(std::move(a));
    }

    const CsvTable paper_table = read_csv(papers_path);
    expect_header(paper_table, kPapersHeader, papers_path.string());
    std::vector<PaperRecord> papers;
    papers.reserve(paper_table.rows.size());
    for (std::size_t r = 0; r < paper_table.rows.size(); ++r) {
        const auto& row = paper_table.rows[r];
        const std::string where = papers_path.string() + " row " + std::to_string(r + 2);
        PaperRecord p;
        p.paper_id = row[0];
        if (p.paper_id.empty()) throw ParseError(where + ", column paper_id: empty id");
        p.title = row[1];
        p.conference = detail::parse_int_field(row[2], where + ", column conference");
        if (p.conference < 1 || p.conference > 3)
            throw ParseError(where + ", column conference: expected 1, 2 or 3, got '" + row[2] + "'");
        p.accepted = detail::parse_int_field(row[3], where + ", column accepted");
        if (p.accepted != 0 && p.accepted != 1)
            throw ParseError(where + ", column accepted: expected 0 or 1, got '" + row[3] + "'");
        p.author_ids = detail::split_ids(row[4]);
        if (p.author_ids.empty())
            throw ParseError(where + ", column author_ids: no authors listed");
        if (!row[5].empty()) {
            try {
                p.tier = tier_from_string(row[5]);
            } catch (const ParseError& e) {
                throw ParseError(where + ", column tier: " + e.what());
            }
        }
        papers.push_back(std::move(p));
    }

    try {
        return Corpus(std::move(papers), std::move(authors));
    } catch (const ParseError& e) {
        throw ParseError(papers_path.string() + ": " + e.what());
    }
}

// One-hot conference and dominant career stage, scaled author count, female
// share and stage-weighted mean h-index. Race and country never enter;
// paper-level protected flags go into the out-of-band masks instead.
// Min-max parameters are fit on the full dataset and recorded in the schema.
inline EncodedDataset encode(const Corpus& corpus,
                             const StageWeights& stage_weights = default_stage_weights()) {
    const std::size_t n = corpus.papers.size();
    if (n == 0) throw ConfigError("encode: empty corpus");

    static const char* kConferenceColumns[3] = {"conf_iui", "conf_dis", "conf_sigchi"};

    EncodedDataset ds;
    for (int c = 0; c < 3; ++c) ds.feature_schema.push_back({kConferenceColumns[c]});
    for (std::size_t s = 0; s < kCareerStageCount; ++s)
        ds.feature_schema.push_back(
            {std::string("stage_") + to_string(static_cast<CareerStage>(s))});
    ds.feature_schema.push_back({"author_count", true});
    ds.feature_schema.push_back({"female_share"});
    ds.feature_schema.push_back({"weighted_h_index", true});
    const std::size_t n_cols = ds.feature_schema.size();
    const std::size_t col_author_count = 3 + kCareerStageCount;
    const std::size_t col_female_share = col_author_count + 1;
    const std::size_t col_whindex = col_female_share + 1;

    ds.features = Matrix(n, n_cols);
    ds.labels.resize(n);
    ds.masks.protected_race.resize(n);
    ds.masks.protected_country.resize(n);
    ds.paper_ids.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        const PaperRecord& paper = corpus.papers[i];
        ds.paper_ids[i] = paper.paper_id;
        ds.labels[i] = static_cast<double>(paper.accepted);
        ds.masks.protected_race[i] = corpus.paper_protected_race(paper);
        ds.masks.protected_country[i] = corpus.paper_protected_country(paper);

        ds.features(i, static_cast<std::size_t>(paper.conference - 1)) = 1.0;

        std::array<std::size_t, kCareerStageCount> stage_counts{};
        double female = 0.0;
        double whindex = 0.0;
        for (const std::string& id : paper.author_ids) {
            const AuthorRecord& a = corpus.author(id);
            stage_counts[static_cast<std::size_t>(a.career_stage)] += 1;
            female += a.gender == 1 ? 1.0 : 0.0;
            whindex += stage_weights[static_cast<std::size_t>(a.career_stage)] * a.h_index;
        }
        const double n_authors = static_cast<double>(paper.author_ids.size());
        // Dominant stage; ties resolve to the lowest enum value.
        std::size_t dominant = 0;
        for (std::size_t s = 1; s < kCareerStageCount; ++s)
            if (stage_counts[s] > stage_counts[dominant]) dominant = s;
        ds.features(i, 3 + dominant) = 1.0;
        ds.features(i, col_author_count) = n_authors;
        ds.features(i, col_female_share) = female / n_authors;
        ds.features(i, col_whindex) = whindex / n_authors;
    }

    // Fit min-max on the full dataset, then scale in place. A constant
    // column maps to 0 and leaves a warning.
    for (std::size_t j = 0; j < n_cols; ++j) {
        if (!ds.feature_schema[j].scaled) continue;
        double lo = ds.features(0, j), hi = ds.features(0, j);
        for (std::size_t i = 1; i < n; ++i) {
            lo = std::min(lo, ds.features(i, j));
            hi = std::max(hi, ds.features(i, j));
        }
        ds.feature_schema[j].min_value = lo;
        ds.feature_schema[j].max_value = hi;
        if (hi == lo) {
            for (std::size_t i = 0; i < n; ++i) ds.features(i, j) = 0.0;
            ds.warnings.push_back("feature '" + ds.feature_schema[j].name +
                                  "' is constant; scaled to 0");
        } else {
            for (std::size_t i = 0; i < n; ++i)
                ds.features(i, j) = (ds.features(i, j) - lo) / (hi - lo);
        }
    }
    return ds;
}

// Deterministic stratified split on (label, protected_race, protected_country).
// Per-stratum train counts start at floor(fraction * size); the global
// remainder up to round(fraction * n) goes to the strata with the largest
// fractional parts, so each stratum stays within one item of its target.
// Singleton strata go to training with a warning.
inline void stratified_split(EncodedDataset& ds, double train_fraction, Rng& rng) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("stratified_split: train_fraction must be in (0, 1)");
    const std::size_t n = ds.size();

    std::map<std::array<bool, 3>, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < n; ++i) {
        strata[{ds.labels[i] > 0.5, static_cast<bool>(ds.masks.protected_race[i]),
                static_cast<bool>(ds.masks.protected_country[i])}]
            .push_back(i);
    }

    struct Allocation {
        std::vector<std::size_t>* items;
        std::size_t take;
        double remainder;
    };
    std::vector<Allocation> allocations;
    std::size_t assigned = 0;
    for (auto& [key, items] : strata) {
        rng.shuffle(items);
        if (items.size() == 1) {
            allocations.push_back({&items, 1, -1.0});  // singleton: train, never a remainder slot
            assigned += 1;
            ds.warnings.push_back("stratum of size 1 placed in training");
            continue;
        }
        const double exact = train_fraction * static_cast<double>(items.size());
        const auto take = static_cast<std::size_t>(std::floor(exact));
        allocations.push_back({&items, take, exact - std::floor(exact)});
        assigned += take;
    }

    const auto target =
        static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    std::vector<std::size_t> order(allocations.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return allocations[a].remainder > allocations[b].remainder;
    });
    for (std::size_t k = 0; k < order.size() && assigned < target; ++k) {
        Allocation& alloc = allocations[order[k]];
        if (alloc.remainder < 0.0 || alloc.take >= alloc.items->size()) continue;
        alloc.take += 1;
        assigned += 1;
    }

    ds.train_idx.clear();
    ds.valid_idx.clear();
    for (const Allocation& alloc : allocations) {
        for (std::size_t k = 0; k < alloc.items->size(); ++k)
            (k < alloc.take ? ds.train_idx : ds.valid_idx).push_back((*alloc.items)[k]);
    }
    std::sort(ds.train_idx.begin(), ds.train_idx.end());
    std::sort(ds.valid_idx.begin(), ds.valid_idx.end());
}

}  // namespace fairrank
