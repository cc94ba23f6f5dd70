#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "fairrank/dataset.hpp"
#include "fairrank/error.hpp"
#include "fairrank/fairness.hpp"
#include "fairrank/metrics.hpp"
#include "fairrank/selection.hpp"
#include "fairrank/synthetic.hpp"
#include "fairrank/training.hpp"

namespace fairrank {

struct DataSource {
    enum class Kind { synthetic, files };
    Kind kind = Kind::synthetic;
    BiasLevel regime = BiasLevel::high;
    std::size_t n_papers = 530;
    std::filesystem::path papers_path;
    std::filesystem::path authors_path;
};

// One sweep cell: a fairness configuration evaluated across all seeds.
struct CellKey {
    FairnessMode mode = FairnessMode::race_only;
    double lambda = 0.0;
    double w_race = 0.32;
    double w_country = 0.68;

    auto tie() const { return std::make_tuple(static_cast<int>(mode), lambda, w_race, w_country); }
    bool operator<(const CellKey& other) const { return tie() < other.tie(); }
    bool operator==(const CellKey& other) const { return tie() == other.tie(); }
};

struct TrainSummary {
    std::size_t stopped_epoch = 0;
    std::size_t best_epoch = 0;
    double best_valid_loss = 0.0;
    double first_train_total_loss = 0.0;
    double best_train_total_loss = 0.0;  // train total at the best-validation epoch
    double final_train_pred_loss = 0.0;
    double final_train_fair_loss = 0.0;
    std::size_t empty_group_batches = 0;
};

struct CellRun {
    CellKey key;
    std::uint64_t seed = 0;
    std::string error;  // empty on success
    MetricsReport metrics;
    TrainSummary train_summary;
    double selection_threshold = 0.0;
    std::size_t n_accepted = 0;
    double selected_race_share = 0.0;
    double selected_country_share = 0.0;

    bool ok() const { return error.empty(); }
};

// Names of the per-run metrics that get aggregated over seeds, in the order
// they appear in the CSV outputs.
inline const std::vector<std::string>& aggregated_metric_names() {
    static const std::vector<std::string> names = {
        "macro_race",   "macro_country", "micro_race",   "micro_country",
        "utility_gain", "diversity_gain", "f_measure"};
    return names;
}

inline double run_metric(const CellRun& run, const std::string& name) {
    if (name == "macro_race") return run.metrics.macro_gain.at("race");
    if (name == "macro_country") return run.metrics.macro_gain.at("country");
    if (name == "micro_race") return run.metrics.micro_gain.at("race");
    if (name == "micro_country") return run.metrics.micro_gain.at("country");
    if (name == "utility_gain") return run.metrics.utility_gain;
    if (name == "diversity_gain") return run.metrics.diversity_gain;
    if (name == "f_measure") return run.metrics.f_measure;
    throw InvariantError("unknown metric '" + name + "'");
}

struct CellAggregate {
    CellKey key;
    std::size_t n_seeds = 0;  // successful runs
    std::map<std::string, double> mean;
    std::map<std::string, double> stddev;  // sample std, 0 for a single seed
};

struct ExperimentPlan {
    DataSource data;
    std::vector<FairnessMode> modes = {FairnessMode::race_only, FairnessMode::country_only,
                                       FairnessMode::combined};
    std::vector<double> lambda_grid = {1.0, 2.0, 2.5, 3.0, 5.0, 10.0};
    // lambda = 0 is always swept as the internal baseline column.
    bool include_lambda_zero = true;
    // (w_race, w_country) grid; only the combined mode fans out over it.
    std::vector<std::pair<double, double>> weight_grid = {{0.32, 0.68}, {0.32, 1.36}, {0.64, 0.68}};
    std::size_t n_seeds = 5;
    std::uint64_t base_seed = 1;
    std::size_t n_accept = 0;  // 0 = source default: 280 synthetic, 351 files
    TrainConfig train;
    StageWeights stage_weights = default_stage_weights();
    GeneratorConfig generator;
    std::size_t threads = 0;  // 0 = hardware concurrency

    std::size_t resolved_n_accept() const {
        if (n_accept > 0) return n_accept;
        return data.kind == DataSource::Kind::synthetic ? 280 : 351;
    }

    std::vector<double> resolved_lambdas() const {
        std::vector<double> lambdas = lambda_grid;
        if (include_lambda_zero) lambdas.push_back(0.0);
        std::sort(lambdas.begin(), lambdas.end());
        lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
        return lambdas;
    }

    std::vector<CellKey> cells() const {
        std::vector<CellKey> keys;
        const auto lambdas = resolved_lambdas();
        for (FairnessMode mode : modes) {
            const bool fan_out = mode == FairnessMode::combined;
            const std::size_t n_weights = fan_out ? weight_grid.size() : 1;
            for (double lambda : lambdas)
                for (std::size_t w = 0; w < n_weights; ++w)
                    keys.push_back({mode, lambda, weight_grid[w].first, weight_grid[w].second});
        }
        std::sort(keys.begin(), keys.end());
        return keys;
    }

    void validate() const {
        if (modes.empty()) throw ConfigError("plan: no fairness modes selected");
        for (FairnessMode mode : modes)
            if (mode == FairnessMode::none)
                throw ConfigError("plan: mode 'none' is implicit as the lambda=0 baseline");
        for (double lambda : lambda_grid)
            if (lambda < 0.0) throw ConfigError("plan: lambda grid must satisfy lambda >= 0");
        if (weight_grid.empty()) throw ConfigError("plan: weight grid is empty");
        if (n_seeds < 1) throw ConfigError("plan: need at least one seed");
        if (data.kind == DataSource::Kind::synthetic && data.n_papers < 50)
            throw ConfigError("plan: synthetic corpus needs n_papers >= 50");
        if (data.kind == DataSource::Kind::synthetic &&
            resolved_n_accept() > data.n_papers)
            throw ConfigError("plan: n_accept " + std::to_string(resolved_n_accept()) +
                              " exceeds corpus size " + std::to_string(data.n_papers));
        train.validate();
    }
};

struct SweepResult {
    ExperimentPlan plan;
    std::vector<CellRun> runs;  // sorted by (cell key, seed)
};

inline std::vector<ProtectedAttribute> active_attributes(FairnessMode mode) {
    switch (mode) {
        case FairnessMode::race_only: return {ProtectedAttribute::race};
        case FairnessMode::country_only: return {ProtectedAttribute::country};
        default: return {ProtectedAttribute::race, ProtectedAttribute::country};
    }
}

// Rounds to the 4 decimal places every emitted number carries; aggregates are
// computed over these values so aggregate.csv can be reproduced exactly from
// sweep.csv rows.
inline double round4(double value) { return std::round(value * 1e4) / 1e4; }

inline std::vector<CellAggregate> aggregate_runs(const std::vector<CellRun>& runs) {
    std::map<CellKey, std::vector<const CellRun*>> grouped;
    for (const CellRun& run : runs)
        if (run.ok()) grouped[run.key].push_back(&run);

    std::vector<CellAggregate> aggregates;
    for (const auto& [key, cell_runs] : grouped) {
        CellAggregate agg;
        agg.key = key;
        agg.n_seeds = cell_runs.size();
        for (const std::string& name : aggregated_metric_names()) {
            double sum = 0.0;
            for (const CellRun* run : cell_runs) sum += round4(run_metric(*run, name));
            const double mean = sum / static_cast<double>(cell_runs.size());
            double sq = 0.0;
            for (const CellRun* run : cell_runs) {
                const double d = round4(run_metric(*run, name)) - mean;
                sq += d * d;
            }
            const double std_dev =
                cell_runs.size() > 1 ? std::sqrt(sq / static_cast<double>(cell_runs.size() - 1))
                                     : 0.0;
            agg.mean[name] = mean;
            agg.stddev[name] = std_dev;
        }
        aggregates.push_back(std::move(agg));
    }
    return aggregates;
}

namespace detail {

struct SeedContext {
    std::uint64_t seed = 0;
    Corpus corpus;
    EncodedDataset dataset;
    std::vector<std::string> baseline_ids;
    std::string error;  // a failed seed poisons only its own runs
};

inline void run_parallel(std::size_t n_tasks, std::size_t n_threads,
                         const std::function<void(std::size_t)>& body) {
    if (n_threads == 0) n_threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, std::max<std::size_t>(1, n_tasks));
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        workers.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) body(i);
        });
    }
    for (auto& worker : workers) worker.join();
}

// Per-seed stream salts; every run derives its randomness from
// (base_seed + seed_index) through these fixed channels.
inline constexpr std::uint64_t kDataSalt = 1;
inline constexpr std::uint64_t kSplitSalt = 2;
inline constexpr std::uint64_t kTrainSalt = 3;

}  // namespace detail

// Executes the full grid: every (mode, lambda, weights) cell across every
// seed, scored against the per-seed baseline. Synthetic sources regenerate a
// corpus per seed; file sources share the corpus and re-split per seed. The
// baseline is the lambda=0 (fairness-off) selection for synthetic data and
// the historically accepted set for file data. Cell failures are recorded
// per run; the rest of the grid still executes.
inline SweepResult run_plan(const ExperimentPlan& plan) {
    plan.validate();

    const std::size_t n_accept = plan.resolved_n_accept();
    std::optional<Corpus> shared_corpus;
    std::optional<EncodedDataset> shared_encoded;
    if (plan.data.kind == DataSource::Kind::files) {
        shared_corpus = load_records(plan.data.papers_path, plan.data.authors_path);
        shared_encoded = encode(*shared_corpus, plan.stage_weights);
        if (n_accept > shared_encoded->size())
            throw ConfigError("plan: n_accept " + std::to_string(n_accept) +
                              " exceeds corpus size " + std::to_string(shared_encoded->size()));
    }

    // Stage 1: per-seed data and baselines, parallel over seeds.
    std::vector<detail::SeedContext> seeds(plan.n_seeds);
    detail::run_parallel(plan.n_seeds, plan.threads, [&](std::size_t i) {
        detail::SeedContext& ctx = seeds[i];
        ctx.seed = plan.base_seed + i;
        const Rng base(ctx.seed);
        try {
            if (plan.data.kind == DataSource::Kind::synthetic) {
                Rng data_rng = base.child(detail::kDataSalt);
                ctx.corpus = generate_synthetic(BiasRegime::preset(plan.data.regime),
                                                plan.data.n_papers, data_rng, plan.generator);
                ctx.dataset = encode(ctx.corpus, plan.stage_weights);
            } else {
                ctx.corpus = *shared_corpus;
                ctx.dataset = *shared_encoded;
            }
            Rng split_rng = base.child(detail::kSplitSalt);
            stratified_split(ctx.dataset, 0.8, split_rng);

            if (plan.data.kind == DataSource::Kind::synthetic) {
                TrainConfig config = plan.train;
                config.fairness = FairnessSpec{};  // fairness off
                config.seed = base.child(detail::kTrainSalt).seed();
                const auto [params, trace] = train(ctx.dataset, config);
                ctx.baseline_ids = rank_and_select(params, ctx.dataset, n_accept).selected_ids;
            } else {
                for (const PaperRecord& paper : ctx.corpus.papers)
                    if (paper.accepted == 1) ctx.baseline_ids.push_back(paper.paper_id);
                if (ctx.baseline_ids.empty())
                    throw ConfigError("plan: file corpus has no accepted papers for a baseline");
            }
        } catch (const std::exception& e) {
            ctx.error = e.what();
        }
    });

    // Stage 2: the grid, parallel over (cell, seed) tasks.
    const std::vector<CellKey> cells = plan.cells();
    const std::size_t n_tasks = cells.size() * plan.n_seeds;
    std::vector<CellRun> runs(n_tasks);
    const DistributionAxis axis = plan.data.kind == DataSource::Kind::synthetic
                                      ? DistributionAxis::tier
                                      : DistributionAxis::conference;

    detail::run_parallel(n_tasks, plan.threads, [&](std::size_t task) {
        const CellKey& key = cells[task / plan.n_seeds];
        detail::SeedContext& ctx = seeds[task % plan.n_seeds];
        CellRun& run = runs[task];
        run.key = key;
        run.seed = ctx.seed;
        try {
            if (!ctx.error.empty()) throw ConfigError("seed setup failed: " + ctx.error);

            TrainConfig config = plan.train;
            config.fairness.mode = key.mode;
            config.fairness.lambda = key.lambda;
            config.fairness.w_race = key.w_race;
            config.fairness.w_country = key.w_country;
            config.seed = Rng(ctx.seed).child(detail::kTrainSalt).seed();

            const auto [params, trace] = train(ctx.dataset, config);
            const SelectionResult selection = rank_and_select(params, ctx.dataset, n_accept);

            run.metrics = score_selection(selection.selected_ids, ctx.baseline_ids, ctx.corpus,
                                          active_attributes(key.mode), plan.stage_weights, axis);
            run.train_summary = {trace.stopped_epoch,
                                 trace.best_epoch,
                                 trace.best_valid_loss,
                                 trace.epochs.front().train_total_loss,
                                 trace.epochs[trace.best_epoch - 1].train_total_loss,
                                 trace.epochs.back().train_pred_loss,
                                 trace.epochs.back().train_fair_loss,
                                 trace.empty_group_batches};
            run.selection_threshold = selection.threshold;
            run.n_accepted = selection.n_accepted;
            run.selected_race_share = selection.selected_race_share;
            run.selected_country_share = selection.selected_country_share;
        } catch (const std::exception& e) {
            run.error = e.what();
        }
    });

    std::sort(runs.begin(), runs.end(), [](const CellRun& a, const CellRun& b) {
        if (!(a.key == b.key)) return a.key < b.key;
        return a.seed < b.seed;
    });
    return SweepResult{plan, std::move(runs)};
}

}  // namespace fairrank
