#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fairrank/dataset.hpp"
#include "fairrank/error.hpp"
#include "fairrank/fairness.hpp"
#include "fairrank/nn.hpp"
#include "fairrank/rng.hpp"

namespace fairrank {

struct TrainConfig {
    std::size_t epochs = 50;
    // Large batches keep the per-batch parity estimate stable: with ~10%
    // protected rows, small batches see so few group members that the noisy
    // gap signal degenerates into within-group variance shrinkage.
    std::size_t batch_size = 384;
    double learning_rate = 0.001;
    std::size_t patience = 10;
    std::uint64_t seed = 1;
    std::vector<std::size_t> hidden = {64, 32};
    FairnessSpec fairness;

    void validate() const {
        if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
        if (batch_size < 2) throw ConfigError("train: batch_size must be >= 2");
        if (patience < 1) throw ConfigError("train: patience must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
        if (hidden.size() != 2 || hidden[0] == 0 || hidden[1] == 0)
            throw ConfigError("train: expected two nonzero hidden widths");
        fairness.validate();
    }
};

struct TrainTrace {
    struct Epoch {
        double train_pred_loss = 0.0;
        double train_fair_loss = 0.0;
        double train_total_loss = 0.0;
        double valid_total_loss = 0.0;
    };
    std::vector<Epoch> epochs;
    std::size_t stopped_epoch = 0;  // number of epochs actually run
    std::size_t best_epoch = 0;     // 1-based epoch of the restored checkpoint
    double best_valid_loss = std::numeric_limits<double>::infinity();
    std::size_t empty_group_batches = 0;
};

namespace detail {

struct FairTerm {
    double loss = 0.0;
    std::vector<double> grad;
    bool empty_group = false;
};

// Fairness term with the empty-group fallback: a batch missing a required
// group contributes zero for that batch instead of failing the run.
inline FairTerm guarded_fairness(const std::vector<double>& preds, const GroupMasks& masks,
                                 const FairnessSpec& spec) {
    FairTerm term;
    if (spec.mode == FairnessMode::none) {
        term.grad.assign(preds.size(), 0.0);
        return term;
    }
    try {
        ParityResult r = fairness_loss(preds, masks, spec);
        term.loss = r.loss;
        term.grad = std::move(r.grad);
    } catch (const EmptyGroupError&) {
        term.grad.assign(preds.size(), 0.0);
        term.empty_group = true;
    }
    return term;
}

// Batches for one epoch. Strata by (protected_race, protected_country) are
// shuffled independently and dealt round-robin across batches, so every
// batch sees both groups whenever the split does.
inline std::vector<std::vector<std::size_t>> stratified_batches(
    const EncodedDataset& ds, const std::vector<std::size_t>& train_idx, std::size_t batch_size,
    Rng& rng) {
    std::map<std::array<bool, 2>, std::vector<std::size_t>> strata;
    for (std::size_t row : train_idx)
        strata[{static_cast<bool>(ds.masks.protected_race[row]),
                static_cast<bool>(ds.masks.protected_country[row])}]
            .push_back(row);

    const std::size_t n = train_idx.size();
    const std::size_t n_batches = (n + batch_size - 1) / batch_size;
    std::vector<std::vector<std::size_t>> batches(n_batches);
    std::size_t position = 0;
    for (auto& [key, rows] : strata) {
        rng.shuffle(rows);
        for (std::size_t row : rows) batches[position++ % n_batches].push_back(row);
    }
    return batches;
}

inline GroupMasks gather_masks(const GroupMasks& masks, const std::vector<std::size_t>& rows) {
    GroupMasks out;
    out.protected_race.reserve(rows.size());
    out.protected_country.reserve(rows.size());
    for (std::size_t row : rows) {
        out.protected_race.push_back(masks.protected_race[row]);
        out.protected_country.push_back(masks.protected_country[row]);
    }
    return out;
}

inline std::vector<double> gather_values(const std::vector<double>& values,
                                         const std::vector<std::size_t>& rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t row : rows) out.push_back(values[row]);
    return out;
}

}  // namespace detail

// Mini-batch training of the total objective
//     L_total = L_prediction + lambda * L_fairness
// with Adam updates and early stopping on the validation total loss. The
// returned parameters are the best-validation checkpoint. With lambda == 0
// the fairness gradient is skipped outright, which keeps such a run
// bit-identical to one with fairness disabled.
inline std::pair<ModelParams, TrainTrace> train(const EncodedDataset& ds,
                                                const TrainConfig& config) {
    config.validate();
    if (ds.train_idx.empty() || ds.valid_idx.empty())
        throw ConfigError("train: dataset has no train/valid split");

    const FairnessSpec& spec = config.fairness;
    if (spec.mode != FairnessMode::none) {
        std::size_t race = 0, non_race = 0, country = 0, non_country = 0;
        for (std::size_t row : ds.train_idx) {
            (ds.masks.protected_race[row] ? race : non_race) += 1;
            (ds.masks.protected_country[row] ? country : non_country) += 1;
        }
        const bool need_race =
            spec.mode == FairnessMode::race_only || spec.mode == FairnessMode::combined;
        const bool need_country =
            spec.mode == FairnessMode::country_only || spec.mode == FairnessMode::combined;
        if (need_race && race == 0)
            throw ConfigError("train: no protected-race papers in the training split");
        if (need_country && country == 0)
            throw ConfigError("train: no protected-country papers in the training split");
        if (spec.mode == FairnessMode::race_only && non_race == 0)
            throw ConfigError("train: no non-protected-race papers in the training split");
        if (spec.mode == FairnessMode::country_only && non_country == 0)
            throw ConfigError("train: no non-protected-country papers in the training split");
    }

    Rng rng(config.seed);
    std::vector<std::size_t> layer_sizes = {ds.features.cols, config.hidden[0], config.hidden[1], 1};
    ModelParams params = init_params(layer_sizes, rng);
    ModelParams best_params = params;

    const Matrix valid_features = gather_rows(ds.features, ds.valid_idx);
    const std::vector<double> valid_labels = detail::gather_values(ds.labels, ds.valid_idx);
    const GroupMasks valid_masks = detail::gather_masks(ds.masks, ds.valid_idx);

    TrainTrace trace;
    std::size_t epochs_without_improvement = 0;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto batches = detail::stratified_batches(ds, ds.train_idx, config.batch_size, rng);

        double epoch_pred = 0.0, epoch_fair = 0.0;
        for (const auto& rows : batches) {
            const Matrix batch = gather_rows(ds.features, rows);
            const std::vector<double> labels = detail::gather_values(ds.labels, rows);
            const GroupMasks masks = detail::gather_masks(ds.masks, rows);

            ForwardCache cache;
            const std::vector<double> preds = forward_train(params, batch, cache);
            BceResult bce = bce_loss(preds, labels);
            detail::FairTerm fair = detail::guarded_fairness(preds, masks, spec);
            if (fair.empty_group) trace.empty_group_batches += 1;

            std::vector<double> total_grad = std::move(bce.grad);
            if (spec.lambda > 0.0)
                for (std::size_t i = 0; i < total_grad.size(); ++i)
                    total_grad[i] += spec.lambda * fair.grad[i];

            const Gradients grads = backward(params, cache, total_grad);
            adam_step(params, grads, config.learning_rate);

            epoch_pred += bce.loss;
            epoch_fair += fair.loss;
        }
        epoch_pred /= static_cast<double>(batches.size());
        epoch_fair /= static_cast<double>(batches.size());

        const std::vector<double> valid_preds = predict(params, valid_features);
        const double valid_pred_loss = bce_loss(valid_preds, valid_labels).loss;
        const double valid_fair_loss =
            detail::guarded_fairness(valid_preds, valid_masks, spec).loss;
        const double valid_total =
            spec.lambda > 0.0 ? valid_pred_loss + spec.lambda * valid_fair_loss : valid_pred_loss;

        TrainTrace::Epoch record;
        record.train_pred_loss = epoch_pred;
        record.train_fair_loss = epoch_fair;
        record.train_total_loss =
            spec.lambda > 0.0 ? epoch_pred + spec.lambda * epoch_fair : epoch_pred;
        record.valid_total_loss = valid_total;
        trace.epochs.push_back(record);
        trace.stopped_epoch = epoch;

        if (valid_total < trace.best_valid_loss) {
            trace.best_valid_loss = valid_total;
            trace.best_epoch = epoch;
            best_params = params;
            epochs_without_improvement = 0;
        } else {
            epochs_without_improvement += 1;
            if (epochs_without_improvement >= config.patience) break;
        }
    }
    return {std::move(best_params), std::move(trace)};
}

}  // namespace fairrank
