#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairrank/dataset.hpp"
#include "fairrank/error.hpp"
#include "fairrank/nn.hpp"

namespace fairrank {

struct SelectionResult {
    std::vector<std::string> selected_ids;  // descending probability
    double threshold = 0.0;                 // minimum selected probability
    std::size_t n_accepted = 0;
    std::size_t n_total = 0;
    std::unordered_map<std::string, double> probabilities;
    // Parity statistics of the selected set, recorded for verification; the
    // selector never adjusts the ranking to meet a quota.
    double selected_race_share = 0.0;
    double selected_country_share = 0.0;
    double pool_race_share = 0.0;
    double pool_country_share = 0.0;
};

// Ranking core: indices of the k highest probabilities, descending, with
// ties broken by ascending id. Exposed separately so the ordering contract
// can be exercised without a model.
inline std::vector<std::size_t> top_k_by_probability(const std::vector<std::string>& ids,
                                                     const std::vector<double>& probabilities,
                                                     std::size_t k) {
    if (ids.size() != probabilities.size())
        throw ShapeError("top_k_by_probability: ids/probabilities length mismatch");
    if (k < 1 || k > ids.size())
        throw ConfigError("top_k_by_probability: k must be in [1, " +
                          std::to_string(ids.size()) + "], got " + std::to_string(k));
    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (probabilities[a] != probabilities[b]) return probabilities[a] > probabilities[b];
        return ids[a] < ids[b];
    });
    order.resize(k);
    return order;
}

// Applies the trained model to every row (train and validation alike), ranks
// by predicted acceptance probability and keeps the top n_accept.
inline SelectionResult rank_and_select(const ModelParams& model, const EncodedDataset& ds,
                                       std::size_t n_accept) {
    if (n_accept < 1 || n_accept > ds.size())
        throw ConfigError("rank_and_select: n_accept must be in [1, " +
                          std::to_string(ds.size()) + "], got " + std::to_string(n_accept));

    const std::vector<double> probs = predict(model, ds.features);
    const auto top = top_k_by_probability(ds.paper_ids, probs, n_accept);

    SelectionResult result;
    result.n_accepted = n_accept;
    result.n_total = ds.size();
    result.probabilities.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) result.probabilities[ds.paper_ids[i]] = probs[i];

    result.selected_ids.reserve(n_accept);
    for (std::size_t row : top) result.selected_ids.push_back(ds.paper_ids[row]);
    result.threshold = probs[top.back()];

    std::size_t race = 0, country = 0;
    for (std::size_t row : top) {
        race += ds.masks.protected_race[row] ? 1 : 0;
        country += ds.masks.protected_country[row] ? 1 : 0;
    }
    result.selected_race_share = 100.0 * static_cast<double>(race) / static_cast<double>(n_accept);
    result.selected_country_share =
        100.0 * static_cast<double>(country) / static_cast<double>(n_accept);

    std::size_t pool_race = 0, pool_country = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        pool_race += ds.masks.protected_race[i] ? 1 : 0;
        pool_country += ds.masks.protected_country[i] ? 1 : 0;
    }
    result.pool_race_share =
        100.0 * static_cast<double>(pool_race) / static_cast<double>(ds.size());
    result.pool_country_share =
        100.0 * static_cast<double>(pool_country) / static_cast<double>(ds.size());
    return result;
}

}  // namespace fairrank
