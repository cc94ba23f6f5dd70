#pragma once

// Shared helpers for the test suites.

#include <cstddef>
#include <string>
#include <vector>

#include "fairrank/matrix.hpp"
#include "fairrank/nn.hpp"
#include "fairrank/records.hpp"
#include "fairrank/rng.hpp"

namespace fairrank::testing {

inline bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

inline bool bitwise_equal(const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols && bitwise_equal(a.data, b.data);
}

inline bool params_equal(const ModelParams& a, const ModelParams& b) {
    if (a.layer_sizes != b.layer_sizes) return false;
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        if (!bitwise_equal(a.weights[l], b.weights[l])) return false;
        if (!bitwise_equal(a.biases[l], b.biases[l])) return false;
    }
    for (std::size_t l = 0; l < a.bn_scale.size(); ++l) {
        if (!bitwise_equal(a.bn_scale[l], b.bn_scale[l])) return false;
        if (!bitwise_equal(a.bn_shift[l], b.bn_shift[l])) return false;
        if (!bitwise_equal(a.bn_running_mean[l], b.bn_running_mean[l])) return false;
        if (!bitwise_equal(a.bn_running_var[l], b.bn_running_var[l])) return false;
    }
    if (a.adam.step != b.adam.step) return false;
    for (std::size_t l = 0; l < a.adam.m_weights.size(); ++l) {
        if (!bitwise_equal(a.adam.m_weights[l], b.adam.m_weights[l])) return false;
        if (!bitwise_equal(a.adam.v_weights[l], b.adam.v_weights[l])) return false;
    }
    return true;
}

inline Matrix random_batch(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (auto& x : m.data) x = rng.uniform(-1.5, 1.5);
    return m;
}

inline std::vector<double> random_labels(std::size_t n, Rng& rng) {
    std::vector<double> y(n);
    for (auto& v : y) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    return y;
}

// Masks with both groups guaranteed nonempty.
inline std::vector<bool> random_mask(std::size_t n, Rng& rng) {
    std::vector<bool> mask(n, false);
    for (std::size_t i = 0; i < n; ++i) mask[i] = rng.uniform() < 0.5;
    mask[rng.below(n)] = true;
    bool has_false = false;
    for (bool b : mask) has_false |= !b;
    if (!has_false) mask[rng.below(n)] = false;
    return mask;
}

// A tiny hand-built corpus: three papers, four authors, mixed attributes.
inline Corpus tiny_corpus() {
    std::vector<AuthorRecord> authors = {
        {"a1", 0, Race::white, CountryClass::developed, CareerStage::professor, 30.0},
        {"a2", 1, Race::hispanic, CountryClass::developed, CareerStage::student, 6.0},
        {"a3", 0, Race::asian, CountryClass::underdeveloped, CareerStage::postdoc, 12.0},
        {"a4", 1, Race::black, CountryClass::underdeveloped, CareerStage::lecturer, 9.0},
    };
    std::vector<PaperRecord> papers = {
        {"p1", "Interfaces for everyone", {"a1", "a2"}, 3, 1, Tier::top},
        {"p2", "Designing with communities", {"a3"}, 2, 0, Tier::mid},
        {"p3", "Adaptive review tooling", {"a4", "a1"}, 1, 1, Tier::low},
    };
    return Corpus(std::move(papers), std::move(authors));
}

}  // namespace fairrank::testing
