/*
 * Copyright 2026 The gppta Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "gppta/detail/normal.hpp"
#include "gppta/errors.hpp"
#include "gppta/freq_warp.hpp"
#include "gppta/laplace.hpp"
#include "gppta/response_model.hpp"

namespace gppta {

/// C = sigma_p sqrt(pi ln 2 / 2): width of the Gaussian that stands in for h(Phi(.)).
inline double bald_constant(PerceptualNoise noise) noexcept {
    return noise.sigma() * std::sqrt(std::numbers::pi * std::numbers::ln2 / 2.0);
}

/// Expected conditional entropy (bits) of the response under N(mu_x, sigma_x2),
/// closed form after the squared-exponential substitution.
inline double bald_term2_exact_integral(double mu_x, double sigma_x2, double h, PerceptualNoise noise) {
    if (!(sigma_x2 >= 0.0)) throw ContractError("posterior variance must be nonnegative");
    const double c = bald_constant(noise);
    const double denom = sigma_x2 + c * c;
    const double d = h - mu_x;
    return c / std::sqrt(denom) * std::exp(-d * d / (2.0 * denom));
}

/// BALD information gain (bits) of presenting level h where the latent threshold is
/// N(mu_x, sigma_x2).
inline double bald_score(double mu_x, double sigma_x2, double h, PerceptualNoise noise) {
    if (!(sigma_x2 >= 0.0)) throw ContractError("posterior variance must be nonnegative");
    const double s = noise.sigma();
    const double p = detail::normal_cdf((h - mu_x) / std::sqrt(s * s + sigma_x2));
    return detail::binary_entropy_bits(p) - bald_term2_exact_integral(mu_x, sigma_x2, h, noise);
}

/// Nonnegative frequency weights, piecewise linear in Bark, held constant past the ends.
class WeightTable {
public:
    struct Point {
        double frequency_hz;
        double weight;
    };

    explicit WeightTable(std::vector<Point> points) : points_(std::move(points)) {
        if (points_.empty()) throw ContractError("weight table is empty");
        bool any_positive = false;
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (!std::isfinite(points_[i].frequency_hz) || points_[i].frequency_hz <= 0.0)
                throw DomainError("weight table frequency must be positive");
            if (!std::isfinite(points_[i].weight) || points_[i].weight < 0.0)
                throw ContractError("weights must be finite and nonnegative");
            if (i > 0 && !(points_[i - 1].frequency_hz < points_[i].frequency_hz))
                throw ContractError("weight table frequencies must be strictly increasing");
            any_positive = any_positive || points_[i].weight > 0.0;
        }
        if (!any_positive) throw ContractError("weights must not all be zero");
    }

    std::span<const Point> points() const noexcept { return points_; }

    double at_bark(double x) const {
        if (x <= bark(points_.front().frequency_hz)) return points_.front().weight;
        if (x >= bark(points_.back().frequency_hz)) return points_.back().weight;
        for (std::size_t i = 1; i < points_.size(); ++i) {
            const double x1 = bark(points_[i].frequency_hz);
            if (x <= x1) {
                const double x0 = bark(points_[i - 1].frequency_hz);
                const double t = (x - x0) / (x1 - x0);
                return points_[i - 1].weight + t * (points_[i].weight - points_[i - 1].weight);
            }
        }
        return points_.back().weight;
    }

private:
    std::vector<Point> points_;
};

/// Candidate frequencies (Bark, strictly increasing), presentable level range, and
/// optional per-candidate weights.
class StimulusGrid {
public:
    StimulusGrid(std::vector<double> candidates, double level_min, double level_max,
                 std::optional<std::vector<double>> weights = std::nullopt)
        : xs_(std::move(candidates)), level_min_(level_min), level_max_(level_max),
          weights_(std::move(weights)) {
        for (std::size_t i = 0; i < xs_.size(); ++i) {
            if (!std::isfinite(xs_[i])) throw DomainError("grid candidates must be finite");
            if (i > 0 && !(xs_[i - 1] < xs_[i]))
                throw ContractError("grid candidates must be strictly increasing");
        }
        if (!(level_min_ <= level_max_)) throw ContractError("level bounds inverted");
        if (weights_) {
            if (weights_->size() != xs_.size()) throw ContractError("one weight per candidate required");
            bool any_positive = false;
            for (double w : *weights_) {
                if (!std::isfinite(w) || w < 0.0) throw ContractError("weights must be nonnegative");
                any_positive = any_positive || w > 0.0;
            }
            if (!any_positive) throw ContractError("weights must not all be zero");
        }
    }

    /// n candidates uniform in Bark over [f_min, f_max], both endpoints included.
    static StimulusGrid uniform_bark(double f_min_hz, double f_max_hz, std::size_t n, double level_min,
                                     double level_max, const WeightTable* weights = nullptr) {
        if (n < 2) throw ContractError("grid needs at least 2 candidates");
        const double a = bark(f_min_hz), b = bark(f_max_hz);
        if (!(a < b)) throw ContractError("frequency range inverted");
        std::vector<double> xs(n);
        for (std::size_t i = 0; i < n; ++i) xs[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
        xs.back() = b;
        std::optional<std::vector<double>> w;
        if (weights) {
            w.emplace();
            for (double x : xs) w->push_back(weights->at_bark(x));
        }
        return StimulusGrid(std::move(xs), level_min, level_max, std::move(w));
    }

    std::span<const double> candidates() const noexcept { return xs_; }
    std::size_t size() const noexcept { return xs_.size(); }
    double level_min() const noexcept { return level_min_; }
    double level_max() const noexcept { return level_max_; }
    bool weighted() const noexcept { return weights_.has_value(); }
    double weight(std::size_t i) const { return weights_ ? (*weights_)[i] : 1.0; }

private:
    std::vector<double> xs_;
    double level_min_;
    double level_max_;
    std::optional<std::vector<double>> weights_;
};

/// Posterior marginals at every grid candidate.
inline std::vector<PredictiveGaussian> predict_grid(const PosteriorState& state, const StimulusGrid& grid) {
    std::vector<PredictiveGaussian> out;
    out.reserve(grid.size());
    for (double x : grid.candidates()) out.push_back(state.predict_latent(x));
    return out;
}

struct Selection {
    std::size_t index;
    double x;             // Bark
    double frequency_hz;  // bark_inv(x)
    double level_dbhl;    // posterior mean clamped to the level bounds
    double score;         // weighted BALD at h = mu_x
    PredictiveGaussian latent;
};

/// Index of the largest posterior variance; lowest index on ties.
inline std::size_t argmax_variance(std::span<const PredictiveGaussian> preds) {
    if (preds.empty()) throw ContractError("empty prediction set");
    std::size_t best = 0;
    for (std::size_t i = 1; i < preds.size(); ++i)
        if (preds[i].sigma2 > preds[best].sigma2) best = i;
    return best;
}

/// Picks argmax_x weight(x) * BALD(mu_x, sigma_x2, h = mu_x). The level is the
/// posterior mean because that maximises BALD for fixed x. Ties go to the lowest x.
inline Selection select_next_stimulus(const PosteriorState& state, const StimulusGrid& grid,
                                      std::span<const PredictiveGaussian> preds) {
    if (grid.size() == 0) throw ContractError("empty stimulus grid");
    if (preds.size() != grid.size()) throw ContractError("one prediction per grid candidate required");
    const auto noise = state.noise();
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double s = grid.weight(i) * bald_score(preds[i].mu, preds[i].sigma2, preds[i].mu, noise);
        if (s > best_score) {
            best_score = s;
            best = i;
        }
    }
    // With uniform weights maximal BALD at h = mu is maximal variance.
    assert(grid.weighted() || preds[argmax_variance(preds)].sigma2 == preds[best].sigma2 ||
           bald_score(0.0, preds[argmax_variance(preds)].sigma2, 0.0, noise) == best_score);
    const double x = grid.candidates()[best];
    return {best,
            x,
            bark_inv(x),
            std::clamp(preds[best].mu, grid.level_min(), grid.level_max()),
            best_score,
            preds[best]};
}

inline Selection select_next_stimulus(const PosteriorState& state, const StimulusGrid& grid) {
    const auto preds = predict_grid(state, grid);
    return select_next_stimulus(state, grid, preds);
}

/// Unweighted average of BALD at h = mu_x over the grid.
inline double mean_bald(std::span<const PredictiveGaussian> preds, PerceptualNoise noise) {
    if (preds.empty()) throw ContractError("empty prediction set");
    double sum = 0.0;
    for (const auto& p : preds) sum += bald_score(p.mu, p.sigma2, p.mu, noise);
    return sum / static_cast<double>(preds.size());
}

inline double mean_bald(const PosteriorState& state, const StimulusGrid& grid) {
    return mean_bald(predict_grid(state, grid), state.noise());
}

/// Largest posterior standard deviation over the grid.
inline double max_std(std::span<const PredictiveGaussian> preds) {
    double m = 0.0;
    for (const auto& p : preds) m = std::max(m, std::sqrt(p.sigma2));
    return m;
}

}  // namespace gppta
