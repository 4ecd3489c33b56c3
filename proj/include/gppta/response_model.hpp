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
#include <cmath>
#include <span>
#include <vector>

#include "gppta/detail/normal.hpp"
#include "gppta/errors.hpp"
#include "gppta/freq_warp.hpp"

namespace gppta {

/// Binary listener answer: +1 audible, -1 not audible.
class ResponseLabel {
public:
    explicit ResponseLabel(int value) : value_(value) {
        if (value != 1 && value != -1) throw ContractError("response label must be +1 or -1");
    }
    static ResponseLabel audible() { return ResponseLabel(1); }
    static ResponseLabel inaudible() { return ResponseLabel(-1); }

    int value() const noexcept { return value_; }
    double sign() const noexcept { return static_cast<double>(value_); }
    ResponseLabel flipped() const noexcept { return ResponseLabel(-value_); }

    friend bool operator==(ResponseLabel, ResponseLabel) = default;

private:
    int value_;
};

/// Standard deviation (dB HL) of the listener's internal Gaussian noise.
class PerceptualNoise {
public:
    explicit PerceptualNoise(double sigma_p) : sigma_(sigma_p) {
        if (!std::isfinite(sigma_p) || sigma_p <= 0.0)
            throw ParameterError("sigma_p must be positive and finite");
    }
    double sigma() const noexcept { return sigma_; }

private:
    double sigma_;
};

/// One presented stimulus and the answer it got.
struct Trial {
    FrequencyHz frequency;
    double level_dbhl;
    ResponseLabel label;

    Trial(FrequencyHz f, double level, ResponseLabel y) : frequency(f), level_dbhl(level), label(y) {
        if (!std::isfinite(level)) throw DomainError("trial level must be finite");
    }
};

/// P(y | level, threshold) = Phi(y (level - threshold) / sigma_p).
inline double response_probability(ResponseLabel label, double level, double latent_threshold,
                                   PerceptualNoise noise) {
    return detail::normal_cdf(label.sign() * (level - latent_threshold) / noise.sigma());
}

namespace detail {

inline void check_lengths(std::size_t labels, std::size_t levels, std::size_t latents) {
    if (labels != levels || labels != latents)
        throw ContractError("labels, levels and latents must have equal length");
}

}  // namespace detail

/// Sum of log Phi(y_i (h_i - g_i) / sigma_p). Always <= 0.
inline double loglik(std::span<const ResponseLabel> labels, std::span<const double> levels,
                     std::span<const double> latents, PerceptualNoise noise) {
    detail::check_lengths(labels.size(), levels.size(), latents.size());
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        total += detail::log_normal_cdf(labels[i].sign() * (levels[i] - latents[i]) / noise.sigma());
    return total;
}

/// d loglik / d g_i = -(y_i / sigma_p) * phi(z_i) / Phi(z_i).
inline std::vector<double> loglik_grad(std::span<const ResponseLabel> labels,
                                       std::span<const double> levels,
                                       std::span<const double> latents, PerceptualNoise noise) {
    detail::check_lengths(labels.size(), levels.size(), latents.size());
    const double s = noise.sigma();
    std::vector<double> grad(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double y = labels[i].sign();
        const double z = y * (levels[i] - latents[i]) / s;
        grad[i] = -(y / s) * detail::inverse_mills_ratio(z);
    }
    return grad;
}

/// Diagonal of the log-likelihood Hessian, -lambda(z) (z + lambda(z)) / sigma_p^2 with
/// lambda the inverse Mills ratio. Every entry is <= 0.
inline std::vector<double> loglik_hess_diag(std::span<const ResponseLabel> labels,
                                            std::span<const double> levels,
                                            std::span<const double> latents, PerceptualNoise noise) {
    detail::check_lengths(labels.size(), levels.size(), latents.size());
    const double s = noise.sigma();
    std::vector<double> hess(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double z = labels[i].sign() * (levels[i] - latents[i]) / s;
        const double lambda = detail::inverse_mills_ratio(z);
        // z + lambda > 0 analytically; rounding can push it just below in the upper tail.
        hess[i] = -lambda * std::max(z + lambda, 0.0) / (s * s);
    }
    return hess;
}

}  // namespace gppta
