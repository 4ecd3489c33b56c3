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

#include <cmath>
#include <numbers>

namespace gppta::detail {

inline constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343819;
inline constexpr double log_sqrt_2pi = 0.9189385332046727417803297364056176;

inline double normal_pdf(double z) noexcept { return inv_sqrt_2pi * std::exp(-0.5 * z * z); }

inline double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Lower-tail switch point for the continued fraction below.
inline constexpr double tail_cutoff = -8.0;

// Mills ratio (1 - Phi(t)) / phi(t) for t >= 8, by its continued fraction
//   1 / (t + 1/(t + 2/(t + 3/(t + ...)))).
// Converges to full double precision with well under 60 terms in that range.
inline double mills_ratio_upper(double t) noexcept {
    double acc = t;
    for (int k = 60; k >= 1; --k) acc = t + k / acc;
    return 1.0 / acc;
}

/// log Phi(z), finite for every finite z.
inline double log_normal_cdf(double z) noexcept {
    if (z < tail_cutoff) return -0.5 * z * z - log_sqrt_2pi + std::log(mills_ratio_upper(-z));
    if (z > 0.0) return std::log1p(-0.5 * std::erfc(z / std::numbers::sqrt2));
    return std::log(normal_cdf(z));
}

/// phi(z) / Phi(z).
inline double inverse_mills_ratio(double z) noexcept {
    if (z < tail_cutoff) return 1.0 / mills_ratio_upper(-z);
    return normal_pdf(z) / normal_cdf(z);
}

/// Binary entropy in bits.
inline double binary_entropy_bits(double p) noexcept {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

}  // namespace gppta::detail
