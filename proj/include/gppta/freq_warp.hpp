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

#include "gppta/errors.hpp"

namespace gppta {

/// Physical tone frequency in Hz. Always positive and finite.
class FrequencyHz {
public:
    explicit FrequencyHz(double hz) : value_(hz) {
        if (!std::isfinite(hz) || hz <= 0.0)
            throw DomainError("frequency must be positive and finite");
    }
    double value() const noexcept { return value_; }

private:
    double value_;
};

/// Frequency on the Bark scale; the domain the threshold GP lives in.
class BarkValue {
public:
    explicit BarkValue(double bark) : value_(bark) {
        if (!std::isfinite(bark)) throw DomainError("bark value must be finite");
    }
    double value() const noexcept { return value_; }

private:
    double value_;
};

namespace detail {

// Unchecked warp, valid for any f >= 0.
inline double bark_unchecked(double hz) noexcept { return 6.0 * std::asinh(hz / 600.0); }

inline double bark_inv_unchecked(double bark) noexcept { return 600.0 * std::sinh(bark / 6.0); }

}  // namespace detail

/// bark(f) = 6 asinh(f / 600). Strictly increasing.
inline BarkValue bark(FrequencyHz f) { return BarkValue(detail::bark_unchecked(f.value())); }

/// Convenience overload for raw Hz values; throws DomainError unless hz > 0.
inline double bark(double hz) { return bark(FrequencyHz(hz)).value(); }

/// Inverse warp, 600 sinh(x / 6). Returns Hz; bark_inv(0) == 0.
inline double bark_inv(BarkValue x) { return detail::bark_inv_unchecked(x.value()); }

inline double bark_inv(double x) { return bark_inv(BarkValue(x)); }

}  // namespace gppta
