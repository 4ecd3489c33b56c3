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

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "gppta/errors.hpp"
#include "gppta/freq_warp.hpp"

namespace gppta {

/// Squared-exponential kernel parameters: signal std in dB HL, length scale in Bark.
class KernelHyperparams {
public:
    KernelHyperparams(double signal_std, double length_scale)
        : signal_std_(signal_std), length_scale_(length_scale) {
        if (!std::isfinite(signal_std) || signal_std <= 0.0)
            throw ParameterError("signal_std must be positive and finite");
        if (!std::isfinite(length_scale) || length_scale <= 0.0)
            throw ParameterError("length_scale must be positive and finite");
    }

    static KernelHyperparams defaults() { return {20.0, 4.0}; }

    double signal_std() const noexcept { return signal_std_; }
    double length_scale() const noexcept { return length_scale_; }
    double variance() const noexcept { return signal_std_ * signal_std_; }

    friend bool operator==(const KernelHyperparams&, const KernelHyperparams&) = default;

private:
    double signal_std_;
    double length_scale_;
};

/// Prior mean m(x) = slope * x + intercept, x in Bark.
struct LinearMeanParams {
    double slope = 0.0;
    double intercept = 0.0;

    friend bool operator==(const LinearMeanParams&, const LinearMeanParams&) = default;
};

struct AudiogramPoint {
    double frequency_hz;
    double threshold_dbhl;
};

/// Ordered audiogram: at least two points, strictly increasing frequencies.
class AudiogramTable {
public:
    explicit AudiogramTable(std::vector<AudiogramPoint> points) : points_(std::move(points)) {
        if (points_.size() < 2) throw ContractError("audiogram table needs at least 2 points");
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const auto& p = points_[i];
            if (!std::isfinite(p.frequency_hz) || p.frequency_hz <= 0.0)
                throw DomainError("audiogram frequency must be positive and finite");
            if (!std::isfinite(p.threshold_dbhl))
                throw DomainError("audiogram threshold must be finite");
            if (i > 0 && !(points_[i - 1].frequency_hz < p.frequency_hz))
                throw ContractError("audiogram frequencies must be strictly increasing");
        }
    }

    std::span<const AudiogramPoint> points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }
    double min_frequency() const noexcept { return points_.front().frequency_hz; }
    double max_frequency() const noexcept { return points_.back().frequency_hz; }

private:
    std::vector<AudiogramPoint> points_;
};

/// Synthetic stand-in for reference audiogram data: flat 20 dB HL over the
/// standard audiometric frequencies. Used when no reference table is supplied.
inline AudiogramTable synthetic_flat_audiogram() {
    std::vector<AudiogramPoint> pts;
    for (double f : {250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0}) pts.push_back({f, 20.0});
    return AudiogramTable(std::move(pts));
}

inline double kernel_eval(double x1, double x2, const KernelHyperparams& hp) noexcept {
    const double d = (x1 - x2) / hp.length_scale();
    return hp.variance() * std::exp(-0.5 * d * d);
}

inline double kernel_eval(BarkValue x1, BarkValue x2, const KernelHyperparams& hp) noexcept {
    return kernel_eval(x1.value(), x2.value(), hp);
}

inline double mean_eval(double x, const LinearMeanParams& m) noexcept {
    return m.slope * x + m.intercept;
}

inline double mean_eval(BarkValue x, const LinearMeanParams& m) noexcept {
    return mean_eval(x.value(), m);
}

/// Raw Gram matrix without jitter.
inline Eigen::MatrixXd gram_matrix(std::span<const double> xs, const KernelHyperparams& hp) {
    const auto n = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = hp.variance();
        for (Eigen::Index j = 0; j < i; ++j) k(i, j) = k(j, i) = kernel_eval(xs[i], xs[j], hp);
    }
    return k;
}

/// Jittered Gram matrix together with its Cholesky factor.
struct FactorizedKernel {
    Eigen::MatrixXd matrix;
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
};

inline constexpr double kJitterStart = 1e-8;
inline constexpr double kJitterMax = 1e-2;

/// Gram matrix plus diagonal jitter. Jitter starts at 1e-8 * signal variance and grows
/// tenfold per Cholesky failure up to 1e-2 * signal variance.
inline FactorizedKernel factorize_kernel(std::span<const double> xs, const KernelHyperparams& hp) {
    if (xs.empty()) throw ContractError("kernel_matrix needs at least one input");
    const Eigen::MatrixXd base = gram_matrix(xs, hp);
    for (double rel = kJitterStart; rel <= kJitterMax * (1.0 + 1e-12); rel *= 10.0) {
        FactorizedKernel out;
        out.jitter = rel * hp.variance();
        out.matrix = base;
        out.matrix.diagonal().array() += out.jitter;
        out.llt.compute(out.matrix);
        if (out.llt.info() == Eigen::Success) {
            const auto diag = out.llt.matrixLLT().diagonal();
            if ((diag.array() > 0.0).all() && diag.allFinite()) return out;
        }
    }
    throw NumericalError("kernel matrix not positive definite at maximum jitter");
}

inline Eigen::MatrixXd kernel_matrix(std::span<const double> xs, const KernelHyperparams& hp) {
    return factorize_kernel(xs, hp).matrix;
}

/// Least-squares line through (bark(frequency), threshold). Row order does not matter.
inline LinearMeanParams fit_linear_prior(std::span<const AudiogramPoint> points) {
    std::vector<double> xs;
    xs.reserve(points.size());
    for (const auto& p : points) xs.push_back(bark(p.frequency_hz));
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    if (std::unique(sorted.begin(), sorted.end()) - sorted.begin() < 2)
        throw ContractError("linear prior fit needs at least 2 distinct frequencies");

    // Centered sums keep the normal equations well conditioned.
    const double n = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        mx += xs[i];
        my += points[i].threshold_dbhl;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double dx = xs[i] - mx;
        sxx += dx * dx;
        sxy += dx * (points[i].threshold_dbhl - my);
    }
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

inline LinearMeanParams fit_linear_prior(const AudiogramTable& table) {
    return fit_linear_prior(table.points());
}

}  // namespace gppta
