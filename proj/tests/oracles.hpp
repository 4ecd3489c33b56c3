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

// Test-only reference computations. Nothing here calls into the code paths it is
// used to check: normal functions come from Boost.Math, integrals from adaptive
// Gauss-Kronrod, modes from brute-force grids.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

inline double Phi(double z) {
    static const boost::math::normal n;
    return boost::math::cdf(n, z);
}

inline double log_Phi(double z) {
    static const boost::math::normal n;
    if (z > 0.0) return std::log1p(-boost::math::cdf(boost::math::complement(n, z)));
    return std::log(boost::math::cdf(n, z));
}

inline double gauss_pdf(double g, double mu, double s2) {
    const double d = g - mu;
    return std::exp(-0.5 * d * d / s2) / std::sqrt(2.0 * M_PI * s2);
}

/// Probit log-likelihood written out directly.
inline double loglik(const std::vector<int>& ys, const std::vector<double>& hs, const std::vector<double>& gs,
                     double sigma) {
    double s = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) s += log_Phi(ys[i] * (hs[i] - gs[i]) / sigma);
    return s;
}

/// Adaptive Gauss-Kronrod over [a, b], split at the given interior points.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        std::vector<double> breaks = {}) {
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double lo = std::max(a, breaks[i]), hi = std::min(b, breaks[i + 1]);
        if (hi <= lo) continue;
        total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-14);
    }
    return total;
}

/// E[f(g)] for g ~ N(mu, s2), integrated over mu +- 14 sd.
inline double gaussian_expectation(const std::function<double(double)>& f, double mu, double s2,
                                   std::vector<double> breaks = {}) {
    if (s2 == 0.0) return f(mu);
    const double s = std::sqrt(s2);
    breaks.push_back(mu);
    return integrate([&](double g) { return f(g) * gauss_pdf(g, mu, s2); }, mu - 14.0 * s, mu + 14.0 * s, breaks);
}

inline double se_kernel(double a, double b, double sf, double ell) {
    const double d = (a - b) / ell;
    return sf * sf * std::exp(-0.5 * d * d);
}

/// Maximizer of a concave-ish function on a box by repeated grid zooming. Each level
/// evaluates `points^dim` cells and shrinks the box around the best one.
inline Eigen::VectorXd grid_mode(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd center,
                                 double half_width, double resolution, int points = 41) {
    const auto dim = center.size();
    double hw = half_width;
    while (true) {
        const double step = 2.0 * hw / (points - 1);
        Eigen::VectorXd best = center;
        double best_val = -std::numeric_limits<double>::infinity();
        std::vector<int> idx(dim, 0);
        while (true) {
            Eigen::VectorXd p(dim);
            for (Eigen::Index d = 0; d < dim; ++d) p(d) = center(d) - hw + step * idx[d];
            const double v = f(p);
            if (v > best_val) {
                best_val = v;
                best = p;
            }
            Eigen::Index d = 0;
            while (d < dim && ++idx[d] == points) idx[d++] = 0;
            if (d == dim) break;
        }
        center = best;
        if (step <= resolution) return center;
        hw = 2.0 * step;
    }
}

/// Maximizer of a smooth 1-D function bracketed by [lo, hi]: bisection on the sign of a
/// central difference.
inline double stationary_point(const std::function<double(double)>& f, double lo, double hi) {
    auto d = [&](double x) { return f(x + 1e-4) - f(x - 1e-4); };
    for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++i) {
        const double mid = 0.5 * (lo + hi);
        (d(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Seven-point central second derivative, O(h^6).
inline double second_derivative(const std::function<double(double)>& f, double x, double h) {
    return (2 * f(x - 3 * h) - 27 * f(x - 2 * h) + 270 * f(x - h) - 490 * f(x) + 270 * f(x + h) - 27 * f(x + 2 * h) +
            2 * f(x + 3 * h)) /
           (180 * h * h);
}

/// Central-difference Hessian.
inline Eigen::MatrixXd numeric_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                                       const Eigen::VectorXd& x, double h) {
    const auto n = x.size();
    Eigen::MatrixXd H(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            auto at = [&](double di, double dj) {
                Eigen::VectorXd p = x;
                p(i) += di;
                p(j) += dj;
                return f(p);
            };
            if (i == j) {
                H(i, i) = (-at(2 * h, 0) + 16 * at(h, 0) - 30 * f(x) + 16 * at(-h, 0) - at(-2 * h, 0)) / (12 * h * h);
            } else {
                H(i, j) = H(j, i) = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4 * h * h);
            }
        }
    }
    return H;
}

}  // namespace oracle
