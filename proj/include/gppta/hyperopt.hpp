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
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "gppta/errors.hpp"
#include "gppta/gp_prior.hpp"
#include "gppta/laplace.hpp"

namespace gppta {

/// Box constraints for the kernel hyperparameters. lo == hi pins a parameter.
struct HyperBounds {
    double signal_std_lo = 5.0;
    double signal_std_hi = 60.0;
    double length_scale_lo = 0.5;
    double length_scale_hi = 12.0;

    bool valid() const noexcept {
        auto ok = [](double lo, double hi) {
            return std::isfinite(lo) && std::isfinite(hi) && lo > 0.0 && lo <= hi;
        };
        return ok(signal_std_lo, signal_std_hi) && ok(length_scale_lo, length_scale_hi);
    }

    KernelHyperparams clamp(const KernelHyperparams& hp) const {
        return {std::clamp(hp.signal_std(), signal_std_lo, signal_std_hi),
                std::clamp(hp.length_scale(), length_scale_lo, length_scale_hi)};
    }

    bool contains(const KernelHyperparams& hp) const noexcept {
        return hp.signal_std() >= signal_std_lo && hp.signal_std() <= signal_std_hi &&
               hp.length_scale() >= length_scale_lo && hp.length_scale() <= length_scale_hi;
    }

    friend bool operator==(const HyperBounds&, const HyperBounds&) = default;
};

/// Laplace approximation of log p(y | h, x, hp).
inline double log_marginal_likelihood(const TrialSet& trials, const KernelHyperparams& hp,
                                      const LinearMeanParams& mean, PerceptualNoise noise) {
    if (trials.empty()) throw ContractError("log marginal likelihood needs at least one trial");
    return fit_posterior(trials, hp, mean, noise).log_marginal_likelihood();
}

struct HyperoptOptions {
    int grid_size = 8;
    int max_refine_evaluations = 80;
    double refine_tolerance = 1e-6;  // in log-parameter units
};

struct HyperoptResult {
    KernelHyperparams hp;
    double lml;
    bool fell_back = false;  // every candidate fit failed; hp is the starting point
    int evaluations = 0;
};

namespace detail {

struct Candidate {
    double log_sigma;
    double log_ell;
    double lml;
    double sigma = 0.0;  // exact values the evidence was computed at
    double ell = 0.0;
};

// Higher evidence wins; ties go to the shorter length scale, then the smaller signal std.
inline bool better(const Candidate& a, const Candidate& b) {
    if (a.lml != b.lml) return a.lml > b.lml;
    if (a.log_ell != b.log_ell) return a.log_ell < b.log_ell;
    return a.log_sigma < b.log_sigma;
}

inline std::vector<double> log_spaced(double lo, double hi, int n) {
    if (lo == hi || n < 2) return {std::log(lo)};
    std::vector<double> out(n);
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
    out.back() = b;
    return out;
}

}  // namespace detail

/// Maximises the Laplace evidence over a log-spaced grid, then refines the best cell
/// with a bounded Nelder-Mead search in log space. Never returns a point with lower
/// evidence than the (clamped) starting hyperparameters. Deterministic.
inline HyperoptResult optimize_hyperparams(const TrialSet& trials, const HyperBounds& bounds,
                                           const LinearMeanParams& mean, PerceptualNoise noise,
                                           const KernelHyperparams& current,
                                           const HyperoptOptions& opts = {}) {
    if (trials.empty()) throw ContractError("hyperparameter optimization needs at least one trial");
    if (!bounds.valid()) throw ParameterError("invalid hyperparameter bounds");

    const double ls_lo = std::log(bounds.signal_std_lo), ls_hi = std::log(bounds.signal_std_hi);
    const double ll_lo = std::log(bounds.length_scale_lo), ll_hi = std::log(bounds.length_scale_hi);
    int evals = 0;

    auto evaluate_hp = [&](const KernelHyperparams& hp) -> std::optional<detail::Candidate> {
        ++evals;
        try {
            const double lml = log_marginal_likelihood(trials, hp, mean, noise);
            if (!std::isfinite(lml)) return std::nullopt;
            return detail::Candidate{std::log(hp.signal_std()), std::log(hp.length_scale()), lml,
                                     hp.signal_std(), hp.length_scale()};
        } catch (const NumericalError&) {
            return std::nullopt;
        }
    };
    auto evaluate = [&](double log_sigma, double log_ell) -> std::optional<detail::Candidate> {
        log_sigma = std::clamp(log_sigma, ls_lo, ls_hi);
        log_ell = std::clamp(log_ell, ll_lo, ll_hi);
        const KernelHyperparams hp(std::clamp(std::exp(log_sigma), bounds.signal_std_lo, bounds.signal_std_hi),
                                   std::clamp(std::exp(log_ell), bounds.length_scale_lo, bounds.length_scale_hi));
        auto c = evaluate_hp(hp);
        if (c) {
            c->log_sigma = log_sigma;
            c->log_ell = log_ell;
        }
        return c;
    };

    const KernelHyperparams start = bounds.clamp(current);
    const auto baseline = evaluate_hp(start);

    std::optional<detail::Candidate> best;
    auto consider = [&](const std::optional<detail::Candidate>& c) {
        if (c && (!best || detail::better(*c, *best))) best = c;
    };
    for (double lsig : detail::log_spaced(bounds.signal_std_lo, bounds.signal_std_hi, opts.grid_size))
        for (double lell : detail::log_spaced(bounds.length_scale_lo, bounds.length_scale_hi, opts.grid_size))
            consider(evaluate(lsig, lell));

    if (!best) {
        if (baseline) return {start, baseline->lml, true, evals};
        return {start, -std::numeric_limits<double>::infinity(), true, evals};
    }

    // Nelder-Mead from the best grid cell; initial edge = one grid step per axis.
    const double step_s = ls_hi > ls_lo ? (ls_hi - ls_lo) / std::max(opts.grid_size - 1, 1) : 0.0;
    const double step_l = ll_hi > ll_lo ? (ll_hi - ll_lo) / std::max(opts.grid_size - 1, 1) : 0.0;
    if (step_s > 0.0 || step_l > 0.0) {
        auto clamp_pt = [&](detail::Candidate c) {
            c.log_sigma = std::clamp(c.log_sigma, ls_lo, ls_hi);
            c.log_ell = std::clamp(c.log_ell, ll_lo, ll_hi);
            return c;
        };
        auto eval_pt = [&](double s, double l) {
            auto c = evaluate(s, l);
            if (!c) c = detail::Candidate{std::clamp(s, ls_lo, ls_hi), std::clamp(l, ll_lo, ll_hi),
                                          -std::numeric_limits<double>::infinity(), 0.0, 0.0};
            return *c;
        };
        const double ds = best->log_sigma + step_s <= ls_hi ? step_s : -step_s;
        const double dl = best->log_ell + step_l <= ll_hi ? step_l : -step_l;
        std::array<detail::Candidate, 3> simplex{*best, eval_pt(best->log_sigma + 0.5 * ds, best->log_ell),
                                                 eval_pt(best->log_sigma, best->log_ell + 0.5 * dl)};
        const int budget = evals + opts.max_refine_evaluations;
        while (evals < budget) {
            std::sort(simplex.begin(), simplex.end(), detail::better);
            const double size = std::max({std::abs(simplex[1].log_sigma - simplex[0].log_sigma),
                                          std::abs(simplex[2].log_sigma - simplex[0].log_sigma),
                                          std::abs(simplex[1].log_ell - simplex[0].log_ell),
                                          std::abs(simplex[2].log_ell - simplex[0].log_ell)});
            if (size < opts.refine_tolerance) break;
            const double cs = 0.5 * (simplex[0].log_sigma + simplex[1].log_sigma);
            const double cl = 0.5 * (simplex[0].log_ell + simplex[1].log_ell);
            auto along = [&](double t) {
                return clamp_pt({cs + t * (simplex[2].log_sigma - cs), cl + t * (simplex[2].log_ell - cl), 0.0, 0.0, 0.0});
            };
            const auto pr = along(-1.0);
            const auto reflected = eval_pt(pr.log_sigma, pr.log_ell);
            if (detail::better(reflected, simplex[0])) {
                const auto pe = along(-2.0);
                const auto expanded = eval_pt(pe.log_sigma, pe.log_ell);
                simplex[2] = detail::better(expanded, reflected) ? expanded : reflected;
            } else if (detail::better(reflected, simplex[1])) {
                simplex[2] = reflected;
            } else {
                const auto pc = detail::better(reflected, simplex[2]) ? along(-0.5) : along(0.5);
                const auto contracted = eval_pt(pc.log_sigma, pc.log_ell);
                if (detail::better(contracted, simplex[2]) || detail::better(contracted, reflected)) {
                    simplex[2] = contracted;
                } else {
                    for (int i = 1; i < 3; ++i)
                        simplex[i] = eval_pt(0.5 * (simplex[0].log_sigma + simplex[i].log_sigma),
                                             0.5 * (simplex[0].log_ell + simplex[i].log_ell));
                }
            }
        }
        for (const auto& c : simplex) consider(c);
    }

    if (baseline && !(best->lml > baseline->lml)) return {start, baseline->lml, false, evals};
    return {KernelHyperparams(best->sigma, best->ell), best->lml, false, evals};
}

}  // namespace gppta
