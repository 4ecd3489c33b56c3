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
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "gppta/errors.hpp"
#include "gppta/freq_warp.hpp"
#include "gppta/gp_prior.hpp"
#include "gppta/response_model.hpp"

namespace gppta {

/// Observations in model coordinates: Bark positions, levels, labels.
class TrialSet {
public:
    TrialSet() = default;

    TrialSet(std::vector<double> xs, std::vector<double> hs, std::vector<ResponseLabel> ys)
        : xs_(std::move(xs)), hs_(std::move(hs)), ys_(std::move(ys)) {
        if (xs_.size() != hs_.size() || xs_.size() != ys_.size())
            throw ContractError("trial set columns must have equal length");
        for (std::size_t i = 0; i < xs_.size(); ++i)
            if (!std::isfinite(xs_[i]) || !std::isfinite(hs_[i]))
                throw DomainError("trial set entries must be finite");
    }

    static TrialSet from_trials(std::span<const Trial> trials) {
        TrialSet out;
        for (const auto& t : trials) out.push_back(t);
        return out;
    }

    void push_back(const Trial& t) { push_back(bark(t.frequency).value(), t.level_dbhl, t.label); }

    void push_back(double x, double h, ResponseLabel y) {
        if (!std::isfinite(x) || !std::isfinite(h)) throw DomainError("trial set entries must be finite");
        xs_.push_back(x);
        hs_.push_back(h);
        ys_.push_back(y);
    }

    std::span<const double> xs() const noexcept { return xs_; }
    std::span<const double> hs() const noexcept { return hs_; }
    std::span<const ResponseLabel> ys() const noexcept { return ys_; }
    std::size_t size() const noexcept { return xs_.size(); }
    bool empty() const noexcept { return xs_.empty(); }

private:
    std::vector<double> xs_;
    std::vector<double> hs_;
    std::vector<ResponseLabel> ys_;
};

/// Gaussian marginal of the latent threshold at one test point.
struct PredictiveGaussian {
    double mu;
    double sigma2;
};

struct NewtonOptions {
    int max_iterations = 100;
    int max_halvings = 20;
    double grad_tolerance = 1e-8;
    double psi_tolerance = 1e-12;
    // Called with Psi after every accepted step.
    std::function<void(double)> on_step;
};

inline Eigen::Map<const Eigen::VectorXd> as_eigen(std::span<const double> v) {
    return {v.data(), static_cast<Eigen::Index>(v.size())};
}

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

// Relative size of rounding noise in Psi, below which two values count as equal.
inline constexpr double kPsiRoundoff = 1e-13;

class PosteriorState;
PosteriorState fit_posterior(TrialSet trials, KernelHyperparams hp, LinearMeanParams mean,
                             PerceptualNoise noise, const NewtonOptions& opts);

/// Laplace approximation of the latent threshold posterior. Inference is done on
/// residuals g - m(x); the mean is added back in every prediction. Immutable.
class PosteriorState {
public:
    const TrialSet& trials() const noexcept { return trials_; }
    const KernelHyperparams& hyperparams() const noexcept { return hp_; }
    const LinearMeanParams& mean() const noexcept { return mean_; }
    PerceptualNoise noise() const noexcept { return noise_; }
    bool converged() const noexcept { return converged_; }
    int newton_iterations() const noexcept { return newton_iters_; }
    std::size_t size() const noexcept { return trials_.size(); }

    /// Mode in residual space.
    const Eigen::VectorXd& residual_mode() const noexcept { return r_hat_; }
    /// Mode of the latent thresholds at the training inputs (dB HL).
    Eigen::VectorXd latent_mode() const {
        Eigen::VectorXd g = r_hat_;
        for (Eigen::Index i = 0; i < g.size(); ++i) g(i) += mean_eval(trials_.xs()[i], mean_);
        return g;
    }
    /// W = -diag(Hessian of the log-likelihood) at the mode. Nonnegative.
    const Eigen::VectorXd& w_diag() const noexcept { return w_; }
    /// Gradient of the log-likelihood at the mode.
    const Eigen::VectorXd& loglik_gradient() const noexcept { return grad_; }
    /// Psi(mode): log-likelihood plus the data-dependent part of the log prior.
    double psi() const noexcept { return psi_; }
    /// Sup-norm of the gradient of Psi at the returned mode.
    double gradient_norm() const noexcept { return grad_norm_; }
    double jitter() const noexcept { return kernel_ ? kernel_->jitter : 0.0; }

    PredictiveGaussian predict_latent(BarkValue x_star) const { return predict_latent(x_star.value()); }

    PredictiveGaussian predict_latent(double x_star) const {
        const double prior_mean = mean_eval(x_star, mean_);
        const double prior_var = hp_.variance();
        if (trials_.empty()) return {prior_mean, prior_var};
        const auto xs = trials_.xs();
        const auto n = static_cast<Eigen::Index>(xs.size());
        Eigen::VectorXd k_star(n);
        for (Eigen::Index i = 0; i < n; ++i) k_star(i) = kernel_eval(x_star, xs[i], hp_);
        const double mu = prior_mean + k_star.dot(grad_);
        const Eigen::VectorXd v = b_llt_.matrixL().solve(sqrt_w_.cwiseProduct(k_star));
        const double var = std::max(prior_var - v.squaredNorm(), 0.0);
        return {mu, var};
    }

    /// Phi(y (h - mu) / sqrt(sigma_p^2 + sigma^2)).
    double predict_response(double x_star, double h_star, ResponseLabel label) const {
        const auto pg = predict_latent(x_star);
        const double s = noise_.sigma();
        return detail::normal_cdf(label.sign() * (h_star - pg.mu) / std::sqrt(s * s + pg.sigma2));
    }

    /// Laplace covariance (K^-1 + W)^-1 of the latent values at the training inputs.
    Eigen::MatrixXd posterior_covariance() const {
        if (trials_.empty()) return {};
        const Eigen::MatrixXd& k = kernel_->matrix;
        const Eigen::MatrixXd v = b_llt_.matrixL().solve(sqrt_w_.asDiagonal() * k);
        return k - v.transpose() * v;
    }

    /// Laplace evidence: loglik(mode) - 1/2 r^T K^-1 r - 1/2 log|B|.
    double log_marginal_likelihood() const {
        if (trials_.empty()) return 0.0;
        const double half_logdet_b = b_llt_.matrixLLT().diagonal().array().log().sum();
        return psi_ - half_logdet_b;
    }

private:
    PosteriorState(TrialSet trials, KernelHyperparams hp, LinearMeanParams mean, PerceptualNoise noise)
        : trials_(std::move(trials)), hp_(hp), mean_(mean), noise_(noise) {}

    friend PosteriorState fit_posterior(TrialSet, KernelHyperparams, LinearMeanParams,
                                        PerceptualNoise, const NewtonOptions&);

    TrialSet trials_;
    KernelHyperparams hp_;
    LinearMeanParams mean_;
    PerceptualNoise noise_;

    std::optional<FactorizedKernel> kernel_;
    Eigen::LLT<Eigen::MatrixXd> b_llt_;
    Eigen::VectorXd r_hat_;
    Eigen::VectorXd alpha_;
    Eigen::VectorXd grad_;
    Eigen::VectorXd w_;
    Eigen::VectorXd sqrt_w_;
    double psi_ = 0.0;
    double grad_norm_ = 0.0;
    bool converged_ = true;
    int newton_iters_ = 0;
};

/// Finds the posterior mode by damped Newton iterations in the
/// B = I + W^1/2 K W^1/2 form and builds the Laplace state around it.
/// Throws ConvergenceError if the tolerance is not met within the iteration cap.
inline PosteriorState fit_posterior(TrialSet trials, KernelHyperparams hp, LinearMeanParams mean,
                                    PerceptualNoise noise, const NewtonOptions& opts = {}) {
    PosteriorState st(std::move(trials), hp, mean, noise);
    const auto n = static_cast<Eigen::Index>(st.trials_.size());
    if (n == 0) return st;

    const auto xs = st.trials_.xs();
    const auto ys = st.trials_.ys();
    std::vector<double> levels(st.trials_.size());
    for (std::size_t i = 0; i < levels.size(); ++i) levels[i] = st.trials_.hs()[i] - mean_eval(xs[i], mean);

    st.kernel_ = factorize_kernel(xs, hp);
    const Eigen::MatrixXd& k = st.kernel_->matrix;

    auto psi_of = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& r) {
        return loglik(ys, levels, as_span(r), noise) - 0.5 * a.dot(r);
    };
    auto grad_of = [&](const Eigen::VectorXd& r) {
        const auto g = loglik_grad(ys, levels, as_span(r), noise);
        return Eigen::VectorXd(as_eigen(g));
    };
    auto w_of = [&](const Eigen::VectorXd& r) {
        const auto h = loglik_hess_diag(ys, levels, as_span(r), noise);
        return Eigen::VectorXd(-as_eigen(h));
    };
    auto factor_b = [&](const Eigen::VectorXd& sw) {
        Eigen::MatrixXd b = sw.asDiagonal() * k * sw.asDiagonal();
        b.diagonal().array() += 1.0;
        Eigen::LLT<Eigen::MatrixXd> llt(b);
        if (llt.info() != Eigen::Success) throw NumericalError("factorization of B failed");
        return llt;
    };

    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    double psi = psi_of(a, r);
    bool converged = false;
    int stalled = 0;  // consecutive accepted steps with |dPsi| below tolerance
    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        const Eigen::VectorXd grad = grad_of(r);
        const double gnorm = (grad - a).lpNorm<Eigen::Infinity>();
        if (!std::isfinite(gnorm)) throw NumericalError("non-finite gradient in Newton iteration");
        const Eigen::VectorXd w = w_of(r);
        const Eigen::VectorXd sw = w.cwiseSqrt();
        const auto llt = factor_b(sw);
        const Eigen::VectorXd b = w.cwiseProduct(r) + grad;
        const Eigen::VectorXd c = llt.matrixL().solve(sw.cwiseProduct(k * b));
        const Eigen::VectorXd a_newton = b - sw.cwiseProduct(llt.matrixU().solve(c));
        const Eigen::VectorXd step = a_newton - a;

        // Psi is flat to rounding near the mode, so ascent can no longer be verified there.
        // Take the full Newton step if it is equal within rounding and shrinks the gradient.
        auto try_full_step = [&] {
            Eigen::VectorXd r_full = k * a_newton;
            const double psi_full = psi_of(a_newton, r_full);
            const double gnorm_full = (grad_of(r_full) - a_newton).lpNorm<Eigen::Infinity>();
            if (!std::isfinite(psi_full) || psi_full < psi - kPsiRoundoff * std::max(1.0, std::abs(psi)) ||
                !(gnorm_full < gnorm))
                return false;
            a = a_newton;
            r = std::move(r_full);
            psi = psi_full;
            if (opts.on_step) opts.on_step(psi);
            return true;
        };
        if (gnorm <= opts.grad_tolerance) {
            // One more step is nearly free and takes the mode from the tolerance down to
            // rounding, which the predictive variance is sensitive to through W.
            try_full_step();
            converged = true;
            ++iter;
            break;
        }

        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opts.max_halvings; ++h, t *= 0.5) {
            Eigen::VectorXd a_try = a + t * step;
            Eigen::VectorXd r_try = k * a_try;
            const double psi_try = psi_of(a_try, r_try);
            if (std::isfinite(psi_try) && psi_try >= psi) {
                const double delta = psi_try - psi;
                a = std::move(a_try);
                r = std::move(r_try);
                psi = psi_try;
                accepted = true;
                if (opts.on_step) opts.on_step(psi);
                // A single flat step is usually one Newton step short of the gradient
                // tolerance; only give up on it after repeated stalls.
                stalled = delta <= opts.psi_tolerance ? stalled + 1 : 0;
                if (stalled >= 3) converged = true;
                break;
            }
        }
        if (!accepted && !try_full_step()) converged = true;
        if (converged) {
            ++iter;
            break;
        }
    }
    if (!converged) {
        const Eigen::VectorXd g = r + (as_eigen(st.trials_.hs()) - as_eigen(levels));
        throw ConvergenceError("Laplace Newton iteration did not converge",
                               std::vector<double>(g.data(), g.data() + g.size()));
    }

    st.r_hat_ = r;
    st.alpha_ = a;
    st.grad_ = grad_of(r);
    st.w_ = w_of(r);
    st.sqrt_w_ = st.w_.cwiseSqrt();
    st.b_llt_ = factor_b(st.sqrt_w_);
    st.psi_ = psi;
    st.grad_norm_ = (st.grad_ - a).lpNorm<Eigen::Infinity>();
    st.converged_ = true;
    st.newton_iters_ = iter;
    return st;
}

}  // namespace gppta
