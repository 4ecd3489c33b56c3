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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gppta/bald.hpp"
#include "gppta/errors.hpp"
#include "gppta/freq_warp.hpp"
#include "gppta/gp_prior.hpp"
#include "gppta/hyperopt.hpp"
#include "gppta/laplace.hpp"
#include "gppta/response_model.hpp"

namespace gppta {

/// Everything that determines a session's behaviour. Raw numbers so that a config
/// read from a request can be validated field by field.
struct SessionConfig {
    double freq_min_hz = 250.0;
    double freq_max_hz = 8000.0;
    double level_min_dbhl = -10.0;
    double level_max_dbhl = 110.0;
    double sigma_p = 2.0;
    std::size_t grid_size = 256;
    double stop_std = 2.5;
    std::size_t max_trials = 40;
    HyperBounds hyper_bounds{};
    LinearMeanParams prior_mean{0.0, 20.0};
    double signal_std = 20.0;
    double length_scale = 4.0;
    bool optimize_hypers = true;
    std::size_t hyperopt_min_trials = 4;
    std::optional<WeightTable> weights;

    /// Names of all invalid fields; empty when the config is usable.
    std::vector<std::string> invalid_fields() const {
        std::vector<std::string> bad;
        auto finite = [](double v) { return std::isfinite(v); };
        if (!(finite(freq_min_hz) && finite(freq_max_hz) && freq_min_hz > 0.0 && freq_min_hz < freq_max_hz))
            bad.emplace_back("freq_range");
        if (!(finite(level_min_dbhl) && finite(level_max_dbhl) && level_min_dbhl < level_max_dbhl))
            bad.emplace_back("level_range");
        if (!(finite(sigma_p) && sigma_p > 0.0)) bad.emplace_back("sigma_p");
        if (grid_size < 2) bad.emplace_back("grid_size");
        if (!(finite(stop_std) && stop_std > 0.0)) bad.emplace_back("stop_std");
        if (max_trials < 1) bad.emplace_back("max_trials");
        if (!hyper_bounds.valid()) bad.emplace_back("hyper_bounds");
        if (!(finite(prior_mean.slope) && finite(prior_mean.intercept))) bad.emplace_back("prior_mean");
        if (!(finite(signal_std) && signal_std > 0.0)) bad.emplace_back("signal_std");
        if (!(finite(length_scale) && length_scale > 0.0)) bad.emplace_back("length_scale");
        return bad;
    }

    void validate() const {
        auto bad = invalid_fields();
        if (!bad.empty()) throw ValidationError(std::move(bad));
    }

    PerceptualNoise noise() const { return PerceptualNoise(sigma_p); }
    KernelHyperparams prior_kernel() const { return {signal_std, length_scale}; }

    StimulusGrid grid() const {
        return StimulusGrid::uniform_bark(freq_min_hz, freq_max_hz, grid_size, level_min_dbhl, level_max_dbhl,
                                          weights ? &*weights : nullptr);
    }
};

enum class SessionStatus { active, stopped_converged, stopped_max_trials };

inline std::string_view to_string(SessionStatus s) {
    switch (s) {
        case SessionStatus::active: return "active";
        case SessionStatus::stopped_converged: return "stopped_converged";
        case SessionStatus::stopped_max_trials: return "stopped_max_trials";
    }
    return "active";
}

inline SessionStatus status_from_string(std::string_view s) {
    if (s == "active") return SessionStatus::active;
    if (s == "stopped_converged") return SessionStatus::stopped_converged;
    if (s == "stopped_max_trials") return SessionStatus::stopped_max_trials;
    throw ContractError("unknown session status: " + std::string(s));
}

struct Stimulus {
    double frequency_hz;
    double level_dbhl;

    friend bool operator==(const Stimulus&, const Stimulus&) = default;
};

struct EstimatePoint {
    double frequency_hz;
    double mean_dbhl;
    double std_dbhl;
};

struct ThresholdEstimate {
    std::vector<EstimatePoint> points;
};

/// n frequencies uniform in Bark over [f_min, f_max]; endpoints exact.
inline std::vector<double> bark_uniform_frequencies(double f_min, double f_max, std::size_t n) {
    if (n < 2) throw ContractError("need at least 2 estimate points");
    const double a = bark(f_min), b = bark(f_max);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = bark_inv(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    out.front() = f_min;
    out.back() = f_max;
    return out;
}

inline ThresholdEstimate estimate_from(const PosteriorState& state, double f_min, double f_max, std::size_t n) {
    ThresholdEstimate est;
    for (double f : bark_uniform_frequencies(f_min, f_max, n)) {
        const auto p = state.predict_latent(bark(f));
        est.points.push_back({f, p.mu, std::sqrt(p.sigma2)});
    }
    return est;
}

/// Active-learning session. One logical writer; propose() and record() must be
/// serialized by the owner.
class Session {
public:
    static Session create(SessionConfig config, std::string id = {}) {
        config.validate();
        return Session(std::move(config), std::move(id));
    }

    /// Rebuilds the model from a trial list. Trials are ingested one at a time exactly
    /// as record() would, but ranges and stopping are not enforced; status stays active.
    static Session from_history(SessionConfig config, std::span<const Trial> trials, std::string id = {}) {
        Session s = create(std::move(config), std::move(id));
        for (const auto& t : trials) s.ingest(t);
        return s;
    }

    const std::string& id() const noexcept { return id_; }
    const SessionConfig& config() const noexcept { return config_; }
    const std::vector<Trial>& history() const noexcept { return history_; }
    const PosteriorState& posterior() const noexcept { return state_; }
    const KernelHyperparams& hyperparams() const noexcept { return hp_; }
    SessionStatus status() const noexcept { return status_; }
    bool active() const noexcept { return status_ == SessionStatus::active; }
    const std::optional<Stimulus>& pending() const noexcept { return pending_; }
    const StimulusGrid& grid() const noexcept { return grid_; }
    std::span<const PredictiveGaussian> grid_predictions() const noexcept { return preds_; }
    /// Mean BALD over the grid after each step; element 0 is the prior.
    const std::vector<double>& mean_bald_history() const noexcept { return mean_bald_history_; }
    /// Largest posterior std over the grid (the stopping statistic).
    double max_std() const noexcept { return max_std_; }
    /// True when the most recent hyperparameter search fell back to the old values.
    bool hyperopt_fell_back() const noexcept { return hyperopt_fell_back_; }

    /// Next stimulus. Cached until a response is recorded.
    Stimulus propose() {
        if (!active()) throw StateError("session is " + std::string(to_string(status_)));
        if (!pending_) {
            const auto sel = select_next_stimulus(state_, grid_, preds_);
            pending_ = Stimulus{std::clamp(sel.frequency_hz, config_.freq_min_hz, config_.freq_max_hz),
                                sel.level_dbhl};
        }
        return *pending_;
    }

    /// Appends a response (any in-range stimulus, not only the pending one), refits,
    /// re-optimizes hyperparameters and applies the stopping rule.
    void record(const Stimulus& stim, ResponseLabel label) {
        if (!active()) throw StateError("session is " + std::string(to_string(status_)));
        std::vector<std::string> bad;
        if (!(std::isfinite(stim.frequency_hz) && stim.frequency_hz >= config_.freq_min_hz &&
              stim.frequency_hz <= config_.freq_max_hz))
            bad.emplace_back("frequency_hz");
        if (!(std::isfinite(stim.level_dbhl) && stim.level_dbhl >= config_.level_min_dbhl &&
              stim.level_dbhl <= config_.level_max_dbhl))
            bad.emplace_back("level_dbhl");
        if (!bad.empty()) throw ValidationError(std::move(bad), "stimulus outside configured range");
        ingest(Trial(FrequencyHz(stim.frequency_hz), stim.level_dbhl, label));
        if (max_std_ <= config_.stop_std)
            status_ = SessionStatus::stopped_converged;
        else if (history_.size() >= config_.max_trials)
            status_ = SessionStatus::stopped_max_trials;
    }

    ThresholdEstimate estimate(std::size_t n_points) const {
        return estimate_from(state_, config_.freq_min_hz, config_.freq_max_hz, n_points);
    }

private:
    Session(SessionConfig config, std::string id)
        : id_(std::move(id)),
          config_(std::move(config)),
          hp_(config_.prior_kernel()),
          grid_(config_.grid()),
          state_(fit_posterior(TrialSet{}, hp_, config_.prior_mean, config_.noise())) {
        refresh_grid();
    }

    void ingest(const Trial& t) {
        history_.push_back(t);
        trials_.push_back(t);
        const auto noise = config_.noise();
        hyperopt_fell_back_ = false;
        if (config_.optimize_hypers && trials_.size() >= config_.hyperopt_min_trials) {
            const auto res = optimize_hyperparams(trials_, config_.hyper_bounds, config_.prior_mean, noise, hp_);
            hp_ = res.hp;
            hyperopt_fell_back_ = res.fell_back;
        }
        state_ = fit_posterior(trials_, hp_, config_.prior_mean, noise);
        pending_.reset();
        refresh_grid();
    }

    void refresh_grid() {
        preds_ = predict_grid(state_, grid_);
        max_std_ = gppta::max_std(preds_);
        mean_bald_history_.push_back(mean_bald(preds_, config_.noise()));
    }

    std::string id_;
    SessionConfig config_;
    KernelHyperparams hp_;
    StimulusGrid grid_;
    std::vector<Trial> history_;
    TrialSet trials_;
    PosteriorState state_;
    std::vector<PredictiveGaussian> preds_;
    std::vector<double> mean_bald_history_;
    double max_std_ = 0.0;
    SessionStatus status_ = SessionStatus::active;
    std::optional<Stimulus> pending_;
    bool hyperopt_fell_back_ = false;
};

}  // namespace gppta
