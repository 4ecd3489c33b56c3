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
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "gppta/errors.hpp"
#include "gppta/freq_warp.hpp"
#include "gppta/gp_prior.hpp"
#include "gppta/response_model.hpp"
#include "gppta/session.hpp"

namespace gppta {

/// Ground-truth threshold curve, piecewise linear in Bark between anchor points.
class TrueThreshold {
public:
    explicit TrueThreshold(AudiogramTable anchors) : anchors_(std::move(anchors)) {
        for (const auto& p : anchors_.points()) xs_.push_back(bark(p.frequency_hz));
    }

    const AudiogramTable& anchors() const noexcept { return anchors_; }
    double min_frequency() const noexcept { return anchors_.min_frequency(); }
    double max_frequency() const noexcept { return anchors_.max_frequency(); }

    bool covers(double f_hz) const noexcept { return f_hz >= min_frequency() && f_hz <= max_frequency(); }

    double at(double f_hz) const {
        if (!std::isfinite(f_hz) || !covers(f_hz)) throw DomainError("frequency outside the truth anchor range");
        const auto pts = anchors_.points();
        const double x = bark(f_hz);
        for (std::size_t i = 1; i < pts.size(); ++i) {
            if (x <= xs_[i]) {
                const double t = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
                return pts[i - 1].threshold_dbhl + t * (pts[i].threshold_dbhl - pts[i - 1].threshold_dbhl);
            }
        }
        return pts.back().threshold_dbhl;
    }

private:
    AudiogramTable anchors_;
    std::vector<double> xs_;
};

/// Portable N(0,1) stream: std::mt19937_64 (fully specified by the standard),
/// 53-bit uniforms, Box-Muller cosine branch. One normal per two raw draws.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

    double uniform_open() {
        // (k + 0.5) / 2^53 lies strictly inside (0, 1).
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double next() {
        const double u1 = uniform_open();
        const double u2 = uniform_open();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

/// Listener answering by comparing level - truth against Gaussian perceptual noise.
class SimulatedListener {
public:
    SimulatedListener(TrueThreshold truth, PerceptualNoise noise, std::uint64_t seed)
        : truth_(std::move(truth)), noise_(noise), seed_(seed), stream_(seed) {}

    const TrueThreshold& truth() const noexcept { return truth_; }
    PerceptualNoise noise() const noexcept { return noise_; }
    std::uint64_t seed() const noexcept { return seed_; }

    /// +1 iff level - truth(frequency) > eps, eps ~ N(0, sigma_p^2).
    ResponseLabel respond(const Stimulus& stim) {
        const double threshold = truth_.at(stim.frequency_hz);
        const double eps = noise_.sigma() * stream_.next();
        return ResponseLabel(stim.level_dbhl - threshold > eps ? 1 : -1);
    }

private:
    TrueThreshold truth_;
    PerceptualNoise noise_;
    std::uint64_t seed_;
    GaussianStream stream_;
};

/// Root-mean-square of (estimate mean - truth) over the estimate grid.
inline double rmse(const ThresholdEstimate& estimate, const TrueThreshold& truth) {
    if (estimate.points.empty()) throw ContractError("empty estimate");
    double sum = 0.0;
    for (const auto& p : estimate.points) {
        if (!truth.covers(p.frequency_hz)) throw ContractError("estimate grid outside truth range");
        const double d = p.mean_dbhl - truth.at(p.frequency_hz);
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(estimate.points.size()));
}

struct TraceStep {
    std::size_t step;  // 1-based trial count
    Stimulus stimulus;
    ResponseLabel label;
    double rmse;
    double max_std;
    double mean_bald;
    KernelHyperparams hp;
};

/// Posterior estimate captured after `step` trials, with the proposal that followed it.
struct Snapshot {
    std::size_t step;
    ThresholdEstimate estimate;
    std::vector<Trial> trials;
    std::optional<Stimulus> next_proposal;
};

struct ExperimentTrace {
    double prior_rmse = 0.0;
    double prior_max_std = 0.0;
    double prior_mean_bald = 0.0;
    std::vector<TraceStep> steps;
    std::vector<Snapshot> snapshots;
    SessionStatus final_status = SessionStatus::active;

    /// Mean BALD per step with the prior value first.
    std::vector<double> mean_bald_series() const {
        std::vector<double> out{prior_mean_bald};
        for (const auto& s : steps) out.push_back(s.mean_bald);
        return out;
    }
    double final_rmse() const { return steps.empty() ? prior_rmse : steps.back().rmse; }
};

struct ExperimentOptions {
    std::size_t eval_points = 128;
    std::vector<std::size_t> snapshot_steps{0, 7, 14, 21};
    std::size_t snapshot_points = 64;
};

/// Drives a session to its stopping condition against a simulated listener.
inline ExperimentTrace run_experiment(SimulatedListener& listener, const SessionConfig& config,
                                      const ExperimentOptions& opts = {}) {
    Session session = Session::create(config);
    const auto& truth = listener.truth();
    if (!truth.covers(config.freq_min_hz) || !truth.covers(config.freq_max_hz))
        throw DomainError("truth curve does not cover the session frequency range");

    ExperimentTrace trace;
    auto snap = [&](std::size_t step) {
        if (std::find(opts.snapshot_steps.begin(), opts.snapshot_steps.end(), step) == opts.snapshot_steps.end())
            return;
        Snapshot s{step, session.estimate(opts.snapshot_points), session.history(), std::nullopt};
        if (session.active()) s.next_proposal = session.propose();
        trace.snapshots.push_back(std::move(s));
    };

    trace.prior_rmse = rmse(session.estimate(opts.eval_points), truth);
    trace.prior_max_std = session.max_std();
    trace.prior_mean_bald = session.mean_bald_history().back();
    snap(0);
    while (session.active()) {
        const Stimulus stim = session.propose();
        const ResponseLabel label = listener.respond(stim);
        session.record(stim, label);
        trace.steps.push_back({session.history().size(), stim, label, rmse(session.estimate(opts.eval_points), truth),
                               session.max_std(), session.mean_bald_history().back(), session.hyperparams()});
        snap(session.history().size());
    }
    trace.final_status = session.status();
    return trace;
}

}  // namespace gppta
