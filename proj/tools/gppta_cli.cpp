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

// gppta: batch simulation, offline fitting and single-shot proposal.
//
//   gppta simulate --truth truth.csv --out runs/ [--seed 1] [--seeds N] ...
//   gppta fit      --trials trials.csv [--out estimate.csv] [--points 64] ...
//   gppta propose  --trials trials.csv ...
//
// Exit codes: 0 success, 1 runtime or data error, 2 usage error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gppta/gppta.hpp"

namespace {

namespace fs = std::filesystem;

struct ModelFlags {
    double sigma_p = 2.0;
    double freq_min = 250.0;
    double freq_max = 8000.0;
    double level_min = -10.0;
    double level_max = 110.0;
    std::size_t grid_points = 256;
    double stop_std = 2.5;
    std::size_t max_trials = 40;
    double signal_std = 20.0;
    double length_scale = 4.0;
    std::vector<double> signal_std_bounds{5.0, 60.0};
    std::vector<double> length_scale_bounds{0.5, 12.0};
    std::string prior_table;
    std::string weights;
    bool freeze_hypers = false;
};

void add_model_flags(CLI::App& cmd, ModelFlags& f) {
    cmd.add_option("--sigma-p", f.sigma_p, "Perceptual noise std (dB HL)")->capture_default_str();
    cmd.add_option("--freq-min", f.freq_min, "Lowest frequency (Hz)")->capture_default_str();
    cmd.add_option("--freq-max", f.freq_max, "Highest frequency (Hz)")->capture_default_str();
    cmd.add_option("--level-min", f.level_min, "Lowest presentable level (dB HL)")->capture_default_str();
    cmd.add_option("--level-max", f.level_max, "Highest presentable level (dB HL)")->capture_default_str();
    cmd.add_option("--grid-points", f.grid_points, "Candidate frequencies for trial selection")->capture_default_str();
    cmd.add_option("--stop-std", f.stop_std, "Stop when the max posterior std drops below this (dB HL)")
        ->capture_default_str();
    cmd.add_option("--max-trials", f.max_trials, "Trial budget")->capture_default_str();
    cmd.add_option("--signal-std", f.signal_std, "Prior kernel signal std (dB HL)")->capture_default_str();
    cmd.add_option("--length-scale", f.length_scale, "Prior kernel length scale (Bark)")->capture_default_str();
    cmd.add_option("--signal-std-bounds", f.signal_std_bounds, "Hyperopt range for signal std")
        ->expected(2)
        ->capture_default_str();
    cmd.add_option("--length-scale-bounds", f.length_scale_bounds, "Hyperopt range for length scale")
        ->expected(2)
        ->capture_default_str();
    cmd.add_option("--prior-table", f.prior_table,
                   "Audiogram table (frequency_hz,threshold_dbhl) for the linear prior mean; "
                   "defaults to a flat 20 dB HL synthetic table");
    cmd.add_option("--weights", f.weights, "Frequency weight table (frequency_hz,weight)");
    cmd.add_flag("--freeze-hypers", f.freeze_hypers, "Keep kernel hyperparameters fixed");
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

gppta::SessionConfig make_config(const ModelFlags& f) {
    gppta::SessionConfig c;
    c.sigma_p = f.sigma_p;
    c.freq_min_hz = f.freq_min;
    c.freq_max_hz = f.freq_max;
    c.level_min_dbhl = f.level_min;
    c.level_max_dbhl = f.level_max;
    c.grid_size = f.grid_points;
    c.stop_std = f.stop_std;
    c.max_trials = f.max_trials;
    c.signal_std = f.signal_std;
    c.length_scale = f.length_scale;
    c.hyper_bounds = {f.signal_std_bounds[0], f.signal_std_bounds[1], f.length_scale_bounds[0],
                      f.length_scale_bounds[1]};
    c.optimize_hypers = !f.freeze_hypers;
    if (!f.prior_table.empty()) {
        auto in = open_input(f.prior_table);
        c.prior_mean = gppta::fit_linear_prior(gppta::read_audiogram_table(in, f.prior_table));
    } else {
        c.prior_mean = gppta::fit_linear_prior(gppta::synthetic_flat_audiogram());
    }
    if (!f.weights.empty()) {
        auto in = open_input(f.weights);
        c.weights = gppta::read_weight_table(in, f.weights);
    }
    c.validate();
    return c;
}

std::vector<gppta::Trial> load_trials(const std::string& path) {
    auto in = open_input(path);
    return gppta::read_trial_log(in, path);
}

std::string step_name(std::size_t step) {
    std::ostringstream s;
    s << "estimate_step_";
    s.width(3);
    s.fill('0');
    s << step << ".csv";
    return s.str();
}

void write_run(const fs::path& dir, const gppta::ExperimentTrace& trace) {
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "trace.csv");
        gppta::write_trace_csv(out, trace);
    }
    std::vector<std::string> files;
    for (const auto& snap : trace.snapshots) {
        files.push_back(step_name(snap.step));
        std::ofstream out(dir / files.back());
        gppta::write_estimate_csv(out, snap.estimate);
    }
    std::ofstream out(dir / "plot.json");
    out << gppta::plot_index(trace, files).dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian-process pure-tone audiometry"};
    app.require_subcommand(1);

    ModelFlags sim_flags, fit_flags, prop_flags;
    std::string truth_path, out_dir = "gppta_out";
    std::uint64_t seed = 1;
    std::size_t seeds = 1, eval_points = 128, snapshot_points = 64;
    std::vector<std::size_t> snapshots{0, 7, 14, 21};
    auto* sim = app.add_subcommand("simulate", "Run the active-learning loop against a simulated listener");
    add_model_flags(*sim, sim_flags);
    sim->add_option("--truth", truth_path, "True threshold curve (frequency_hz,threshold_dbhl)")->required();
    sim->add_option("--seed", seed, "Listener noise seed")->capture_default_str();
    sim->add_option("--seeds", seeds, "Number of consecutive seeds to run")->capture_default_str();
    sim->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sim->add_option("--eval-points", eval_points, "Frequencies used for RMSE")->capture_default_str();
    sim->add_option("--snapshots", snapshots, "Trial counts at which to write estimates")->delimiter(',');
    sim->add_option("--snapshot-points", snapshot_points, "Frequencies per estimate snapshot")->capture_default_str();

    std::string fit_trials, fit_out;
    std::size_t fit_points = 64;
    auto* fit = app.add_subcommand("fit", "Fit a recorded trial log and export the threshold estimate");
    add_model_flags(*fit, fit_flags);
    fit->add_option("--trials", fit_trials, "Trial log (frequency_hz,level_dbhl,label)")->required();
    fit->add_option("--out", fit_out, "Estimate file (default: stdout)");
    fit->add_option("--points", fit_points, "Estimate frequencies")->capture_default_str()->check(CLI::Range(2, 1 << 20));

    std::string prop_trials;
    auto* prop = app.add_subcommand("propose", "Print the next stimulus for a recorded trial log");
    add_model_flags(*prop, prop_flags);
    prop->add_option("--trials", prop_trials, "Trial log (frequency_hz,level_dbhl,label)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*sim) {
            const auto cfg = make_config(sim_flags);
            auto in = open_input(truth_path);
            const gppta::TrueThreshold truth(gppta::read_audiogram_table(in, truth_path));
            gppta::ExperimentOptions opts;
            opts.eval_points = eval_points;
            opts.snapshot_steps = snapshots;
            opts.snapshot_points = snapshot_points;
            for (std::size_t k = 0; k < seeds; ++k) {
                gppta::SimulatedListener listener(truth, cfg.noise(), seed + k);
                const auto trace = gppta::run_experiment(listener, cfg, opts);
                const fs::path dir = seeds > 1 ? fs::path(out_dir) / ("seed_" + std::to_string(seed + k)) : fs::path(out_dir);
                write_run(dir, trace);
                std::cout << "seed " << seed + k << ": " << trace.steps.size() << " trials, final rmse "
                          << gppta::format_double(trace.final_rmse()) << " dB, status "
                          << gppta::to_string(trace.final_status) << '\n';
            }
        } else if (*fit) {
            const auto cfg = make_config(fit_flags);
            const auto session = gppta::Session::from_history(cfg, load_trials(fit_trials));
            const auto est = session.estimate(fit_points);
            if (fit_out.empty()) {
                gppta::write_estimate_csv(std::cout, est);
            } else {
                std::ofstream out(fit_out);
                if (!out) throw std::runtime_error("cannot write " + fit_out);
                gppta::write_estimate_csv(out, est);
            }
        } else if (*prop) {
            const auto cfg = make_config(prop_flags);
            auto session = gppta::Session::from_history(cfg, load_trials(prop_trials));
            const auto stim = session.propose();
            std::cout << gppta::format_double(stim.frequency_hz) << ' ' << gppta::format_double(stim.level_dbhl)
                      << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
