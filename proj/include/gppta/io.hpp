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

#include <charconv>
#include <cmath>
#include <span>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "gppta/bald.hpp"
#include "gppta/gp_prior.hpp"
#include "gppta/listener_sim.hpp"
#include "gppta/response_model.hpp"
#include "gppta/session.hpp"

// Delimited text formats:
//   audiogram table   frequency_hz,threshold_dbhl
//   weight table      frequency_hz,weight
//   trial log         frequency_hz,level_dbhl,label        (label +1 / -1)
//   estimate          frequency_hz,mean_dbhl,std_dbhl,lower_dbhl,upper_dbhl
//   trace             step,freq_hz,level_dbhl,label,rmse,max_std,mean_bald
// The header line is optional on input. Blank lines and lines starting with '#'
// are skipped.

namespace gppta {

/// Malformed input file; the message names the offending line.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& source, std::size_t line, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> parse_number(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

// Calls row(fields, lineno) for every data row; validates column count and header.
template <typename RowFn>
void read_rows(std::istream& in, const std::string& source, std::string_view header, RowFn&& row) {
    const std::size_t ncols = split_fields(header).size();
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = split_fields(t);
        if (first) {
            first = false;
            if (!fields.empty() && !parse_number(fields.front())) {
                if (fields != split_fields(header))
                    throw FormatError(source, lineno, "expected header '" + std::string(header) + "'");
                continue;
            }
        }
        if (fields.size() != ncols)
            throw FormatError(source, lineno,
                              "expected " + std::to_string(ncols) + " fields, got " + std::to_string(fields.size()));
        row(fields, lineno);
    }
}

inline double field_number(std::string_view f, const std::string& source, std::size_t lineno, const char* name) {
    const auto v = parse_number(f);
    if (!v) throw FormatError(source, lineno, std::string("invalid ") + name + " '" + std::string(f) + "'");
    return *v;
}

}  // namespace detail

inline AudiogramTable read_audiogram_table(std::istream& in, const std::string& source = "audiogram") {
    std::vector<AudiogramPoint> pts;
    std::size_t last_line = 0;
    detail::read_rows(in, source, "frequency_hz,threshold_dbhl", [&](const auto& f, std::size_t n) {
        last_line = n;
        pts.push_back({detail::field_number(f[0], source, n, "frequency_hz"),
                       detail::field_number(f[1], source, n, "threshold_dbhl")});
    });
    try {
        return AudiogramTable(std::move(pts));
    } catch (const std::exception& e) {
        throw FormatError(source, last_line, e.what());
    }
}

inline WeightTable read_weight_table(std::istream& in, const std::string& source = "weights") {
    std::vector<WeightTable::Point> pts;
    std::size_t last_line = 0;
    detail::read_rows(in, source, "frequency_hz,weight", [&](const auto& f, std::size_t n) {
        last_line = n;
        pts.push_back({detail::field_number(f[0], source, n, "frequency_hz"),
                       detail::field_number(f[1], source, n, "weight")});
    });
    try {
        return WeightTable(std::move(pts));
    } catch (const std::exception& e) {
        throw FormatError(source, last_line, e.what());
    }
}

inline std::vector<Trial> read_trial_log(std::istream& in, const std::string& source = "trials") {
    std::vector<Trial> out;
    detail::read_rows(in, source, "frequency_hz,level_dbhl,label", [&](const auto& f, std::size_t n) {
        const double freq = detail::field_number(f[0], source, n, "frequency_hz");
        const double level = detail::field_number(f[1], source, n, "level_dbhl");
        const auto label = f[2];
        int y = 0;
        if (label == "+1" || label == "1") y = 1;
        else if (label == "-1") y = -1;
        else throw FormatError(source, n, "label must be +1 or -1, got '" + std::string(label) + "'");
        if (freq <= 0.0) throw FormatError(source, n, "frequency_hz must be positive");
        out.emplace_back(FrequencyHz(freq), level, ResponseLabel(y));
    });
    return out;
}

inline void write_trial_log(std::ostream& out, std::span<const Trial> trials) {
    out << "frequency_hz,level_dbhl,label\n";
    for (const auto& t : trials)
        out << format_double(t.frequency.value()) << ',' << format_double(t.level_dbhl) << ','
            << (t.label.value() > 0 ? "+1" : "-1") << '\n';
}

inline void write_estimate_csv(std::ostream& out, const ThresholdEstimate& est) {
    out << "frequency_hz,mean_dbhl,std_dbhl,lower_dbhl,upper_dbhl\n";
    for (const auto& p : est.points)
        out << format_double(p.frequency_hz) << ',' << format_double(p.mean_dbhl) << ',' << format_double(p.std_dbhl)
            << ',' << format_double(p.mean_dbhl - p.std_dbhl) << ',' << format_double(p.mean_dbhl + p.std_dbhl)
            << '\n';
}

inline void write_trace_csv(std::ostream& out, const ExperimentTrace& trace) {
    out << "step,freq_hz,level_dbhl,label,rmse,max_std,mean_bald\n";
    for (const auto& s : trace.steps)
        out << s.step << ',' << format_double(s.stimulus.frequency_hz) << ',' << format_double(s.stimulus.level_dbhl)
            << ',' << (s.label.value() > 0 ? "+1" : "-1") << ',' << format_double(s.rmse) << ','
            << format_double(s.max_std) << ',' << format_double(s.mean_bald) << '\n';
}

/// Plot index for audiogram rendering: one entry per snapshot with its series file
/// (x = frequency, y = mean +- std), trial markers and the proposed next stimulus.
/// Level axis points downward (hearing loss plotted down).
inline nlohmann::json plot_index(const ExperimentTrace& trace, const std::vector<std::string>& series_files) {
    nlohmann::json j{{"y_axis_inverted", true},
                     {"x_axis", "frequency_hz"},
                     {"x_scale", "log"},
                     {"y_axis", "level_dbhl"},
                     {"prior_rmse", trace.prior_rmse},
                     {"mean_bald", trace.mean_bald_series()},
                     {"snapshots", nlohmann::json::array()}};
    for (std::size_t i = 0; i < trace.snapshots.size(); ++i) {
        const auto& s = trace.snapshots[i];
        nlohmann::json markers = nlohmann::json::array();
        for (const auto& t : s.trials)
            markers.push_back({{"frequency_hz", t.frequency.value()},
                               {"level_dbhl", t.level_dbhl},
                               {"glyph", t.label.value() > 0 ? "plus" : "cross"}});
        nlohmann::json entry{{"step", s.step}, {"series", i < series_files.size() ? series_files[i] : ""},
                             {"trials", std::move(markers)}};
        if (s.next_proposal)
            entry["proposal"] = {{"frequency_hz", s.next_proposal->frequency_hz},
                                 {"level_dbhl", s.next_proposal->level_dbhl},
                                 {"glyph", "square"}};
        j["snapshots"].push_back(std::move(entry));
    }
    return j;
}

}  // namespace gppta
