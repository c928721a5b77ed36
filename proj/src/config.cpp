// SPDX-License-Identifier: Apache-2.0
//
// xlk: randomized Kaczmarz receive combining for extra-large MIMO arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "xlk/config.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace xlk
{

namespace
{

std::string trim(const std::string &s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string &value)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(value);
    while (std::getline(is, item, ','))
    {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

double to_double(const std::string &key, const std::string &text)
{
    double v = 0.0;
    const auto *end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end)
        throw ConfigError(fmt::format("{}: '{}' is not a number", key, text));
    return v;
}

std::uint64_t to_unsigned(const std::string &key, const std::string &text)
{
    std::uint64_t v = 0;
    const auto *end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end)
        throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, text));
    return v;
}

bool to_bool(const std::string &key, const std::string &text)
{
    if (text == "true" || text == "1" || text == "yes" || text == "on")
        return true;
    if (text == "false" || text == "0" || text == "no" || text == "off")
        return false;
    throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, text));
}

std::vector<double> to_doubles(const std::string &key, const std::string &text)
{
    std::vector<double> out;
    for (const auto &item : split_list(text))
        out.push_back(to_double(key, item));
    if (out.empty())
        throw ConfigError(fmt::format("{}: empty list", key));
    return out;
}

// Rethrows parse errors from the enum parsers with the key attached
template <class F>
auto with_key(const std::string &key, F f)
{
    try
    {
        return f();
    }
    catch (const ConfigError &e)
    {
        throw ConfigError(fmt::format("{}: {}", key, e.what()));
    }
}

template <class T, class Parse>
std::vector<T> to_enums(const std::string &key, const std::string &text, Parse parse)
{
    std::vector<T> out;
    for (const auto &item : split_list(text))
        out.push_back(with_key(key, [&] { return parse(item); }));
    if (out.empty())
        throw ConfigError(fmt::format("{}: empty list", key));
    return out;
}

std::string num(double v)
{
    return fmt::format("{}", v);
}

template <class T>
std::string join_enums(const std::vector<T> &v)
{
    std::vector<std::string> names;
    for (const auto &x : v)
        names.emplace_back(to_string(x));
    return fmt::format("{}", fmt::join(names, ","));
}

std::string join_doubles(const std::vector<double> &v)
{
    std::vector<std::string> items;
    for (double x : v)
        items.push_back(num(x));
    return fmt::format("{}", fmt::join(items, ","));
}

struct Entry
{
    std::string key;
    std::function<void(ExperimentConfig &, const std::string &, const std::string &)> set;
    std::function<std::string(const ExperimentConfig &)> get;
};

Entry t_user_entry(ScheduleMode mode)
{
    return Entry{fmt::format("complexity.t_user.{}", to_string(mode)),
                 [mode](ExperimentConfig &c, const std::string &k, const std::string &v) {
                     c.complexity_t_user[mode] = to_double(k, v);
                 },
                 [mode](const ExperimentConfig &c) {
                     const auto it = c.complexity_t_user.find(mode);
                     return it == c.complexity_t_user.end() ? std::string("10") : num(it->second);
                 }};
}

#define XLK_DOUBLE(KEY, FIELD)                                                                                        \
    Entry{KEY, [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.FIELD = to_double(k, v); },   \
          [](const ExperimentConfig &c) { return num(c.FIELD); }}
#define XLK_SIZE(KEY, FIELD)                                                                                          \
    Entry{KEY,                                                                                                        \
          [](ExperimentConfig &c, const std::string &k, const std::string &v) {                                       \
              c.FIELD = static_cast<std::size_t>(to_unsigned(k, v));                                                  \
          },                                                                                                          \
          [](const ExperimentConfig &c) { return std::to_string(c.FIELD); }}

const std::vector<Entry> &entries()
{
    static const std::vector<Entry> table = {
        XLK_SIZE("array.M", M),
        XLK_SIZE("array.S", S),
        XLK_DOUBLE("array.carrier_hz", carrier_hz),
        XLK_DOUBLE("array.spacing_wavelengths", spacing_wavelengths),
        XLK_SIZE("users.K", K),
        XLK_DOUBLE("users.p_dbm", p_dbm),
        XLK_DOUBLE("users.cell.x_min", cell.x_min),
        XLK_DOUBLE("users.cell.x_max", cell.x_max),
        XLK_DOUBLE("users.cell.y_min", cell.y_min),
        XLK_DOUBLE("users.cell.y_max", cell.y_max),
        XLK_DOUBLE("users.min_distance_m", min_distance_m),
        XLK_DOUBLE("pathloss.omega", omega),
        XLK_DOUBLE("pathloss.nu", nu),
        XLK_DOUBLE("vr.mean_fraction", vr_mean_fraction),
        XLK_DOUBLE("vr.sigma", vr_sigma),
        Entry{"sweep.sigma2_dbm",
              [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.sigma2_dbm = to_doubles(k, v); },
              [](const ExperimentConfig &c) { return join_doubles(c.sigma2_dbm); }},
        Entry{"sweep.normalizations",
              [](ExperimentConfig &c, const std::string &k, const std::string &v) {
                  c.normalizations = to_enums<Normalization>(k, v, parse_normalization);
              },
              [](const ExperimentConfig &c) { return join_enums(c.normalizations); }},
        Entry{"sweep.schedules",
              [](ExperimentConfig &c, const std::string &k, const std::string &v) {
                  c.schedules = to_enums<ScheduleMode>(k, v, parse_schedule);
              },
              [](const ExperimentConfig &c) { return join_enums(c.schedules); }},
        Entry{"sweep.deltas",
              [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.deltas = to_doubles(k, v); },
              [](const ExperimentConfig &c) { return join_doubles(c.deltas); }},
        XLK_SIZE("run.trials", trials),
        XLK_SIZE("calibration.batch", batch),
        XLK_DOUBLE("calibration.t_max_factor", t_max_factor),
        XLK_SIZE("ser.frames_per_trial", frames_per_trial),
        XLK_SIZE("ser.tau_ul", tau_ul),
        Entry{"ser.constellation",
              [](ExperimentConfig &c, const std::string &k, const std::string &v) {
                  c.constellation = with_key(k, [&] { return parse_constellation(v); });
              },
              [](const ExperimentConfig &c) { return std::string(to_string(c.constellation)); }},
        Entry{"ser.fusion",
              [](ExperimentConfig &c, const std::string &k, const std::string &v) {
                  c.fusion = with_key(k, [&] { return parse_fusion(v); });
              },
              [](const ExperimentConfig &c) { return std::string(to_string(c.fusion)); }},
        Entry{"complexity.ms_grid",
              [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.ms_grid = to_doubles(k, v); },
              [](const ExperimentConfig &c) { return join_doubles(c.ms_grid); }},
        Entry{"complexity.kbar_grid",
              [](ExperimentConfig &c, const std::string &k, const std::string &v) { c.kbar_grid = to_doubles(k, v); },
              [](const ExperimentConfig &c) { return join_doubles(c.kbar_grid); }},
        XLK_DOUBLE("complexity.sigma2_dbm", complexity_sigma2_dbm),
        Entry{"complexity.normalization",
              [](ExperimentConfig &c, const std::string &k, const std::string &v) {
                  c.complexity_normalization = with_key(k, [&] { return parse_normalization(v); });
              },
              [](const ExperimentConfig &c) { return std::string(to_string(c.complexity_normalization)); }},
        XLK_DOUBLE("complexity.delta", complexity_delta),
        Entry{"complexity.calibrate",
              [](ExperimentConfig &c, const std::string &k, const std::string &v) {
                  c.complexity_calibrate = to_bool(k, v);
              },
              [](const ExperimentConfig &c) { return std::string(c.complexity_calibrate ? "true" : "false"); }},
        XLK_SIZE("complexity.calibration_trials", complexity_calibration_trials),
        t_user_entry(ScheduleMode::Power),
        t_user_entry(ScheduleMode::Uniform),
        t_user_entry(ScheduleMode::ActiveAntennas),
    };
    return table;
}

#undef XLK_DOUBLE
#undef XLK_SIZE

} // namespace

void apply_setting(ExperimentConfig &config, const std::string &key, const std::string &value)
{
    for (const auto &e : entries())
        if (e.key == key)
        {
            e.set(config, key, trim(value));
            return;
        }
    throw ConfigError(fmt::format("unknown config key '{}'", key));
}

std::pair<std::string, std::string> split_assignment(const std::string &text)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos)
        throw ConfigError(fmt::format("expected key=value, got '{}'", text));
    auto key = trim(text.substr(0, eq));
    if (key.empty())
        throw ConfigError(fmt::format("missing key in '{}'", text));
    return {key, trim(text.substr(eq + 1))};
}

ExperimentConfig parse_config(const std::string &text, const std::vector<std::string> &overrides)
{
    ExperimentConfig config;
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line))
    {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        try
        {
            const auto [key, value] = split_assignment(line);
            apply_setting(config, key, value);
        }
        catch (const ConfigError &e)
        {
            throw ConfigError(fmt::format("line {}: {}", line_no, e.what()));
        }
    }
    for (const auto &o : overrides)
    {
        const auto [key, value] = split_assignment(o);
        apply_setting(config, key, value);
    }
    config.validate();
    return config;
}

ExperimentConfig load_config_file(const std::string &path, const std::vector<std::string> &overrides)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(fmt::format("cannot read config file '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    try
    {
        return parse_config(ss.str(), overrides);
    }
    catch (const ConfigError &e)
    {
        throw ConfigError(fmt::format("{}: {}", path, e.what()));
    }
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig &config)
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto &e : entries())
        out.emplace_back(e.key, e.get(config));
    return out;
}

std::string to_config_text(const ExperimentConfig &config)
{
    std::string out;
    for (const auto &[k, v] : config_entries(config))
        out += fmt::format("{} = {}\n", k, v);
    return out;
}

std::vector<std::string> known_config_keys()
{
    std::vector<std::string> out;
    for (const auto &e : entries())
        out.push_back(e.key);
    return out;
}

} // namespace xlk
