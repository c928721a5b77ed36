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

#include "xlk/complexity.hpp"

#include <fmt/format.h>

#include <cmath>

namespace xlk
{

std::string_view to_string(Scheme scheme)
{
    switch (scheme)
    {
    case Scheme::ZF:
        return "zf";
    case Scheme::RZF:
        return "rzf";
    case Scheme::RkaPower:
        return "rka_power";
    case Scheme::RkaUniform:
        return "rka_uniform";
    case Scheme::RkaActiveAntennas:
        return "rka_active_antennas";
    }
    return "?";
}

Scheme parse_scheme(std::string_view text)
{
    for (auto s : kAllSchemes)
        if (to_string(s) == text)
            return s;
    throw ConfigError(fmt::format("Unknown scheme '{}'.", text));
}

bool is_kaczmarz(Scheme scheme)
{
    return scheme == Scheme::RkaPower || scheme == Scheme::RkaUniform || scheme == Scheme::RkaActiveAntennas;
}

Scheme scheme_for(ScheduleMode mode)
{
    switch (mode)
    {
    case ScheduleMode::Power:
        return Scheme::RkaPower;
    case ScheduleMode::Uniform:
        return Scheme::RkaUniform;
    case ScheduleMode::ActiveAntennas:
        return Scheme::RkaActiveAntennas;
    }
    return Scheme::RkaUniform;
}

ComplexityReport operation_counts(Scheme scheme, double S, double Ms, double Kbar, std::optional<double> T,
                               double tau_ul)
{
    if (!(S > 0.0) || !(Ms > 0.0) || !(Kbar > 0.0))
        throw ConfigError("S, Ms and Kbar must be positive.");
    if (!(tau_ul >= 0.0))
        throw ConfigError("tau_ul cannot be negative.");
    if (is_kaczmarz(scheme))
    {
        if (!T)
            throw ConfigError(fmt::format("Scheme {} needs an iteration count T.", to_string(scheme)));
        if (!(*T > 0.0))
            throw ConfigError("Iteration count T must be positive.");
    }

    ComplexityReport r;
    r.scheme = scheme;
    r.S = S;
    r.Ms = Ms;
    r.Kbar = Kbar;
    r.T = is_kaczmarz(scheme) ? T : std::nullopt;
    r.tau_ul = tau_ul;

    const double K = Kbar;
    const double cubic = (K * K * K - K) / 3.0;
    switch (scheme)
    {
    case Scheme::ZF:
        r.combining_mults = S * (3.0 * K * K * Ms / 2.0 + K * Ms / 2.0 + cubic);
        r.combining_divs = S * K;
        break;
    case Scheme::RZF:
        r.combining_mults = S * (3.0 * K * K * Ms / 2.0 + 3.0 * K * Ms / 2.0 + cubic);
        r.combining_divs = S * K;
        break;
    case Scheme::RkaPower:
        r.combining_mults = S * (Ms * *T + 2.0 * Ms * K);
        break;
    case Scheme::RkaUniform:
    case Scheme::RkaActiveAntennas:
        r.combining_mults = S * (Ms * *T + Ms);
        break;
    }
    r.reception_mults = tau_ul * S * Ms * K;
    r.total = r.combining_mults + r.combining_divs + r.reception_mults;
    return r;
}

double iteration_upper_bound(ScheduleMode mode, double Ms, double Kbar)
{
    if (!(Ms > 0.0) || !(Kbar > 0.0))
        throw ConfigError("Ms and Kbar must be positive.");
    const double K = Kbar;
    const double common = K * K * K / (3.0 * Ms) + 2.0 * K / (3.0 * Ms) + 1.5 * K * K;
    if (mode == ScheduleMode::Power)
        return common - 0.5 * K;
    return common + 1.5 * K - 1.0;
}

double crd(double T_bar, double T_up)
{
    if (!(T_up > 0.0))
        throw ConfigError("T_up must be positive.");
    if (T_bar < T_up)
        return (T_up - T_bar) / T_up;
    return 0.0;
}

std::uint64_t measured_op_counter(const RkaInstrumentation &instr)
{
    return instr.mults;
}

std::uint64_t modeled_kaczmarz_mults(ScheduleMode mode, std::uint64_t Ms, std::uint64_t active_users,
                                     std::uint64_t total_iterations)
{
    if (total_iterations == 0)
        throw ConfigError("Iteration count T must be at least 1.");
    if (mode == ScheduleMode::Power)
        return Ms * total_iterations + 2 * Ms * active_users;
    return Ms * total_iterations + Ms;
}

std::string complexity_csv_header()
{
    return "scheme,S,Ms,Kbar,T,tau_ul,combining_mults,combining_divs,reception_mults,total";
}

std::string to_csv_row(const ComplexityReport &r)
{
    return fmt::format("{},{},{},{},{},{},{},{},{},{}", to_string(r.scheme), r.S, r.Ms, r.Kbar,
                       r.T ? fmt::format("{}", *r.T) : std::string(), r.tau_ul, r.combining_mults, r.combining_divs,
                       r.reception_mults, r.total);
}

} // namespace xlk
