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

#ifndef XLK_COMPLEXITY_HPP
#define XLK_COMPLEXITY_HPP

#include "xlk/kaczmarz.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace xlk
{

// Complex multiplication/division counts per coherence block.
//
// All counts are evaluated over the reals because Kbar is an average over
// realizations. For the Kaczmarz schemes T is the number of inner-loop passes
// at one subarray summed over its user solves.
enum class Scheme
{
    ZF,
    RZF,
    RkaPower,
    RkaUniform,
    RkaActiveAntennas,
};

inline constexpr std::array<Scheme, 5> kAllSchemes = {Scheme::ZF, Scheme::RZF, Scheme::RkaPower, Scheme::RkaUniform,
                                                      Scheme::RkaActiveAntennas};

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view text);
bool is_kaczmarz(Scheme scheme);
Scheme scheme_for(ScheduleMode mode);

struct ComplexityReport
{
    Scheme scheme = Scheme::RZF;
    double S = 0.0;
    double Ms = 0.0;
    double Kbar = 0.0;
    std::optional<double> T;
    double tau_ul = 0.0;
    double combining_mults = 0.0;
    double combining_divs = 0.0;
    double reception_mults = 0.0;
    double total = 0.0;

    double combining_total() const { return combining_mults + combining_divs; }
};

ComplexityReport operation_counts(Scheme scheme, double S, double Ms, double Kbar, std::optional<double> T,
                               double tau_ul);

// Largest T for which the Kaczmarz scheme is no more expensive than RZF
// (RZF divisions included).
double iteration_upper_bound(ScheduleMode mode, double Ms, double Kbar);

// (T_up - T_bar) / T_up if T_bar < T_up, else 0
double crd(double T_bar, double T_up);

// Multiplications recorded by an instrumented estimate_combiner run at one subarray.
std::uint64_t measured_op_counter(const RkaInstrumentation &instr);

// Modeled combining multiplications of one subarray for the iterations and active
// users of an instrumented run: Ms * T + setup.
std::uint64_t modeled_kaczmarz_mults(ScheduleMode mode, std::uint64_t Ms, std::uint64_t active_users,
                                     std::uint64_t total_iterations);

std::string complexity_csv_header();
std::string to_csv_row(const ComplexityReport &report);

} // namespace xlk

#endif
