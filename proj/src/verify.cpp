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

#include "xlk/verify.hpp"

#include <fmt/format.h>

#include <cmath>

namespace xlk
{

namespace
{

constexpr std::uint64_t kTagVerify = 90;

VerifyCheck check(std::string name, bool ok, std::string detail)
{
    return {std::move(name), ok, std::move(detail)};
}

} // namespace

std::vector<VerifyCheck> run_self_checks(const ExperimentConfig &config)
{
    config.validate();
    std::vector<VerifyCheck> out;
    const ArrayGeometry geometry = build_geometry(config);
    const double p = config.p_mw();
    const double sigma2 = db_to_linear(config.sigma2_dbm.front());
    const double xi = sigma2 / p;

    const std::uint64_t seed = mix_seed(config.master_seed, {kTagVerify});
    const auto ch = draw_realization(config, geometry, Normalization::Norm2, seed);
    const auto again = draw_realization(config, geometry, Normalization::Norm2, seed);
    out.push_back(check("seeded channel draw is reproducible", ch.H == again.H, "two draws from one seed"));

    // RZF against a dense inverse over the active users of each subarray
    double worst = 0.0;
    for (std::size_t s = 0; s < ch.S; ++s)
    {
        const CMatrix Hs = ch.subarray_block(s);
        const Combiner c = rzf_combiner(Hs, xi);
        if (c.active_users.empty())
            continue;
        CMatrix Ha(Hs.rows(), static_cast<Eigen::Index>(c.active_users.size()));
        for (std::size_t j = 0; j < c.active_users.size(); ++j)
            Ha.col(static_cast<Eigen::Index>(j)) = Hs.col(static_cast<Eigen::Index>(c.active_users[j]));
        const CMatrix G = Ha.adjoint() * Ha + xi * CMatrix::Identity(Ha.cols(), Ha.cols());
        const CMatrix Va = Ha * G.inverse();
        for (std::size_t j = 0; j < c.active_users.size(); ++j)
        {
            const CVector d = c.V.col(static_cast<Eigen::Index>(c.active_users[j])) - Va.col(static_cast<Eigen::Index>(j));
            worst = std::max(worst, d.norm() / std::max(1e-300, Va.col(static_cast<Eigen::Index>(j)).norm()));
        }
    }
    out.push_back(check("RZF matches dense inverse", worst < 1e-8, fmt::format("max relative error {:.3e}", worst)));

    // Kaczmarz combiner approaches RZF for many iterations, and the operation
    // counter agrees with the closed form
    double gap = 0.0;
    bool counts_ok = true;
    std::string counts_detail = "all subarrays";
    for (std::size_t s = 0; s < ch.S; ++s)
    {
        const CMatrix Hs = ch.subarray_block(s);
        const auto D = ch.active_antennas(s);
        const Combiner rzf = rzf_combiner(Hs, xi);
        if (rzf.active_users.empty())
            continue;
        const std::size_t Ka = rzf.active_users.size();
        const std::size_t T = 400 * Ka;
        RkaInstrumentation instr;
        const Combiner rka = rka_combiner(Hs, xi, T, ScheduleMode::Power, D, mix_seed(seed, {s}), &instr);
        const double r = (rka.V - rzf.V).norm() / rzf.V.norm();
        gap = std::max(gap, r);
        const auto model = modeled_kaczmarz_mults(ScheduleMode::Power, Hs.rows(), Ka, T * Ka);
        if (measured_op_counter(instr) != model)
        {
            counts_ok = false;
            counts_detail = fmt::format("subarray {}: counted {} vs {}", s, measured_op_counter(instr), model);
        }
    }
    out.push_back(check("Kaczmarz combiner converges to RZF", gap < 1e-3, fmt::format("max relative gap {:.3e}", gap)));
    out.push_back(check("operation counter matches closed form", counts_ok, counts_detail));

    const auto rzf_ref = operation_counts(Scheme::RZF, 4, 25, 25, std::nullopt, 0);
    out.push_back(check("RZF count at S=4, Ms=25, Kbar=25", rzf_ref.combining_mults == 118300.0 && rzf_ref.combining_divs == 100.0,
                        fmt::format("{} mults, {} divs", rzf_ref.combining_mults, rzf_ref.combining_divs)));

    bool bound_ok = true;
    for (double Ms : config.ms_grid)
        for (double K : config.kbar_grid)
            for (auto mode : {ScheduleMode::Power, ScheduleMode::Uniform})
            {
                const double Tup = iteration_upper_bound(mode, Ms, K);
                const auto rka = operation_counts(scheme_for(mode), 1, Ms, K, Tup, 0);
                const auto rzf = operation_counts(Scheme::RZF, 1, Ms, K, std::nullopt, 0);
                if (std::abs(rka.combining_total() - rzf.combining_total()) > 1e-9 * rzf.combining_total())
                    bound_ok = false;
            }
    out.push_back(check("iteration bound equalizes Kaczmarz and RZF cost", bound_ok, "complexity grid"));
    return out;
}

} // namespace xlk
