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

#include "xlk/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace xlk;

namespace
{

ExperimentConfig small_config()
{
    ExperimentConfig c;
    c.M = 16;
    c.S = 2;
    c.K = 5;
    c.trials = 4;
    c.batch = 3;
    c.sigma2_dbm = {-50.0, -40.0};
    c.deltas = {0.10, 0.01};
    c.vr_mean_fraction = 0.3;
    c.frames_per_trial = 3;
    c.master_seed = 7;
    return c;
}

} // namespace

TEST(Search, MatchesLinearScan)
{
    for (double target : {0.5, 3.0, 17.2, 63.9, 64.0, 99.0})
    {
        std::size_t calls = 0;
        auto metric = [&](std::size_t T) {
            ++calls;
            return std::sqrt(static_cast<double>(T)) * 10.0;
        };
        std::size_t expected = 1;
        while (expected < 100 && metric(expected) < target)
            ++expected;
        calls = 0;
        const auto [T, censored] = smallest_passing_iteration(metric, target, 100);
        EXPECT_FALSE(censored);
        EXPECT_EQ(T, expected) << target;
        EXPECT_LE(calls, 16u);
    }
}

TEST(Search, CensoredWhenBudgetExhausted)
{
    const auto [T, censored] = smallest_passing_iteration([](std::size_t) { return 0.0; }, 1.0, 37);
    EXPECT_TRUE(censored);
    EXPECT_EQ(T, 37u);
    const auto [T1, c1] = smallest_passing_iteration([](std::size_t) { return 5.0; }, 1.0, 37);
    EXPECT_FALSE(c1);
    EXPECT_EQ(T1, 1u);
}

TEST(Calibration, LooseCriterionNeedsOnlySelfInitialization)
{
    auto c = small_config();
    const auto r = calibrate_iterations(c, -45.0, Normalization::Norm2, ScheduleMode::Uniform, 1.0 - 1e-12);
    for (const auto &s : r.subarrays)
        if (s.trials > 0)
        {
            EXPECT_DOUBLE_EQ(s.t_user, 1.0);
            EXPECT_EQ(s.censored, 0u);
        }
}

TEST(Calibration, TighterCriterionNeedsMoreIterations)
{
    auto c = small_config();
    const auto r = calibrate_iterations(c, -45.0, Normalization::Norm1, ScheduleMode::Power, {0.10, 0.01});
    ASSERT_EQ(r.size(), 2u);
    for (std::size_t s = 0; s < c.S; ++s)
    {
        EXPECT_GE(r[0].subarrays[s].t_user, 1.0);
        EXPECT_GE(r[1].subarrays[s].t_user, r[0].subarrays[s].t_user);
        EXPECT_NEAR(r[0].subarrays[s].kbar, r[1].subarrays[s].kbar, 0.0);
    }
    EXPECT_THROW(calibrate_iterations(c, -45.0, Normalization::Norm1, ScheduleMode::Power, 1.5), ConfigError);
}

TEST(CrdSweep, ValuesInRangeAndThreadIndependent)
{
    auto c = small_config();
    c.threads = 1;
    const auto a = run_crd_sweep(c);
    c.threads = 3;
    const auto b = run_crd_sweep(c);
    EXPECT_EQ(to_csv(a), to_csv(b));

    // 2 sigma2 x 2 normalizations x 3 schedules x 2 deltas x (2 subarrays + mean)
    EXPECT_EQ(a.points.size(), 2u * 2u * 3u * 2u * 3u);
    for (const auto &p : a.points)
    {
        EXPECT_GE(p.crd, 0.0);
        EXPECT_LE(p.crd, 1.0);
        EXPECT_GE(p.crd, p.crd_total);
        if (p.kbar > 0.0)
            EXPECT_GE(p.t_user, 1.0);
    }
    const auto &m = a.at(-40.0, Normalization::Norm2, ScheduleMode::Uniform, 0.10);
    EXPECT_EQ(m.subarray, -1);
    EXPECT_THROW(a.at(-41.0, Normalization::Norm2, ScheduleMode::Uniform, 0.10), ConfigError);

    c.trials = 0;
    EXPECT_THROW(run_crd_sweep(c), ConfigError);
}

TEST(CrdSweep, IterationTableRoundTripsThroughCsv)
{
    auto c = small_config();
    c.sigma2_dbm = {-45.0};
    c.schedules = {ScheduleMode::Uniform};
    const auto r = run_crd_sweep(c);
    const auto direct = iteration_table_from(r);
    const auto parsed = parse_iteration_csv("# comment line\n" + to_csv(r));
    EXPECT_EQ(direct, parsed);
    EXPECT_EQ(direct.size(), 4u);
    EXPECT_THROW(parse_iteration_csv("a,b\n1,2\n"), ConfigError);
}

TEST(SerSweep, RatesInRangeAndDeterministic)
{
    auto c = small_config();
    const auto table = iteration_table_from(run_crd_sweep(c));
    const auto a = run_ser_sweep(c, table);
    c.threads = 2;
    const auto b = run_ser_sweep(c, table);
    EXPECT_EQ(to_csv(a), to_csv(b));
    for (const auto &p : a.points)
    {
        EXPECT_GE(p.ser_rka, 0.0);
        EXPECT_LE(p.ser_rka, 1.0);
        EXPECT_GE(p.ser_rzf, 0.0);
        EXPECT_LE(p.ser_rzf, 1.0);
        EXPECT_EQ(p.symbols, c.trials * c.frames_per_trial * c.K);
    }
    EXPECT_THROW(run_ser_sweep(c, IterationTable{}), ConfigError);
}

TEST(SerSweep, NearlyNoiselessFullVisibilityHasNoErrors)
{
    auto c = small_config();
    c.vr_mean_fraction = 2.0; // every VR spans the whole array
    c.sigma2_dbm = {-120.0};
    c.normalizations = {Normalization::Norm2};
    c.schedules = {ScheduleMode::Power};
    c.deltas = {0.01};
    const auto r = run_ser_sweep(c, iteration_table_from(run_crd_sweep(c)));
    ASSERT_EQ(r.points.size(), 1u);
    EXPECT_EQ(r.points[0].ser_rzf, 0.0);
    EXPECT_EQ(r.points[0].ser_rka, 0.0);
}

TEST(ComplexitySweep, SinglePointReducesToCounts)
{
    ExperimentConfig c;
    const std::map<ScheduleMode, double> t = {
        {ScheduleMode::Power, 12.0}, {ScheduleMode::Uniform, 9.0}, {ScheduleMode::ActiveAntennas, 8.0}};
    const auto r = run_complexity_sweep(c, {25.0}, {25.0}, t);
    ASSERT_EQ(r.points.size(), 5u);
    const auto expected = operation_counts(Scheme::RkaUniform, 4, 25, 25, 9.0, 190);
    EXPECT_DOUBLE_EQ(r.at(25, 25, Scheme::RkaUniform).report.total, expected.total);
    EXPECT_DOUBLE_EQ(r.at(25, 25, Scheme::RZF).report.combining_mults, 118300.0);
    EXPECT_TRUE(r.at(25, 25, Scheme::RkaUniform).beats_rzf);
    EXPECT_FALSE(r.at(25, 25, Scheme::RZF).beats_rzf);
    EXPECT_THROW(run_complexity_sweep(c, {}, {25.0}, t), ConfigError);
    EXPECT_THROW(run_complexity_sweep(c, {25.0}, {25.0}, {}), ConfigError);
}

TEST(ComplexitySweep, RatioToRzfGrowsWithUsers)
{
    ExperimentConfig c;
    const std::map<ScheduleMode, double> t = {
        {ScheduleMode::Power, 30.0}, {ScheduleMode::Uniform, 30.0}, {ScheduleMode::ActiveAntennas, 30.0}};
    const auto r = run_complexity_sweep(c, c.ms_grid, c.kbar_grid, t);
    for (double Ms : c.ms_grid)
    {
        double prev = 0.0;
        for (double K : c.kbar_grid)
        {
            const double ratio = r.at(Ms, K, Scheme::RZF).report.combining_total() /
                                 r.at(Ms, K, Scheme::RkaUniform).report.combining_total();
            EXPECT_GT(ratio, prev);
            prev = ratio;
        }
    }
    // Crossover is the smallest grid Kbar from which the scheme stays cheaper
    for (const auto &x : r.crossovers)
        if (!std::isnan(x.kbar))
            for (double K : c.kbar_grid)
                EXPECT_EQ(r.at(x.Ms, K, x.scheme).beats_rzf, K >= x.kbar);
}

TEST(Config, ValidationNamesTheKey)
{
    ExperimentConfig c;
    EXPECT_NO_THROW(c.validate());
    c.S = 3;
    try
    {
        c.validate();
        FAIL();
    }
    catch (const ConfigError &e)
    {
        EXPECT_NE(std::string(e.what()).find("array.M"), std::string::npos);
    }
    c = ExperimentConfig{};
    c.deltas = {0.0};
    EXPECT_THROW(c.validate(), ConfigError);
    c = ExperimentConfig{};
    c.trials = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = ExperimentConfig{};
    c.sigma2_dbm = {std::nan("")};
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Realization, SameSeedSharesEverythingButScaling)
{
    ExperimentConfig c;
    const auto g = build_geometry(c);
    const auto a = draw_realization(c, g, Normalization::Norm1, 5);
    const auto b = draw_realization(c, g, Normalization::Norm2, 5);
    for (std::size_t k = 0; k < c.K; ++k)
    {
        EXPECT_EQ(a.vrs[k].mask, b.vrs[k].mask);
        if (a.vrs[k].D_total == 0)
            continue;
        const double f = std::sqrt(static_cast<double>(c.M) / static_cast<double>(a.vrs[k].D_total));
        const auto kk = static_cast<Eigen::Index>(k);
        EXPECT_LT((a.H.col(kk) - f * b.H.col(kk)).norm(), 1e-12 * a.H.col(kk).norm());
    }
}
