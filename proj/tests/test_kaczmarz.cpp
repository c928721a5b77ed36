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
#include "xlk/kaczmarz.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

using namespace xlk;

namespace
{

CMatrix random_channel(Eigen::Index Ms, Eigen::Index K, std::uint64_t seed)
{
    Rng rng(seed);
    CMatrix H(Ms, K);
    for (Eigen::Index j = 0; j < K; ++j)
        for (Eigen::Index i = 0; i < Ms; ++i)
            H(i, j) = complex_gaussian(rng);
    return H;
}

std::vector<std::size_t> all_active(Eigen::Index K, std::size_t d = 1)
{
    return std::vector<std::size_t>(static_cast<std::size_t>(K), d);
}

double cosine(const CVector &a, const CVector &b)
{
    return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

} // namespace

TEST(Schedule, ProbabilitiesFollowDefinitions)
{
    CMatrix H = random_channel(6, 4, 1);
    H.col(1).setZero();
    const std::vector<std::size_t> D = {3, 0, 1, 6};
    const double xi = 0.5;

    const auto pw = build_schedule(H, xi, ScheduleMode::Power, D);
    ASSERT_EQ(pw.users(), (std::vector<std::size_t>{0, 2, 3}));
    const double frob = H.squaredNorm();
    for (std::size_t i = 0; i < 3; ++i)
    {
        const double n2 = H.col(static_cast<Eigen::Index>(pw.users()[i])).squaredNorm();
        EXPECT_NEAR(pw.probabilities()[i], (n2 + xi) / (frob + 3 * xi), 1e-15);
    }
    EXPECT_EQ(pw.setup_mults(), 2u * 6u * 3u);

    const auto un = build_schedule(H, xi, ScheduleMode::Uniform, D);
    for (double p : un.probabilities())
        EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
    EXPECT_EQ(un.setup_mults(), 6u);

    const auto aa = build_schedule(H, xi, ScheduleMode::ActiveAntennas, D);
    EXPECT_NEAR(aa.probabilities()[0], 0.3, 1e-15);
    EXPECT_NEAR(aa.probabilities()[1], 0.1, 1e-15);
    EXPECT_NEAR(aa.probabilities()[2], 0.6, 1e-15);
    EXPECT_EQ(aa.setup_mults(), 6u);
}

TEST(Schedule, RejectsBadInput)
{
    const CMatrix H = random_channel(4, 2, 1);
    EXPECT_THROW(build_schedule(H, 0.1, ScheduleMode::Uniform, std::vector<std::size_t>{0, 0}), ConfigError);
    EXPECT_THROW(build_schedule(H, 0.1, ScheduleMode::Uniform, std::vector<std::size_t>{1}), ConfigError);
    EXPECT_THROW(UpdateSchedule(ScheduleMode::Uniform, {0, 1}, {0.5, 0.6}), ConfigError);
    EXPECT_THROW(UpdateSchedule(ScheduleMode::Uniform, {0, 1}, {-0.5, 1.5}), ConfigError);
    EXPECT_THROW(UpdateSchedule(ScheduleMode::Uniform, {}, {}), ConfigError);
    EXPECT_THROW(parse_schedule("greedy"), ConfigError);
    EXPECT_EQ(parse_schedule("aa"), ScheduleMode::ActiveAntennas);
}

TEST(Schedule, EmpiricalFrequenciesWithinThreeSigma)
{
    const UpdateSchedule s(ScheduleMode::ActiveAntennas, {2, 5, 7, 9}, {0.05, 0.15, 0.3, 0.5});
    Rng rng(77);
    const int n = 1000000;
    std::map<std::size_t, int> counts;
    for (int i = 0; i < n; ++i)
        ++counts[s.sample(rng)];
    ASSERT_EQ(counts.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i)
    {
        const double p = s.probabilities()[i];
        const double sd = std::sqrt(n * p * (1 - p));
        EXPECT_NEAR(counts[s.users()[i]], n * p, 3 * sd) << "user " << s.users()[i];
    }
}

TEST(Schedule, ZeroProbabilityNeverDrawn)
{
    const UpdateSchedule s(ScheduleMode::ActiveAntennas, {0, 1, 2}, {0.5, 0.0, 0.5});
    Rng rng(3);
    for (int i = 0; i < 100000; ++i)
        EXPECT_NE(s.sample(rng), 1u);
}

TEST(Kaczmarz, FixedPointResidualIsExactlyZero)
{
    // Orthogonal columns with power-of-two norms: self-initialization lands on the
    // exact solution, so every residual is exactly zero and further steps change nothing
    CMatrix H = CMatrix::Zero(4, 3);
    H(0, 0) = 1.0;
    H(1, 1) = cplx(0.0, 1.0);
    H(3, 2) = -1.0;
    for (double xi : {0.0, 1.0})
    {
        const KaczmarzProblem prob(H, xi);
        for (std::size_t k = 0; k < 3; ++k)
        {
            RkaState st(prob, k);
            st.step(k);
            const CVector u = st.u(), z = st.z();
            for (std::size_t r = 0; r < 3; ++r)
            {
                EXPECT_EQ(st.residual(r), cplx(0.0, 0.0));
                EXPECT_EQ(st.step(r), cplx(0.0, 0.0));
            }
            EXPECT_EQ(st.u(), u);
            EXPECT_EQ(st.z(), z);
        }
    }
}

TEST(Kaczmarz, ErrorToSolutionNeverGrows)
{
    // Each step is an orthogonal projection of x = [u; sqrt(xi) z] onto a hyperplane holding x*
    const CMatrix H = random_channel(12, 5, 9);
    const double xi = 0.2;
    const CMatrix G = H.adjoint() * H + xi * CMatrix::Identity(5, 5);
    const KaczmarzProblem prob(H, xi);
    const auto sched = build_schedule(H, xi, ScheduleMode::Uniform, all_active(5));
    Rng rng(4);
    for (std::size_t k = 0; k < 5; ++k)
    {
        const CVector w = G.ldlt().solve(CVector::Unit(5, static_cast<Eigen::Index>(k)));
        const CVector u_star = H * w;
        auto err = [&](const RkaState &s) {
            return std::sqrt((s.u() - u_star).squaredNorm() + xi * (s.z() - w).squaredNorm());
        };
        RkaState st(prob, k);
        double prev = err(st);
        st.step(k);
        for (int t = 0; t < 500; ++t)
        {
            const double e = err(st);
            EXPECT_LE(e, prev * (1 + 1e-12) + 1e-15);
            prev = e;
            st.step(sched.sample(rng));
        }
        EXPECT_LT(prev, 1e-3 * w.norm());
    }
}

TEST(Kaczmarz, ConvergesToRzfDirection)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed)
    {
        const CMatrix H = random_channel(16, 4, seed);
        const double xi = 0.1;
        const CMatrix Vr = H * (H.adjoint() * H + xi * CMatrix::Identity(4, 4)).inverse();
        for (auto mode : {ScheduleMode::Power, ScheduleMode::Uniform, ScheduleMode::ActiveAntennas})
        {
            const Combiner c = rka_combiner(H, xi, 100 * 4, mode, all_active(4, 16), seed);
            for (Eigen::Index k = 0; k < 4; ++k)
                EXPECT_GE(cosine(c.V.col(k), Vr.col(k)), 0.999);
        }
    }
}

TEST(Kaczmarz, SelfInitializationAndCounters)
{
    const CMatrix H = random_channel(8, 5, 2);
    std::vector<std::size_t> D = {3, 0, 8, 1, 2};
    CMatrix Hs = H;
    Hs.col(1).setZero();
    RkaInstrumentation instr;
    const Combiner c = rka_combiner(Hs, 0.3, 17, ScheduleMode::Power, D, 5, &instr);
    EXPECT_EQ(instr.solves, 4u);
    EXPECT_EQ(instr.first_rows, instr.solved_users);
    EXPECT_EQ(instr.solved_users, (std::vector<std::size_t>{0, 2, 3, 4}));
    EXPECT_EQ(instr.iterations, 4u * 17u);
    EXPECT_EQ(measured_op_counter(instr), modeled_kaczmarz_mults(ScheduleMode::Power, 8, 4, 4 * 17));
    EXPECT_EQ(c.V.col(1).norm(), 0.0);
}

TEST(Kaczmarz, CounterExamples)
{
    // Four antennas, ten passes in total
    CMatrix H = random_channel(4, 2, 1);
    RkaInstrumentation a;
    estimate_combiner(KaczmarzProblem(H.leftCols(1), 0.1), 10,
                      build_schedule(H.leftCols(1), 0.1, ScheduleMode::Uniform, std::vector<std::size_t>{4}), 1, &a);
    EXPECT_EQ(a.mults, 44u);

    RkaInstrumentation b;
    estimate_combiner(KaczmarzProblem(H, 0.1), 5,
                      build_schedule(H, 0.1, ScheduleMode::Power, std::vector<std::size_t>{4, 4}), 1, &b);
    EXPECT_EQ(b.iterations, 10u);
    EXPECT_EQ(b.mults, 56u);
}

TEST(Kaczmarz, RecordedRowsStayInSupport)
{
    CMatrix H = random_channel(6, 4, 3);
    H.col(3).setZero();
    RkaInstrumentation instr;
    instr.record_rows = true;
    rka_combiner(H, 0.1, 200, ScheduleMode::ActiveAntennas, std::vector<std::size_t>{2, 5, 1, 0}, 8, &instr);
    ASSERT_EQ(instr.sampled_rows.size(), 3u * 200u);
    for (auto r : instr.sampled_rows)
        EXPECT_NE(r, 3u);
}

TEST(Kaczmarz, SeededAndOrderIndependent)
{
    const CMatrix H = random_channel(10, 6, 5);
    const auto D = all_active(6, 10);
    const Combiner a = rka_combiner(H, 0.2, 40, ScheduleMode::Uniform, D, 99);
    const Combiner b = rka_combiner(H, 0.2, 40, ScheduleMode::Uniform, D, 99);
    EXPECT_EQ(*a.W, *b.W);
    const Combiner c = rka_combiner(H, 0.2, 40, ScheduleMode::Uniform, D, 100);
    EXPECT_NE(*a.W, *c.W);

    // Solving users one by one with their own streams gives the same columns
    const KaczmarzProblem prob(H, 0.2);
    const auto sched = build_schedule(H, 0.2, ScheduleMode::Uniform, D);
    for (std::size_t k : {5u, 0u, 3u})
    {
        Rng rng(mix_seed(99, {k}));
        EXPECT_EQ(rka_user_solve(prob, k, 40, sched, rng), CVector(a.W->col(static_cast<Eigen::Index>(k))));
    }
}

TEST(Kaczmarz, IncrementalRunMatchesFreshRuns)
{
    const CMatrix H = random_channel(10, 5, 6);
    const KaczmarzProblem prob(H, 0.05);
    const auto sched = build_schedule(H, 0.05, ScheduleMode::Power, all_active(5, 10));
    IncrementalCombiner run(prob, sched, 17);
    EXPECT_EQ(run.passes(), 1u);
    for (std::size_t T : {1u, 2u, 9u, 33u, 100u})
    {
        run.advance_to(T);
        IncrementalCombiner copy = run;
        EXPECT_EQ(run.W(), *estimate_combiner(prob, T, sched, 17).W);
        copy.advance_to(T + 5);
        EXPECT_EQ(copy.W(), *estimate_combiner(prob, T + 5, sched, 17).W);
    }
    EXPECT_THROW(run.advance_to(50), ConfigError);
}

TEST(Kaczmarz, RejectsInvalidRequests)
{
    CMatrix H = random_channel(4, 3, 1);
    H.col(2).setZero();
    const KaczmarzProblem prob(H, 0.1);
    const auto sched = build_schedule(H, 0.1, ScheduleMode::Uniform, std::vector<std::size_t>{1, 1, 0});
    Rng rng(1);
    EXPECT_THROW(rka_user_solve(prob, 0, 0, sched, rng), ConfigError);
    EXPECT_THROW(rka_user_solve(prob, 2, 5, sched, rng), ConfigError);
    EXPECT_THROW(rka_user_solve(prob, 7, 5, sched, rng), ConfigError);
    RkaState st(prob, 0);
    EXPECT_THROW(st.step(2), InvariantError);
    EXPECT_THROW(KaczmarzProblem(H, -1.0), ConfigError);

    const Combiner none = rka_combiner(CMatrix::Zero(4, 3), 0.1, 5, ScheduleMode::Power,
                                       std::vector<std::size_t>{0, 0, 0}, 1);
    EXPECT_EQ(none.V.norm(), 0.0);
    EXPECT_TRUE(none.active_users.empty());
}
