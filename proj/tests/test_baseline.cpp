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

#include "xlk/baseline.hpp"

#include <gtest/gtest.h>

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

} // namespace

TEST(Rzf, MatchesPushThroughForm)
{
    // Hs (Hs^H Hs + xi I)^-1 = (Hs Hs^H + xi I)^-1 Hs
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
        const CMatrix H = random_channel(16, 8, seed);
        const double xi = 0.1;
        const Combiner c = rzf_combiner(H, xi);
        const CMatrix oracle = (H * H.adjoint() + xi * CMatrix::Identity(16, 16)).fullPivLu().solve(H);
        EXPECT_LT((c.V - oracle).norm() / oracle.norm(), 1e-10);
        ASSERT_TRUE(c.W.has_value());
        EXPECT_LT((H * *c.W - c.V).norm(), 1e-12 * c.V.norm());
    }
}

TEST(Rzf, ZeroForcingInvertsTheEffectiveChannel)
{
    const CMatrix H = random_channel(12, 5, 4);
    const Combiner c = rzf_combiner(H, 0.0);
    const CMatrix G = c.V.adjoint() * H;
    EXPECT_LT((G - CMatrix::Identity(5, 5)).norm(), 1e-10);
}

TEST(Rzf, InactiveUsersGetZeroColumns)
{
    CMatrix H = random_channel(10, 6, 8);
    H.col(2).setZero();
    H.col(5).setZero();
    EXPECT_EQ(active_columns(H), (std::vector<std::size_t>{0, 1, 3, 4}));
    for (double xi : {0.0, 0.3})
    {
        const Combiner c = rzf_combiner(H, xi);
        EXPECT_EQ(c.active_users, (std::vector<std::size_t>{0, 1, 3, 4}));
        EXPECT_EQ(c.V.col(2).norm(), 0.0);
        EXPECT_EQ(c.V.col(5).norm(), 0.0);
        // Reduced problem agrees with the full one restricted to active users
        CMatrix Ha(10, 4);
        Ha << H.col(0), H.col(1), H.col(3), H.col(4);
        const Combiner r = rzf_combiner(Ha, xi);
        EXPECT_LT((r.V.col(2) - c.V.col(3)).norm(), 1e-12);
    }
}

TEST(Rzf, RankDeficientZeroForcingIsReported)
{
    CMatrix H = random_channel(6, 3, 1);
    H.col(2) = 2.0 * H.col(0);
    EXPECT_THROW(rzf_combiner(H, 0.0), RankDeficientError);
    // Regularization makes the same system solvable
    EXPECT_NO_THROW(rzf_combiner(H, 0.1));
    // More users than antennas
    EXPECT_THROW(rzf_combiner(random_channel(3, 5, 2), 0.0), RankDeficientError);
}

TEST(Rzf, RejectsNegativeRegularization)
{
    EXPECT_THROW(rzf_combiner(random_channel(4, 2, 1), -1.0), ConfigError);
}

TEST(Sinr, MatchesExplicitSum)
{
    const CMatrix H = random_channel(8, 4, 12);
    const CMatrix V = random_channel(8, 4, 13);
    const double p = 2.0, s2 = 0.5;
    const RVector g = sinr_per_user(V, H, p, s2);
    for (Eigen::Index k = 0; k < 4; ++k)
    {
        double interference = 0.0;
        for (Eigen::Index i = 0; i < 4; ++i)
            if (i != k)
                interference += p * std::norm(V.col(k).dot(H.col(i)));
        const double expected = p * std::norm(V.col(k).dot(H.col(k))) / (interference + s2 * V.col(k).squaredNorm());
        EXPECT_NEAR(g[k], expected, 1e-12 * expected);
    }
}

TEST(Sinr, ScaleInvariantAndZeroForEmptyColumns)
{
    const CMatrix H = random_channel(8, 3, 2);
    CMatrix V = rzf_combiner(H, 0.2).V;
    const RVector a = sinr_per_user(V, H, 1.0, 0.2);
    V.col(1) *= cplx(3.0, -2.0);
    const RVector b = sinr_per_user(V, H, 1.0, 0.2);
    EXPECT_NEAR(a[1], b[1], 1e-10 * a[1]);
    V.col(2).setZero();
    EXPECT_EQ(sinr_per_user(V, H, 1.0, 0.2)[2], 0.0);
    EXPECT_THROW(sinr_per_user(V, H, 1.0, 0.0), ConfigError);
}

TEST(Sinr, RzfMaximizesEachUsersSinr)
{
    // RZF with xi = sigma2 / p is the per-user SINR-optimal (MMSE) combiner
    const CMatrix H = random_channel(10, 6, 31);
    const double p = 1.0, s2 = 0.3;
    const RVector best = sinr_per_user(rzf_combiner(H, s2 / p).V, H, p, s2);
    for (std::uint64_t seed = 100; seed < 120; ++seed)
    {
        const RVector other = sinr_per_user(random_channel(10, 6, seed), H, p, s2);
        for (Eigen::Index k = 0; k < 6; ++k)
            EXPECT_LE(other[k], best[k] * (1.0 + 1e-12));
    }
    const RVector zf = sinr_per_user(rzf_combiner(H, 0.0).V, H, p, s2);
    for (Eigen::Index k = 0; k < 6; ++k)
        EXPECT_LE(zf[k], best[k] * (1.0 + 1e-12));
}

TEST(Sinr, MeanOverUsers)
{
    RVector g(4);
    g << 1.0, 2.0, 3.0, 10.0;
    EXPECT_DOUBLE_EQ(mean_sinr(g, {0, 2}), 2.0);
    EXPECT_DOUBLE_EQ(mean_sinr(g, {}), 0.0);
}
