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

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <fmt/format.h>
#include <fmt/ranges.h>

namespace xlk
{

std::vector<std::size_t> active_columns(const CMatrix &Hs)
{
    std::vector<std::size_t> out;
    for (Eigen::Index k = 0; k < Hs.cols(); ++k)
        if (Hs.col(k).squaredNorm() > 0.0)
            out.push_back(static_cast<std::size_t>(k));
    return out;
}

Combiner rzf_combiner(const CMatrix &Hs, double xi)
{
    if (!(xi >= 0.0) || !std::isfinite(xi))
        throw ConfigError("Regularization xi must be finite and non-negative.");

    const Eigen::Index K = Hs.cols();
    Combiner out;
    out.xi = xi;
    out.active_users = active_columns(Hs);
    out.W = CMatrix::Zero(K, K);

    const auto Ka = static_cast<Eigen::Index>(out.active_users.size());
    if (Ka == 0)
    {
        out.V = CMatrix::Zero(Hs.rows(), K);
        return out;
    }

    CMatrix Ha(Hs.rows(), Ka);
    for (Eigen::Index j = 0; j < Ka; ++j)
        Ha.col(j) = Hs.col(static_cast<Eigen::Index>(out.active_users[static_cast<std::size_t>(j)]));

    CMatrix Wa;
    if (xi > 0.0)
    {
        CMatrix G = Ha.adjoint() * Ha;
        G.diagonal().array() += xi;
        Eigen::LLT<CMatrix> llt(G);
        if (llt.info() != Eigen::Success)
            throw ModelError("Cholesky factorization of the regularized Gram matrix failed.");
        Wa = llt.solve(CMatrix::Identity(Ka, Ka));
    }
    else
    {
        Eigen::ColPivHouseholderQR<CMatrix> qr(Ha);
        qr.setThreshold(1e-10);
        if (qr.rank() < Ka)
        {
            std::vector<std::size_t> offending;
            const auto &perm = qr.colsPermutation().indices();
            for (Eigen::Index j = qr.rank(); j < Ka; ++j)
                offending.push_back(out.active_users[static_cast<std::size_t>(perm[j])]);
            throw RankDeficientError(fmt::format(
                "Gram matrix of the active users is singular (rank {} of {}); dependent users: {}.", qr.rank(), Ka,
                fmt::join(offending, ", ")));
        }
        // (Ha^H Ha)^-1 = Ha^+ (Ha^+)^H
        const CMatrix pinv = qr.solve(CMatrix::Identity(Ha.rows(), Ha.rows()));
        Wa = pinv * pinv.adjoint();
    }

    for (Eigen::Index i = 0; i < Ka; ++i)
        for (Eigen::Index j = 0; j < Ka; ++j)
            (*out.W)(static_cast<Eigen::Index>(out.active_users[static_cast<std::size_t>(i)]),
                     static_cast<Eigen::Index>(out.active_users[static_cast<std::size_t>(j)])) = Wa(i, j);
    out.V = Hs * (*out.W);
    return out;
}

RVector sinr_per_user(const CMatrix &V, const CMatrix &Hs, double p, double sigma2)
{
    if (!(sigma2 > 0.0))
        throw ConfigError("Noise variance must be positive.");
    if (V.rows() != Hs.rows() || V.cols() != Hs.cols())
        throw ConfigError("Combiner and channel dimensions differ.");

    const Eigen::Index K = Hs.cols();
    const CMatrix G = V.adjoint() * Hs; // G(k, i) = v_k^H h_i
    RVector gamma = RVector::Zero(K);
    for (Eigen::Index k = 0; k < K; ++k)
    {
        const double vnorm2 = V.col(k).squaredNorm();
        if (vnorm2 == 0.0)
            continue;
        const double signal = p * std::norm(G(k, k));
        const double interference = p * (G.row(k).cwiseAbs2().sum() - std::norm(G(k, k)));
        gamma[k] = signal / (std::max(interference, 0.0) + sigma2 * vnorm2);
    }
    return gamma;
}

double mean_sinr(const RVector &sinr, const std::vector<std::size_t> &users)
{
    if (users.empty())
        return 0.0;
    double acc = 0.0;
    for (auto k : users)
        acc += sinr[static_cast<Eigen::Index>(k)];
    return acc / static_cast<double>(users.size());
}

} // namespace xlk
