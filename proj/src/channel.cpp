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

#include "xlk/channel.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <cmath>

namespace xlk
{

double ArrayGeometry::local_coordinate(std::size_t m) const
{
    return element_positions[m].x + 0.5 * length_m;
}

ArrayGeometry build_array_geometry(std::size_t M, std::size_t S, double carrier_hz, double spacing_wavelengths)
{
    if (M == 0 || S == 0)
        throw ConfigError("Antenna count and subarray count must be positive.");
    if (M % S != 0)
        throw ConfigError(fmt::format("Antenna count M={} is not divisible by subarray count S={}.", M, S));
    if (!(carrier_hz > 0.0) || !std::isfinite(carrier_hz))
        throw ConfigError("Carrier frequency must be positive.");
    if (!(spacing_wavelengths > 0.0) || !std::isfinite(spacing_wavelengths))
        throw ConfigError("Antenna spacing must be positive.");

    ArrayGeometry g;
    g.M = M;
    g.S = S;
    g.Ms = M / S;
    g.spacing_m = spacing_wavelengths * (kSpeedOfLight / carrier_hz);
    g.length_m = static_cast<double>(M) * g.spacing_m;

    // Element m sits at the center of its own spacing-wide cell, so the cells tile [-L/2, L/2].
    g.element_positions.resize(M);
    const double first = -0.5 * static_cast<double>(M - 1) * g.spacing_m;
    for (std::size_t m = 0; m < M; ++m)
        g.element_positions[m] = {first + static_cast<double>(m) * g.spacing_m, 0.0};
    return g;
}

UserDrop draw_user_positions(std::size_t K, const CellRectangle &cell, double min_distance_m, double p_mw, Rng &rng)
{
    if (!(cell.x_max > cell.x_min) || !(cell.y_max > cell.y_min))
        throw ConfigError("User cell must have positive area.");
    if (min_distance_m < 0.0)
        throw ConfigError("Minimum distance cannot be negative.");

    // Farthest corner from the array reference point must clear the minimum distance
    const double fx = std::max(std::abs(cell.x_min), std::abs(cell.x_max));
    const double fy = std::max(std::abs(cell.y_min), std::abs(cell.y_max));
    if (std::hypot(fx, fy) < min_distance_m)
        throw ConfigError("No point of the user cell satisfies the minimum distance.");

    std::uniform_real_distribution<double> ux(cell.x_min, cell.x_max);
    std::uniform_real_distribution<double> uy(cell.y_min, cell.y_max);

    UserDrop drop;
    drop.p_mw = p_mw;
    drop.positions.reserve(K);
    constexpr int kMaxAttempts = 100000;
    for (std::size_t k = 0; k < K; ++k)
    {
        int attempts = 0;
        for (;;)
        {
            const double x = ux(rng);
            const double y = uy(rng);
            if (std::hypot(x, y) >= min_distance_m)
            {
                drop.positions.push_back({x, y});
                break;
            }
            if (++attempts == kMaxAttempts)
                throw ConfigError("User placement rejected too often; the feasible part of the cell is too small.");
        }
    }
    return drop;
}

VisibilityRegion make_visibility_region(const ArrayGeometry &geometry, double center_m, double half_length_m)
{
    VisibilityRegion vr;
    vr.center_m = center_m;
    vr.half_length_m = half_length_m;
    vr.mask.assign(geometry.M, false);
    vr.D_per_subarray.assign(geometry.S, 0);

    const double lo = center_m - half_length_m;
    const double hi = center_m + half_length_m;
    for (std::size_t m = 0; m < geometry.M; ++m)
    {
        const double pos = geometry.local_coordinate(m);
        if (pos >= lo && pos <= hi)
        {
            vr.mask[m] = true;
            ++vr.D_total;
            ++vr.D_per_subarray[geometry.subarray_of(m)];
        }
    }
    return vr;
}

VisibilityRegion draw_visibility_region(const ArrayGeometry &geometry, double mu_l_m, double sigma_l, Rng &rng)
{
    if (!(mu_l_m > 0.0) || !(sigma_l > 0.0))
        throw ConfigError("VR length parameters must be positive.");

    std::uniform_real_distribution<double> uc(0.0, geometry.length_m);
    // E[l] = exp(mu + sigma^2 / 2) = mu_l_m
    std::lognormal_distribution<double> ll(std::log(mu_l_m) - 0.5 * sigma_l * sigma_l, sigma_l);

    const double c = uc(rng);
    const double l = ll(rng);
    return make_visibility_region(geometry, c, l);
}

std::string_view to_string(Normalization mode)
{
    return mode == Normalization::Norm1 ? "norm1" : "norm2";
}

Normalization parse_normalization(std::string_view text)
{
    if (text == "norm1" || text == "Norm1" || text == "1")
        return Normalization::Norm1;
    if (text == "norm2" || text == "Norm2" || text == "2")
        return Normalization::Norm2;
    throw ConfigError(fmt::format("Unknown normalization '{}' (expected norm1 or norm2).", text));
}

RVector normalization_diagonal(const VisibilityRegion &vr, std::size_t M, Normalization mode)
{
    if (vr.mask.size() != M)
        throw ConfigError("VR mask length does not match the antenna count.");

    RVector d = RVector::Zero(static_cast<Eigen::Index>(M));
    if (vr.D_total == 0)
        return d;

    const double active = mode == Normalization::Norm1 ? static_cast<double>(M) / static_cast<double>(vr.D_total) : 1.0;
    for (std::size_t m = 0; m < M; ++m)
        if (vr.mask[m])
            d[static_cast<Eigen::Index>(m)] = active;
    return d;
}

RVector path_loss_vector(const Point2 &user, const ArrayGeometry &geometry, double omega, double nu)
{
    RVector w(static_cast<Eigen::Index>(geometry.M));
    for (std::size_t m = 0; m < geometry.M; ++m)
    {
        const auto &e = geometry.element_positions[m];
        const double d = std::hypot(user.x - e.x, user.y - e.y);
        if (d == 0.0)
            throw ModelError(fmt::format("User at ({}, {}) coincides with antenna element {}.", user.x, user.y, m));
        w[static_cast<Eigen::Index>(m)] = omega * std::pow(d, -nu);
    }
    return w;
}

RMatrix small_scale_covariance(const VisibilityRegion &vr, const ArrayGeometry &geometry, Normalization mode,
                               const std::optional<RMatrix> &correlation)
{
    const auto M = static_cast<Eigen::Index>(geometry.M);
    const RVector d = normalization_diagonal(vr, geometry.M, mode);
    const RVector sd = d.cwiseSqrt();

    RMatrix theta = RMatrix::Zero(M, M);
    const auto Ms = static_cast<Eigen::Index>(geometry.Ms);
    for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(geometry.S); ++s)
    {
        const Eigen::Index r0 = s * Ms;
        if (correlation)
            theta.block(r0, r0, Ms, Ms) =
                sd.segment(r0, Ms).asDiagonal() * correlation->block(r0, r0, Ms, Ms) * sd.segment(r0, Ms).asDiagonal();
        else
            theta.block(r0, r0, Ms, Ms).diagonal() = d.segment(r0, Ms);
    }
    return theta;
}

std::vector<std::size_t> ChannelRealization::active_antennas(std::size_t s) const
{
    std::vector<std::size_t> out(K(), 0);
    for (std::size_t k = 0; k < K(); ++k)
        out[k] = vrs[k].D_per_subarray[s];
    return out;
}

namespace
{

void check_correlation(const RMatrix &R, std::size_t M, std::size_t k)
{
    if (R.rows() != static_cast<Eigen::Index>(M) || R.cols() != static_cast<Eigen::Index>(M))
        throw ModelError(fmt::format("Correlation matrix of user {} must be {}x{}.", k, M, M));
    if (!R.isApprox(R.transpose(), 1e-12))
        throw ModelError(fmt::format("Correlation matrix of user {} is not symmetric.", k));
}

// Symmetric square root of a PSD matrix
RMatrix psd_sqrt(const RMatrix &A, std::size_t k)
{
    Eigen::SelfAdjointEigenSolver<RMatrix> es(A);
    if (es.info() != Eigen::Success)
        throw ModelError(fmt::format("Eigen-decomposition of the covariance of user {} failed.", k));
    const RVector ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -1e-10 * scale)
        throw ModelError(fmt::format("Correlation matrix of user {} is not positive semi-definite (eigenvalue {}).", k,
                                     ev.minCoeff()));
    return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

} // namespace

ChannelRealization draw_channel_with_vrs(const ArrayGeometry &geometry, const UserDrop &drop,
                                         std::vector<VisibilityRegion> vrs, Normalization mode,
                                         const CorrelationProvider &correlation, double omega, double nu, Rng &rng)
{
    const std::size_t M = geometry.M;
    const std::size_t K = drop.K();
    if (vrs.size() != K)
        throw ConfigError("One visibility region per user is required.");

    ChannelRealization ch;
    ch.H = CMatrix::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(K));
    ch.path_loss = RMatrix::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(K));
    ch.normalization = mode;
    ch.S = geometry.S;
    ch.Ms = geometry.Ms;

    const auto Ms = static_cast<Eigen::Index>(geometry.Ms);
    for (std::size_t k = 0; k < K; ++k)
    {
        const auto kk = static_cast<Eigen::Index>(k);
        const VisibilityRegion &vr = vrs[k];
        if (vr.mask.size() != M || vr.D_per_subarray.size() != geometry.S)
            throw ConfigError(fmt::format("Visibility region of user {} does not match the array.", k));

        const RVector w = path_loss_vector(drop.positions[k], geometry, omega, nu);
        ch.path_loss.col(kk) = w;

        // The full innovation vector is always drawn so that the stream position is
        // independent of the VR and of the correlation model.
        CVector g(static_cast<Eigen::Index>(M));
        for (Eigen::Index m = 0; m < g.size(); ++m)
            g[m] = complex_gaussian(rng);

        const RVector d = normalization_diagonal(vr, M, mode);
        CVector hbar = CVector::Zero(static_cast<Eigen::Index>(M));
        if (!correlation)
        {
            for (Eigen::Index m = 0; m < hbar.size(); ++m)
                if (d[m] > 0.0)
                    hbar[m] = std::sqrt(d[m]) * g[m];
        }
        else
        {
            const RMatrix R = correlation(k);
            check_correlation(R, M, k);
            for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(geometry.S); ++s)
            {
                // Restrict to active antennas of the block so inactive rows stay exactly zero
                std::vector<Eigen::Index> idx;
                for (Eigen::Index m = s * Ms; m < (s + 1) * Ms; ++m)
                    if (d[m] > 0.0)
                        idx.push_back(m);
                if (idx.empty())
                    continue;
                const auto n = static_cast<Eigen::Index>(idx.size());
                RMatrix theta(n, n);
                CVector ga(n);
                for (Eigen::Index i = 0; i < n; ++i)
                {
                    ga[i] = g[idx[i]];
                    for (Eigen::Index j = 0; j < n; ++j)
                        theta(i, j) = std::sqrt(d[idx[i]]) * R(idx[i], idx[j]) * std::sqrt(d[idx[j]]);
                }
                const CVector ha = psd_sqrt(theta, k).cast<cplx>() * ga;
                for (Eigen::Index i = 0; i < n; ++i)
                    hbar[idx[i]] = ha[i];
            }
        }

        for (Eigen::Index m = 0; m < hbar.size(); ++m)
            ch.H(m, kk) = std::sqrt(w[m]) * hbar[m];
    }
    ch.vrs = std::move(vrs);
    return ch;
}

ChannelRealization draw_channel(const ArrayGeometry &geometry, const UserDrop &drop, const VrParameters &vr_params,
                                Normalization mode, const CorrelationProvider &correlation, double omega, double nu,
                                Rng &rng)
{
    std::vector<VisibilityRegion> vrs;
    vrs.reserve(drop.K());
    for (std::size_t k = 0; k < drop.K(); ++k)
        vrs.push_back(draw_visibility_region(geometry, vr_params.mu_l_m, vr_params.sigma_l, rng));
    return draw_channel_with_vrs(geometry, drop, std::move(vrs), mode, correlation, omega, nu, rng);
}

} // namespace xlk
