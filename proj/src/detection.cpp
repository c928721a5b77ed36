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

#include "xlk/detection.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace xlk
{

namespace
{

int levels_per_axis(Constellation c)
{
    switch (c)
    {
    case Constellation::QPSK:
        return 2;
    case Constellation::QAM16:
        return 4;
    case Constellation::QAM64:
        return 8;
    }
    return 2;
}

// Average energy of the unscaled alphabet {+-1, +-3, ...}^2 is 2 (n^2 - 1) / 3
double unit_energy_scale(int n)
{
    return 1.0 / std::sqrt(2.0 * (n * n - 1) / 3.0);
}

double slice_axis(double v, int n, double scale)
{
    // Levels are (2i - n + 1) * scale for i = 0..n-1
    double i = std::round((v / scale + n - 1) / 2.0);
    i = std::clamp(i, 0.0, static_cast<double>(n - 1));
    return (2.0 * i - n + 1) * scale;
}

} // namespace

std::string_view to_string(Constellation c)
{
    switch (c)
    {
    case Constellation::QPSK:
        return "qpsk";
    case Constellation::QAM16:
        return "qam16";
    case Constellation::QAM64:
        return "qam64";
    }
    return "?";
}

Constellation parse_constellation(std::string_view text)
{
    if (text == "qpsk" || text == "QPSK")
        return Constellation::QPSK;
    if (text == "qam16" || text == "16qam" || text == "QAM16")
        return Constellation::QAM16;
    if (text == "qam64" || text == "64qam" || text == "QAM64")
        return Constellation::QAM64;
    throw ConfigError(fmt::format("Unknown constellation '{}' (expected qpsk, qam16 or qam64).", text));
}

std::vector<cplx> constellation_points(Constellation c)
{
    const int n = levels_per_axis(c);
    const double a = unit_energy_scale(n);
    std::vector<cplx> pts;
    pts.reserve(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i)
        for (int q = 0; q < n; ++q)
            pts.emplace_back((2 * i - n + 1) * a, (2 * q - n + 1) * a);
    return pts;
}

cplx hard_decision(cplx value, Constellation c)
{
    const int n = levels_per_axis(c);
    const double a = unit_energy_scale(n);
    return {slice_axis(value.real(), n, a), slice_axis(value.imag(), n, a)};
}

SymbolFrame draw_symbols(std::size_t K, Constellation c, Rng &rng)
{
    const int n = levels_per_axis(c);
    const double a = unit_energy_scale(n);
    std::uniform_int_distribution<int> level(0, n - 1);

    SymbolFrame f;
    f.constellation = c;
    f.x.resize(static_cast<Eigen::Index>(K));
    for (Eigen::Index k = 0; k < f.x.size(); ++k)
    {
        const int i = level(rng);
        const int q = level(rng);
        f.x[k] = cplx((2 * i - n + 1) * a, (2 * q - n + 1) * a);
    }
    return f;
}

CVector received_signal(const CMatrix &Hs, const CVector &x, double p, double sigma2, Rng &rng)
{
    if (Hs.cols() != x.size())
        throw ConfigError("Symbol vector length does not match the user count.");
    if (p < 0.0 || sigma2 < 0.0)
        throw ConfigError("Power and noise variance cannot be negative.");

    CVector y = std::sqrt(p) * (Hs * x);
    if (sigma2 > 0.0)
        for (Eigen::Index m = 0; m < y.size(); ++m)
            y[m] += complex_gaussian(rng, sigma2);
    return y;
}

CVector subarray_estimates(const Combiner &combiner, const CMatrix &Hs, const CVector &y)
{
    if (combiner.W)
        return combiner.W->adjoint() * (Hs.adjoint() * y);
    return combiner.V.adjoint() * y;
}

CVector normalize_gains(const CVector &estimates, const CMatrix &V, const CMatrix &Hs)
{
    CVector out = CVector::Zero(estimates.size());
    for (Eigen::Index k = 0; k < estimates.size(); ++k)
    {
        const cplx g = V.col(k).dot(Hs.col(k));
        if (std::abs(g) > 1e-12)
            out[k] = estimates[k] / g;
    }
    return out;
}

std::string_view to_string(FusionMode mode)
{
    return mode == FusionMode::SinrWeighted ? "sinr" : "equal";
}

FusionMode parse_fusion(std::string_view text)
{
    if (text == "sinr" || text == "sinr_weighted")
        return FusionMode::SinrWeighted;
    if (text == "equal" || text == "equal_gain")
        return FusionMode::EqualGain;
    throw ConfigError(fmt::format("Unknown fusion mode '{}' (expected sinr or equal).", text));
}

FusedEstimate fuse(const CMatrix &per_subarray, const RMatrix &sinr, FusionMode mode)
{
    if (per_subarray.rows() != sinr.rows() || per_subarray.cols() != sinr.cols())
        throw ConfigError("Estimate and SINR tables must both be S x K.");
    if ((sinr.array() < 0.0).any())
        throw ConfigError("SINR values cannot be negative.");

    const Eigen::Index S = per_subarray.rows();
    const Eigen::Index K = per_subarray.cols();

    FusedEstimate out;
    out.per_subarray = per_subarray;
    out.x_hat = CVector::Zero(K);
    out.weights = RMatrix::Zero(S, K);
    out.undetectable.assign(static_cast<std::size_t>(K), false);

    for (Eigen::Index k = 0; k < K; ++k)
    {
        double total = 0.0;
        for (Eigen::Index s = 0; s < S; ++s)
            if (sinr(s, k) > 0.0)
            {
                out.weights(s, k) = mode == FusionMode::SinrWeighted ? sinr(s, k) : 1.0;
                total += out.weights(s, k);
            }
        if (total == 0.0)
        {
            out.undetectable[static_cast<std::size_t>(k)] = true;
            continue;
        }
        out.weights.col(k) /= total;
        for (Eigen::Index s = 0; s < S; ++s)
            out.x_hat[k] += out.weights(s, k) * per_subarray(s, k);
    }
    return out;
}

std::size_t symbol_errors(const CVector &x_hat, const CVector &x, Constellation c)
{
    if (x_hat.size() != x.size())
        throw ConfigError("Estimate and symbol vectors differ in length.");
    std::size_t errors = 0;
    for (Eigen::Index k = 0; k < x.size(); ++k)
        if (x_hat[k] == cplx(0.0, 0.0) || hard_decision(x_hat[k], c) != x[k])
            ++errors;
    return errors;
}

double symbol_error_rate(const CVector &x_hat, const CVector &x, Constellation c)
{
    if (x.size() == 0)
        return 0.0;
    return static_cast<double>(symbol_errors(x_hat, x, c)) / static_cast<double>(x.size());
}

} // namespace xlk
