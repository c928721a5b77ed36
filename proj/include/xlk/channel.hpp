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

#ifndef XLK_CHANNEL_HPP
#define XLK_CHANNEL_HPP

#include "xlk/common.hpp"

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

namespace xlk
{

struct Point2
{
    double x = 0.0;
    double y = 0.0;
};

// Uniform linear array on the x-axis, centered at the origin, split into S
// contiguous subarrays of Ms elements each.
struct ArrayGeometry
{
    std::size_t M = 0;
    std::size_t S = 0;
    std::size_t Ms = 0;
    double spacing_m = 0.0;
    double length_m = 0.0; // M * spacing_m
    std::vector<Point2> element_positions;

    // Position of element m along the array, measured from its left end; in (0, L).
    double local_coordinate(std::size_t m) const;
    std::size_t subarray_of(std::size_t m) const { return m / Ms; }
};

ArrayGeometry build_array_geometry(std::size_t M, std::size_t S, double carrier_hz, double spacing_wavelengths);

struct CellRectangle
{
    double x_min = -50.0;
    double x_max = 50.0;
    double y_min = 30.0;
    double y_max = 130.0;

    double area() const { return (x_max - x_min) * (y_max - y_min); }
};

struct UserDrop
{
    std::vector<Point2> positions;
    double p_mw = 1.0;

    std::size_t K() const { return positions.size(); }
};

// Points are uniform in the cell; draws closer than min_distance_m to the array
// reference point (origin) are rejected and redrawn.
UserDrop draw_user_positions(std::size_t K, const CellRectangle &cell, double min_distance_m, double p_mw, Rng &rng);

struct VisibilityRegion
{
    double center_m = 0.0;      // c_k, array-local coordinate
    double half_length_m = 0.0; // l_k
    std::vector<bool> mask;     // antenna m active
    std::size_t D_total = 0;
    std::vector<std::size_t> D_per_subarray;
};

// Deterministic VR from (c, l): antenna m is active iff its local coordinate lies in [c - l, c + l].
VisibilityRegion make_visibility_region(const ArrayGeometry &geometry, double center_m, double half_length_m);

// c ~ U(0, L); l lognormal with mean mu_l_m and log-space standard deviation sigma_l.
VisibilityRegion draw_visibility_region(const ArrayGeometry &geometry, double mu_l_m, double sigma_l, Rng &rng);

enum class Normalization
{
    Norm1, // tr(Theta_k) = M
    Norm2, // tr(Theta_k) = D_k
};

std::string_view to_string(Normalization mode);
Normalization parse_normalization(std::string_view text);

// Diagonal of D_k (as applied to the covariance): M/D_k (Norm1) or 1 (Norm2) on
// active antennas, 0 elsewhere. All zeros if D_k = 0.
RVector normalization_diagonal(const VisibilityRegion &vr, std::size_t M, Normalization mode);

// Omega * d_m^(-nu) for every element m
RVector path_loss_vector(const Point2 &user, const ArrayGeometry &geometry, double omega, double nu);

// Supplies R_k (M x M, real symmetric PSD) for user k; an empty provider means R_k = I.
using CorrelationProvider = std::function<RMatrix(std::size_t k)>;

// Theta_k = blkdiag over subarrays of D^(1/2) R D^(1/2); R_k = I when correlation is empty.
RMatrix small_scale_covariance(const VisibilityRegion &vr, const ArrayGeometry &geometry, Normalization mode,
                               const std::optional<RMatrix> &correlation = std::nullopt);

struct VrParameters
{
    double mu_l_m = 0.0; // mean half-length in meters
    double sigma_l = 0.1;
};

struct ChannelRealization
{
    CMatrix H;         // M x K
    RMatrix path_loss; // M x K, w
    std::vector<VisibilityRegion> vrs;
    Normalization normalization = Normalization::Norm2;
    std::size_t S = 0;
    std::size_t Ms = 0;

    std::size_t M() const { return static_cast<std::size_t>(H.rows()); }
    std::size_t K() const { return static_cast<std::size_t>(H.cols()); }

    // H^(s): rows [s*Ms, (s+1)*Ms)
    CMatrix subarray_block(std::size_t s) const { return H.middleRows(static_cast<Eigen::Index>(s * Ms), static_cast<Eigen::Index>(Ms)); }

    // D_k^(s) for all k
    std::vector<std::size_t> active_antennas(std::size_t s) const;
};

ChannelRealization draw_channel(const ArrayGeometry &geometry, const UserDrop &drop, const VrParameters &vr_params,
                                Normalization mode, const CorrelationProvider &correlation, double omega, double nu,
                                Rng &rng);

// Same as draw_channel, with the VRs given instead of drawn.
ChannelRealization draw_channel_with_vrs(const ArrayGeometry &geometry, const UserDrop &drop,
                                         std::vector<VisibilityRegion> vrs, Normalization mode,
                                         const CorrelationProvider &correlation, double omega, double nu, Rng &rng);

} // namespace xlk

#endif
