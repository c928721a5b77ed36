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

#ifndef XLK_DETECTION_HPP
#define XLK_DETECTION_HPP

#include "xlk/baseline.hpp"
#include "xlk/common.hpp"

#include <string_view>
#include <vector>

namespace xlk
{

enum class Constellation
{
    QPSK,
    QAM16,
    QAM64,
};

std::string_view to_string(Constellation c);
Constellation parse_constellation(std::string_view text);

// Square QAM alphabet scaled to unit average energy
std::vector<cplx> constellation_points(Constellation c);

// Nearest constellation point
cplx hard_decision(cplx value, Constellation c);

struct SymbolFrame
{
    CVector x;
    Constellation constellation = Constellation::QPSK;
    std::size_t tau_ul = 190;
};

SymbolFrame draw_symbols(std::size_t K, Constellation c, Rng &rng);

// y = sqrt(p) Hs x + n, n ~ CN(0, sigma2 I)
CVector received_signal(const CMatrix &Hs, const CVector &x, double p, double sigma2, Rng &rng);

// W^H (Hs^H y) when the factor is available, V^H y otherwise.
CVector subarray_estimates(const Combiner &combiner, const CMatrix &Hs, const CVector &y);

// Divides estimate k by g_k = v_k^H h_k (zero when |g_k| <= 1e-12).
CVector normalize_gains(const CVector &estimates, const CMatrix &V, const CMatrix &Hs);

enum class FusionMode
{
    SinrWeighted,
    EqualGain,
};

std::string_view to_string(FusionMode mode);
FusionMode parse_fusion(std::string_view text);

struct FusedEstimate
{
    CVector x_hat;         // K
    CMatrix per_subarray;  // S x K
    RMatrix weights;       // S x K, columns sum to 1 or are all zero
    std::vector<bool> undetectable;
};

// per_subarray and sinr are S x K. Subarrays with gamma_k^(s) = 0 do not take part.
FusedEstimate fuse(const CMatrix &per_subarray, const RMatrix &sinr, FusionMode mode = FusionMode::SinrWeighted);

// Number of users whose hard decision differs from the sent symbol. Users with a
// zero estimate (undetectable) count as errors.
std::size_t symbol_errors(const CVector &x_hat, const CVector &x, Constellation c);

double symbol_error_rate(const CVector &x_hat, const CVector &x, Constellation c);

} // namespace xlk

#endif
