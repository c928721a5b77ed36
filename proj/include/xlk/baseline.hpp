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

#ifndef XLK_BASELINE_HPP
#define XLK_BASELINE_HPP

#include "xlk/common.hpp"

#include <optional>
#include <vector>

namespace xlk
{

// Receive combining matrix of one subarray. Columns of inactive users are zero.
struct Combiner
{
    CMatrix V; // Ms x K
    std::vector<std::size_t> active_users;
    double xi = 0.0;
    std::optional<CMatrix> W; // K x K, V = Hs * W
};

// Users whose channel column at this subarray is not identically zero.
std::vector<std::size_t> active_columns(const CMatrix &Hs);

// V = Hs (Hs^H Hs + xi I)^-1 over the active users only. Cholesky for xi > 0,
// column-pivoted QR with a rank check for xi = 0.
Combiner rzf_combiner(const CMatrix &Hs, double xi);

// gamma_k = p |v_k^H h_k|^2 / (p sum_{i != k} |v_k^H h_i|^2 + sigma2 |v_k|^2); 0 for zero columns.
RVector sinr_per_user(const CMatrix &V, const CMatrix &Hs, double p, double sigma2);

// Mean of gamma_k over the given users (0 if none).
double mean_sinr(const RVector &sinr, const std::vector<std::size_t> &users);

} // namespace xlk

#endif
