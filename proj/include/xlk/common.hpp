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

#ifndef XLK_COMMON_HPP
#define XLK_COMMON_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>

namespace xlk
{

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using IVector = Eigen::VectorXi;

// Every stochastic routine draws from this engine; seeds are derived with mix_seed().
using Rng = std::mt19937_64;

inline constexpr double kSpeedOfLight = 299792458.0; // m/s, exact SI value

// Invalid parameters or inconsistent configuration (M % S != 0, T < 1, unknown keys, ...)
class ConfigError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

// Physically or mathematically degenerate model input (non-PSD correlation, zero distance, ...)
class ModelError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// Gram matrix restricted to the active users is singular at xi = 0
class RankDeficientError : public ModelError
{
  public:
    using ModelError::ModelError;
};

// A condition the library guarantees internally was violated
class InvariantError : public std::logic_error
{
  public:
    using std::logic_error::logic_error;
};

// SplitMix64 finalizer
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a parent seed and a path of indices,
// e.g. mix_seed(trial_seed, {kTagRka, subarray, user}).
constexpr std::uint64_t mix_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) noexcept
{
    std::uint64_t h = splitmix64(parent);
    for (auto v : path)
        h = splitmix64(h ^ splitmix64(v + 0x632BE59BD9B4E019ULL));
    return h;
}

// Circularly-symmetric complex Gaussian with E|g|^2 = variance
inline cplx complex_gaussian(Rng &rng, double variance = 1.0)
{
    std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

} // namespace xlk

#endif
