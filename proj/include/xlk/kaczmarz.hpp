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

#ifndef XLK_KACZMARZ_HPP
#define XLK_KACZMARZ_HPP

#include "xlk/baseline.hpp"
#include "xlk/common.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace xlk
{

enum class ScheduleMode
{
    Power,
    Uniform,
    ActiveAntennas,
};

std::string_view to_string(ScheduleMode mode);
ScheduleMode parse_schedule(std::string_view text);

// Discrete distribution over the users active at one subarray.
class UpdateSchedule
{
  public:
    UpdateSchedule(ScheduleMode mode, std::vector<std::size_t> users, std::vector<double> probabilities);

    ScheduleMode mode() const { return mode_; }
    const std::vector<std::size_t> &users() const { return users_; }
    const std::vector<double> &probabilities() const { return probabilities_; }

    // Complex multiplications charged for building the distribution
    std::uint64_t setup_mults() const { return setup_mults_; }
    void set_setup_mults(std::uint64_t n) { setup_mults_ = n; }

    // Draws a user id
    std::size_t sample(Rng &rng) const;

  private:
    ScheduleMode mode_;
    std::vector<std::size_t> users_;
    std::vector<double> probabilities_;
    std::vector<double> cumulative_;
    std::uint64_t setup_mults_ = 0;
};

// Support is {k : D_k^(s) > 0}. Power: (|h_k|^2 + xi) / (|H|_F^2 + K^(s) xi);
// Uniform: 1 / K^(s); ActiveAntennas: D_k^(s) / sum_i D_i^(s).
UpdateSchedule build_schedule(const CMatrix &Hs, double xi, ScheduleMode mode,
                              std::span<const std::size_t> active_antennas);

// Per-realization data shared by every user solve at one subarray.
class KaczmarzProblem
{
  public:
    KaczmarzProblem(CMatrix Hs, double xi);

    const CMatrix &H() const { return H_; }
    double xi() const { return xi_; }
    double column_norm2(std::size_t k) const { return norms2_[static_cast<Eigen::Index>(k)]; }
    std::size_t Ms() const { return static_cast<std::size_t>(H_.rows()); }
    std::size_t K() const { return static_cast<std::size_t>(H_.cols()); }

  private:
    CMatrix H_;
    double xi_;
    RVector norms2_;
};

// Counters filled by instrumented runs. mults counts the complex multiplications of
// the per-iteration inner product <h_r, u> plus the schedule setup.
struct RkaInstrumentation
{
    std::uint64_t mults = 0;
    std::uint64_t iterations = 0;
    std::uint64_t solves = 0;
    std::vector<std::size_t> first_rows;    // r(0) of every solve
    std::vector<std::size_t> solved_users;  // k of every solve, same order
    std::vector<std::size_t> sampled_rows;  // every r(t), only if record_rows
    bool record_rows = false;
};

// State of one user solve: u in C^Ms, z in C^K.
class RkaState
{
  public:
    RkaState(const KaczmarzProblem &problem, std::size_t target_user);

    // One projection onto row r of (B^(s))^H; returns eta.
    cplx step(std::size_t r, RkaInstrumentation *instr = nullptr);

    const CVector &u() const { return u_; }
    const CVector &z() const { return z_; }
    std::size_t iteration() const { return t_; }
    std::size_t target_user() const { return k_; }

    // Residual of row r at the current state without updating
    cplx residual(std::size_t r) const;

  private:
    const KaczmarzProblem *problem_;
    std::size_t k_;
    CVector u_;
    CVector z_;
    std::size_t t_ = 0;
};

// Column k of W after T passes: pass 0 projects onto row k, passes 1..T-1 onto
// rows drawn from the schedule.
CVector rka_user_solve(const KaczmarzProblem &problem, std::size_t k, std::size_t T, const UpdateSchedule &schedule,
                       Rng &rng, RkaInstrumentation *instr = nullptr);

// Runs every active user of the schedule with its own stream mix_seed(stream_seed, {k}),
// so the result does not depend on the order the users are processed in.
Combiner estimate_combiner(const KaczmarzProblem &problem, std::size_t T, const UpdateSchedule &schedule,
                           std::uint64_t stream_seed, RkaInstrumentation *instr = nullptr);

// estimate_combiner that can be advanced pass by pass. After advance_to(T) the
// combiner equals estimate_combiner(problem, T, schedule, stream_seed); copies are
// independent checkpoints. The problem and schedule must outlive it.
class IncrementalCombiner
{
  public:
    IncrementalCombiner(const KaczmarzProblem &problem, const UpdateSchedule &schedule, std::uint64_t stream_seed);

    // Runs passes until every user solve has T of them; T below passes() is an error.
    void advance_to(std::size_t T);
    std::size_t passes() const { return T_; }

    CMatrix W() const;
    Combiner combiner() const;

  private:
    const KaczmarzProblem *problem_;
    const UpdateSchedule *schedule_;
    std::vector<RkaState> states_;
    std::vector<Rng> rngs_;
    std::size_t T_ = 1;
};

// Builds the schedule and runs estimate_combiner; a subarray without active users
// yields W = 0 and V = 0.
Combiner rka_combiner(const CMatrix &Hs, double xi, std::size_t T, ScheduleMode mode,
                      std::span<const std::size_t> active_antennas, std::uint64_t stream_seed,
                      RkaInstrumentation *instr = nullptr);

} // namespace xlk

#endif
