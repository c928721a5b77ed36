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

#include "xlk/kaczmarz.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

namespace xlk
{

std::string_view to_string(ScheduleMode mode)
{
    switch (mode)
    {
    case ScheduleMode::Power:
        return "power";
    case ScheduleMode::Uniform:
        return "uniform";
    case ScheduleMode::ActiveAntennas:
        return "active_antennas";
    }
    return "?";
}

ScheduleMode parse_schedule(std::string_view text)
{
    if (text == "power" || text == "pwr")
        return ScheduleMode::Power;
    if (text == "uniform" || text == "unif")
        return ScheduleMode::Uniform;
    if (text == "active_antennas" || text == "aa")
        return ScheduleMode::ActiveAntennas;
    throw ConfigError(fmt::format("Unknown update schedule '{}' (expected power, uniform or active_antennas).", text));
}

// ---------- UpdateSchedule ----------

UpdateSchedule::UpdateSchedule(ScheduleMode mode, std::vector<std::size_t> users, std::vector<double> probabilities)
    : mode_(mode), users_(std::move(users)), probabilities_(std::move(probabilities))
{
    if (users_.empty())
        throw ConfigError("Update schedule has no active users.");
    if (users_.size() != probabilities_.size())
        throw ConfigError("Update schedule needs one probability per user.");
    double total = 0.0;
    for (double p : probabilities_)
    {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw ConfigError("Update schedule probabilities must be finite and non-negative.");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ConfigError(fmt::format("Update schedule probabilities sum to {} instead of 1.", total));

    cumulative_.resize(probabilities_.size());
    std::partial_sum(probabilities_.begin(), probabilities_.end(), cumulative_.begin());
    cumulative_.back() = 1.0;
}

std::size_t UpdateSchedule::sample(Rng &rng) const
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double x = u(rng);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
    if (it == cumulative_.end())
        --it;
    // Zero-probability entries never get selected: skip forward past empty bins
    auto idx = static_cast<std::size_t>(it - cumulative_.begin());
    while (probabilities_[idx] == 0.0 && idx + 1 < probabilities_.size())
        ++idx;
    return users_[idx];
}

UpdateSchedule build_schedule(const CMatrix &Hs, double xi, ScheduleMode mode,
                              std::span<const std::size_t> active_antennas)
{
    if (active_antennas.size() != static_cast<std::size_t>(Hs.cols()))
        throw ConfigError("One active-antenna count per user is required.");
    if (!(xi >= 0.0))
        throw ConfigError("Regularization xi must be non-negative.");

    std::vector<std::size_t> users;
    for (std::size_t k = 0; k < active_antennas.size(); ++k)
        if (active_antennas[k] > 0)
            users.push_back(k);
    if (users.empty())
        throw ConfigError("Cannot build an update schedule: no user is active at this subarray.");

    const auto Ka = static_cast<double>(users.size());
    const auto Ms = static_cast<std::uint64_t>(Hs.rows());
    std::vector<double> p(users.size());
    std::uint64_t setup = Ms;

    switch (mode)
    {
    case ScheduleMode::Power: {
        double frob2 = 0.0;
        for (std::size_t i = 0; i < users.size(); ++i)
        {
            p[i] = Hs.col(static_cast<Eigen::Index>(users[i])).squaredNorm();
            frob2 += p[i];
        }
        const double denom = frob2 + Ka * xi;
        for (auto &v : p)
            v = (v + xi) / denom;
        setup = 2 * Ms * users.size();
        break;
    }
    case ScheduleMode::Uniform:
        std::fill(p.begin(), p.end(), 1.0 / Ka);
        break;
    case ScheduleMode::ActiveAntennas: {
        double total = 0.0;
        for (auto k : users)
            total += static_cast<double>(active_antennas[k]);
        for (std::size_t i = 0; i < users.size(); ++i)
            p[i] = static_cast<double>(active_antennas[users[i]]) / total;
        break;
    }
    }

    // Rounding can leave the sum a few ulps off 1
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto &v : p)
        v /= sum;

    UpdateSchedule out(mode, std::move(users), std::move(p));
    out.set_setup_mults(setup);
    return out;
}

// ---------- KaczmarzProblem ----------

KaczmarzProblem::KaczmarzProblem(CMatrix Hs, double xi) : H_(std::move(Hs)), xi_(xi)
{
    if (!(xi_ >= 0.0) || !std::isfinite(xi_))
        throw ConfigError("Regularization xi must be finite and non-negative.");
    norms2_ = H_.colwise().squaredNorm().transpose();
}

// ---------- RkaState ----------

RkaState::RkaState(const KaczmarzProblem &problem, std::size_t target_user)
    : problem_(&problem), k_(target_user), u_(CVector::Zero(problem.H().rows())),
      z_(CVector::Zero(problem.H().cols()))
{
    if (target_user >= problem.K())
        throw ConfigError(fmt::format("User {} out of range (K = {}).", target_user, problem.K()));
}

cplx RkaState::residual(std::size_t r) const
{
    const double denom = problem_->column_norm2(r) + problem_->xi();
    const auto ri = static_cast<Eigen::Index>(r);
    const cplx target = r == k_ ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
    // Eigen's complex dot is conjugate-linear in the first argument: h_r^H u
    const cplx hu = problem_->H().col(ri).dot(u_);
    return (target - hu - problem_->xi() * z_[ri]) / denom;
}

cplx RkaState::step(std::size_t r, RkaInstrumentation *instr)
{
    if (r >= problem_->K())
        throw InvariantError(fmt::format("Sampled row {} out of range.", r));
    if (problem_->column_norm2(r) == 0.0)
        throw InvariantError(fmt::format("Sampled user {} has a zero channel column; schedule support is wrong.", r));

    const cplx eta = residual(r);
    const auto ri = static_cast<Eigen::Index>(r);
    u_ += eta * problem_->H().col(ri);
    z_[ri] += eta;

    if (instr)
    {
        instr->mults += problem_->Ms();
        ++instr->iterations;
        if (t_ == 0)
            instr->first_rows.push_back(r);
        if (instr->record_rows)
            instr->sampled_rows.push_back(r);
    }
    ++t_;
    return eta;
}

// ---------- solves ----------

CVector rka_user_solve(const KaczmarzProblem &problem, std::size_t k, std::size_t T, const UpdateSchedule &schedule,
                       Rng &rng, RkaInstrumentation *instr)
{
    if (T < 1)
        throw ConfigError("Iteration count T must be at least 1.");
    if (k >= problem.K())
        throw ConfigError(fmt::format("User {} out of range (K = {}).", k, problem.K()));
    if (problem.column_norm2(k) == 0.0)
        throw ConfigError(fmt::format("User {} is not active at this subarray.", k));

    RkaState state(problem, k);
    if (instr)
    {
        ++instr->solves;
        instr->solved_users.push_back(k);
    }
    state.step(k, instr); // self-initialization
    for (std::size_t t = 1; t < T; ++t)
        state.step(schedule.sample(rng), instr);
    return state.z();
}

Combiner estimate_combiner(const KaczmarzProblem &problem, std::size_t T, const UpdateSchedule &schedule,
                           std::uint64_t stream_seed, RkaInstrumentation *instr)
{
    if (T < 1)
        throw ConfigError("Iteration count T must be at least 1.");

    const auto K = static_cast<Eigen::Index>(problem.K());
    Combiner out;
    out.xi = problem.xi();
    out.W = CMatrix::Zero(K, K);

    if (instr)
        instr->mults += schedule.setup_mults();

    for (auto k : schedule.users())
    {
        Rng rng(mix_seed(stream_seed, {k}));
        out.W->col(static_cast<Eigen::Index>(k)) = rka_user_solve(problem, k, T, schedule, rng, instr);
        out.active_users.push_back(k);
    }
    out.V = problem.H() * (*out.W);
    return out;
}

IncrementalCombiner::IncrementalCombiner(const KaczmarzProblem &problem, const UpdateSchedule &schedule,
                                         std::uint64_t stream_seed)
    : problem_(&problem), schedule_(&schedule)
{
    for (auto k : schedule.users())
    {
        if (problem.column_norm2(k) == 0.0)
            throw ConfigError(fmt::format("User {} is not active at this subarray.", k));
        states_.emplace_back(problem, k);
        rngs_.emplace_back(mix_seed(stream_seed, {k}));
        states_.back().step(k);
    }
}

void IncrementalCombiner::advance_to(std::size_t T)
{
    if (T < T_)
        throw ConfigError(fmt::format("Cannot rewind a Kaczmarz run from {} to {} passes.", T_, T));
    for (std::size_t i = 0; i < states_.size(); ++i)
        for (std::size_t t = T_; t < T; ++t)
            states_[i].step(schedule_->sample(rngs_[i]));
    T_ = T;
}

CMatrix IncrementalCombiner::W() const
{
    const auto K = static_cast<Eigen::Index>(problem_->K());
    CMatrix W = CMatrix::Zero(K, K);
    for (const auto &st : states_)
        W.col(static_cast<Eigen::Index>(st.target_user())) = st.z();
    return W;
}

Combiner IncrementalCombiner::combiner() const
{
    Combiner out;
    out.xi = problem_->xi();
    out.W = W();
    out.active_users = schedule_->users();
    out.V = problem_->H() * (*out.W);
    return out;
}

Combiner rka_combiner(const CMatrix &Hs, double xi, std::size_t T, ScheduleMode mode,
                      std::span<const std::size_t> active_antennas, std::uint64_t stream_seed,
                      RkaInstrumentation *instr)
{
    if (T < 1)
        throw ConfigError("Iteration count T must be at least 1.");
    if (std::none_of(active_antennas.begin(), active_antennas.end(), [](std::size_t d) { return d > 0; }))
    {
        Combiner out;
        out.xi = xi;
        out.V = CMatrix::Zero(Hs.rows(), Hs.cols());
        out.W = CMatrix::Zero(Hs.cols(), Hs.cols());
        return out;
    }
    const UpdateSchedule schedule = build_schedule(Hs, xi, mode, active_antennas);
    const KaczmarzProblem problem(Hs, xi);
    return estimate_combiner(problem, T, schedule, stream_seed, instr);
}

} // namespace xlk
