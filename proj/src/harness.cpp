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

#include "xlk/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace xlk
{

namespace
{

// Stream tags for mix_seed
constexpr std::uint64_t kTagCalChannel = 1;
constexpr std::uint64_t kTagCalRka = 2;
constexpr std::uint64_t kTagSerChannel = 3;
constexpr std::uint64_t kTagSerRka = 4;
constexpr std::uint64_t kTagSerNoise = 5;
constexpr std::uint64_t kTagSerSymbols = 6;

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index owns its
// output slot, so results do not depend on the worker count.
template <class Body>
void parallel_for(std::size_t n, std::size_t threads, Body body)
{
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (;;)
            {
                const std::size_t i = next.fetch_add(1);
                if (i >= n)
                    return;
                try
                {
                    body(i);
                }
                catch (...)
                {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto &t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

struct MeanAccumulator
{
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t n = 0;

    void add(double v)
    {
        sum += v;
        sum_sq += v * v;
        ++n;
    }
    double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
    // 95% normal-approximation half-width of the mean
    double halfwidth() const
    {
        if (n < 2)
            return 0.0;
        const double m = mean();
        const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
        return 1.96 * std::sqrt(var / static_cast<double>(n));
    }
};

// Columns of the users active at one subarray, with their D_k^(s)
struct ActiveBlock
{
    CMatrix H;
    std::vector<std::size_t> users;
    std::vector<std::size_t> active_antennas;
};

ActiveBlock active_block(const ChannelRealization &ch, std::size_t s)
{
    ActiveBlock b;
    const auto D = ch.active_antennas(s);
    for (std::size_t k = 0; k < D.size(); ++k)
        if (D[k] > 0)
        {
            b.users.push_back(k);
            b.active_antennas.push_back(D[k]);
        }
    const CMatrix Hs = ch.subarray_block(s);
    b.H.resize(Hs.rows(), static_cast<Eigen::Index>(b.users.size()));
    for (std::size_t j = 0; j < b.users.size(); ++j)
        b.H.col(static_cast<Eigen::Index>(j)) = Hs.col(static_cast<Eigen::Index>(b.users[j]));
    return b;
}

double mean_of(const RVector &v)
{
    return v.size() ? v.mean() : 0.0;
}

std::string fmt_double(double v)
{
    return fmt::format("{}", v);
}

} // namespace

// ---------- config ----------

double ExperimentConfig::vr_mean_m() const
{
    return vr_mean_fraction * build_geometry(*this).length_m;
}

void ExperimentConfig::validate() const
{
    auto fail = [](const std::string &key, const std::string &what) {
        throw ConfigError(fmt::format("{}: {}", key, what));
    };
    auto finite = [](double v) { return std::isfinite(v); };

    if (M == 0)
        fail("array.M", "must be positive");
    if (S == 0)
        fail("array.S", "must be positive");
    if (M % S != 0)
        fail("array.M", fmt::format("M={} is not divisible by S={}", M, S));
    if (!(carrier_hz > 0.0) || !finite(carrier_hz))
        fail("array.carrier_hz", "must be positive");
    if (!(spacing_wavelengths > 0.0) || !finite(spacing_wavelengths))
        fail("array.spacing_wavelengths", "must be positive");
    if (K == 0)
        fail("users.K", "must be positive");
    if (!finite(p_dbm))
        fail("users.p_dbm", "must be finite");
    if (!(cell.x_max > cell.x_min))
        fail("users.cell", "x range must have positive length");
    if (!(cell.y_max > cell.y_min))
        fail("users.cell", "y range must have positive length");
    if (!(min_distance_m >= 0.0) || !finite(min_distance_m))
        fail("users.min_distance_m", "must be non-negative");
    if (!(omega > 0.0) || !finite(omega))
        fail("pathloss.omega", "must be positive");
    if (!(nu >= 0.0) || !finite(nu))
        fail("pathloss.nu", "must be non-negative");
    if (!(vr_mean_fraction > 0.0) || !finite(vr_mean_fraction))
        fail("vr.mean_fraction", "must be positive");
    if (!(vr_sigma > 0.0) || !finite(vr_sigma))
        fail("vr.sigma", "must be positive");
    if (sigma2_dbm.empty())
        fail("sweep.sigma2_dbm", "needs at least one value");
    for (double v : sigma2_dbm)
        if (!finite(v))
            fail("sweep.sigma2_dbm", "values must be finite");
    if (normalizations.empty())
        fail("sweep.normalizations", "needs at least one value");
    if (schedules.empty())
        fail("sweep.schedules", "needs at least one value");
    if (deltas.empty())
        fail("sweep.deltas", "needs at least one value");
    for (double d : deltas)
        if (!(d > 0.0 && d < 1.0))
            fail("sweep.deltas", "values must lie in (0, 1)");
    if (trials < 1)
        fail("run.trials", "must be at least 1");
    if (threads < 1)
        fail("run.threads", "must be at least 1");
    if (batch < 1)
        fail("calibration.batch", "must be at least 1");
    if (!(t_max_factor > 0.0) || !finite(t_max_factor))
        fail("calibration.t_max_factor", "must be positive");
    if (frames_per_trial < 1)
        fail("ser.frames_per_trial", "must be at least 1");
    if (ms_grid.empty())
        fail("complexity.ms_grid", "needs at least one value");
    if (kbar_grid.empty())
        fail("complexity.kbar_grid", "needs at least one value");
    for (double v : ms_grid)
        if (!(v > 0.0))
            fail("complexity.ms_grid", "values must be positive");
    for (double v : kbar_grid)
        if (!(v > 0.0))
            fail("complexity.kbar_grid", "values must be positive");
    if (!finite(complexity_sigma2_dbm))
        fail("complexity.sigma2_dbm", "must be finite");
    if (!(complexity_delta > 0.0 && complexity_delta < 1.0))
        fail("complexity.delta", "must lie in (0, 1)");
    if (complexity_calibration_trials < 1)
        fail("complexity.calibration_trials", "must be at least 1");
    for (const auto &[mode, t] : complexity_t_user)
        if (!(t > 0.0))
            fail(fmt::format("complexity.t_user.{}", to_string(mode)), "must be positive");
}

ArrayGeometry build_geometry(const ExperimentConfig &config)
{
    return build_array_geometry(config.M, config.S, config.carrier_hz, config.spacing_wavelengths);
}

ChannelRealization draw_realization(const ExperimentConfig &config, const ArrayGeometry &geometry,
                                    Normalization mode, std::uint64_t seed)
{
    Rng rng(seed);
    const UserDrop drop = draw_user_positions(config.K, config.cell, config.min_distance_m, config.p_mw(), rng);
    const VrParameters vr{config.vr_mean_fraction * geometry.length_m, config.vr_sigma};
    return draw_channel(geometry, drop, vr, mode, {}, config.omega, config.nu, rng);
}

// ---------- calibration ----------

std::pair<std::size_t, bool> smallest_passing_iteration(const std::function<double(std::size_t)> &metric,
                                                        double target, std::size_t t_max)
{
    t_max = std::max<std::size_t>(1, t_max);
    auto passes = [&](std::size_t T) { return metric(T) >= target; };

    if (passes(1))
        return {1, false};
    std::size_t lo = 1;
    std::size_t hi = 2;
    for (;;)
    {
        if (hi >= t_max)
        {
            hi = t_max;
            if (!passes(hi))
                return {t_max, true};
            break;
        }
        if (passes(hi))
            break;
        lo = hi;
        hi *= 2;
    }
    while (hi - lo > 1)
    {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (passes(mid))
            hi = mid;
        else
            lo = mid;
    }
    return {hi, false};
}

namespace
{

struct TrialCalibration
{
    // [delta][subarray]
    std::vector<std::vector<std::size_t>> t_user;
    std::vector<std::vector<bool>> censored;
    std::vector<double> kbar;   // mean active users over the batch, per subarray
    std::vector<bool> served;   // any active user in the batch
};

TrialCalibration calibrate_trial(const ExperimentConfig &config, const ArrayGeometry &geometry, double sigma2,
                                 Normalization mode, ScheduleMode schedule, const std::vector<double> &deltas,
                                 std::size_t trial)
{
    const double p = config.p_mw();
    const double xi = sigma2 / p;
    const std::size_t S = config.S;

    struct Member
    {
        ActiveBlock block;
        std::optional<KaczmarzProblem> problem;
        std::optional<UpdateSchedule> sched;
        double rzf_sinr = 0.0;
        std::uint64_t seed = 0;
    };

    // [subarray][batch member]
    std::vector<std::vector<Member>> members(S);
    for (std::size_t b = 0; b < config.batch; ++b)
    {
        const auto ch =
            draw_realization(config, geometry, mode, mix_seed(config.master_seed, {kTagCalChannel, trial, b}));
        for (std::size_t s = 0; s < S; ++s)
        {
            Member m;
            m.block = active_block(ch, s);
            if (m.block.users.empty())
                continue;
            const Combiner rzf = rzf_combiner(m.block.H, xi);
            m.rzf_sinr = mean_of(sinr_per_user(rzf.V, m.block.H, p, sigma2));
            m.problem.emplace(m.block.H, xi);
            m.sched.emplace(build_schedule(m.block.H, xi, schedule, m.block.active_antennas));
            m.seed = mix_seed(config.master_seed, {kTagCalRka, trial, b, s});
            members[s].push_back(std::move(m));
        }
    }

    TrialCalibration out;
    out.t_user.assign(deltas.size(), std::vector<std::size_t>(S, 0));
    out.censored.assign(deltas.size(), std::vector<bool>(S, false));
    out.kbar.assign(S, 0.0);
    out.served.assign(S, false);

    for (std::size_t s = 0; s < S; ++s)
    {
        auto &batch = members[s];
        if (batch.empty())
            continue;
        out.served[s] = true;

        double rzf_mean = 0.0;
        double kbar = 0.0;
        for (const auto &m : batch)
        {
            rzf_mean += m.rzf_sinr;
            kbar += static_cast<double>(m.block.users.size());
        }
        rzf_mean /= static_cast<double>(batch.size());
        // Kbar averages over the whole batch, counting realizations without active users as 0
        out.kbar[s] = kbar / static_cast<double>(config.batch);
        const double kbar_served = kbar / static_cast<double>(batch.size());

        // Runs are prefix-deterministic in T, so each candidate continues from the
        // nearest earlier checkpoint instead of starting over
        std::vector<std::map<std::size_t, IncrementalCombiner>> checkpoints(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i)
            checkpoints[i].emplace(1, IncrementalCombiner(*batch[i].problem, *batch[i].sched, batch[i].seed));

        std::map<std::size_t, double> memo;
        auto metric = [&](std::size_t T) {
            if (auto it = memo.find(T); it != memo.end())
                return it->second;
            double acc = 0.0;
            for (std::size_t i = 0; i < batch.size(); ++i)
            {
                auto &cp = checkpoints[i];
                auto from = std::prev(cp.upper_bound(T));
                IncrementalCombiner run = from->second;
                run.advance_to(T);
                const Combiner c = run.combiner();
                acc += mean_of(sinr_per_user(c.V, batch[i].block.H, p, sigma2));
                cp.emplace(T, std::move(run));
            }
            const double v = acc / static_cast<double>(batch.size());
            memo.emplace(T, v);
            return v;
        };

        const auto t_max =
            static_cast<std::size_t>(std::ceil(config.t_max_factor * std::max(1.0, kbar_served * kbar_served)));
        for (std::size_t d = 0; d < deltas.size(); ++d)
        {
            const auto [T, censored] = smallest_passing_iteration(metric, (1.0 - deltas[d]) * rzf_mean, t_max);
            out.t_user[d][s] = T;
            out.censored[d][s] = censored;
        }
    }
    return out;
}

} // namespace

std::vector<CalibrationResult> calibrate_iterations(const ExperimentConfig &config, double sigma2_dbm,
                                                    Normalization mode, ScheduleMode schedule,
                                                    const std::vector<double> &deltas)
{
    config.validate();
    for (double d : deltas)
        if (!(d > 0.0 && d < 1.0))
            throw ConfigError("Stopping criterion delta must lie in (0, 1).");

    const ArrayGeometry geometry = build_geometry(config);
    const double sigma2 = db_to_linear(sigma2_dbm);

    std::vector<TrialCalibration> per_trial(config.trials);
    parallel_for(config.trials, config.threads, [&](std::size_t t) {
        per_trial[t] = calibrate_trial(config, geometry, sigma2, mode, schedule, deltas, t);
    });

    std::vector<CalibrationResult> out;
    for (std::size_t d = 0; d < deltas.size(); ++d)
    {
        CalibrationResult r;
        r.sigma2_dbm = sigma2_dbm;
        r.normalization = mode;
        r.schedule = schedule;
        r.delta = deltas[d];
        r.subarrays.resize(config.S);
        for (std::size_t s = 0; s < config.S; ++s)
        {
            MeanAccumulator t_user, t_total;
            MeanAccumulator kbar;
            std::size_t censored = 0;
            for (const auto &tc : per_trial)
            {
                kbar.add(tc.kbar[s]);
                if (!tc.served[s])
                    continue;
                const auto T = static_cast<double>(tc.t_user[d][s]);
                t_user.add(T);
                t_total.add(T * tc.kbar[s]);
                if (tc.censored[d][s])
                    ++censored;
            }
            auto &sc = r.subarrays[s];
            sc.t_user = t_user.mean();
            sc.t_total = t_total.mean();
            sc.t_total_halfwidth = t_total.halfwidth();
            sc.kbar = kbar.mean();
            sc.censored = censored;
            sc.trials = t_user.n;
        }
        out.push_back(std::move(r));
    }
    return out;
}

CalibrationResult calibrate_iterations(const ExperimentConfig &config, double sigma2_dbm, Normalization mode,
                                       ScheduleMode schedule, double delta)
{
    return calibrate_iterations(config, sigma2_dbm, mode, schedule, std::vector<double>{delta}).front();
}

// ---------- CRD sweep ----------

const CrdPoint &CrdSweepResult::at(double sigma2_dbm, Normalization n, ScheduleMode s, double delta,
                                   int subarray) const
{
    for (const auto &p : points)
        if (p.sigma2_dbm == sigma2_dbm && p.normalization == n && p.schedule == s && p.delta == delta &&
            p.subarray == subarray)
            return p;
    throw ConfigError(fmt::format("No CRD point for sigma2={} {} {} delta={} subarray={}.", sigma2_dbm, to_string(n),
                                  to_string(s), delta, subarray));
}

CrdSweepResult run_crd_sweep(const ExperimentConfig &config)
{
    config.validate();
    const double Ms = static_cast<double>(config.M / config.S);

    CrdSweepResult out;
    out.axis = config.sigma2_dbm;
    out.trials = config.trials;
    for (double sigma2_dbm : config.sigma2_dbm)
        for (auto norm : config.normalizations)
            for (auto sched : config.schedules)
            {
                const auto calibrations = calibrate_iterations(config, sigma2_dbm, norm, sched, config.deltas);
                for (const auto &cal : calibrations)
                {
                    CrdPoint mean;
                    mean.sigma2_dbm = sigma2_dbm;
                    mean.normalization = norm;
                    mean.schedule = sched;
                    mean.delta = cal.delta;
                    std::size_t served = 0;
                    for (std::size_t s = 0; s < cal.subarrays.size(); ++s)
                    {
                        const auto &sc = cal.subarrays[s];
                        CrdPoint p = mean;
                        p.subarray = static_cast<int>(s);
                        p.kbar = sc.kbar;
                        p.t_user = sc.t_user;
                        p.t_total = sc.t_total;
                        p.t_total_halfwidth = sc.t_total_halfwidth;
                        p.censored = sc.censored;
                        if (sc.trials > 0 && sc.kbar > 0.0)
                        {
                            p.t_up = iteration_upper_bound(sched, Ms, sc.kbar);
                            p.crd = crd(sc.t_user, p.t_up);
                            p.crd_total = crd(sc.t_total, p.t_up);
                            ++served;
                            mean.kbar += p.kbar;
                            mean.t_user += p.t_user;
                            mean.t_total += p.t_total;
                            mean.t_up += p.t_up;
                            mean.crd += p.crd;
                            mean.crd_total += p.crd_total;
                            mean.t_total_halfwidth += p.t_total_halfwidth * p.t_total_halfwidth;
                        }
                        mean.censored += p.censored;
                        out.points.push_back(p);
                    }
                    if (served > 0)
                    {
                        const auto n = static_cast<double>(served);
                        mean.kbar /= n;
                        mean.t_user /= n;
                        mean.t_total /= n;
                        mean.t_up /= n;
                        mean.crd /= n;
                        mean.crd_total /= n;
                        mean.t_total_halfwidth = std::sqrt(mean.t_total_halfwidth) / n;
                    }
                    out.points.push_back(mean);
                }
            }
    return out;
}

// ---------- SER sweep ----------

IterationTable iteration_table_from(const CrdSweepResult &crd)
{
    IterationTable table;
    for (const auto &p : crd.points)
    {
        if (p.subarray < 0)
            continue;
        auto &row = table[{p.sigma2_dbm, p.normalization, p.schedule, p.delta}];
        const auto s = static_cast<std::size_t>(p.subarray);
        if (row.size() <= s)
            row.resize(s + 1, 1);
        row[s] = static_cast<std::size_t>(std::max(1.0, std::ceil(p.t_user)));
    }
    return table;
}

const SerPoint &SerSweepResult::at(double sigma2_dbm, Normalization n, ScheduleMode s, double delta) const
{
    for (const auto &p : points)
        if (p.sigma2_dbm == sigma2_dbm && p.normalization == n && p.schedule == s && p.delta == delta)
            return p;
    throw ConfigError(fmt::format("No SER point for sigma2={} {} {} delta={}.", sigma2_dbm, to_string(n),
                                  to_string(s), delta));
}

namespace
{

// Estimates of one subarray scattered back to all K users, plus their SINRs
struct SubarrayOutput
{
    CVector estimates;
    RVector sinr;
};

SubarrayOutput detect_subarray(const ActiveBlock &block, const Combiner &c, const CVector &y, std::size_t K, double p,
                               double sigma2)
{
    SubarrayOutput out{CVector::Zero(static_cast<Eigen::Index>(K)), RVector::Zero(static_cast<Eigen::Index>(K))};
    if (block.users.empty())
        return out;
    const CVector raw = subarray_estimates(c, block.H, y);
    const CVector est = normalize_gains(raw, c.V, block.H);
    const RVector gamma = sinr_per_user(c.V, block.H, p, sigma2);
    for (std::size_t j = 0; j < block.users.size(); ++j)
    {
        out.estimates[static_cast<Eigen::Index>(block.users[j])] = est[static_cast<Eigen::Index>(j)];
        out.sinr[static_cast<Eigen::Index>(block.users[j])] = gamma[static_cast<Eigen::Index>(j)];
    }
    return out;
}

} // namespace

SerSweepResult run_ser_sweep(const ExperimentConfig &config, const IterationTable &iterations)
{
    config.validate();
    const ArrayGeometry geometry = build_geometry(config);
    const double p = config.p_mw();
    const std::size_t S = config.S;
    const std::size_t K = config.K;

    struct Variant
    {
        ScheduleMode schedule;
        double delta;
    };
    std::vector<Variant> variants;
    for (auto sched : config.schedules)
        for (double d : config.deltas)
            variants.push_back({sched, d});

    struct Cell
    {
        double sigma2_dbm;
        Normalization norm;
    };
    std::vector<Cell> cells;
    for (double s2 : config.sigma2_dbm)
        for (auto n : config.normalizations)
            cells.push_back({s2, n});

    // Resolve the iteration counts up front so a missing entry fails before any work
    std::vector<std::vector<std::vector<std::size_t>>> t_table(cells.size(),
                                                               std::vector<std::vector<std::size_t>>(variants.size()));
    for (std::size_t c = 0; c < cells.size(); ++c)
        for (std::size_t v = 0; v < variants.size(); ++v)
        {
            const IterationKey key{cells[c].sigma2_dbm, cells[c].norm, variants[v].schedule, variants[v].delta};
            const auto it = iterations.find(key);
            if (it == iterations.end() || it->second.size() != S)
                throw ConfigError(fmt::format("Iteration table has no entry for sigma2={} {} {} delta={}.",
                                              cells[c].sigma2_dbm, to_string(cells[c].norm),
                                              to_string(variants[v].schedule), variants[v].delta));
            t_table[c][v] = it->second;
        }

    // errors[trial][cell][0 = RZF, 1 + v = variant v]
    std::vector<std::vector<std::vector<std::size_t>>> errors(
        config.trials, std::vector<std::vector<std::size_t>>(cells.size(), std::vector<std::size_t>(1 + variants.size())));

    parallel_for(config.trials, config.threads, [&](std::size_t t) {
        const std::uint64_t channel_seed = mix_seed(config.master_seed, {kTagSerChannel, t});
        for (std::size_t c = 0; c < cells.size(); ++c)
        {
            const double sigma2 = db_to_linear(cells[c].sigma2_dbm);
            const double xi = sigma2 / p;
            const auto ch = draw_realization(config, geometry, cells[c].norm, channel_seed);

            std::vector<ActiveBlock> blocks;
            std::vector<Combiner> rzf;
            // [variant][subarray]
            std::vector<std::vector<Combiner>> rka(variants.size());
            for (std::size_t s = 0; s < S; ++s)
            {
                blocks.push_back(active_block(ch, s));
                const auto &blk = blocks.back();
                rzf.push_back(rzf_combiner(blk.H, xi));
                for (std::size_t v = 0; v < variants.size(); ++v)
                    rka[v].push_back(rka_combiner(blk.H, xi, t_table[c][v][s], variants[v].schedule,
                                                  blk.active_antennas,
                                                  mix_seed(config.master_seed, {kTagSerRka, t, s})));
            }

            for (std::size_t f = 0; f < config.frames_per_trial; ++f)
            {
                Rng sym_rng(mix_seed(config.master_seed, {kTagSerSymbols, t, f}));
                const SymbolFrame frame = draw_symbols(K, config.constellation, sym_rng);

                std::vector<CVector> y(S);
                for (std::size_t s = 0; s < S; ++s)
                {
                    Rng noise_rng(mix_seed(config.master_seed, {kTagSerNoise, t, f, s}));
                    y[s] = received_signal(ch.subarray_block(s), frame.x, p, sigma2, noise_rng);
                }

                auto count = [&](const auto &combiner_of) {
                    CMatrix est(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(K));
                    RMatrix gam(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(K));
                    for (std::size_t s = 0; s < S; ++s)
                    {
                        // Only the active rows of the block reach the combiner, y is full Ms
                        const auto out = detect_subarray(blocks[s], combiner_of(s), y[s], K, p, sigma2);
                        est.row(static_cast<Eigen::Index>(s)) = out.estimates.transpose();
                        gam.row(static_cast<Eigen::Index>(s)) = out.sinr.transpose();
                    }
                    const FusedEstimate fused = fuse(est, gam, config.fusion);
                    return symbol_errors(fused.x_hat, frame.x, config.constellation);
                };

                errors[t][c][0] += count([&](std::size_t s) -> const Combiner & { return rzf[s]; });
                for (std::size_t v = 0; v < variants.size(); ++v)
                    errors[t][c][1 + v] += count([&](std::size_t s) -> const Combiner & { return rka[v][s]; });
            }
        }
    });

    SerSweepResult out;
    out.axis = config.sigma2_dbm;
    out.trials = config.trials;
    const std::size_t symbols = config.trials * config.frames_per_trial * K;
    auto rate_and_hw = [&](std::size_t c, std::size_t slot) {
        std::size_t e = 0;
        for (std::size_t t = 0; t < config.trials; ++t)
            e += errors[t][c][slot];
        const double r = static_cast<double>(e) / static_cast<double>(symbols);
        return std::pair{r, 1.96 * std::sqrt(r * (1.0 - r) / static_cast<double>(symbols))};
    };
    for (std::size_t c = 0; c < cells.size(); ++c)
    {
        const auto [rzf_rate, rzf_hw] = rate_and_hw(c, 0);
        for (std::size_t v = 0; v < variants.size(); ++v)
        {
            SerPoint pt;
            pt.sigma2_dbm = cells[c].sigma2_dbm;
            pt.normalization = cells[c].norm;
            pt.schedule = variants[v].schedule;
            pt.delta = variants[v].delta;
            double t_sum = 0.0;
            for (auto T : t_table[c][v])
                t_sum += static_cast<double>(T);
            pt.t_user = t_sum / static_cast<double>(S);
            std::tie(pt.ser_rka, pt.ser_rka_halfwidth) = rate_and_hw(c, 1 + v);
            pt.ser_rzf = rzf_rate;
            pt.ser_rzf_halfwidth = rzf_hw;
            pt.symbols = symbols;
            out.points.push_back(pt);
        }
    }
    return out;
}

// ---------- complexity sweep ----------

const ComplexityPoint &ComplexitySweepResult::at(double Ms, double Kbar, Scheme scheme) const
{
    for (const auto &p : points)
        if (p.report.Ms == Ms && p.report.Kbar == Kbar && p.report.scheme == scheme)
            return p;
    throw ConfigError(fmt::format("No complexity point for Ms={} Kbar={} {}.", Ms, Kbar, to_string(scheme)));
}

std::map<ScheduleMode, double> calibrated_t_user(const ExperimentConfig &config)
{
    ExperimentConfig c = config;
    c.trials = config.complexity_calibration_trials;
    std::map<ScheduleMode, double> out;
    for (auto mode : {ScheduleMode::Power, ScheduleMode::Uniform, ScheduleMode::ActiveAntennas})
    {
        const auto cal =
            calibrate_iterations(c, c.complexity_sigma2_dbm, c.complexity_normalization, mode, c.complexity_delta);
        double acc = 0.0;
        std::size_t n = 0;
        for (const auto &sc : cal.subarrays)
            if (sc.trials > 0)
            {
                acc += sc.t_user;
                ++n;
            }
        out[mode] = n ? acc / static_cast<double>(n) : 1.0;
    }
    return out;
}

ComplexitySweepResult run_complexity_sweep(const ExperimentConfig &config, const std::vector<double> &ms_grid,
                                           const std::vector<double> &kbar_grid,
                                           const std::map<ScheduleMode, double> &t_user)
{
    if (ms_grid.empty() || kbar_grid.empty())
        throw ConfigError("Complexity grids cannot be empty.");

    ComplexitySweepResult out;
    out.ms_axis = ms_grid;
    out.kbar_axis = kbar_grid;
    out.t_user = t_user;
    const auto S = static_cast<double>(config.S);
    const auto tau = static_cast<double>(config.tau_ul);

    auto t_for = [&](ScheduleMode mode) {
        const auto it = t_user.find(mode);
        if (it == t_user.end() || !(it->second > 0.0))
            throw ConfigError(fmt::format("No per-user iteration count for schedule {}.", to_string(mode)));
        return it->second;
    };

    for (double Ms : ms_grid)
        for (double K : kbar_grid)
        {
            const auto rzf = operation_counts(Scheme::RZF, S, Ms, K, std::nullopt, tau);
            for (auto scheme : kAllSchemes)
            {
                ComplexityPoint pt;
                if (is_kaczmarz(scheme))
                {
                    const ScheduleMode mode = scheme == Scheme::RkaPower     ? ScheduleMode::Power
                                              : scheme == Scheme::RkaUniform ? ScheduleMode::Uniform
                                                                             : ScheduleMode::ActiveAntennas;
                    pt.t_user = t_for(mode);
                    pt.report = operation_counts(scheme, S, Ms, K, pt.t_user, tau);
                }
                else
                    pt.report = operation_counts(scheme, S, Ms, K, std::nullopt, tau);
                pt.beats_rzf = pt.report.combining_total() < rzf.combining_total();
                out.points.push_back(pt);
            }
        }

    std::vector<double> ks = kbar_grid;
    std::sort(ks.begin(), ks.end());
    for (double Ms : ms_grid)
        for (auto scheme : {Scheme::RkaPower, Scheme::RkaUniform, Scheme::RkaActiveAntennas})
        {
            Crossover c{Ms, scheme, std::numeric_limits<double>::quiet_NaN()};
            for (auto it = ks.rbegin(); it != ks.rend(); ++it)
            {
                if (!out.at(Ms, *it, scheme).beats_rzf)
                    break;
                c.kbar = *it;
            }
            out.crossovers.push_back(c);
        }
    return out;
}

// ---------- CSV ----------

std::string crd_csv_header()
{
    return "sigma2_dbm,normalization,schedule,delta,subarray,kbar,t_user,t_total,t_total_halfwidth,t_up,crd,crd_total,"
           "censored,trials";
}

std::string ser_csv_header()
{
    return "sigma2_dbm,normalization,schedule,delta,t_user,ser_rka,ser_rka_halfwidth,ser_rzf,ser_rzf_halfwidth,"
           "symbols,trials";
}

std::string complexity_sweep_csv_header()
{
    return "Ms,Kbar,scheme,t_user,T,S,tau_ul,combining_mults,combining_divs,reception_mults,total,beats_rzf";
}

std::string to_csv(const CrdSweepResult &r)
{
    std::ostringstream os;
    os << crd_csv_header() << '\n';
    for (const auto &p : r.points)
        os << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", fmt_double(p.sigma2_dbm),
                          to_string(p.normalization), to_string(p.schedule), fmt_double(p.delta),
                          p.subarray < 0 ? std::string("mean") : std::to_string(p.subarray), fmt_double(p.kbar),
                          fmt_double(p.t_user), fmt_double(p.t_total), fmt_double(p.t_total_halfwidth),
                          fmt_double(p.t_up), fmt_double(p.crd), fmt_double(p.crd_total), p.censored, r.trials);
    return os.str();
}

std::string to_csv(const SerSweepResult &r)
{
    std::ostringstream os;
    os << ser_csv_header() << '\n';
    for (const auto &p : r.points)
        os << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", fmt_double(p.sigma2_dbm), to_string(p.normalization),
                          to_string(p.schedule), fmt_double(p.delta), fmt_double(p.t_user), fmt_double(p.ser_rka),
                          fmt_double(p.ser_rka_halfwidth), fmt_double(p.ser_rzf), fmt_double(p.ser_rzf_halfwidth),
                          p.symbols, r.trials);
    return os.str();
}

std::string to_csv(const ComplexitySweepResult &r)
{
    std::ostringstream os;
    os << complexity_sweep_csv_header() << '\n';
    for (const auto &p : r.points)
    {
        const auto &c = p.report;
        os << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", fmt_double(c.Ms), fmt_double(c.Kbar),
                          to_string(c.scheme), is_kaczmarz(c.scheme) ? fmt_double(p.t_user) : std::string(),
                          c.T ? fmt_double(*c.T) : std::string(), fmt_double(c.S), fmt_double(c.tau_ul),
                          fmt_double(c.combining_mults), fmt_double(c.combining_divs), fmt_double(c.reception_mults),
                          fmt_double(c.total), p.beats_rzf ? 1 : 0);
    }
    return os.str();
}

IterationTable parse_iteration_csv(const std::string &csv_text)
{
    std::istringstream is(csv_text);
    std::string line;
    std::vector<std::string> header;
    IterationTable table;

    auto split = [](const std::string &s) {
        std::vector<std::string> out;
        std::string cur;
        std::istringstream ss(s);
        while (std::getline(ss, cur, ','))
            out.push_back(cur);
        if (!s.empty() && s.back() == ',')
            out.emplace_back();
        return out;
    };

    std::size_t line_no = 0;
    while (std::getline(is, line))
    {
        ++line_no;
        if (line.empty() || line[0] == '#')
            continue;
        if (header.empty())
        {
            header = split(line);
            if (line != crd_csv_header())
                throw ConfigError("Iteration table is not a crd-sweep CSV (header mismatch).");
            continue;
        }
        const auto f = split(line);
        if (f.size() != header.size())
            throw ConfigError(fmt::format("Iteration table line {}: expected {} fields.", line_no, header.size()));
        if (f[4] == "mean")
            continue;
        try
        {
            const double s2 = std::stod(f[0]);
            const Normalization n = parse_normalization(f[1]);
            const ScheduleMode m = parse_schedule(f[2]);
            const double d = std::stod(f[3]);
            const auto s = static_cast<std::size_t>(std::stoul(f[4]));
            const double t_user = std::stod(f[6]);
            auto &row = table[{s2, n, m, d}];
            if (row.size() <= s)
                row.resize(s + 1, 1);
            row[s] = static_cast<std::size_t>(std::max(1.0, std::ceil(t_user)));
        }
        catch (const std::logic_error &e)
        {
            if (dynamic_cast<const ConfigError *>(&e))
                throw;
            throw ConfigError(fmt::format("Iteration table line {}: {}", line_no, e.what()));
        }
    }
    return table;
}

} // namespace xlk
