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

#ifndef XLK_HARNESS_HPP
#define XLK_HARNESS_HPP

#include "xlk/channel.hpp"
#include "xlk/complexity.hpp"
#include "xlk/detection.hpp"
#include "xlk/kaczmarz.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace xlk
{

// Defaults reproduce the reference simulation setup (100-element ULA at 2.6 GHz,
// 4 subarrays, 25 users, p = 0 dBm, Omega = 4, nu = 3, R = I, VR half-length
// lognormal with mean 0.1 L and log-std 0.1).
struct ExperimentConfig
{
    // array
    std::size_t M = 100;
    std::size_t S = 4;
    double carrier_hz = 2.6e9;
    double spacing_wavelengths = 2.0;

    // users and propagation
    std::size_t K = 25;
    double p_dbm = 0.0;
    CellRectangle cell{};
    double min_distance_m = 30.0;
    double omega = 4.0;
    double nu = 3.0;
    double vr_mean_fraction = 0.1; // E[l_k] as a fraction of L
    double vr_sigma = 0.1;

    // sweep
    std::vector<double> sigma2_dbm = {-55.0, -50.0, -45.0, -40.0};
    std::vector<Normalization> normalizations = {Normalization::Norm1, Normalization::Norm2};
    std::vector<ScheduleMode> schedules = {ScheduleMode::Power, ScheduleMode::Uniform, ScheduleMode::ActiveAntennas};
    std::vector<double> deltas = {0.10, 0.01};

    std::size_t trials = 100;
    std::uint64_t master_seed = 1;
    std::size_t threads = 1;
    std::size_t tau_ul = 190;

    // iteration calibration
    std::size_t batch = 20;
    double t_max_factor = 50.0; // T_max = t_max_factor * Kbar^2

    // SER sweep
    std::size_t frames_per_trial = 10;
    Constellation constellation = Constellation::QPSK;
    FusionMode fusion = FusionMode::SinrWeighted;

    // complexity sweep
    std::vector<double> ms_grid = {25.0, 50.0, 75.0, 100.0};
    std::vector<double> kbar_grid = {5.0, 10.0, 15.0, 20.0, 25.0};
    double complexity_sigma2_dbm = -48.0;
    Normalization complexity_normalization = Normalization::Norm2;
    double complexity_delta = 0.10;
    bool complexity_calibrate = true;
    std::size_t complexity_calibration_trials = 20;
    // per-user iterations used when complexity_calibrate is false
    std::map<ScheduleMode, double> complexity_t_user = {
        {ScheduleMode::Power, 10.0}, {ScheduleMode::Uniform, 10.0}, {ScheduleMode::ActiveAntennas, 10.0}};

    double p_mw() const { return db_to_linear(p_dbm); }
    double vr_mean_m() const;

    // Throws ConfigError naming the offending key
    void validate() const;
};

ArrayGeometry build_geometry(const ExperimentConfig &config);

// Users, VRs and small-scale fading depend only on the seed, so the two
// normalizations of one seed share everything but the VR power scaling.
ChannelRealization draw_realization(const ExperimentConfig &config, const ArrayGeometry &geometry,
                                    Normalization mode, std::uint64_t seed);

// ---------- iteration calibration ----------

// Smallest T in [1, t_max] with metric(T) >= target, searched by doubling then
// bisection. Returns {t_max, true} (censored) if even t_max fails.
std::pair<std::size_t, bool> smallest_passing_iteration(const std::function<double(std::size_t)> &metric,
                                                        double target, std::size_t t_max);

struct SubarrayCalibration
{
    double t_user = 0.0;     // mean over trials of the per-user iteration count T^(s)
    double t_total = 0.0;    // mean over trials of t_user * active users (passes actually run)
    double t_total_halfwidth = 0.0;
    double kbar = 0.0;       // mean active users
    std::size_t censored = 0;
    std::size_t trials = 0;  // trials in which the subarray served at least one user
};

struct CalibrationResult
{
    double sigma2_dbm = 0.0;
    Normalization normalization = Normalization::Norm2;
    ScheduleMode schedule = ScheduleMode::Uniform;
    double delta = 0.1;
    std::vector<SubarrayCalibration> subarrays;
};

// Smallest T per subarray (doubling, then bisection) at which the mean active-user
// SINR of the Kaczmarz combiner over a batch of realizations reaches (1 - delta)
// times that of RZF; averaged over config.trials trials.
CalibrationResult calibrate_iterations(const ExperimentConfig &config, double sigma2_dbm, Normalization mode,
                                       ScheduleMode schedule, double delta);

// All deltas at once, sharing the SINR evaluations.
std::vector<CalibrationResult> calibrate_iterations(const ExperimentConfig &config, double sigma2_dbm,
                                                    Normalization mode, ScheduleMode schedule,
                                                    const std::vector<double> &deltas);

// ---------- CRD sweep ----------

struct CrdPoint
{
    double sigma2_dbm = 0.0;
    Normalization normalization = Normalization::Norm2;
    ScheduleMode schedule = ScheduleMode::Uniform;
    double delta = 0.1;
    int subarray = -1; // -1: average over subarrays
    double kbar = 0.0;
    double t_user = 0.0;
    double t_total = 0.0;
    double t_total_halfwidth = 0.0;
    double t_up = 0.0;
    double crd = 0.0;       // from the per-user count t_user
    double crd_total = 0.0; // from t_total, i.e. charging every pass of every user
    std::size_t censored = 0;
};

struct CrdSweepResult
{
    std::vector<double> axis; // sigma2_dbm
    std::vector<CrdPoint> points;
    std::size_t trials = 0;

    const CrdPoint &at(double sigma2_dbm, Normalization n, ScheduleMode s, double delta, int subarray = -1) const;
};

CrdSweepResult run_crd_sweep(const ExperimentConfig &config);

// ---------- SER sweep ----------

// Per-user iteration counts per subarray, keyed by (sigma2_dbm, normalization, schedule, delta)
using IterationKey = std::tuple<double, Normalization, ScheduleMode, double>;
using IterationTable = std::map<IterationKey, std::vector<std::size_t>>;

IterationTable iteration_table_from(const CrdSweepResult &crd);

struct SerPoint
{
    double sigma2_dbm = 0.0;
    Normalization normalization = Normalization::Norm2;
    ScheduleMode schedule = ScheduleMode::Uniform;
    double delta = 0.1;
    double t_user = 0.0; // mean over subarrays
    double ser_rka = 0.0;
    double ser_rka_halfwidth = 0.0;
    double ser_rzf = 0.0;
    double ser_rzf_halfwidth = 0.0;
    std::size_t symbols = 0;
};

struct SerSweepResult
{
    std::vector<double> axis;
    std::vector<SerPoint> points;
    std::size_t trials = 0;

    const SerPoint &at(double sigma2_dbm, Normalization n, ScheduleMode s, double delta) const;
};

SerSweepResult run_ser_sweep(const ExperimentConfig &config, const IterationTable &iterations);

// ---------- complexity sweep ----------

struct ComplexityPoint
{
    ComplexityReport report;
    double t_user = 0.0; // per-user iterations (Kaczmarz schemes)
    bool beats_rzf = false;
};

struct Crossover
{
    double Ms = 0.0;
    Scheme scheme = Scheme::RkaUniform;
    double kbar = 0.0; // smallest grid Kbar from which on the scheme is cheaper than RZF; NaN if never
};

struct ComplexitySweepResult
{
    std::vector<double> ms_axis;
    std::vector<double> kbar_axis;
    std::vector<ComplexityPoint> points;
    std::vector<Crossover> crossovers;
    std::map<ScheduleMode, double> t_user;

    const ComplexityPoint &at(double Ms, double Kbar, Scheme scheme) const;
};

// T is the per-user iteration count and stays fixed across the grid.
ComplexitySweepResult run_complexity_sweep(const ExperimentConfig &config, const std::vector<double> &ms_grid,
                                           const std::vector<double> &kbar_grid,
                                           const std::map<ScheduleMode, double> &t_user);

// Per-user iteration policy from a calibration at the complexity operating point.
std::map<ScheduleMode, double> calibrated_t_user(const ExperimentConfig &config);

// ---------- CSV ----------

std::string crd_csv_header();
std::string ser_csv_header();
std::string complexity_sweep_csv_header();
std::string to_csv(const CrdSweepResult &r);
std::string to_csv(const SerSweepResult &r);
std::string to_csv(const ComplexitySweepResult &r);

// Reads the rows written by to_csv(CrdSweepResult) back into an iteration table.
IterationTable parse_iteration_csv(const std::string &csv_text);

} // namespace xlk

#endif
