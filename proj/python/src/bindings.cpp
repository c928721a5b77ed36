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

#include "xlk/config.hpp"
#include "xlk/io.hpp"
#include "xlk/verify.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace xlk;

namespace
{

ExperimentConfig config_from(const std::string &text, std::uint64_t seed, std::size_t threads)
{
    ExperimentConfig c = parse_config(text);
    c.master_seed = seed;
    c.threads = threads;
    return c;
}

py::dict report_dict(const ComplexityReport &r)
{
    py::dict d;
    d["scheme"] = std::string(to_string(r.scheme));
    d["combining_mults"] = r.combining_mults;
    d["combining_divs"] = r.combining_divs;
    d["reception_mults"] = r.reception_mults;
    d["total"] = r.total;
    return d;
}

} // namespace

PYBIND11_MODULE(_xlk, m)
{
    m.doc() = "Randomized Kaczmarz receive combining for subarray-based XL-MIMO uplink";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ModelError>(m, "ModelError", PyExc_RuntimeError);

    m.attr("__version__") = std::string(kVersion);

    m.def(
        "rzf_combiner",
        [](const CMatrix &H, double xi) { return rzf_combiner(H, xi).V; }, py::arg("H"), py::arg("xi"),
        "Regularized zero-forcing combiner V = H (H^H H + xi I)^-1 over the active columns.");

    m.def(
        "rka_combiner",
        [](const CMatrix &H, double xi, std::size_t T, const std::string &schedule,
           const std::vector<std::size_t> &active_antennas, std::uint64_t seed) {
            RkaInstrumentation instr;
            const Combiner c = rka_combiner(H, xi, T, parse_schedule(schedule), active_antennas, seed, &instr);
            py::dict counters;
            counters["mults"] = instr.mults;
            counters["iterations"] = instr.iterations;
            counters["solves"] = instr.solves;
            return py::make_tuple(c.V, counters);
        },
        py::arg("H"), py::arg("xi"), py::arg("T"), py::arg("schedule"), py::arg("active_antennas"),
        py::arg("seed"), "Kaczmarz estimate of the RZF combiner with T passes per user. Returns (V, counters).");

    m.def("sinr_per_user", &sinr_per_user, py::arg("V"), py::arg("H"), py::arg("p"), py::arg("sigma2"));

    m.def(
        "complexity_counts",
        [](const std::string &scheme, double S, double Ms, double Kbar, std::optional<double> T, double tau_ul) {
            return report_dict(operation_counts(parse_scheme(scheme), S, Ms, Kbar, T, tau_ul));
        },
        py::arg("scheme"), py::arg("S"), py::arg("Ms"), py::arg("Kbar"), py::arg("T") = py::none(),
        py::arg("tau_ul") = 0.0);

    m.def(
        "iteration_upper_bound",
        [](const std::string &schedule, double Ms, double Kbar) {
            return iteration_upper_bound(parse_schedule(schedule), Ms, Kbar);
        },
        py::arg("schedule"), py::arg("Ms"), py::arg("Kbar"));

    m.def("crd", &crd, py::arg("T_bar"), py::arg("T_up"));

    m.def(
        "default_config", [] { return to_config_text(ExperimentConfig{}); },
        "Default configuration as flat dotted-key text.");

    m.def(
        "crd_sweep",
        [](const std::string &config, std::uint64_t seed, std::size_t threads) {
            const auto c = config_from(config, seed, threads);
            py::gil_scoped_release release;
            return to_csv(run_crd_sweep(c));
        },
        py::arg("config"), py::arg("seed"), py::arg("threads") = 1, "Runs the CRD sweep and returns its CSV text.");

    m.def(
        "ser_sweep",
        [](const std::string &config, const std::string &crd_csv, std::uint64_t seed, std::size_t threads) {
            const auto c = config_from(config, seed, threads);
            const auto table = parse_iteration_csv(crd_csv);
            py::gil_scoped_release release;
            return to_csv(run_ser_sweep(c, table));
        },
        py::arg("config"), py::arg("crd_csv"), py::arg("seed"), py::arg("threads") = 1,
        "Runs the SER sweep with iteration counts taken from a CRD sweep CSV.");

    m.def(
        "complexity_sweep",
        [](const std::string &config, std::uint64_t seed, std::size_t threads) {
            const auto c = config_from(config, seed, threads);
            py::gil_scoped_release release;
            const auto t_user = c.complexity_calibrate ? calibrated_t_user(c) : c.complexity_t_user;
            return to_csv(run_complexity_sweep(c, c.ms_grid, c.kbar_grid, t_user));
        },
        py::arg("config"), py::arg("seed"), py::arg("threads") = 1);

    m.def(
        "self_checks",
        [](const std::string &config) {
            std::vector<std::tuple<std::string, bool, std::string>> out;
            for (const auto &chk : run_self_checks(parse_config(config)))
                out.emplace_back(chk.name, chk.passed, chk.detail);
            return out;
        },
        py::arg("config") = "");
}
