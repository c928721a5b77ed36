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
//
// xlk <command> --config <path> [--set key=value ...] --out <dir> --seed <u64> [--threads N]
//
// Exit codes: 0 ok, 1 internal error, 2 usage, 3 config, 4 model, 5 verify failed, 6 io.

#include "xlk/config.hpp"
#include "xlk/io.hpp"
#include "xlk/verify.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace xlk;

namespace
{

constexpr std::array<const char *, 5> kCommands = {"crd-sweep", "ser-sweep", "complexity-sweep", "single-trial",
                                                   "verify"};

enum Exit
{
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kConfig = 3,
    kModel = 4,
    kVerifyFailed = 5,
    kIo = 6,
};

struct Options
{
    std::string command;
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 1;
    std::string iterations_path;
    std::string manifest_path;
    std::size_t trial = 0;
    bool quiet = false;
};

void write_atomic(const fs::path &path, const std::string &text)
{
    const fs::path tmp = path.string() + ".tmp";
    write_text_file(tmp.string(), text);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
        throw IoError(fmt::format("cannot move '{}' into place: {}", path.string(), ec.message()));
}

std::string with_schema_line(const std::string &command, const std::string &csv)
{
    return fmt::format("# xlk {} csv-schema={} manifest=manifest.json\n{}", command, kCsvSchema, csv);
}

std::string single_trial_csv(const ExperimentConfig &config, const ChannelRealization &ch, double sigma2_dbm)
{
    const double p = config.p_mw();
    const double sigma2 = db_to_linear(sigma2_dbm);
    const double xi = sigma2 / p;
    std::string out = "subarray,user,active_antennas,scheme,t_user,sinr,op_mults\n";
    for (std::size_t s = 0; s < ch.S; ++s)
    {
        const CMatrix Hs = ch.subarray_block(s);
        const auto D = ch.active_antennas(s);
        const Combiner rzf = rzf_combiner(Hs, xi);
        if (rzf.active_users.empty())
            continue;
        const RVector g_rzf = sinr_per_user(rzf.V, Hs, p, sigma2);
        for (auto k : rzf.active_users)
            out += fmt::format("{},{},{},rzf,,{},\n", s, k, D[k], g_rzf[static_cast<Eigen::Index>(k)]);
        for (auto mode : config.schedules)
        {
            const auto it = config.complexity_t_user.find(mode);
            const auto T = static_cast<std::size_t>(std::max(1.0, std::ceil(it->second)));
            RkaInstrumentation instr;
            const Combiner c = rka_combiner(Hs, xi, T, mode, D,
                                            mix_seed(config.master_seed, {7, s, static_cast<std::uint64_t>(mode)}),
                                            &instr);
            const RVector g = sinr_per_user(c.V, Hs, p, sigma2);
            for (auto k : rzf.active_users)
                out += fmt::format("{},{},{},{},{},{},{}\n", s, k, D[k], to_string(scheme_for(mode)), T,
                                   g[static_cast<Eigen::Index>(k)], measured_op_counter(instr));
        }
    }
    return out;
}

int run(const Options &opt)
{
    // Resolve the configuration, optionally from an earlier run's manifest
    ExperimentConfig config;
    RunManifest manifest;
    manifest.command = opt.command;
    manifest.overrides = opt.overrides;
    if (!opt.manifest_path.empty())
    {
        const RunManifest prior = manifest_from_json(read_text_file(opt.manifest_path));
        std::string text;
        for (const auto &[k, v] : prior.config)
            text += fmt::format("{} = {}\n", k, v);
        config = parse_config(text, opt.overrides);
        config.master_seed = opt.seed.value_or(prior.master_seed);
        manifest.config_path = prior.config_path;
    }
    else
    {
        config = load_config_file(opt.config_path, opt.overrides);
        config.master_seed = *opt.seed;
        manifest.config_path = opt.config_path;
    }
    config.threads = std::max<std::size_t>(1, opt.threads);

    const fs::path out_dir(opt.out_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw IoError(fmt::format("cannot create '{}': {}", out_dir.string(), ec.message()));

    manifest.master_seed = config.master_seed;
    manifest.threads = config.threads;
    manifest.config = config_entries(config);
    manifest.created_utc = utc_timestamp();
    manifest.outputs = {opt.command + ".csv"};
    if (opt.command == "single-trial")
        manifest.outputs.push_back("channel.json");
    const fs::path manifest_file = out_dir / "manifest.json";
    write_atomic(manifest_file, manifest_to_json(manifest));

    auto finish = [&](const std::string &csv, const std::string &status) {
        write_atomic(out_dir / (opt.command + ".csv"), with_schema_line(opt.command, csv));
        manifest.status = status;
        write_atomic(manifest_file, manifest_to_json(manifest));
    };

    int code = kOk;
    if (opt.command == "crd-sweep")
    {
        finish(to_csv(run_crd_sweep(config)), "complete");
    }
    else if (opt.command == "ser-sweep")
    {
        IterationTable table;
        if (!opt.iterations_path.empty())
            table = parse_iteration_csv(read_text_file(opt.iterations_path));
        else
            table = iteration_table_from(run_crd_sweep(config));
        finish(to_csv(run_ser_sweep(config, table)), "complete");
    }
    else if (opt.command == "complexity-sweep")
    {
        const auto t_user = config.complexity_calibrate ? calibrated_t_user(config) : config.complexity_t_user;
        finish(to_csv(run_complexity_sweep(config, config.ms_grid, config.kbar_grid, t_user)), "complete");
    }
    else if (opt.command == "single-trial")
    {
        const ArrayGeometry geometry = build_geometry(config);
        const auto ch = draw_realization(config, geometry, config.normalizations.front(),
                                         mix_seed(config.master_seed, {8, opt.trial}));
        write_atomic(out_dir / "channel.json", channel_to_json(ch));
        finish(single_trial_csv(config, ch, config.sigma2_dbm.front()), "complete");
    }
    else if (opt.command == "verify")
    {
        const auto checks = run_self_checks(config);
        std::string csv = "check,passed,detail\n";
        bool all = true;
        for (const auto &c : checks)
        {
            csv += fmt::format("\"{}\",{},\"{}\"\n", c.name, c.passed ? 1 : 0, c.detail);
            if (!opt.quiet)
                std::cout << fmt::format("[{}] {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
            all = all && c.passed;
        }
        finish(csv, all ? "complete" : "failed");
        code = all ? kOk : kVerifyFailed;
    }
    if (!opt.quiet)
        std::cout << fmt::format("wrote {}\n", (out_dir / (opt.command + ".csv")).string());
    return code;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Randomized Kaczmarz receive combining for subarray-based XL-MIMO uplink"};
    Options opt;
    std::uint64_t seed = 0;
    app.add_option("command", opt.command, "crd-sweep | ser-sweep | complexity-sweep | single-trial | verify")
        ->required();
    auto *config_opt = app.add_option("--config", opt.config_path, "Flat key = value config file");
    app.add_option("--set", opt.overrides, "Override a config key (key=value), repeatable");
    app.add_option("--out", opt.out_dir, "Output directory")->required();
    auto *seed_opt = app.add_option("--seed", seed, "Master seed");
    app.add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--iterations", opt.iterations_path, "crd-sweep CSV with per-user iteration counts (ser-sweep)");
    auto *manifest_opt =
        app.add_option("--manifest", opt.manifest_path, "Rerun with the config and seed of an earlier manifest");
    app.add_option("--trial", opt.trial, "Trial index (single-trial)");
    app.add_flag("--quiet", opt.quiet, "Suppress progress output");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        return kUsage;
    }

    if (std::find_if(kCommands.begin(), kCommands.end(), [&](const char *c) { return opt.command == c; }) ==
        kCommands.end())
    {
        std::cerr << fmt::format("xlk: unknown command '{}'\n{}", opt.command, app.help());
        return kUsage;
    }
    if (manifest_opt->count() == 0 && (config_opt->count() == 0 || seed_opt->count() == 0))
    {
        std::cerr << "xlk: --config and --seed are required (or --manifest)\n";
        return kUsage;
    }
    if (seed_opt->count())
        opt.seed = seed;

    try
    {
        return run(opt);
    }
    catch (const ConfigError &e)
    {
        std::cerr << "xlk: config error: " << e.what() << '\n';
        return kConfig;
    }
    catch (const ModelError &e)
    {
        std::cerr << "xlk: model error: " << e.what() << '\n';
        return kModel;
    }
    catch (const IoError &e)
    {
        std::cerr << "xlk: io error: " << e.what() << '\n';
        return kIo;
    }
    catch (const std::exception &e)
    {
        std::cerr << "xlk: internal error: " << e.what() << '\n';
        return kInternal;
    }
}
