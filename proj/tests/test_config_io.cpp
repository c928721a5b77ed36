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

#include <gtest/gtest.h>

using namespace xlk;

TEST(ConfigText, DefaultsWhenEmpty)
{
    const auto c = parse_config("");
    EXPECT_EQ(c.M, 100u);
    EXPECT_EQ(c.S, 4u);
    EXPECT_EQ(c.K, 25u);
    EXPECT_EQ(c.sigma2_dbm, (std::vector<double>{-55, -50, -45, -40}));
    EXPECT_EQ(c.complexity_sigma2_dbm, -48.0);
}

TEST(ConfigText, ParsesKeysListsAndComments)
{
    const auto c = parse_config("# header\n"
                                "array.M = 64   # trailing comment\n"
                                "array.S=8\n"
                                "\n"
                                "sweep.sigma2_dbm = -50, -45\n"
                                "sweep.schedules = uniform,aa\n"
                                "sweep.normalizations = norm1\n"
                                "ser.constellation = qam16\n"
                                "complexity.calibrate = false\n"
                                "complexity.t_user.power = 7.5\n");
    EXPECT_EQ(c.M, 64u);
    EXPECT_EQ(c.S, 8u);
    EXPECT_EQ(c.sigma2_dbm, (std::vector<double>{-50, -45}));
    EXPECT_EQ(c.schedules, (std::vector<ScheduleMode>{ScheduleMode::Uniform, ScheduleMode::ActiveAntennas}));
    EXPECT_EQ(c.normalizations, (std::vector<Normalization>{Normalization::Norm1}));
    EXPECT_EQ(c.constellation, Constellation::QAM16);
    EXPECT_FALSE(c.complexity_calibrate);
    EXPECT_EQ(c.complexity_t_user.at(ScheduleMode::Power), 7.5);
}

TEST(ConfigText, OverridesApplyAfterFile)
{
    const auto c = parse_config("run.trials = 10\n", {"run.trials=3", "users.K = 9"});
    EXPECT_EQ(c.trials, 3u);
    EXPECT_EQ(c.K, 9u);
}

TEST(ConfigText, RejectsUnknownKeysAndBadValues)
{
    auto message = [](const std::string &text, std::vector<std::string> o = {}) {
        try
        {
            parse_config(text, o);
        }
        catch (const ConfigError &e)
        {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_NE(message("array.N = 3\n").find("array.N"), std::string::npos);
    EXPECT_NE(message("array.N = 3\n").find("line 1"), std::string::npos);
    EXPECT_NE(message("", {"bogus.key=1"}).find("bogus.key"), std::string::npos);
    EXPECT_NE(message("array.M = ten\n").find("array.M"), std::string::npos);
    EXPECT_NE(message("array.M = -4\n").find("array.M"), std::string::npos);
    EXPECT_NE(message("sweep.schedules = greedy\n").find("sweep.schedules"), std::string::npos);
    EXPECT_NE(message("array.M = 30\n").find("divisible"), std::string::npos);
    EXPECT_NE(message("just text\n").find("key=value"), std::string::npos);
    EXPECT_NE(message("sweep.deltas = \n").find("sweep.deltas"), std::string::npos);
    EXPECT_THROW(load_config_file("/nonexistent/xlk.cfg"), ConfigError);
}

TEST(ConfigText, RoundTrip)
{
    auto c = parse_config("", {"sweep.sigma2_dbm=-51.5,-44.25", "vr.sigma=0.3", "ser.fusion=equal"});
    const auto again = parse_config(to_config_text(c));
    EXPECT_EQ(config_entries(c), config_entries(again));
    EXPECT_EQ(known_config_keys().size(), config_entries(c).size());
}

TEST(ChannelJson, RoundTripIsExact)
{
    ExperimentConfig c;
    const auto g = build_geometry(c);
    const auto ch = draw_realization(c, g, Normalization::Norm1, 3);
    const auto back = channel_from_json(channel_to_json(ch));
    EXPECT_EQ(back.H, ch.H);
    EXPECT_EQ(back.path_loss, ch.path_loss);
    EXPECT_EQ(back.S, ch.S);
    EXPECT_EQ(back.Ms, ch.Ms);
    EXPECT_EQ(back.normalization, ch.normalization);
    ASSERT_EQ(back.vrs.size(), ch.vrs.size());
    for (std::size_t k = 0; k < ch.vrs.size(); ++k)
    {
        EXPECT_EQ(back.vrs[k].mask, ch.vrs[k].mask);
        EXPECT_EQ(back.vrs[k].D_per_subarray, ch.vrs[k].D_per_subarray);
        EXPECT_EQ(back.vrs[k].center_m, ch.vrs[k].center_m);
    }
    EXPECT_THROW(channel_from_json("{"), IoError);
    EXPECT_THROW(channel_from_json("{\"S\": 1}"), IoError);
}

TEST(Manifest, RoundTrip)
{
    RunManifest m;
    m.command = "crd-sweep";
    m.master_seed = 18446744073709551615ull;
    m.threads = 4;
    m.config = config_entries(ExperimentConfig{});
    m.overrides = {"run.trials=3"};
    m.outputs = {"crd-sweep.csv"};
    m.created_utc = utc_timestamp();
    m.status = "complete";
    const auto back = manifest_from_json(manifest_to_json(m));
    EXPECT_EQ(back.command, m.command);
    EXPECT_EQ(back.master_seed, m.master_seed);
    EXPECT_EQ(back.threads, 4u);
    EXPECT_EQ(back.overrides, m.overrides);
    EXPECT_EQ(back.outputs, m.outputs);
    EXPECT_EQ(back.status, "complete");
    // Keys come back sorted, values unchanged
    std::map<std::string, std::string> a(m.config.begin(), m.config.end()), b(back.config.begin(), back.config.end());
    EXPECT_EQ(a, b);
    EXPECT_EQ(m.created_utc.size(), 20u);
    EXPECT_THROW(manifest_from_json("[]"), IoError);
}

TEST(SelfChecks, PassOnDefaults)
{
    ExperimentConfig c;
    c.master_seed = 3;
    for (const auto &check : run_self_checks(c))
        EXPECT_TRUE(check.passed) << check.name << ": " << check.detail;
}
