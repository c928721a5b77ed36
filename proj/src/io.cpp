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

#include "xlk/io.hpp"

#include <fmt/format.h>

#include <json.hpp>

#include <ctime>
#include <fstream>
#include <sstream>

namespace xlk
{

using nlohmann::json;

std::string read_text_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(fmt::format("cannot read '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError(fmt::format("cannot write '{}'", path));
    out << text;
    out.flush();
    if (!out)
        throw IoError(fmt::format("write to '{}' failed", path));
}

namespace
{

json complex_matrix_json(const CMatrix &A)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < A.rows(); ++i)
    {
        json row = json::array();
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            row.push_back({A(i, j).real(), A(i, j).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

json real_matrix_json(const RMatrix &A)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < A.rows(); ++i)
    {
        json row = json::array();
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            row.push_back(A(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

template <class Matrix, class Read>
Matrix matrix_from_json(const json &rows, Read read)
{
    const auto R = static_cast<Eigen::Index>(rows.size());
    const auto C = R ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
    Matrix A(R, C);
    for (Eigen::Index i = 0; i < R; ++i)
    {
        const auto &row = rows.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != C)
            throw IoError("ragged matrix in channel JSON");
        for (Eigen::Index j = 0; j < C; ++j)
            A(i, j) = read(row.at(static_cast<std::size_t>(j)));
    }
    return A;
}

} // namespace

std::string channel_to_json(const ChannelRealization &channel)
{
    json vrs = json::array();
    for (const auto &vr : channel.vrs)
        vrs.push_back({{"center_m", vr.center_m},
                       {"half_length_m", vr.half_length_m},
                       {"mask", vr.mask},
                       {"D_total", vr.D_total},
                       {"D_per_subarray", vr.D_per_subarray}});
    json j = {{"M", channel.M()},
              {"K", channel.K()},
              {"S", channel.S},
              {"Ms", channel.Ms},
              {"normalization", std::string(to_string(channel.normalization))},
              {"H", complex_matrix_json(channel.H)},
              {"path_loss", real_matrix_json(channel.path_loss)},
              {"vrs", std::move(vrs)}};
    return j.dump(1);
}

ChannelRealization channel_from_json(const std::string &text)
{
    try
    {
        const json j = json::parse(text);
        ChannelRealization ch;
        ch.S = j.at("S").get<std::size_t>();
        ch.Ms = j.at("Ms").get<std::size_t>();
        ch.normalization = parse_normalization(j.at("normalization").get<std::string>());
        ch.H = matrix_from_json<CMatrix>(j.at("H"), [](const json &e) {
            return cplx(e.at(0).get<double>(), e.at(1).get<double>());
        });
        ch.path_loss = matrix_from_json<RMatrix>(j.at("path_loss"), [](const json &e) { return e.get<double>(); });
        for (const auto &v : j.at("vrs"))
        {
            VisibilityRegion vr;
            vr.center_m = v.at("center_m").get<double>();
            vr.half_length_m = v.at("half_length_m").get<double>();
            vr.mask = v.at("mask").get<std::vector<bool>>();
            vr.D_total = v.at("D_total").get<std::size_t>();
            vr.D_per_subarray = v.at("D_per_subarray").get<std::vector<std::size_t>>();
            ch.vrs.push_back(std::move(vr));
        }
        if (ch.M() != j.at("M").get<std::size_t>() || ch.K() != j.at("K").get<std::size_t>() ||
            ch.S * ch.Ms != ch.M() || ch.vrs.size() != ch.K())
            throw IoError("inconsistent dimensions in channel JSON");
        return ch;
    }
    catch (const json::exception &e)
    {
        throw IoError(fmt::format("malformed channel JSON: {}", e.what()));
    }
}

std::string manifest_to_json(const RunManifest &m)
{
    json config = json::object();
    for (const auto &[k, v] : m.config)
        config[k] = v;
    json j = {{"command", m.command},
              {"master_seed", m.master_seed},
              {"threads", m.threads},
              {"config_path", m.config_path},
              {"config", std::move(config)},
              {"overrides", m.overrides},
              {"outputs", m.outputs},
              {"version", m.version},
              {"created_utc", m.created_utc},
              {"status", m.status},
              {"csv_schema", kCsvSchema}};
    return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string &text)
{
    try
    {
        const json j = json::parse(text);
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.master_seed = j.at("master_seed").get<std::uint64_t>();
        m.threads = j.value("threads", std::size_t{1});
        m.config_path = j.value("config_path", std::string());
        for (const auto &[k, v] : j.at("config").items())
            m.config.emplace_back(k, v.get<std::string>());
        m.overrides = j.value("overrides", std::vector<std::string>{});
        m.outputs = j.value("outputs", std::vector<std::string>{});
        m.version = j.value("version", std::string());
        m.created_utc = j.value("created_utc", std::string());
        m.status = j.value("status", std::string());
        return m;
    }
    catch (const json::exception &e)
    {
        throw IoError(fmt::format("malformed manifest: {}", e.what()));
    }
}

std::string utc_timestamp()
{
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace xlk
