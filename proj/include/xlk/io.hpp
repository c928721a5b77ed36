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

#ifndef XLK_IO_HPP
#define XLK_IO_HPP

#include "xlk/channel.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace xlk
{

inline constexpr const char *kVersion = "0.1.0";
inline constexpr int kCsvSchema = 1;

class IoError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &text);

// Complex entries are stored as [re, im] pairs, matrices as row-major nested arrays.
std::string channel_to_json(const ChannelRealization &channel);
ChannelRealization channel_from_json(const std::string &text);

struct RunManifest
{
    std::string command;
    std::uint64_t master_seed = 0;
    std::size_t threads = 1;
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> config; // resolved key/value pairs
    std::vector<std::string> overrides;
    std::vector<std::string> outputs;
    std::string version = kVersion;
    std::string created_utc;
    std::string status = "running"; // running, complete, failed
};

std::string manifest_to_json(const RunManifest &manifest);
RunManifest manifest_from_json(const std::string &text);

// Current UTC time as YYYY-MM-DDTHH:MM:SSZ
std::string utc_timestamp();

} // namespace xlk

#endif
