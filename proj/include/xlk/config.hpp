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

#ifndef XLK_CONFIG_HPP
#define XLK_CONFIG_HPP

#include "xlk/harness.hpp"

#include <string>
#include <utility>
#include <vector>

namespace xlk
{

// Flat config files: one `dotted.key = value` per line, `#` starts a comment,
// lists are comma separated. Unknown keys are rejected.

// Sets one key; throws ConfigError naming the key on unknown keys or bad values.
void apply_setting(ExperimentConfig &config, const std::string &key, const std::string &value);

// Splits "key=value" (as given to --set)
std::pair<std::string, std::string> split_assignment(const std::string &text);

// Parses config text on top of the defaults, then applies overrides in order and validates.
ExperimentConfig parse_config(const std::string &text, const std::vector<std::string> &overrides = {});
ExperimentConfig load_config_file(const std::string &path, const std::vector<std::string> &overrides = {});

// Every key with its resolved value, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig &config);

// Config text that parses back to the same configuration.
std::string to_config_text(const ExperimentConfig &config);

std::vector<std::string> known_config_keys();

} // namespace xlk

#endif
