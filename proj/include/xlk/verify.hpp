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

#ifndef XLK_VERIFY_HPP
#define XLK_VERIFY_HPP

#include "xlk/harness.hpp"

#include <string>
#include <vector>

namespace xlk
{

struct VerifyCheck
{
    std::string name;
    bool passed = false;
    std::string detail;
};

// Quick consistency checks on a configuration: combiner agreement, operation
// counts, closed-form complexity values and seeded determinism.
std::vector<VerifyCheck> run_self_checks(const ExperimentConfig &config);

} // namespace xlk

#endif
