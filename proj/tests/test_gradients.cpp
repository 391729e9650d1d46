// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#include <gtest/gtest.h>

#include "support/grad_cases.hpp"

namespace {

using omama::testing::grad_case_names;
using omama::testing::run_grad_case;

class GradientCase : public ::testing::TestWithParam<std::string> {};

TEST_P(GradientCase, MatchesCentralDifferencesOverSeeds) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = run_grad_case(GetParam(), seed);
    EXPECT_GT(r.checked, 0u);
    EXPECT_LT(r.max_rel, 1e-4) << GetParam() << " seed " << seed << " max_abs " << r.max_abs;
  }
}

INSTANTIATE_TEST_SUITE_P(Ops, GradientCase, ::testing::ValuesIn(grad_case_names()),
                         [](const auto& info) { return info.param; });

}  // namespace
