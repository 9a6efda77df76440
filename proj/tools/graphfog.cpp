// Copyright 2026 The graphfog Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <exception>
#include <iostream>

#include "graphfog/harness.hpp"

int main(int argc, char** argv) {
  using namespace graphfog;
  try {
    auto config = parse_cli(argc, argv, std::cout);
    if (!config) return 0;
    const ExperimentReport report = run_experiment(*config);
    for (const auto& path : emit_report(report, config->formats, config->output_dir)) std::cout << path.string() << '\n';
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "graphfog: " << e.what() << '\n';
    return 2;
  } catch (const ScenarioError& e) {
    std::cerr << "graphfog: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "graphfog: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "graphfog: " << e.what() << '\n';
    return 4;
  }
}
