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

#pragma once

#include "../io.hpp"
#include <graphfog/emergency/canonical_data.hpp>
#include "scenario.hpp"

namespace graphfog::emergency {

/// The shipped city: 25 road nodes, 41 edges, and the four-tier device topology.
inline ScenarioInputs canonical_inputs() {
  return {io::parse_json(canonical::kTopologyJson), io::parse_json(canonical::kApplicationJson),
          io::parse_json(canonical::kRoadNetworkJson)};
}

}  // namespace graphfog::emergency
