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

#include <stdexcept>
#include <string>

namespace graphfog {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input: topology, application, scenario or config.
class ScenarioError : public Error {
 public:
  using Error::Error;
};

/// A contract violated while the simulation is running.
class SimulationError : public Error {
 public:
  using Error::Error;
};

/// Bad command line.
class UsageError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

#define GRAPHFOG_DEFINE_ERROR(Name, Base) \
  class Name : public Base {              \
   public:                                \
    using Base::Base;                     \
  }

// engine
GRAPHFOG_DEFINE_ERROR(SchedulingInPast, SimulationError);
GRAPHFOG_DEFINE_ERROR(ClockRegression, SimulationError);

// topology
GRAPHFOG_DEFINE_ERROR(DuplicateId, ScenarioError);
GRAPHFOG_DEFINE_ERROR(DanglingLink, ScenarioError);
GRAPHFOG_DEFINE_ERROR(NonPositiveBandwidth, ScenarioError);
GRAPHFOG_DEFINE_ERROR(InvalidTopology, ScenarioError);
GRAPHFOG_DEFINE_ERROR(LinkDown, SimulationError);
GRAPHFOG_DEFINE_ERROR(DeviceDown, SimulationError);
GRAPHFOG_DEFINE_ERROR(UnknownSource, SimulationError);
GRAPHFOG_DEFINE_ERROR(UnknownTarget, SimulationError);
GRAPHFOG_DEFINE_ERROR(Unreachable, SimulationError);

// application
GRAPHFOG_DEFINE_ERROR(InvalidApplication, ScenarioError);
GRAPHFOG_DEFINE_ERROR(ModuleNotPlaced, SimulationError);
GRAPHFOG_DEFINE_ERROR(UnplaceableModule, ScenarioError);

// emergency scenario
GRAPHFOG_DEFINE_ERROR(RoleCountMismatch, ScenarioError);
GRAPHFOG_DEFINE_ERROR(NotConnected, ScenarioError);
GRAPHFOG_DEFINE_ERROR(WrongEdgeCount, ScenarioError);
GRAPHFOG_DEFINE_ERROR(EsnDown, SimulationError);
GRAPHFOG_DEFINE_ERROR(ZoneUnreachable, SimulationError);

// harness
GRAPHFOG_DEFINE_ERROR(ConfigError, ScenarioError);

#undef GRAPHFOG_DEFINE_ERROR

}  // namespace graphfog
