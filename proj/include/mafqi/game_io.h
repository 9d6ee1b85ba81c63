// Copyright 2026 The MA-FQI Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MAFQI_GAME_IO_H_
#define MAFQI_GAME_IO_H_

#include <string>

#include "json.hpp"
#include "mafqi/game.h"

namespace mafqi {

inline constexpr int kGameSchemaVersion = 1;

// Versioned JSON document: spec fields, reward family and kernel family with
// their parameter arrays. Parameters round-trip bit-exactly.
nlohmann::json game_to_json(const Game& game);

// Rebuilds the game through the validating constructors. Throws ConfigError
// on schema problems.
Game game_from_json(const nlohmann::json& doc);

nlohmann::json spec_to_json(const GameSpec& spec);
GameSpec spec_from_json(const nlohmann::json& doc);

nlohmann::json local_function_to_json(const LocalFunction& f);
LocalFunction local_function_from_json(const nlohmann::json& doc);
nlohmann::json kernel_to_json(const MixtureKernel& kernel);
MixtureKernel kernel_from_json(const nlohmann::json& doc);

}  // namespace mafqi

#endif  // MAFQI_GAME_IO_H_
