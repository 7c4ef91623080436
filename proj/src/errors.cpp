// Copyright 2026 The oais Authors
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

#include "oais/errors.hpp"

namespace oais {

NonFiniteError non_finite(const std::string& what, long index) {
  return NonFiniteError(what, index);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UnsupportedDimensionError*>(&e) != nullptr) {
    return kExitUnsupportedDimension;
  }
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) {
    return kExitNumerical;
  }
  if (dynamic_cast<const ConfigError*>(&e) != nullptr ||
      dynamic_cast<const ContractViolation*>(&e) != nullptr) {
    return kExitConfig;
  }
  return 1;
}

}  // namespace oais
