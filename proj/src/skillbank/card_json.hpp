// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "json.hpp"
#include "memopt/skillbank.hpp"

namespace memopt {

nlohmann::ordered_json edit_card_to_json(const EditCard &card);
// Throws kConfig on missing or mistyped fields.
EditCard edit_card_from_json(const nlohmann::json &j);

}  // namespace memopt
