#pragma once

// Maps the conventional <nlohmann/json.hpp> include onto the vendored
// single-header copy.
#include "../../vendor/json.hpp"
