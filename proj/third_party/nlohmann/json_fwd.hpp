#pragma once

// The vendored copy ships without the forward-declaration header; pulling
// the full header keeps the conventional include spelling working.
#include "json.hpp"
