#pragma once

#include <string>

#include "gradforge/model.hpp"

namespace gradforge {

// Versioned little-endian binary container: model config, layer specs, then
// flat parameter arrays in layer order with shape headers. Raw IEEE-754 bytes,
// so write/read round-trips bitwise.
void save_checkpoint(const std::string& path, const Network& net);
Network load_checkpoint(const std::string& path);

}  // namespace gradforge
