#pragma once

#include <cstddef>

namespace gtschr {

// Bounds for state-space exploration.
struct Limits {
  std::size_t max_depth = 16;
  std::size_t max_states = 10000;
};

}  // namespace gtschr
