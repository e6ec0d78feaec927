#pragma once

#include <stdexcept>

namespace dvrp {

// Thrown when a statistical routine has too few samples to say anything.
struct InsufficientDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dvrp
