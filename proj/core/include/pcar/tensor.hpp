#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace pcar {

// Named parameter tensor, row-major. The shape list is what the checkpoint
// stores and what adam_step validates against.
struct Tensor {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<double> data;

  std::int64_t count() const {
    std::int64_t n = 1;
    for (std::int64_t d : shape) n *= d;
    return n;
  }
};

}  // namespace pcar
