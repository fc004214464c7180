#include "core/rng.hpp"

#include <cmath>

#include "core/common.hpp"

namespace rockid {

uint64_t stream_id(std::string_view tag, uint64_t index) {
  uint64_t h = fnv1a64(tag);
  return Rng::mix(h ^ Rng::mix(index));
}

}  // namespace rockid
