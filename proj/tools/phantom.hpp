#pragma once

#include "gazeseg/image_volume.hpp"

#include <cstdint>

namespace gazeseg::tools {

/// Synthetic volume: background noise with a few flat-intensity discs per
/// slice, so the region grower has clean targets.
ImageVolume make_phantom(int width, int height, int depth, std::uint64_t seed);

} // namespace gazeseg::tools
