#include "phantom.hpp"

#include <random>

namespace gazeseg::tools {

ImageVolume make_phantom(int width, int height, int depth, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> noise(-20, 20);
    std::vector<std::int16_t> voxels(static_cast<std::size_t>(width) * height * depth);
    for (auto& v : voxels)
        v = static_cast<std::int16_t>(noise(rng));

    for (int z = 0; z < depth; ++z) {
        std::uniform_int_distribution<int> cx(width / 5, width - width / 5);
        std::uniform_int_distribution<int> cy(height / 5, height - height / 5);
        std::uniform_int_distribution<int> radius(std::max(2, width / 16), std::max(3, width / 6));
        std::uniform_int_distribution<int> level(300, 1200);
        for (int disc = 0; disc < 3; ++disc) {
            const int x0 = cx(rng), y0 = cy(rng), r = radius(rng);
            const auto value = static_cast<std::int16_t>(level(rng));
            for (int y = std::max(0, y0 - r); y < std::min(height, y0 + r + 1); ++y)
                for (int x = std::max(0, x0 - r); x < std::min(width, x0 + r + 1); ++x)
                    if ((x - x0) * (x - x0) + (y - y0) * (y - y0) <= r * r)
                        voxels[(static_cast<std::size_t>(z) * height + y) * width + x] = value;
        }
    }
    return ImageVolume(width, height, depth, Spacing{1.0, 1.0, 1.0}, std::move(voxels));
}

} // namespace gazeseg::tools
