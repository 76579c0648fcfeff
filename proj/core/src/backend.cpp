#include "gazeseg/backend.hpp"

#include "gazeseg/errors.hpp"

#include <chrono>
#include <cstdlib>
#include <vector>

namespace gazeseg {

Bitmask region_grow_reference(SliceView slice, std::span<const PromptPoint> seeds, double tolerance)
{
    const int w = slice.width;
    const int h = slice.height;
    Bitmask mask(w, h);
    // Pixel visited by the flood of some earlier seed with the same
    // reference intensity: its component is already in the mask.
    std::vector<std::int32_t> owner(static_cast<std::size_t>(w) * h, -1);
    std::vector<std::int32_t> stack;

    for (const auto& seed : seeds) {
        if (seed.x < 0 || seed.x >= w || seed.y < 0 || seed.y >= h)
            fail(ErrorKind::InvalidArgument,
                 "seed (" + std::to_string(seed.x) + "," + std::to_string(seed.y) + ") outside slice");
        const std::int32_t ref = slice.at(seed.x, seed.y);
        const auto seed_idx = static_cast<std::int32_t>(seed.y * w + seed.x);
        if (owner[static_cast<std::size_t>(seed_idx)] == ref)
            continue;

        // flood with a per-seed visit stamp
        std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
        auto admit = [&](std::int32_t idx) {
            if (seen[static_cast<std::size_t>(idx)])
                return;
            if (std::abs(static_cast<double>(slice.pixels[static_cast<std::size_t>(idx)]) - ref) > tolerance)
                return;
            seen[static_cast<std::size_t>(idx)] = 1;
            stack.push_back(idx);
        };
        admit(seed_idx);
        while (!stack.empty()) {
            const auto idx = stack.back();
            stack.pop_back();
            mask.bits[static_cast<std::size_t>(idx)] = 1;
            owner[static_cast<std::size_t>(idx)] = ref;
            const int x = idx % w;
            const int y = idx / w;
            if (x > 0)
                admit(idx - 1);
            if (x + 1 < w)
                admit(idx + 1);
            if (y > 0)
                admit(idx - w);
            if (y + 1 < h)
                admit(idx + w);
        }
    }
    return mask;
}

double default_tolerance(SliceView slice) noexcept
{
    return 0.1 * (static_cast<double>(max_intensity(slice)) - static_cast<double>(min_intensity(slice)));
}

ReferenceBackend::ReferenceBackend(std::optional<double> tolerance) : tolerance_(tolerance)
{
    if (tolerance_ && !(*tolerance_ >= 0.0))
        fail(ErrorKind::InvalidArgument, "tolerance must be non-negative");
}

void ReferenceBackend::prepare(std::shared_ptr<const ImageVolume> volume, int slice_index)
{
    if (!volume)
        fail(ErrorKind::BackendUnavailable, "no volume to prepare");
    const auto view = volume->slice(slice_index);
    active_tolerance_ = tolerance_ ? *tolerance_ : default_tolerance(view);
    volume_ = std::move(volume);
    slice_index_ = slice_index;
}

SegmentResult ReferenceBackend::segment(const SegmentRequest& request)
{
    const auto start = std::chrono::steady_clock::now();
    if (!volume_ || request.image_id != volume_->image_id() || request.slice_index != slice_index_)
        fail(ErrorKind::NotPrepared, "slice " + std::to_string(request.slice_index) + " of image " +
                                         request.image_id.substr(0, 12) + " is not prepared");
    if (request.prompt.points.empty())
        fail(ErrorKind::EmptyPrompt, "segment request carries no prompt points");
    const auto mask = region_grow_reference(volume_->slice(slice_index_), request.prompt.points, active_tolerance_);
    SegmentResult result;
    result.request_id = request.request_id;
    result.mask = MaskSlice::from_bitmask(mask, request.request_id);
    result.score = 1.0;
    result.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return result;
}

} // namespace gazeseg
