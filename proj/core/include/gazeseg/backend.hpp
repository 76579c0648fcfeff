#pragma once

#include "gazeseg/image_volume.hpp"
#include "gazeseg/prompt.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>

namespace gazeseg {

struct SegmentRequest {
    std::uint64_t request_id = 0;
    std::string image_id;
    int slice_index = 0;
    PromptSet prompt;
};

struct SegmentResult {
    std::uint64_t request_id = 0;
    MaskSlice mask;
    double score = 1.0;
    double elapsed_ms = 0.0;
};

/// Promptable segmenter. prepare() caches per-slice state so that segment()
/// only pays for the prompt. Implementations are driven by one caller at a
/// time (see Dispatcher).
class SegmentationBackend {
public:
    virtual ~SegmentationBackend() = default;

    /// Throws Error{BackendUnavailable} when the backend cannot load the slice.
    virtual void prepare(std::shared_ptr<const ImageVolume> volume, int slice_index) = 0;

    /// Throws Error{NotPrepared}, Error{EmptyPrompt} or Error{BackendUnavailable}.
    virtual SegmentResult segment(const SegmentRequest& request) = 0;

    virtual std::string name() const = 0;
};

/// Pixels 4-connected to a seed through pixels within `tolerance` of that
/// seed's own intensity; union over seeds. Seeds must lie inside the slice.
Bitmask region_grow_reference(SliceView slice, std::span<const PromptPoint> seeds, double tolerance);

/// 10% of the slice's intensity range.
double default_tolerance(SliceView slice) noexcept;

/// Deterministic model-free backend built on region_grow_reference.
class ReferenceBackend final : public SegmentationBackend {
public:
    /// std::nullopt selects default_tolerance() per prepared slice.
    explicit ReferenceBackend(std::optional<double> tolerance = std::nullopt);

    void prepare(std::shared_ptr<const ImageVolume> volume, int slice_index) override;
    SegmentResult segment(const SegmentRequest& request) override;
    std::string name() const override { return "reference"; }

    double active_tolerance() const noexcept { return active_tolerance_; }

private:
    std::optional<double> tolerance_;
    std::shared_ptr<const ImageVolume> volume_;
    int slice_index_ = -1;
    double active_tolerance_ = 0.0;
};

} // namespace gazeseg
