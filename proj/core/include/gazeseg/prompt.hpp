#pragma once

#include "gazeseg/gaze_stream.hpp"
#include "gazeseg/geometry.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gazeseg {

enum class PromptMode { OnePoint, AllPoints };

std::string_view to_string(PromptMode mode) noexcept;
/// Accepts "one_point" / "all_points".
std::optional<PromptMode> parse_prompt_mode(std::string_view text) noexcept;

/// Only foreground prompts exist; refinement is strictly additive.
enum class PointLabel : int { Foreground = 1 };

struct PromptPoint {
    int x = 0;
    int y = 0;
    PointLabel label = PointLabel::Foreground;
    std::int64_t source_fixation_onset_us = 0;

    friend bool operator==(const PromptPoint&, const PromptPoint&) = default;
};

struct PromptSet {
    std::string image_id;
    int slice_index = 0;
    PromptMode mode = PromptMode::AllPoints;
    std::vector<PromptPoint> points;
    std::uint64_t revision = 0;

    friend bool operator==(const PromptSet&, const PromptSet&) = default;
};

struct PromptParams {
    int min_spacing_px = 10;  ///< Chebyshev distance below which a point is a duplicate
};

/// Rounds to the nearest pixel (ties toward +inf), clamped into the slice.
/// std::nullopt when the centroid is outside the viewport.
std::optional<PromptPoint> map_fixation(const Fixation& fixation, const Viewport& vp);

/// True when `p` is closer than min_spacing_px (Chebyshev) to any point of `kept`.
bool too_close(std::span<const PromptPoint> kept, const PromptPoint& p, int min_spacing_px) noexcept;

/// OnePoint keeps the newest in-viewport fixation; AllPoints keeps every
/// in-viewport fixation in onset order minus near-duplicates of earlier
/// points. The returned set has revision 0. Throws Error{NoPromptPoints}.
PromptSet build_prompt(PromptMode mode, std::span<const Fixation> fixations, const Viewport& vp,
                       std::string image_id, int slice_index, PromptParams params = {});

/// AllPoints refinement: appends the mapped fixation unless it is outside
/// the viewport or near an existing point. Revision increments only when the
/// point list changes. Throws Error{ModeMismatch} for a OnePoint set.
PromptSet accumulate(const PromptSet& prev, const Fixation& fixation, const Viewport& vp, PromptParams params = {});

/// Empty set bound to the same image/slice, revision + 1.
PromptSet clear(const PromptSet& prev);

/// Prompt bookkeeping owned by the engine: the fixation history of the bound
/// slice, the active mode (none until the user picks one) and the current set.
class PromptState {
public:
    explicit PromptState(PromptParams params = {});

    /// Binds to a new image/slice/viewport; history and points are dropped.
    void bind(std::string image_id, int slice_index, const Viewport& vp);

    /// Returns true when the point list changed.
    bool set_mode(PromptMode mode);
    bool add_fixation(const Fixation& fixation);
    void clear();

    std::optional<PromptMode> mode() const noexcept { return mode_; }
    const PromptSet& current() const noexcept { return current_; }
    const std::vector<Fixation>& history() const noexcept { return history_; }
    bool bound() const noexcept { return bound_; }
    const PromptParams& params() const noexcept { return params_; }

private:
    bool replace_points(std::vector<PromptPoint> points);

    PromptParams params_;
    bool bound_ = false;
    Viewport viewport_;
    std::optional<PromptMode> mode_;
    std::vector<Fixation> history_;
    PromptSet current_;
};

} // namespace gazeseg
