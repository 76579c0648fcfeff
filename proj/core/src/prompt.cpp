#include "gazeseg/prompt.hpp"

#include "gazeseg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace gazeseg {

std::string_view to_string(PromptMode mode) noexcept
{
    return mode == PromptMode::OnePoint ? "one_point" : "all_points";
}

std::optional<PromptMode> parse_prompt_mode(std::string_view text) noexcept
{
    if (text == "one_point")
        return PromptMode::OnePoint;
    if (text == "all_points")
        return PromptMode::AllPoints;
    return std::nullopt;
}

std::optional<PromptPoint> map_fixation(const Fixation& fixation, const Viewport& vp)
{
    const auto ip = screen_to_image(vp, fixation.centroid);
    if (!ip)
        return std::nullopt;
    const int x = std::min(static_cast<int>(std::floor(ip->x + 0.5)), vp.image_width - 1);
    const int y = std::min(static_cast<int>(std::floor(ip->y + 0.5)), vp.image_height - 1);
    return PromptPoint{x, y, PointLabel::Foreground, fixation.onset_us};
}

bool too_close(std::span<const PromptPoint> kept, const PromptPoint& p, int min_spacing_px) noexcept
{
    return std::any_of(kept.begin(), kept.end(), [&](const PromptPoint& q) {
        return std::max(std::abs(q.x - p.x), std::abs(q.y - p.y)) < min_spacing_px;
    });
}

namespace {

std::vector<PromptPoint> select_points(PromptMode mode, std::span<const Fixation> fixations, const Viewport& vp,
                                       const PromptParams& params)
{
    std::vector<PromptPoint> points;
    if (mode == PromptMode::OnePoint) {
        for (auto it = fixations.rbegin(); it != fixations.rend(); ++it) {
            if (auto p = map_fixation(*it, vp)) {
                points.push_back(*p);
                break;
            }
        }
        return points;
    }
    for (const auto& f : fixations) {
        auto p = map_fixation(f, vp);
        if (p && !too_close(points, *p, params.min_spacing_px))
            points.push_back(*p);
    }
    return points;
}

} // namespace

PromptSet build_prompt(PromptMode mode, std::span<const Fixation> fixations, const Viewport& vp,
                       std::string image_id, int slice_index, PromptParams params)
{
    auto points = select_points(mode, fixations, vp, params);
    if (points.empty())
        fail(ErrorKind::NoPromptPoints, "no fixation maps inside the displayed image");
    return PromptSet{std::move(image_id), slice_index, mode, std::move(points), 0};
}

PromptSet accumulate(const PromptSet& prev, const Fixation& fixation, const Viewport& vp, PromptParams params)
{
    if (prev.mode != PromptMode::AllPoints)
        fail(ErrorKind::ModeMismatch, "accumulate requires an all_points prompt set");
    PromptSet next = prev;
    auto p = map_fixation(fixation, vp);
    if (p && !too_close(next.points, *p, params.min_spacing_px)) {
        next.points.push_back(*p);
        ++next.revision;
    }
    return next;
}

PromptSet clear(const PromptSet& prev)
{
    PromptSet next = prev;
    next.points.clear();
    ++next.revision;
    return next;
}

PromptState::PromptState(PromptParams params) : params_(params)
{
    if (params_.min_spacing_px < 0)
        fail(ErrorKind::InvalidArgument, "min_spacing_px must be non-negative");
}

void PromptState::bind(std::string image_id, int slice_index, const Viewport& vp)
{
    bound_ = true;
    viewport_ = vp;
    history_.clear();
    current_.image_id = std::move(image_id);
    current_.slice_index = slice_index;
    current_.points.clear();
    ++current_.revision;
}

bool PromptState::replace_points(std::vector<PromptPoint> points)
{
    if (points == current_.points)
        return false;
    current_.points = std::move(points);
    ++current_.revision;
    return true;
}

bool PromptState::set_mode(PromptMode mode)
{
    mode_ = mode;
    current_.mode = mode;
    if (!bound_)
        return false;
    return replace_points(select_points(mode, history_, viewport_, params_));
}

bool PromptState::add_fixation(const Fixation& fixation)
{
    if (!bound_)
        return false;
    history_.push_back(fixation);
    if (!mode_)
        return false;
    if (*mode_ == PromptMode::AllPoints) {
        const auto before = current_.revision;
        current_ = accumulate(current_, fixation, viewport_, params_);
        return current_.revision != before;
    }
    auto p = map_fixation(fixation, viewport_);
    if (!p)
        return false;
    return replace_points({*p});
}

void PromptState::clear()
{
    history_.clear();
    current_ = gazeseg::clear(current_);
}

} // namespace gazeseg
