#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace gazeseg {

/// Screen pixels, x rightward, y downward.
struct ScreenPoint {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const ScreenPoint&, const ScreenPoint&) = default;
};

/// Sub-pixel image coordinates of the displayed slice.
struct ImagePoint {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const ImagePoint&, const ImagePoint&) = default;
};

/// Screen rectangle the slice is drawn into, plus the slice's native size.
/// This rectangle is the whole screen-to-image mapping; calibration is applied
/// upstream to raw tracker samples.
struct Viewport {
    double x0 = 0.0;
    double y0 = 0.0;
    double width = 1.0;   ///< displayed width, screen px
    double height = 1.0;  ///< displayed height, screen px
    int image_width = 1;
    int image_height = 1;

    bool valid() const noexcept;
    static Viewport native(int image_width, int image_height) noexcept;

    friend bool operator==(const Viewport&, const Viewport&) = default;
};

/// Affine map raw tracker output -> screen pixels:
///   x' = a11 x + a12 y + a13,  y' = a21 x + a22 y + a23
struct CalibrationModel {
    std::array<double, 6> coeffs{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
    double rms_residual = 0.0;

    static CalibrationModel identity() noexcept { return {}; }
    double determinant() const noexcept { return coeffs[0] * coeffs[4] - coeffs[1] * coeffs[3]; }
};

struct CalibrationPair {
    ScreenPoint raw;
    ScreenPoint target;
};

/// Least-squares affine fit from at least three non-collinear pairs.
/// Throws Error{DegenerateCalibration} otherwise.
CalibrationModel fit_calibration(std::span<const CalibrationPair> pairs);

ScreenPoint apply_calibration(const CalibrationModel& model, ScreenPoint raw) noexcept;

/// std::nullopt when the point falls outside the displayed image
/// (the OutsideViewport case; such samples are not used as prompts).
std::optional<ImagePoint> screen_to_image(const Viewport& vp, ScreenPoint s) noexcept;

ScreenPoint image_to_screen(const Viewport& vp, ImagePoint p) noexcept;

/// `raw_x raw_y target_x target_y` per line, `#` comments ignored.
std::vector<CalibrationPair> read_calibration_points(std::istream& in);

void write_calibration_model(std::ostream& out, const CalibrationModel& model);
CalibrationModel read_calibration_model(std::istream& in);

} // namespace gazeseg
