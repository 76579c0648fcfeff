#include "gazeseg/geometry.hpp"

#include "gazeseg/errors.hpp"
#include "text_util.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace gazeseg {

bool Viewport::valid() const noexcept
{
    return std::isfinite(x0) && std::isfinite(y0) && width > 0.0 && height > 0.0 && image_width >= 1 &&
           image_height >= 1;
}

Viewport Viewport::native(int image_width, int image_height) noexcept
{
    return Viewport{0.0, 0.0, static_cast<double>(image_width), static_cast<double>(image_height), image_width,
                    image_height};
}

CalibrationModel fit_calibration(std::span<const CalibrationPair> pairs)
{
    if (pairs.size() < 3)
        fail(ErrorKind::DegenerateCalibration, "need at least 3 calibration pairs, got " + std::to_string(pairs.size()));

    const auto n = static_cast<Eigen::Index>(pairs.size());
    Eigen::MatrixXd design(n, 3);
    Eigen::MatrixXd rhs(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = pairs[static_cast<std::size_t>(i)];
        design(i, 0) = p.raw.x;
        design(i, 1) = p.raw.y;
        design(i, 2) = 1.0;
        rhs(i, 0) = p.target.x;
        rhs(i, 1) = p.target.y;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < 3)
        fail(ErrorKind::DegenerateCalibration, "raw calibration points are collinear");

    const Eigen::MatrixXd sol = qr.solve(rhs);
    CalibrationModel model;
    model.coeffs = {sol(0, 0), sol(1, 0), sol(2, 0), sol(0, 1), sol(1, 1), sol(2, 1)};

    const double scale = std::max(std::abs(model.coeffs[0]) + std::abs(model.coeffs[1]),
                                  std::abs(model.coeffs[3]) + std::abs(model.coeffs[4]));
    if (!(std::abs(model.determinant()) > 1e-12 * scale * scale))
        fail(ErrorKind::DegenerateCalibration, "fitted linear part is singular (targets collinear)");

    double sq = 0.0;
    for (const auto& p : pairs) {
        const auto m = apply_calibration(model, p.raw);
        const double dx = p.target.x - m.x;
        const double dy = p.target.y - m.y;
        sq += dx * dx + dy * dy;
    }
    model.rms_residual = std::sqrt(sq / static_cast<double>(pairs.size()));
    return model;
}

ScreenPoint apply_calibration(const CalibrationModel& model, ScreenPoint raw) noexcept
{
    const auto& c = model.coeffs;
    return {c[0] * raw.x + c[1] * raw.y + c[2], c[3] * raw.x + c[4] * raw.y + c[5]};
}

std::optional<ImagePoint> screen_to_image(const Viewport& vp, ScreenPoint s) noexcept
{
    const double ix = (s.x - vp.x0) * vp.image_width / vp.width;
    const double iy = (s.y - vp.y0) * vp.image_height / vp.height;
    if (!(ix >= 0.0 && ix < vp.image_width && iy >= 0.0 && iy < vp.image_height))
        return std::nullopt;
    return ImagePoint{ix, iy};
}

ScreenPoint image_to_screen(const Viewport& vp, ImagePoint p) noexcept
{
    return {p.x * vp.width / vp.image_width + vp.x0, p.y * vp.height / vp.image_height + vp.y0};
}

std::vector<CalibrationPair> read_calibration_points(std::istream& in)
{
    std::vector<CalibrationPair> pairs;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto body = detail::strip_comment(line);
        if (body.empty())
            continue;
        const auto tok = detail::split_ws(body);
        std::array<double, 4> v{};
        bool ok = tok.size() == 4;
        for (std::size_t i = 0; ok && i < 4; ++i) {
            auto d = detail::parse_number<double>(tok[i]);
            ok = d.has_value() && std::isfinite(*d);
            if (ok)
                v[i] = *d;
        }
        if (!ok)
            fail(ErrorKind::InvalidArgument, "calibration points line " + std::to_string(no) +
                                                 ": expected `raw_x raw_y target_x target_y`");
        pairs.push_back({{v[0], v[1]}, {v[2], v[3]}});
    }
    return pairs;
}

void write_calibration_model(std::ostream& out, const CalibrationModel& model)
{
    static constexpr const char* names[] = {"a11", "a12", "a13", "a21", "a22", "a23"};
    for (std::size_t i = 0; i < 6; ++i)
        out << names[i] << '=' << detail::format_double(model.coeffs[i]) << '\n';
    out << "rms_residual=" << detail::format_double(model.rms_residual) << '\n';
}

CalibrationModel read_calibration_model(std::istream& in)
{
    static constexpr std::string_view names[] = {"a11", "a12", "a13", "a21", "a22", "a23"};
    CalibrationModel model;
    int seen = 0;
    for (const auto& kv : detail::read_key_values(in)) {
        auto v = detail::parse_number<double>(kv.value);
        if (!v)
            fail(ErrorKind::InvalidArgument, "calibration model line " + std::to_string(kv.line_no) + ": bad value");
        if (kv.key == "rms_residual") {
            model.rms_residual = *v;
            continue;
        }
        bool known = false;
        for (std::size_t i = 0; i < 6; ++i) {
            if (kv.key == names[i]) {
                model.coeffs[i] = *v;
                seen |= 1 << i;
                known = true;
            }
        }
        if (!known)
            fail(ErrorKind::InvalidArgument, "calibration model: unknown key '" + kv.key + "'");
    }
    if (seen != 0x3f)
        fail(ErrorKind::InvalidArgument, "calibration model: missing coefficients");
    if (model.determinant() == 0.0)
        fail(ErrorKind::DegenerateCalibration, "calibration model linear part is singular");
    return model;
}

} // namespace gazeseg
