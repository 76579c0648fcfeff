#include "gazeseg/gaze_stream.hpp"

#include "gazeseg/errors.hpp"
#include "text_util.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>

namespace gazeseg {

FixationDetector::FixationDetector(FixationParams params) : params_(params)
{
    if (!(params_.dispersion_px >= 0.0) || params_.min_duration_us <= 0)
        fail(ErrorKind::InvalidArgument, "fixation parameters must be positive");
}

bool FixationDetector::fits(ScreenPoint p) const noexcept
{
    if (run_.empty())
        return true;
    const double x0 = std::min(min_x_.front().value, p.x);
    const double x1 = std::max(max_x_.front().value, p.x);
    const double y0 = std::min(min_y_.front().value, p.y);
    const double y1 = std::max(max_y_.front().value, p.y);
    return (x1 - x0) + (y1 - y0) <= params_.dispersion_px;
}

void FixationDetector::append(const GazeSample& s)
{
    const auto seq = next_seq_++;
    if (run_.empty())
        front_seq_ = seq;
    run_.push_back(s);
    auto push_min = [seq](std::deque<Extreme>& d, double v) {
        while (!d.empty() && d.back().value >= v)
            d.pop_back();
        d.push_back({seq, v});
    };
    auto push_max = [seq](std::deque<Extreme>& d, double v) {
        while (!d.empty() && d.back().value <= v)
            d.pop_back();
        d.push_back({seq, v});
    };
    push_min(min_x_, s.point.x);
    push_max(max_x_, s.point.x);
    push_min(min_y_, s.point.y);
    push_max(max_y_, s.point.y);
}

void FixationDetector::pop_front()
{
    for (auto* d : {&min_x_, &max_x_, &min_y_, &max_y_})
        if (!d->empty() && d->front().seq == front_seq_)
            d->pop_front();
    run_.pop_front();
    ++front_seq_;
}

void FixationDetector::clear_run()
{
    run_.clear();
    min_x_.clear();
    max_x_.clear();
    min_y_.clear();
    max_y_.clear();
}

std::optional<Fixation> FixationDetector::take_if_qualifies()
{
    std::optional<Fixation> out;
    if (run_.size() >= 2 && run_.back().t_us - run_.front().t_us >= params_.min_duration_us) {
        double sx = 0.0;
        double sy = 0.0;
        for (const auto& s : run_) {
            sx += s.point.x;
            sy += s.point.y;
        }
        const auto n = static_cast<double>(run_.size());
        out = Fixation{{sx / n, sy / n}, run_.front().t_us, run_.back().t_us - run_.front().t_us, run_.size()};
    }
    clear_run();
    return out;
}

std::optional<Fixation> FixationDetector::push(const GazeSample& sample)
{
    if (last_t_us_ && sample.t_us <= *last_t_us_)
        fail(ErrorKind::NonMonotonicTimestamp,
             "sample at t_us=" + std::to_string(sample.t_us) + " after t_us=" + std::to_string(*last_t_us_));
    last_t_us_ = sample.t_us;

    if (!sample.valid)
        return take_if_qualifies();

    if (fits(sample.point)) {
        append(sample);
        return std::nullopt;
    }
    if (run_.back().t_us - run_.front().t_us >= params_.min_duration_us) {
        auto fix = take_if_qualifies();
        append(sample);
        return fix;
    }
    while (!run_.empty() && !fits(sample.point))
        pop_front();
    append(sample);
    return std::nullopt;
}

std::optional<Fixation> FixationDetector::flush()
{
    return take_if_qualifies();
}

void FixationDetector::reset()
{
    clear_run();
}

std::vector<Fixation> detect_fixations_batch(std::span<const GazeSample> samples, FixationParams params)
{
    FixationDetector det(params);
    std::vector<Fixation> out;
    for (const auto& s : samples)
        if (auto f = det.push(s))
            out.push_back(*f);
    if (auto f = det.flush())
        out.push_back(*f);
    return out;
}

std::vector<GazeSample> simulate_scanpath(const ScanpathSpec& spec, std::uint64_t seed)
{
    if (!(spec.sample_rate_hz > 0.0))
        fail(ErrorKind::InvalidArgument, "sample_rate_hz must be positive");
    if (spec.transit_samples < 0)
        fail(ErrorKind::InvalidArgument, "transit_samples must be non-negative");
    for (const auto& t : spec.targets)
        if (!(t.dwell_ms > 0.0) || !(t.jitter_px >= 0.0))
            fail(ErrorKind::InvalidArgument, "scanpath targets need dwell_ms > 0 and jitter_px >= 0");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<GazeSample> out;
    std::int64_t k = 0;
    auto stamp = [&] { return static_cast<std::int64_t>(std::llround(static_cast<double>(k++) * 1e6 / spec.sample_rate_hz)); };

    for (std::size_t i = 0; i < spec.targets.size(); ++i) {
        const auto& t = spec.targets[i];
        const auto n = std::llround(t.dwell_ms * spec.sample_rate_hz / 1000.0);
        for (long long j = 0; j < n; ++j) {
            ScreenPoint p = t.target;
            if (t.jitter_px > 0.0) {
                p.x += t.jitter_px * unit(rng);
                p.y += t.jitter_px * unit(rng);
            }
            out.push_back({stamp(), p, true});
        }
        if (i + 1 < spec.targets.size()) {
            const auto& a = t.target;
            const auto& b = spec.targets[i + 1].target;
            const int m = spec.transit_samples;
            for (int j = 1; j <= m; ++j) {
                const double u = static_cast<double>(j) / (m + 1);
                out.push_back({stamp(), {a.x + (b.x - a.x) * u, a.y + (b.y - a.y) * u}, true});
            }
        }
    }
    return out;
}

ScanpathSpec read_scanpath(std::istream& in)
{
    ScanpathSpec spec;
    std::string line;
    int no = 0;
    auto bad = [&](const std::string& why) {
        fail(ErrorKind::InvalidArgument, "scanpath line " + std::to_string(no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++no;
        const auto body = detail::strip_comment(line);
        if (body.empty())
            continue;
        const auto tok = detail::split_ws(body);
        if (tok[0] == "rate" && tok.size() == 2) {
            auto v = detail::parse_number<double>(tok[1]);
            if (!v || !(*v > 0.0))
                bad("rate must be a positive number");
            spec.sample_rate_hz = *v;
        } else if (tok[0] == "transit" && tok.size() == 2) {
            auto v = detail::parse_number<int>(tok[1]);
            if (!v || *v < 0)
                bad("transit must be a non-negative integer");
            spec.transit_samples = *v;
        } else if (tok[0] == "target" && tok.size() == 5) {
            std::array<double, 4> v{};
            for (std::size_t i = 0; i < 4; ++i) {
                auto d = detail::parse_number<double>(tok[i + 1]);
                if (!d || !std::isfinite(*d))
                    bad("target fields must be numbers");
                v[i] = *d;
            }
            if (!(v[2] > 0.0) || v[3] < 0.0)
                bad("dwell_ms must be > 0 and jitter_px >= 0");
            spec.targets.push_back({{v[0], v[1]}, v[2], v[3]});
        } else {
            bad("expected `rate`, `transit` or `target` directive");
        }
    }
    return spec;
}

void write_scanpath(std::ostream& out, const ScanpathSpec& spec)
{
    out << "rate " << detail::format_double(spec.sample_rate_hz) << '\n';
    out << "transit " << spec.transit_samples << '\n';
    for (const auto& t : spec.targets)
        out << "target " << detail::format_double(t.target.x) << ' ' << detail::format_double(t.target.y) << ' '
            << detail::format_double(t.dwell_ms) << ' ' << detail::format_double(t.jitter_px) << '\n';
}

std::string format_gaze_line(const GazeSample& s)
{
    return std::to_string(s.t_us) + ' ' + detail::format_double(s.point.x) + ' ' + detail::format_double(s.point.y) +
           ' ' + (s.valid ? '1' : '0');
}

GazeSample parse_gaze_line(std::string_view line)
{
    const auto tok = detail::split_ws(detail::trim(line));
    if (tok.size() != 4)
        fail(ErrorKind::InvalidArgument, "gaze line needs `t_us sx sy valid`: '" + std::string(line) + "'");
    auto t = detail::parse_number<std::int64_t>(tok[0]);
    auto x = detail::parse_number<double>(tok[1]);
    auto y = detail::parse_number<double>(tok[2]);
    if (!t || !x || !y || !std::isfinite(*x) || !std::isfinite(*y) || (tok[3] != "0" && tok[3] != "1"))
        fail(ErrorKind::InvalidArgument, "malformed gaze line: '" + std::string(line) + "'");
    return {*t, {*x, *y}, tok[3] == "1"};
}

std::vector<GazeSample> read_gaze_log(std::istream& in)
{
    std::vector<GazeSample> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto body = detail::strip_comment(line);
        if (body.empty())
            continue;
        auto s = parse_gaze_line(body);
        if (!out.empty() && s.t_us <= out.back().t_us)
            fail(ErrorKind::NonMonotonicTimestamp, "gaze log timestamps must strictly increase at t_us=" +
                                                       std::to_string(s.t_us));
        out.push_back(s);
    }
    return out;
}

void write_gaze_log(std::ostream& out, std::span<const GazeSample> samples)
{
    for (const auto& s : samples)
        out << format_gaze_line(s) << '\n';
}

} // namespace gazeseg
