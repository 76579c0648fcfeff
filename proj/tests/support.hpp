#pragma once

// Shared test fixtures: scratch directories, random generators, mock
// backends and brute-force oracles. The oracles are written from the
// textbook definitions and share no code with the library.

#include "gazeseg/backend.hpp"
#include "gazeseg/gaze_stream.hpp"
#include "gazeseg/image_volume.hpp"
#include "gazeseg/session.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <queue>
#include <random>
#include <string>
#include <vector>

namespace gazeseg::testing {

class TempDir {
public:
    TempDir()
    {
        std::string tmpl = (std::filesystem::temp_directory_path() / "gazeseg-test-XXXXXX").string();
        if (!mkdtemp(tmpl.data()))
            throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline ImageVolume random_volume(std::mt19937_64& rng, int w, int h, int d, int lo, int hi)
{
    std::uniform_int_distribution<int> v(lo, hi);
    std::vector<std::int16_t> vox(static_cast<std::size_t>(w) * h * d);
    for (auto& x : vox)
        x = static_cast<std::int16_t>(v(rng));
    return ImageVolume(w, h, d, Spacing{}, std::move(vox));
}

/// Piecewise-flat slice with noise: a few rectangles of distinct levels,
/// so floods have non-trivial shapes at moderate tolerances.
inline ImageVolume blocky_volume(std::mt19937_64& rng, int w, int h, int d)
{
    std::uniform_int_distribution<int> noise(-3, 3);
    std::uniform_int_distribution<int> level(0, 400);
    std::vector<std::int16_t> vox(static_cast<std::size_t>(w) * h * d);
    for (int z = 0; z < d; ++z) {
        std::vector<int> base(static_cast<std::size_t>(w) * h, level(rng));
        for (int r = 0; r < 6; ++r) {
            std::uniform_int_distribution<int> xs(0, w - 1), ys(0, h - 1);
            int x0 = xs(rng), x1 = xs(rng), y0 = ys(rng), y1 = ys(rng);
            if (x0 > x1)
                std::swap(x0, x1);
            if (y0 > y1)
                std::swap(y0, y1);
            const int lv = level(rng);
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x)
                    base[static_cast<std::size_t>(y) * w + x] = lv;
        }
        for (std::size_t i = 0; i < base.size(); ++i)
            vox[static_cast<std::size_t>(z) * w * h + i] = static_cast<std::int16_t>(base[i] + noise(rng));
    }
    return ImageVolume(w, h, d, Spacing{}, std::move(vox));
}

/// Stream with fixation clusters, saccades, tracking dropouts and uneven
/// sample intervals.
inline std::vector<GazeSample> random_gaze_stream(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_real_distribution<double> pos(0.0, 1000.0), unit(0.0, 1.0);
    std::uniform_int_distribution<int> dt(5'000, 25'000), dwell(1, 40);
    std::normal_distribution<double> jitter(0.0, 1.0);
    std::vector<GazeSample> out;
    std::int64_t t = std::uniform_int_distribution<std::int64_t>(0, 1'000'000)(rng);
    ScreenPoint center{pos(rng), pos(rng)};
    double spread = 3.0;
    int left = dwell(rng);
    while (out.size() < n) {
        if (left-- <= 0) {
            center = {pos(rng), pos(rng)};
            spread = 0.5 + 12.0 * unit(rng);
            left = dwell(rng);
        }
        t += dt(rng);
        GazeSample s;
        s.t_us = t;
        s.point = {center.x + spread * jitter(rng), center.y + spread * jitter(rng)};
        s.valid = unit(rng) > 0.03;
        out.push_back(s);
    }
    return out;
}

inline std::string random_hex(std::mt19937_64& rng, std::size_t n)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(digits[rng() % 16]);
    return out;
}

/// Any event kind with randomized fields, including awkward doubles and
/// strings needing JSON escapes.
inline EventPayload random_payload(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> real(-1e4, 1e4);
    auto awkward = [&] {
        switch (rng() % 4) {
        case 0: return real(rng);
        case 1: return std::ldexp(real(rng), -40);
        case 2: return static_cast<double>(static_cast<std::int64_t>(real(rng)));
        default: return 0.1 * static_cast<double>(rng() % 1000);
        }
    };
    auto text = [&] {
        static const std::string pieces[] = {"scan", "/tmp/a b", "\"q\"", "\\", "été", "\t", "x"};
        std::string out;
        for (int i = 0, n = static_cast<int>(rng() % 4); i < n; ++i)
            out += pieces[rng() % std::size(pieces)];
        return out;
    };
    auto points = [&] {
        std::vector<PromptPoint> pts;
        for (int i = 0, n = static_cast<int>(rng() % 6); i < n; ++i)
            pts.push_back({static_cast<int>(rng() % 1024), static_cast<int>(rng() % 1024), PointLabel::Foreground,
                           static_cast<std::int64_t>(rng() % 10'000'000'000ULL)});
        return pts;
    };
    switch (rng() % 10) {
    case 0: {
        event::SessionStarted e;
        e.fixation = {awkward(), static_cast<std::int64_t>(rng() % 1'000'000)};
        e.min_spacing_px = static_cast<int>(rng() % 50);
        if (rng() % 2)
            e.tolerance = awkward();
        e.backend = text();
        return e;
    }
    case 1:
        return event::ImageLoaded{text(), random_hex(rng, 64), static_cast<int>(1 + rng() % 512),
                                  static_cast<int>(1 + rng() % 512), static_cast<int>(1 + rng() % 64),
                                  Viewport{awkward(), awkward(), 1 + std::abs(awkward()), 1 + std::abs(awkward()),
                                           static_cast<int>(1 + rng() % 512), static_cast<int>(1 + rng() % 512)}};
    case 2: return event::SliceChanged{static_cast<int>(rng() % 300)};
    case 3: return event::ModeChanged{rng() % 2 ? PromptMode::OnePoint : PromptMode::AllPoints};
    case 4: return event::TrackingChanged{rng() % 2 == 0};
    case 5:
        return event::Gaze{GazeSample{static_cast<std::int64_t>(rng() % 100'000'000), {awkward(), awkward()},
                                      rng() % 5 != 0}};
    case 6: {
        PromptSet p{random_hex(rng, 64), static_cast<int>(rng() % 40),
                    rng() % 2 ? PromptMode::OnePoint : PromptMode::AllPoints, points(), rng() % 1000};
        return event::PromptIssued{1 + rng() % 1000, p};
    }
    case 7: {
        std::vector<std::uint32_t> runs;
        for (int i = 0, n = static_cast<int>(1 + rng() % 12); i < n; ++i)
            runs.push_back(static_cast<std::uint32_t>(rng() % 5000));
        const auto id = 1 + rng() % 1000;
        return event::MaskProduced{id, id, runs};
    }
    case 8: return event::MaskSaved{text() + ".pgm"};
    default: return event::Cleared{};
    }
}

namespace oracle {

/// Textbook I-DT, run independently on each maximal stretch of valid
/// samples: grow a window from i until it spans the minimum duration; if
/// its dispersion is within threshold, extend it as far as it stays within
/// threshold and emit it, otherwise advance i by one.
inline std::vector<Fixation> idt(const std::vector<GazeSample>& samples, double dispersion, std::int64_t min_dur)
{
    auto disp = [&](std::size_t a, std::size_t b) {
        double x0 = samples[a].point.x, x1 = x0, y0 = samples[a].point.y, y1 = y0;
        for (std::size_t k = a; k <= b; ++k) {
            x0 = std::min(x0, samples[k].point.x);
            x1 = std::max(x1, samples[k].point.x);
            y0 = std::min(y0, samples[k].point.y);
            y1 = std::max(y1, samples[k].point.y);
        }
        return (x1 - x0) + (y1 - y0);
    };
    std::vector<Fixation> out;
    std::size_t seg = 0;
    while (seg < samples.size()) {
        if (!samples[seg].valid) {
            ++seg;
            continue;
        }
        std::size_t end = seg;
        while (end < samples.size() && samples[end].valid)
            ++end;
        std::size_t i = seg;
        while (i < end) {
            std::size_t j = i;
            while (j < end && samples[j].t_us - samples[i].t_us < min_dur)
                ++j;
            if (j >= end)
                break;
            if (disp(i, j) <= dispersion) {
                while (j + 1 < end && disp(i, j + 1) <= dispersion)
                    ++j;
                double sx = 0, sy = 0;
                for (std::size_t k = i; k <= j; ++k) {
                    sx += samples[k].point.x;
                    sy += samples[k].point.y;
                }
                const double n = static_cast<double>(j - i + 1);
                out.push_back({{sx / n, sy / n}, samples[i].t_us, samples[j].t_us - samples[i].t_us, j - i + 1});
                i = j + 1;
            } else {
                ++i;
            }
        }
        seg = end;
    }
    return out;
}

/// Breadth-first flood from each seed over 4-neighbours within tau of the
/// seed's intensity; union of the floods.
inline std::vector<std::uint8_t> flood_fill(const SliceView& s, const std::vector<std::pair<int, int>>& seeds,
                                            double tau)
{
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(s.width) * s.height, 0);
    for (auto [sx, sy] : seeds) {
        const double ref = s.at(sx, sy);
        std::vector<std::vector<bool>> seen(s.height, std::vector<bool>(s.width, false));
        std::queue<std::pair<int, int>> q;
        q.push({sx, sy});
        seen[sy][sx] = true;
        while (!q.empty()) {
            auto [x, y] = q.front();
            q.pop();
            mask[static_cast<std::size_t>(y) * s.width + x] = 1;
            const int dx[] = {1, -1, 0, 0}, dy[] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                const int nx = x + dx[k], ny = y + dy[k];
                if (nx < 0 || ny < 0 || nx >= s.width || ny >= s.height || seen[ny][nx])
                    continue;
                if (std::abs(s.at(nx, ny) - ref) <= tau) {
                    seen[ny][nx] = true;
                    q.push({nx, ny});
                }
            }
        }
    }
    return mask;
}

/// Run lengths by direct scan, background first.
inline std::vector<std::uint32_t> runs(const std::vector<std::uint8_t>& bits)
{
    std::vector<std::uint32_t> out;
    std::uint8_t cur = 0;
    std::uint32_t len = 0;
    for (auto b : bits) {
        if ((b != 0) == (cur != 0)) {
            ++len;
        } else {
            out.push_back(len);
            cur = b ? 1 : 0;
            len = 1;
        }
    }
    out.push_back(len);
    return out;
}

} // namespace oracle

/// Backend that blocks inside segment() until released and records what it
/// was asked to do.
class GatedBackend final : public SegmentationBackend {
public:
    void prepare(std::shared_ptr<const ImageVolume> volume, int slice_index) override
    {
        std::lock_guard lock(m_);
        volume_ = std::move(volume);
        slice_ = slice_index;
        ++prepares_;
    }

    SegmentResult segment(const SegmentRequest& request) override
    {
        std::unique_lock lock(m_);
        seen_.push_back(request.request_id);
        ++started_;
        cv_.notify_all();
        cv_.wait(lock, [&] { return open_ || tickets_ > 0; });
        if (!open_)
            --tickets_;
        const auto s = volume_->slice(slice_);
        Bitmask mask(s.width, s.height);
        for (const auto& p : request.prompt.points)
            mask.at(p.x, p.y) = 1;
        return SegmentResult{request.request_id, MaskSlice::from_bitmask(mask, request.request_id), 0.5, 0.0};
    }

    std::string name() const override { return "gated"; }

    /// Lets every current and future call through.
    void open()
    {
        std::lock_guard lock(m_);
        open_ = true;
        cv_.notify_all();
    }
    /// Lets one call through.
    void release_one()
    {
        std::lock_guard lock(m_);
        ++tickets_;
        cv_.notify_all();
    }
    bool wait_started(int n, std::chrono::milliseconds timeout = std::chrono::seconds(10))
    {
        std::unique_lock lock(m_);
        return cv_.wait_for(lock, timeout, [&] { return started_ >= n; });
    }
    std::vector<std::uint64_t> seen() const
    {
        std::lock_guard lock(m_);
        return seen_;
    }
    int prepares() const
    {
        std::lock_guard lock(m_);
        return prepares_;
    }

private:
    mutable std::mutex m_;
    std::condition_variable cv_;
    std::shared_ptr<const ImageVolume> volume_;
    int slice_ = 0;
    int prepares_ = 0;
    int started_ = 0;
    int tickets_ = 0;
    bool open_ = false;
    std::vector<std::uint64_t> seen_;
};

} // namespace gazeseg::testing
