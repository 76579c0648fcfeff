#pragma once

#include "gazeseg/geometry.hpp"

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gazeseg {

struct GazeSample {
    std::int64_t t_us = 0;  ///< monotonic, strictly increasing within a stream
    ScreenPoint point;      ///< calibrated screen position
    bool valid = true;      ///< false when the tracker lost the eye

    friend bool operator==(const GazeSample&, const GazeSample&) = default;
};

struct Fixation {
    ScreenPoint centroid;
    std::int64_t onset_us = 0;
    std::int64_t duration_us = 0;
    std::size_t n_samples = 0;

    friend bool operator==(const Fixation&, const Fixation&) = default;
};

struct FixationParams {
    double dispersion_px = 30.0;          ///< bounding box width + height
    std::int64_t min_duration_us = 100'000;

    friend bool operator==(const FixationParams&, const FixationParams&) = default;
};

/// Streaming dispersion-threshold (I-DT) fixation detector.
///
/// Keeps the current candidate run of consecutive valid samples whose
/// bounding box satisfies width + height <= dispersion_px. When a sample
/// cannot join the run, the run is emitted if it lasted at least
/// min_duration_us; otherwise samples are dropped from its front until the
/// newcomer fits. Invalid samples terminate the run. Single writer.
class FixationDetector {
public:
    explicit FixationDetector(FixationParams params = {});

    /// Throws Error{NonMonotonicTimestamp} when t_us does not increase.
    std::optional<Fixation> push(const GazeSample& sample);

    /// End of stream: emits the pending run if it qualifies.
    std::optional<Fixation> flush();

    /// Discards the pending run but keeps the timestamp ordering guard.
    void reset();

    const FixationParams& params() const noexcept { return params_; }
    std::size_t pending_samples() const noexcept { return run_.size(); }

private:
    struct Extreme {
        std::uint64_t seq;
        double value;
    };

    bool fits(ScreenPoint p) const noexcept;
    void append(const GazeSample& s);
    void pop_front();
    void clear_run();
    std::optional<Fixation> take_if_qualifies();

    FixationParams params_;
    std::optional<std::int64_t> last_t_us_;
    std::deque<GazeSample> run_;
    std::uint64_t front_seq_ = 0;  // sequence number of run_.front()
    std::uint64_t next_seq_ = 0;
    // Monotonic deques giving the run's bounding box in O(1).
    std::deque<Extreme> min_x_, max_x_, min_y_, max_y_;
};

/// Batch form; identical to pushing every sample then flushing.
std::vector<Fixation> detect_fixations_batch(std::span<const GazeSample> samples, FixationParams params = {});

struct ScanpathTarget {
    ScreenPoint target;
    double dwell_ms = 200.0;
    double jitter_px = 0.0;  ///< Gaussian std per axis
};

struct ScanpathSpec {
    std::vector<ScanpathTarget> targets;
    double sample_rate_hz = 60.0;
    int transit_samples = 3;
};

/// Deterministic for a given seed. Timestamps start at 0 and advance at
/// sample_rate_hz; every sample is valid.
std::vector<GazeSample> simulate_scanpath(const ScanpathSpec& spec, std::uint64_t seed);

/// Scanpath text file:
///   rate <hz>
///   transit <samples>
///   target <sx> <sy> <dwell_ms> <jitter_px>
ScanpathSpec read_scanpath(std::istream& in);
void write_scanpath(std::ostream& out, const ScanpathSpec& spec);

/// Gaze log / external feed line: `t_us sx sy valid`.
std::string format_gaze_line(const GazeSample& s);
GazeSample parse_gaze_line(std::string_view line);

/// Reads a whole log, enforcing strictly increasing timestamps.
std::vector<GazeSample> read_gaze_log(std::istream& in);
void write_gaze_log(std::ostream& out, std::span<const GazeSample> samples);

} // namespace gazeseg
