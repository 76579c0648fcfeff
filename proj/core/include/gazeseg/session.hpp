#pragma once

#include "gazeseg/gaze_stream.hpp"
#include "gazeseg/geometry.hpp"
#include "gazeseg/prompt.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gazeseg {

namespace event {

/// Pipeline parameters needed to reproduce the session; always seq 0.
struct SessionStarted {
    FixationParams fixation;
    int min_spacing_px = 10;
    std::optional<double> tolerance;  ///< nullopt: per-slice default
    std::string backend;

    friend bool operator==(const SessionStarted&, const SessionStarted&) = default;
};

struct ImageLoaded {
    std::string path;
    std::string image_id;
    int width = 0;
    int height = 0;
    int depth = 0;
    Viewport viewport;

    friend bool operator==(const ImageLoaded&, const ImageLoaded&) = default;
};

struct SliceChanged {
    int z = 0;
    friend bool operator==(const SliceChanged&, const SliceChanged&) = default;
};

struct ModeChanged {
    PromptMode mode = PromptMode::AllPoints;
    friend bool operator==(const ModeChanged&, const ModeChanged&) = default;
};

/// Stopping flushes the fixation detector, so it is part of the replayable state.
struct TrackingChanged {
    bool on = false;
    friend bool operator==(const TrackingChanged&, const TrackingChanged&) = default;
};

struct Gaze {
    GazeSample sample;
    friend bool operator==(const Gaze&, const Gaze&) = default;
};

struct PromptIssued {
    std::uint64_t request_id = 0;
    PromptSet prompt;
    friend bool operator==(const PromptIssued&, const PromptIssued&) = default;
};

struct MaskProduced {
    std::uint64_t request_id = 0;
    std::uint64_t version = 0;
    std::vector<std::uint32_t> rle;
    friend bool operator==(const MaskProduced&, const MaskProduced&) = default;
};

struct MaskSaved {
    std::string path;
    friend bool operator==(const MaskSaved&, const MaskSaved&) = default;
};

struct Cleared {
    friend bool operator==(const Cleared&, const Cleared&) = default;
};

} // namespace event

using EventPayload = std::variant<event::SessionStarted, event::ImageLoaded, event::SliceChanged, event::ModeChanged,
                                  event::TrackingChanged, event::Gaze, event::PromptIssued, event::MaskProduced,
                                  event::MaskSaved, event::Cleared>;

std::string_view kind_name(const EventPayload& payload) noexcept;

struct SessionEvent {
    std::uint64_t seq = 0;
    std::int64_t t_us = 0;
    EventPayload payload;

    friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

/// One JSON object per line with fields in the order seq, t_us, kind, payload.
std::string serialize_event(const SessionEvent& event);
/// Throws Error{CorruptLog}.
SessionEvent parse_event(std::string_view line);

/// Append-only `.gss` writer. Sequence numbers are assigned densely from 0;
/// timestamps may not decrease. Each record is flushed as a complete line.
class SessionWriter {
public:
    /// Writes to a caller-owned stream.
    explicit SessionWriter(std::ostream& out);

    /// Opens (or continues) a session file. An incomplete trailing line left
    /// by a crash is truncated away before appending.
    static std::unique_ptr<SessionWriter> open(const std::filesystem::path& path);

    /// Throws Error{TimestampRegression} or Error{IoFailure}.
    const SessionEvent& record(std::int64_t t_us, EventPayload payload);

    std::uint64_t next_seq() const noexcept { return next_seq_; }
    std::int64_t last_t_us() const noexcept { return last_t_us_; }
    const SessionEvent* last_event() const noexcept { return last_ ? &*last_ : nullptr; }

private:
    SessionWriter(std::unique_ptr<std::ostream> owned, std::uint64_t next_seq, std::int64_t last_t_us);

    std::unique_ptr<std::ostream> owned_;
    std::ostream* out_;
    std::uint64_t next_seq_ = 0;
    std::int64_t last_t_us_ = 0;
    std::optional<SessionEvent> last_;
};

/// Strict reader: a missing final newline, a malformed line, a gap in seq
/// or a timestamp regression is Error{CorruptLog}.
std::vector<SessionEvent> parse_session(std::istream& in);
std::vector<SessionEvent> read_session(const std::filesystem::path& path);

struct DatasetEntry {
    std::string volume_path;
    std::string image_id;
    std::string gaze_path;
    std::string mask_path;
    int slice = 0;
};

struct DatasetManifest {
    std::filesystem::path manifest_path;
    std::vector<DatasetEntry> entries;
};

/// One (volume, gaze, mask) triple per MaskSaved event: the gaze log holds
/// every Gaze event up to the save, and the mask is rebuilt from the last
/// mask produced for the active slice. Writes `manifest.txt` with lines
/// `volume=<path> gaze=<file> mask=<file> slice=<z> image_id=<hex>`, the
/// triple files named relative to the manifest.
DatasetManifest export_dataset(const std::filesystem::path& session_path, const std::filesystem::path& out_dir);

} // namespace gazeseg
