#pragma once

#include "gazeseg/backend.hpp"
#include "gazeseg/gaze_stream.hpp"
#include "gazeseg/geometry.hpp"
#include "gazeseg/prompt.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace gazeseg {

/// `reference` or `remote:<command line>`.
struct BackendSelector {
    enum class Kind { Reference, Remote };
    Kind kind = Kind::Reference;
    std::string command;

    static BackendSelector parse(std::string_view text);
    std::string to_string() const;
};

/// `simulate:<scanpath path>`, `log:<gaze log path>`, `feed` or `ui-mouse`.
struct GazeSourceSpec {
    enum class Kind { Simulate, Log, Feed, UiMouse };
    Kind kind = Kind::Feed;
    std::filesystem::path path;

    static GazeSourceSpec parse(std::string_view text);
    std::string to_string() const;
    /// Samples arrive through gaze_feed client messages.
    bool external() const noexcept { return kind == Kind::Feed || kind == Kind::UiMouse; }
};

enum class DispatchMode { LatestWins, Synchronous };

struct EngineConfig {
    FixationParams fixation;
    PromptParams prompt;
    std::optional<double> tolerance;  ///< nullopt = 10% of slice range
    BackendSelector backend;
    GazeSourceSpec gaze_source;
    int port = 8765;
    std::string bind_address = "127.0.0.1";
    std::filesystem::path session_path;  ///< empty: no recording
    DispatchMode dispatch = DispatchMode::LatestWins;
    std::filesystem::path mask_dir = ".";
    std::optional<Viewport> viewport;  ///< display rect; image dims filled at load
    std::filesystem::path calibration_path;
    std::uint64_t seed = 1;
    bool realtime = true;  ///< pace simulate/log sources by their timestamps
    std::filesystem::path webui_dir;
    std::chrono::milliseconds backend_timeout{30'000};

    /// Throws Error{BadConfig} on violated invariants.
    void validate() const;
};

/// `key=value` lines, `#` comments. Unknown keys are rejected.
EngineConfig parse_config(std::istream& in);
EngineConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const EngineConfig& config);

std::shared_ptr<SegmentationBackend> make_backend(const BackendSelector& selector, std::optional<double> tolerance,
                                                  std::chrono::milliseconds timeout = std::chrono::seconds(30));

} // namespace gazeseg
