#pragma once

#include "gazeseg/backend.hpp"
#include "gazeseg/config.hpp"
#include "gazeseg/dispatcher.hpp"
#include "gazeseg/gaze_stream.hpp"
#include "gazeseg/geometry.hpp"
#include "gazeseg/image_volume.hpp"
#include "gazeseg/messages.hpp"
#include "gazeseg/prompt.hpp"
#include "gazeseg/session.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace gazeseg {

struct EngineOptions {
    EngineConfig config;
    std::shared_ptr<SegmentationBackend> backend;
    /// Optional session log; every state change is recorded before it is published.
    std::shared_ptr<SessionWriter> recorder;
    /// Receives backend outcomes when config.dispatch is LatestWins. They
    /// must be fed back through Engine::handle_result on the engine's thread.
    Dispatcher::Sink async_sink;
    CalibrationModel calibration = CalibrationModel::identity();
};

struct EngineStats {
    std::uint64_t samples_accepted = 0;
    std::uint64_t valid_samples_accepted = 0;
    std::uint64_t samples_ignored = 0;  ///< arrived while tracking was off
    std::uint64_t fixations = 0;
    std::uint64_t prompts_issued = 0;
    std::uint64_t masks_published = 0;
    std::uint64_t stale_results = 0;
};

/// The orchestration state machine: gaze -> fixations -> prompts -> backend
/// requests -> mask publication. Not thread-safe; one context owns it and
/// feeds it client messages, gaze samples and backend outcomes in order.
class Engine {
public:
    explicit Engine(EngineOptions options);
    ~Engine();

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    std::vector<ServerMessage> handle_client(const ClientMessage& msg);

    /// Sample from a tracker-side source; calibration is applied first.
    std::vector<ServerMessage> handle_raw_gaze(const GazeSample& raw);

    /// Already calibrated sample (replay path).
    std::vector<ServerMessage> handle_gaze(const GazeSample& sample);

    std::vector<ServerMessage> handle_result(const DispatchOutcome& outcome);

    const EngineConfig& config() const noexcept { return options_.config; }
    const EngineStats& stats() const noexcept { return stats_; }
    bool tracking() const noexcept { return tracking_; }
    int slice_index() const noexcept { return slice_; }
    std::shared_ptr<const ImageVolume> volume() const noexcept { return volume_; }
    const PromptState& prompts() const noexcept { return prompts_; }
    const std::optional<MaskSlice>& current_mask() const noexcept { return mask_; }
    std::optional<server::ImageMeta> image_meta() const;
    Dispatcher& dispatcher() noexcept { return *dispatcher_; }
    std::int64_t clock_us() const noexcept { return clock_us_; }

private:
    struct RequestInfo {
        std::string image_id;
        int slice = 0;
        std::uint64_t revision = 0;
        PromptMode mode = PromptMode::AllPoints;
        std::vector<PromptPoint> points;
    };

    void record(EventPayload payload);
    void rebind();
    void dispatch_prompt(std::vector<ServerMessage>& out);
    void drain_inline(std::vector<ServerMessage>& out);
    void on_fixation(const Fixation& fix, std::vector<ServerMessage>& out);

    void load_image(const client::LoadImage& m, std::vector<ServerMessage>& out);
    void set_slice(int z, std::vector<ServerMessage>& out);
    void save_mask(const client::SaveMask& m, std::vector<ServerMessage>& out);

    EngineOptions options_;
    std::unique_ptr<Dispatcher> dispatcher_;
    std::vector<DispatchOutcome> inline_outcomes_;

    FixationDetector detector_;
    PromptState prompts_;
    std::shared_ptr<const ImageVolume> volume_;
    Viewport viewport_;
    int slice_ = 0;
    double window_center_ = 0.0;
    double window_width_ = 1.0;
    bool tracking_ = false;

    std::optional<std::int64_t> last_gaze_t_us_;
    std::int64_t clock_us_ = 0;

    std::uint64_t next_request_id_ = 1;
    std::uint64_t first_live_request_ = 1;  // results below this id belong to an old slice/target
    std::map<std::uint64_t, RequestInfo> in_flight_;
    std::optional<MaskSlice> mask_;
    std::uint64_t mask_revision_ = 0;
    std::optional<PromptMode> mask_mode_;
    std::uint64_t last_version_ = 0;

    EngineStats stats_;
};

} // namespace gazeseg
