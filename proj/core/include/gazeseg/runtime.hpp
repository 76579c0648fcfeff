#pragma once

#include "gazeseg/config.hpp"
#include "gazeseg/engine.hpp"
#include "gazeseg/messages.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <atomic>
#include <deque>
#include <future>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <variant>
#include <vector>

namespace gazeseg {

/// Backend, session recorder and calibration as described by the config.
/// A non-null `backend` overrides config.backend.
EngineOptions engine_options_from(const EngineConfig& config, Dispatcher::Sink async_sink,
                                  std::shared_ptr<SegmentationBackend> backend = nullptr);

/// Samples of a simulate:/log: source; empty for external sources.
std::vector<GazeSample> load_gaze_source(const EngineConfig& config);

/// One line of a headless script: a client message plus an optional
/// `"at_us"` field. The message is handled before the first source sample
/// with t_us >= at_us; `"at_us":"end"` waits for the source to run out.
/// Lines without at_us keep the previous line's position.
struct ScriptedMessage {
    enum class When { Inherit, At, End };
    When when = When::Inherit;
    std::int64_t at_us = 0;
    ClientMessage message;
};

std::vector<ScriptedMessage> read_script(std::istream& in);

struct HeadlessResult {
    EngineStats stats;
    std::vector<ServerMessage> transcript;
};

/// Runs the engine without a client channel: the scripted messages and the
/// configured gaze source are merged by time on the calling thread. Each
/// server message is also written to `transcript` (JSON lines) when given.
HeadlessResult run_headless(const EngineConfig& config, std::span<const ScriptedMessage> script,
                            std::ostream* transcript = nullptr, std::shared_ptr<SegmentationBackend> backend = nullptr);

/// Live orchestration: gaze producers, the client channel and backend
/// results post into one ordered queue drained by a single thread that owns
/// the Engine. Server messages are handed to the listener on that thread.
class Orchestrator {
public:
    using Listener = std::function<void(const ServerMessage&)>;
    using Clock = std::chrono::steady_clock;

    Orchestrator(const EngineConfig& config, Listener listener,
                 std::shared_ptr<SegmentationBackend> backend = nullptr);
    ~Orchestrator();

    Orchestrator(const Orchestrator&) = delete;
    Orchestrator& operator=(const Orchestrator&) = delete;

    void post_client(ClientMessage msg);
    /// Raw tracker sample (calibration applies).
    void post_gaze(GazeSample raw);

    /// Plays a simulate:/log: source on its own thread, paced by timestamps
    /// when config.realtime is set. No-op for external sources.
    void start_source();
    void join_source();

    /// Blocks until every item posted so far has been processed.
    void sync();
    void stop();

    EngineStats stats() const;
    std::shared_ptr<const ImageVolume> volume() const;
    std::optional<server::ImageMeta> image_meta() const;
    /// Queue-to-processed latency of each gaze sample, microseconds.
    std::vector<double> gaze_latencies_us() const;

private:
    struct GazeItem {
        GazeSample sample;
        Clock::time_point posted;
    };
    struct Barrier {
        std::shared_ptr<std::promise<void>> done;
    };
    struct StopItem {};
    using Item = std::variant<ClientMessage, GazeItem, DispatchOutcome, Barrier, StopItem>;

    void push(Item item);
    void run();
    void publish(const std::vector<ServerMessage>& msgs);

    EngineConfig config_;
    Listener listener_;
    std::vector<GazeSample> source_samples_;

    mutable std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::deque<Item> queue_;

    mutable std::mutex view_mutex_;
    EngineStats stats_;
    std::shared_ptr<const ImageVolume> volume_;
    std::optional<server::ImageMeta> meta_;
    std::vector<double> latencies_;

    std::unique_ptr<Engine> engine_;
    std::atomic<bool> source_stop_{false};
    std::thread source_thread_;
    std::thread thread_;
    bool stopped_ = false;
};

} // namespace gazeseg
