#pragma once

#include "gazeseg/backend.hpp"
#include "gazeseg/errors.hpp"

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>

namespace gazeseg {

struct DispatchFailure {
    std::uint64_t request_id = 0;  ///< 0 for prepare failures
    ErrorKind kind = ErrorKind::BackendUnavailable;
    std::string message;
};

using DispatchOutcome = std::variant<SegmentResult, DispatchFailure>;

/// Serializes access to one backend and hands outcomes to a sink in
/// delivery order. A result whose request_id is not greater than the last
/// delivered one is never delivered.
class Dispatcher {
public:
    using Sink = std::function<void(DispatchOutcome)>;

    virtual ~Dispatcher() = default;

    virtual void prepare(std::shared_ptr<const ImageVolume> volume, int slice_index) = 0;
    virtual void submit(SegmentRequest request) = 0;

    /// Highest-request_id result delivered so far.
    std::optional<SegmentResult> poll() const;

    std::uint64_t backend_calls() const;

protected:
    explicit Dispatcher(Sink sink) : sink_(std::move(sink)) {}

    /// Returns false when the result was discarded as stale.
    bool deliver(SegmentResult result);
    void deliver_failure(DispatchFailure failure);
    void count_call();

private:
    Sink sink_;
    mutable std::mutex state_mutex_;
    std::optional<SegmentResult> latest_;
    std::uint64_t calls_ = 0;
};

/// Runs every request inline in submit(). Used for replay and headless runs
/// where output must not depend on timing.
class SynchronousDispatcher final : public Dispatcher {
public:
    SynchronousDispatcher(std::shared_ptr<SegmentationBackend> backend, Sink sink);

    void prepare(std::shared_ptr<const ImageVolume> volume, int slice_index) override;
    void submit(SegmentRequest request) override;

private:
    std::shared_ptr<SegmentationBackend> backend_;
};

/// One in-flight backend call on a worker thread. Requests submitted while
/// the backend is busy replace each other; only the newest is run once the
/// backend frees, and a finished result is dropped if a newer request is
/// already waiting. prepare() supersedes any pending request.
class LatestWinsDispatcher final : public Dispatcher {
public:
    LatestWinsDispatcher(std::shared_ptr<SegmentationBackend> backend, Sink sink);
    ~LatestWinsDispatcher() override;

    LatestWinsDispatcher(const LatestWinsDispatcher&) = delete;
    LatestWinsDispatcher& operator=(const LatestWinsDispatcher&) = delete;

    void prepare(std::shared_ptr<const ImageVolume> volume, int slice_index) override;
    void submit(SegmentRequest request) override;

    /// Blocks until no job is pending or running.
    void wait_idle();

private:
    struct PrepareJob {
        std::shared_ptr<const ImageVolume> volume;
        int slice_index;
    };

    void run();

    std::shared_ptr<SegmentationBackend> backend_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable idle_;
    std::optional<PrepareJob> pending_prepare_;
    std::optional<SegmentRequest> pending_request_;
    bool busy_ = false;
    bool stop_ = false;
    std::thread worker_;
};

} // namespace gazeseg
