#include "gazeseg/dispatcher.hpp"

namespace gazeseg {

std::optional<SegmentResult> Dispatcher::poll() const
{
    std::lock_guard lock(state_mutex_);
    return latest_;
}

std::uint64_t Dispatcher::backend_calls() const
{
    std::lock_guard lock(state_mutex_);
    return calls_;
}

void Dispatcher::count_call()
{
    std::lock_guard lock(state_mutex_);
    ++calls_;
}

bool Dispatcher::deliver(SegmentResult result)
{
    {
        std::lock_guard lock(state_mutex_);
        if (latest_ && result.request_id <= latest_->request_id)
            return false;
        latest_ = result;
    }
    if (sink_)
        sink_(std::move(result));
    return true;
}

void Dispatcher::deliver_failure(DispatchFailure failure)
{
    if (sink_)
        sink_(std::move(failure));
}

namespace {

template <typename F>
std::optional<DispatchFailure> guarded(std::uint64_t request_id, F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return DispatchFailure{request_id, e.kind(), e.what()};
    } catch (const std::exception& e) {
        return DispatchFailure{request_id, ErrorKind::BackendUnavailable, e.what()};
    }
    return std::nullopt;
}

} // namespace

SynchronousDispatcher::SynchronousDispatcher(std::shared_ptr<SegmentationBackend> backend, Sink sink)
    : Dispatcher(std::move(sink)), backend_(std::move(backend))
{
}

void SynchronousDispatcher::prepare(std::shared_ptr<const ImageVolume> volume, int slice_index)
{
    if (auto f = guarded(0, [&] { backend_->prepare(std::move(volume), slice_index); }))
        deliver_failure(std::move(*f));
}

void SynchronousDispatcher::submit(SegmentRequest request)
{
    count_call();
    SegmentResult result;
    if (auto f = guarded(request.request_id, [&] { result = backend_->segment(request); }))
        deliver_failure(std::move(*f));
    else
        deliver(std::move(result));
}

LatestWinsDispatcher::LatestWinsDispatcher(std::shared_ptr<SegmentationBackend> backend, Sink sink)
    : Dispatcher(std::move(sink)), backend_(std::move(backend)), worker_([this] { run(); })
{
}

LatestWinsDispatcher::~LatestWinsDispatcher()
{
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
        pending_request_.reset();
        pending_prepare_.reset();
    }
    wake_.notify_all();
    worker_.join();
}

void LatestWinsDispatcher::prepare(std::shared_ptr<const ImageVolume> volume, int slice_index)
{
    {
        std::lock_guard lock(mutex_);
        pending_prepare_ = PrepareJob{std::move(volume), slice_index};
        pending_request_.reset();
    }
    wake_.notify_one();
}

void LatestWinsDispatcher::submit(SegmentRequest request)
{
    {
        std::lock_guard lock(mutex_);
        pending_request_ = std::move(request);
    }
    wake_.notify_one();
}

void LatestWinsDispatcher::wait_idle()
{
    std::unique_lock lock(mutex_);
    idle_.wait(lock, [this] { return stop_ || (!busy_ && !pending_prepare_ && !pending_request_); });
}

void LatestWinsDispatcher::run()
{
    std::unique_lock lock(mutex_);
    while (true) {
        wake_.wait(lock, [this] { return stop_ || pending_prepare_ || pending_request_; });
        if (stop_)
            break;
        busy_ = true;
        if (pending_prepare_) {
            auto job = std::move(*pending_prepare_);
            pending_prepare_.reset();
            lock.unlock();
            auto failure = guarded(0, [&] { backend_->prepare(std::move(job.volume), job.slice_index); });
            if (failure)
                deliver_failure(std::move(*failure));
            lock.lock();
        } else {
            auto request = std::move(*pending_request_);
            pending_request_.reset();
            lock.unlock();
            count_call();
            SegmentResult result;
            auto failure = guarded(request.request_id, [&] { result = backend_->segment(request); });
            lock.lock();
            const bool superseded = pending_request_.has_value() || pending_prepare_.has_value() || stop_;
            if (!superseded) {
                lock.unlock();
                if (failure)
                    deliver_failure(std::move(*failure));
                else
                    deliver(std::move(result));
                lock.lock();
            }
        }
        busy_ = false;
        if (!pending_prepare_ && !pending_request_)
            idle_.notify_all();
    }
    idle_.notify_all();
}

} // namespace gazeseg
