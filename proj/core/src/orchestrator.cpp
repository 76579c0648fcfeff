#include "gazeseg/runtime.hpp"

#include "gazeseg/errors.hpp"

namespace gazeseg {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

} // namespace

Orchestrator::Orchestrator(const EngineConfig& config, Listener listener, std::shared_ptr<SegmentationBackend> backend)
    : config_(config), listener_(std::move(listener))
{
    source_samples_ = load_gaze_source(config_);
    engine_ = std::make_unique<Engine>(
        engine_options_from(config_, [this](DispatchOutcome o) { push(std::move(o)); }, std::move(backend)));
    thread_ = std::thread([this] { run(); });
}

Orchestrator::~Orchestrator()
{
    stop();
}

void Orchestrator::push(Item item)
{
    {
        std::lock_guard lock(queue_mutex_);
        queue_.push_back(std::move(item));
    }
    queue_cv_.notify_one();
}

void Orchestrator::post_client(ClientMessage msg)
{
    push(std::move(msg));
}

void Orchestrator::post_gaze(GazeSample raw)
{
    push(GazeItem{raw, Clock::now()});
}

void Orchestrator::start_source()
{
    if (source_samples_.empty() || source_thread_.joinable())
        return;
    source_thread_ = std::thread([this] {
        const auto start = Clock::now();
        const auto t0 = source_samples_.front().t_us;
        for (const auto& s : source_samples_) {
            if (source_stop_)
                return;
            if (config_.realtime)
                std::this_thread::sleep_until(start + std::chrono::microseconds(s.t_us - t0));
            post_gaze(s);
        }
    });
}

void Orchestrator::join_source()
{
    if (source_thread_.joinable())
        source_thread_.join();
}

void Orchestrator::sync()
{
    auto done = std::make_shared<std::promise<void>>();
    auto fut = done->get_future();
    push(Barrier{done});
    fut.wait();
}

void Orchestrator::stop()
{
    if (stopped_)
        return;
    stopped_ = true;
    source_stop_ = true;
    join_source();
    push(StopItem{});
    if (thread_.joinable())
        thread_.join();
    engine_.reset();  // joins the dispatcher worker
}

void Orchestrator::publish(const std::vector<ServerMessage>& msgs)
{
    {
        std::lock_guard lock(view_mutex_);
        stats_ = engine_->stats();
        volume_ = engine_->volume();
        for (const auto& m : msgs)
            if (const auto* meta = std::get_if<server::ImageMeta>(&m))
                meta_ = *meta;
    }
    if (listener_)
        for (const auto& m : msgs)
            listener_(m);
}

void Orchestrator::run()
{
    while (true) {
        Item item;
        {
            std::unique_lock lock(queue_mutex_);
            queue_cv_.wait(lock, [this] { return !queue_.empty(); });
            item = std::move(queue_.front());
            queue_.pop_front();
        }
        bool stop = false;
        std::visit(overloaded{
                       [&](const ClientMessage& m) { publish(engine_->handle_client(m)); },
                       [&](const GazeItem& g) {
                           auto msgs = engine_->handle_raw_gaze(g.sample);
                           const double us =
                               std::chrono::duration<double, std::micro>(Clock::now() - g.posted).count();
                           {
                               std::lock_guard lock(view_mutex_);
                               latencies_.push_back(us);
                           }
                           publish(msgs);
                       },
                       [&](const DispatchOutcome& o) { publish(engine_->handle_result(o)); },
                       [&](const Barrier& b) { b.done->set_value(); },
                       [&](const StopItem&) { stop = true; },
                   },
                   item);
        if (stop)
            break;
    }
}

EngineStats Orchestrator::stats() const
{
    std::lock_guard lock(view_mutex_);
    return stats_;
}

std::shared_ptr<const ImageVolume> Orchestrator::volume() const
{
    std::lock_guard lock(view_mutex_);
    return volume_;
}

std::optional<server::ImageMeta> Orchestrator::image_meta() const
{
    std::lock_guard lock(view_mutex_);
    return meta_;
}

std::vector<double> Orchestrator::gaze_latencies_us() const
{
    std::lock_guard lock(view_mutex_);
    return latencies_;
}

} // namespace gazeseg
