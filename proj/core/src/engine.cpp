#include "gazeseg/engine.hpp"

#include "gazeseg/errors.hpp"

namespace gazeseg {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

server::ErrorReply error_reply(const Error& e)
{
    return {std::string(to_string(e.kind())), e.what()};
}

} // namespace

Engine::Engine(EngineOptions options)
    : options_(std::move(options)), detector_(options_.config.fixation), prompts_(options_.config.prompt)
{
    options_.config.validate();
    if (!options_.backend)
        fail(ErrorKind::BackendUnavailable, "engine needs a segmentation backend");
    if (options_.config.dispatch == DispatchMode::Synchronous) {
        dispatcher_ = std::make_unique<SynchronousDispatcher>(
            options_.backend, [this](DispatchOutcome o) { inline_outcomes_.push_back(std::move(o)); });
    } else {
        if (!options_.async_sink)
            fail(ErrorKind::InvalidState, "latest-wins dispatch needs an outcome sink");
        dispatcher_ = std::make_unique<LatestWinsDispatcher>(options_.backend, options_.async_sink);
    }
    record(event::SessionStarted{options_.config.fixation, options_.config.prompt.min_spacing_px,
                                 options_.config.tolerance, options_.backend->name()});
}

Engine::~Engine() = default;

void Engine::record(EventPayload payload)
{
    if (options_.recorder)
        options_.recorder->record(clock_us_, std::move(payload));
}

std::optional<server::ImageMeta> Engine::image_meta() const
{
    if (!volume_)
        return std::nullopt;
    const auto view = volume_->slice(slice_);
    server::ImageMeta m;
    m.image_id = volume_->image_id();
    m.path = volume_->source_path();
    m.iw = volume_->width();
    m.ih = volume_->height();
    m.depth = volume_->depth();
    m.spacing = volume_->spacing();
    m.slice = slice_;
    m.window_center = window_center_;
    m.window_width = window_width_;
    m.min_intensity = min_intensity(view);
    m.max_intensity = max_intensity(view);
    m.viewport = viewport_;
    return m;
}

void Engine::rebind()
{
    detector_.reset();
    prompts_.bind(volume_->image_id(), slice_, viewport_);
    mask_.reset();
    mask_mode_.reset();
    first_live_request_ = next_request_id_;
    in_flight_.clear();
}

void Engine::drain_inline(std::vector<ServerMessage>& out)
{
    while (!inline_outcomes_.empty()) {
        auto pending = std::move(inline_outcomes_);
        inline_outcomes_.clear();
        for (const auto& o : pending) {
            auto msgs = handle_result(o);
            out.insert(out.end(), std::make_move_iterator(msgs.begin()), std::make_move_iterator(msgs.end()));
        }
    }
}

void Engine::dispatch_prompt(std::vector<ServerMessage>& out)
{
    const auto& prompt = prompts_.current();
    if (!volume_ || !prompts_.mode() || prompt.points.empty())
        return;
    SegmentRequest req{next_request_id_++, prompt.image_id, prompt.slice_index, prompt};
    in_flight_[req.request_id] = RequestInfo{prompt.image_id, prompt.slice_index, prompt.revision, prompt.mode,
                                             prompt.points};
    record(event::PromptIssued{req.request_id, prompt});
    ++stats_.prompts_issued;
    dispatcher_->submit(std::move(req));
    drain_inline(out);
}

void Engine::on_fixation(const Fixation& fix, std::vector<ServerMessage>& out)
{
    ++stats_.fixations;
    server::FixationEvent ev{fix, std::nullopt};
    if (volume_)
        ev.image_point = map_fixation(fix, viewport_);
    out.push_back(ev);
    if (prompts_.add_fixation(fix))
        dispatch_prompt(out);
}

void Engine::load_image(const client::LoadImage& m, std::vector<ServerMessage>& out)
{
    std::error_code ec;
    auto path = std::filesystem::absolute(m.path, ec);
    if (ec || !std::filesystem::is_regular_file(path, ec))
        fail(ErrorKind::UnknownImage, "no volume file at '" + m.path + "'");
    path = path.lexically_normal();
    auto vol = std::make_shared<const ImageVolume>(load_volume(path));

    Viewport vp = m.viewport ? *m.viewport
                 : options_.config.viewport ? *options_.config.viewport
                                            : Viewport::native(vol->width(), vol->height());
    vp.image_width = vol->width();
    vp.image_height = vol->height();
    if (!vp.valid())
        fail(ErrorKind::InvalidArgument, "viewport must have positive display size");

    volume_ = std::move(vol);
    viewport_ = vp;
    slice_ = 0;
    const auto view = volume_->slice(0);
    const double lo = min_intensity(view);
    const double hi = max_intensity(view);
    window_center_ = (lo + hi) / 2.0;
    window_width_ = hi > lo ? hi - lo : 1.0;
    rebind();
    record(event::ImageLoaded{volume_->source_path(), volume_->image_id(), volume_->width(), volume_->height(),
                              volume_->depth(), viewport_});
    out.push_back(*image_meta());
    dispatcher_->prepare(volume_, slice_);
    drain_inline(out);
}

void Engine::set_slice(int z, std::vector<ServerMessage>& out)
{
    if (!volume_)
        fail(ErrorKind::UnknownImage, "set_slice before load_image");
    if (z < 0 || z >= volume_->depth())
        fail(ErrorKind::SliceOutOfRange,
             "slice " + std::to_string(z) + " outside [0, " + std::to_string(volume_->depth()) + ")");
    if (z == slice_) {
        out.push_back(*image_meta());
        return;
    }
    slice_ = z;
    rebind();
    record(event::SliceChanged{z});
    out.push_back(*image_meta());
    dispatcher_->prepare(volume_, slice_);
    drain_inline(out);
}

void Engine::save_mask(const client::SaveMask& m, std::vector<ServerMessage>& out)
{
    if (!volume_ || !mask_)
        fail(ErrorKind::InvalidState, "no mask to save");
    std::filesystem::path path;
    if (m.path && !m.path->empty()) {
        path = *m.path;
        if (path.is_relative())
            path = options_.config.mask_dir / path;
    } else {
        path = options_.config.mask_dir / ("mask_" + volume_->image_id().substr(0, 12) + "_z" + std::to_string(slice_) +
                                           "_r" + std::to_string(mask_revision_) + ".pgm");
    }
    const MaskMeta meta{volume_->image_id(), slice_, mask_revision_,
                        mask_mode_ ? std::string(to_string(*mask_mode_)) : std::string()};
    gazeseg::save_mask(mask_->to_bitmask(), meta, path);
    record(event::MaskSaved{path.string()});
    out.push_back(server::SavedAck{path.string(), volume_->image_id(), slice_, mask_revision_});
}

std::vector<ServerMessage> Engine::handle_client(const ClientMessage& msg)
{
    std::vector<ServerMessage> out;
    try {
        std::visit(overloaded{
                       [&](const client::LoadImage& m) { load_image(m, out); },
                       [&](const client::StartTracking&) {
                           if (tracking_)
                               return;
                           tracking_ = true;
                           record(event::TrackingChanged{true});
                       },
                       [&](const client::StopTracking&) {
                           if (!tracking_)
                               return;
                           tracking_ = false;
                           record(event::TrackingChanged{false});
                           if (auto fix = detector_.flush())
                               on_fixation(*fix, out);
                       },
                       [&](const client::SetMode& m) {
                           if (prompts_.mode() == m.mode)
                               return;
                           record(event::ModeChanged{m.mode});
                           if (prompts_.set_mode(m.mode))
                               dispatch_prompt(out);
                       },
                       [&](const client::SetSlice& m) { set_slice(m.z, out); },
                       [&](const client::SetWindow& m) {
                           if (!volume_)
                               fail(ErrorKind::UnknownImage, "set_window before load_image");
                           if (!(m.width > 0.0))
                               fail(ErrorKind::InvalidArgument, "window width must be positive");
                           window_center_ = m.center;
                           window_width_ = m.width;
                           out.push_back(*image_meta());
                       },
                       [&](const client::GazeFeed& m) {
                           if (!options_.config.gaze_source.external())
                               fail(ErrorKind::InvalidState, "gaze_feed is only accepted with feed or ui-mouse sources");
                           out = handle_raw_gaze(m.sample);
                       },
                       [&](const client::Clear&) {
                           prompts_.clear();
                           mask_.reset();
                           mask_mode_.reset();
                           first_live_request_ = next_request_id_;
                           in_flight_.clear();
                           record(event::Cleared{});
                       },
                       [&](const client::SaveMask& m) { save_mask(m, out); },
                   },
                   msg);
    } catch (const Error& e) {
        out.push_back(error_reply(e));
    }
    return out;
}

std::vector<ServerMessage> Engine::handle_raw_gaze(const GazeSample& raw)
{
    GazeSample s = raw;
    s.point = apply_calibration(options_.calibration, raw.point);
    return handle_gaze(s);
}

std::vector<ServerMessage> Engine::handle_gaze(const GazeSample& sample)
{
    std::vector<ServerMessage> out;
    if (!tracking_) {
        ++stats_.samples_ignored;
        return out;
    }
    if (last_gaze_t_us_ && sample.t_us <= *last_gaze_t_us_) {
        out.push_back(server::ErrorReply{std::string(to_string(ErrorKind::NonMonotonicTimestamp)),
                                         "gaze sample t_us=" + std::to_string(sample.t_us) +
                                             " is not after t_us=" + std::to_string(*last_gaze_t_us_)});
        return out;
    }
    try {
        last_gaze_t_us_ = sample.t_us;
        clock_us_ = std::max(clock_us_, sample.t_us);
        record(event::Gaze{sample});
        ++stats_.samples_accepted;
        if (sample.valid) {
            ++stats_.valid_samples_accepted;
            out.push_back(server::GazeCursor{sample.t_us, sample.point.x, sample.point.y});
        }
        if (auto fix = detector_.push(sample))
            on_fixation(*fix, out);
    } catch (const Error& e) {
        out.push_back(error_reply(e));
    }
    return out;
}

std::vector<ServerMessage> Engine::handle_result(const DispatchOutcome& outcome)
{
    std::vector<ServerMessage> out;
    std::visit(overloaded{
                   [&](const SegmentResult& r) {
                       auto it = in_flight_.find(r.request_id);
                       if (r.request_id < first_live_request_ || it == in_flight_.end() ||
                           r.request_id <= last_version_) {
                           ++stats_.stale_results;
                           return;
                       }
                       const auto info = it->second;
                       in_flight_.erase(in_flight_.begin(), std::next(it));
                       if (!volume_ || r.mask.width != volume_->width() || r.mask.height != volume_->height() ||
                           !r.mask.consistent()) {
                           out.push_back(server::ErrorReply{std::string(to_string(ErrorKind::BackendUnavailable)),
                                                            "backend returned a mask that does not fit the slice"});
                           return;
                       }
                       MaskSlice mask = r.mask;
                       mask.version = r.request_id;
                       last_version_ = mask.version;
                       mask_revision_ = info.revision;
                       mask_mode_ = info.mode;
                       record(event::MaskProduced{r.request_id, mask.version, mask.runs});
                       ++stats_.masks_published;
                       out.push_back(server::MaskUpdate{mask.version, r.request_id, info.revision, info.slice,
                                                        mask.width, mask.height, mask.runs, r.score, info.points});
                       mask_ = std::move(mask);
                   },
                   [&](const DispatchFailure& f) {
                       if (f.request_id != 0 && f.request_id < first_live_request_)
                           return;
                       in_flight_.erase(f.request_id);
                       out.push_back(server::ErrorReply{std::string(to_string(f.kind)), f.message});
                   },
               },
               outcome);
    return out;
}

} // namespace gazeseg
