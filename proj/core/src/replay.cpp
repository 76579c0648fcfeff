#include "gazeseg/replay.hpp"

#include "gazeseg/engine.hpp"
#include "gazeseg/errors.hpp"

#include <set>

namespace gazeseg {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void throw_on_error(const std::vector<ServerMessage>& msgs, std::uint64_t seq)
{
    for (const auto& m : msgs) {
        if (const auto* e = std::get_if<server::ErrorReply>(&m)) {
            const auto kind = e->code == to_string(ErrorKind::BackendUnavailable) ? ErrorKind::BackendUnavailable
                                                                                   : ErrorKind::CorruptLog;
            fail(kind, "replay diverged at seq " + std::to_string(seq) + ": " + e->message);
        }
    }
}

} // namespace

ReplayReport replay(const std::filesystem::path& session_path, std::shared_ptr<SegmentationBackend> backend,
                    const std::filesystem::path& out_dir)
{
    const auto events = read_session(session_path);
    if (events.empty() || !std::holds_alternative<event::SessionStarted>(events.front().payload))
        fail(ErrorKind::CorruptLog, "session log must start with session_started");
    const auto& started = std::get<event::SessionStarted>(events.front().payload);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        fail(ErrorKind::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());

    EngineOptions opts;
    opts.config.fixation = started.fixation;
    opts.config.prompt.min_spacing_px = started.min_spacing_px;
    opts.config.tolerance = started.tolerance;
    opts.config.dispatch = DispatchMode::Synchronous;
    opts.config.gaze_source = GazeSourceSpec{GazeSourceSpec::Kind::Feed, {}};
    opts.config.mask_dir = out_dir;
    opts.backend = std::move(backend);
    Engine engine(std::move(opts));

    ReplayReport report;
    std::map<std::uint64_t, std::vector<std::uint32_t>> produced;  // replayed runs per request_id
    std::vector<event::MaskProduced> recorded;
    std::map<std::pair<std::string, int>, std::uint64_t> final_revisions;

    auto collect = [&](const std::vector<ServerMessage>& msgs) {
        for (const auto& m : msgs) {
            if (const auto* u = std::get_if<server::MaskUpdate>(&m)) {
                produced[u->request_id] = u->rle;
                const auto vol = engine.volume();
                report.final_masks[{vol->image_id(), u->slice}] = MaskSlice{u->iw, u->ih, u->rle, u->version};
                final_revisions[{vol->image_id(), u->slice}] = u->revision;
            }
        }
    };

    for (std::size_t i = 1; i < events.size(); ++i) {
        const auto& e = events[i];
        std::vector<ServerMessage> msgs;
        std::visit(overloaded{
                       [&](const event::SessionStarted&) {
                           fail(ErrorKind::CorruptLog, "session_started may only appear first");
                       },
                       [&](const event::ImageLoaded& ev) {
                           msgs = engine.handle_client(client::LoadImage{ev.path, ev.viewport});
                           throw_on_error(msgs, e.seq);
                           if (!engine.volume() || engine.volume()->image_id() != ev.image_id)
                               fail(ErrorKind::CorruptLog, "volume at " + ev.path + " no longer matches image_id " +
                                                               ev.image_id.substr(0, 12));
                       },
                       [&](const event::SliceChanged& ev) {
                           msgs = engine.handle_client(client::SetSlice{ev.z});
                           throw_on_error(msgs, e.seq);
                       },
                       [&](const event::ModeChanged& ev) { msgs = engine.handle_client(client::SetMode{ev.mode}); },
                       [&](const event::TrackingChanged& ev) {
                           msgs = ev.on ? engine.handle_client(client::StartTracking{})
                                        : engine.handle_client(client::StopTracking{});
                       },
                       [&](const event::Gaze& ev) {
                           ++report.gaze_events;
                           msgs = engine.handle_gaze(ev.sample);
                       },
                       [&](const event::PromptIssued&) {},
                       [&](const event::MaskProduced& ev) { recorded.push_back(ev); },
                       [&](const event::MaskSaved& ev) {
                           const auto name = std::filesystem::path(ev.path).filename();
                           msgs = engine.handle_client(client::SaveMask{name.string()});
                           throw_on_error(msgs, e.seq);
                           report.saved_masks.push_back(out_dir / name);
                       },
                       [&](const event::Cleared&) { msgs = engine.handle_client(client::Clear{}); },
                   },
                   e.payload);
        throw_on_error(msgs, e.seq);
        collect(msgs);
    }

    for (const auto& r : recorded) {
        auto it = produced.find(r.request_id);
        if (it != produced.end() && it->second != r.rle)
            ++report.mask_mismatches;
    }
    report.prompts_issued = engine.stats().prompts_issued;

    for (const auto& [key, mask] : report.final_masks) {
        const auto path = out_dir / ("final_" + key.first.substr(0, 12) + "_z" + std::to_string(key.second) + ".pgm");
        save_mask(mask.to_bitmask(), MaskMeta{key.first, key.second, final_revisions[key], "final"}, path);
        report.final_mask_files.push_back(path);
    }
    return report;
}

} // namespace gazeseg
