#include "gazeseg/session.hpp"

#include "gazeseg/errors.hpp"
#include "gazeseg/image_volume.hpp"

#include "json.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace gazeseg {

using ojson = nlohmann::ordered_json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

ojson viewport_json(const Viewport& vp)
{
    return {{"x0", vp.x0}, {"y0", vp.y0}, {"dw", vp.width}, {"dh", vp.height}, {"iw", vp.image_width},
            {"ih", vp.image_height}};
}

Viewport viewport_from(const ojson& j)
{
    return {j.at("x0").get<double>(),  j.at("y0").get<double>(), j.at("dw").get<double>(),
            j.at("dh").get<double>(),  j.at("iw").get<int>(),    j.at("ih").get<int>()};
}

ojson prompt_json(const PromptSet& p)
{
    ojson pts = ojson::array();
    for (const auto& q : p.points)
        pts.push_back({q.x, q.y, q.source_fixation_onset_us});
    return {{"image_id", p.image_id}, {"slice", p.slice_index}, {"mode", to_string(p.mode)},
            {"revision", p.revision}, {"points", pts}};
}

PromptSet prompt_from(const ojson& j)
{
    PromptSet p;
    p.image_id = j.at("image_id").get<std::string>();
    p.slice_index = j.at("slice").get<int>();
    auto mode = parse_prompt_mode(j.at("mode").get<std::string>());
    if (!mode)
        fail(ErrorKind::CorruptLog, "unknown prompt mode");
    p.mode = *mode;
    p.revision = j.at("revision").get<std::uint64_t>();
    for (const auto& q : j.at("points")) {
        if (!q.is_array() || q.size() != 3)
            fail(ErrorKind::CorruptLog, "prompt point must be [x, y, onset_us]");
        p.points.push_back({q[0].get<int>(), q[1].get<int>(), PointLabel::Foreground, q[2].get<std::int64_t>()});
    }
    return p;
}

ojson payload_json(const EventPayload& payload)
{
    return std::visit(
        overloaded{
            [](const event::SessionStarted& e) -> ojson {
                return {{"dispersion_px", e.fixation.dispersion_px},
                        {"min_duration_us", e.fixation.min_duration_us},
                        {"min_spacing_px", e.min_spacing_px},
                        {"tolerance", e.tolerance ? ojson(*e.tolerance) : ojson(nullptr)},
                        {"backend", e.backend}};
            },
            [](const event::ImageLoaded& e) -> ojson {
                return {{"path", e.path},   {"image_id", e.image_id}, {"iw", e.width},
                        {"ih", e.height},   {"depth", e.depth},       {"viewport", viewport_json(e.viewport)}};
            },
            [](const event::SliceChanged& e) -> ojson { return {{"z", e.z}}; },
            [](const event::ModeChanged& e) -> ojson { return {{"mode", to_string(e.mode)}}; },
            [](const event::TrackingChanged& e) -> ojson { return {{"on", e.on}}; },
            [](const event::Gaze& e) -> ojson {
                return {{"t_us", e.sample.t_us}, {"sx", e.sample.point.x}, {"sy", e.sample.point.y},
                        {"valid", e.sample.valid}};
            },
            [](const event::PromptIssued& e) -> ojson {
                return {{"request_id", e.request_id}, {"prompt", prompt_json(e.prompt)}};
            },
            [](const event::MaskProduced& e) -> ojson {
                return {{"request_id", e.request_id}, {"version", e.version}, {"rle", e.rle}};
            },
            [](const event::MaskSaved& e) -> ojson { return {{"path", e.path}}; },
            [](const event::Cleared&) -> ojson { return ojson::object(); },
        },
        payload);
}

EventPayload payload_from(std::string_view kind, const ojson& j)
{
    if (kind == "session_started") {
        event::SessionStarted e;
        e.fixation.dispersion_px = j.at("dispersion_px").get<double>();
        e.fixation.min_duration_us = j.at("min_duration_us").get<std::int64_t>();
        e.min_spacing_px = j.at("min_spacing_px").get<int>();
        if (!j.at("tolerance").is_null())
            e.tolerance = j.at("tolerance").get<double>();
        e.backend = j.at("backend").get<std::string>();
        return e;
    }
    if (kind == "image_loaded")
        return event::ImageLoaded{j.at("path").get<std::string>(), j.at("image_id").get<std::string>(),
                                  j.at("iw").get<int>(),           j.at("ih").get<int>(),
                                  j.at("depth").get<int>(),        viewport_from(j.at("viewport"))};
    if (kind == "slice_changed")
        return event::SliceChanged{j.at("z").get<int>()};
    if (kind == "mode_changed") {
        auto mode = parse_prompt_mode(j.at("mode").get<std::string>());
        if (!mode)
            fail(ErrorKind::CorruptLog, "unknown prompt mode");
        return event::ModeChanged{*mode};
    }
    if (kind == "tracking_changed")
        return event::TrackingChanged{j.at("on").get<bool>()};
    if (kind == "gaze")
        return event::Gaze{GazeSample{j.at("t_us").get<std::int64_t>(),
                                      {j.at("sx").get<double>(), j.at("sy").get<double>()},
                                      j.at("valid").get<bool>()}};
    if (kind == "prompt_issued")
        return event::PromptIssued{j.at("request_id").get<std::uint64_t>(), prompt_from(j.at("prompt"))};
    if (kind == "mask_produced")
        return event::MaskProduced{j.at("request_id").get<std::uint64_t>(), j.at("version").get<std::uint64_t>(),
                                   j.at("rle").get<std::vector<std::uint32_t>>()};
    if (kind == "mask_saved")
        return event::MaskSaved{j.at("path").get<std::string>()};
    if (kind == "cleared")
        return event::Cleared{};
    fail(ErrorKind::CorruptLog, "unknown event kind '" + std::string(kind) + "'");
}

} // namespace

std::string_view kind_name(const EventPayload& payload) noexcept
{
    static constexpr std::string_view names[] = {"session_started", "image_loaded",  "slice_changed", "mode_changed",
                                                 "tracking_changed", "gaze",         "prompt_issued", "mask_produced",
                                                 "mask_saved",       "cleared"};
    return names[payload.index()];
}

std::string serialize_event(const SessionEvent& event)
{
    ojson j;
    j["seq"] = event.seq;
    j["t_us"] = event.t_us;
    j["kind"] = kind_name(event.payload);
    j["payload"] = payload_json(event.payload);
    return j.dump();
}

SessionEvent parse_event(std::string_view line)
{
    try {
        const auto j = ojson::parse(line);
        if (!j.is_object() || j.size() != 4)
            fail(ErrorKind::CorruptLog, "event must be an object with seq, t_us, kind, payload");
        SessionEvent e;
        e.seq = j.at("seq").get<std::uint64_t>();
        e.t_us = j.at("t_us").get<std::int64_t>();
        e.payload = payload_from(j.at("kind").get<std::string>(), j.at("payload"));
        return e;
    } catch (const nlohmann::json::exception& ex) {
        fail(ErrorKind::CorruptLog, std::string("malformed event line: ") + ex.what());
    }
}

SessionWriter::SessionWriter(std::ostream& out) : out_(&out) {}

SessionWriter::SessionWriter(std::unique_ptr<std::ostream> owned, std::uint64_t next_seq, std::int64_t last_t_us)
    : owned_(std::move(owned)), out_(owned_.get()), next_seq_(next_seq), last_t_us_(last_t_us)
{
}

std::unique_ptr<SessionWriter> SessionWriter::open(const std::filesystem::path& path)
{
    std::uint64_t next_seq = 0;
    std::int64_t last_t = 0;
    std::error_code ec;
    if (std::filesystem::exists(path, ec)) {
        auto bytes = read_file_bytes(path);
        std::string text(bytes.begin(), bytes.end());
        const auto last_nl = text.rfind('\n');
        const std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
        if (keep != text.size()) {
            text.resize(keep);
            std::filesystem::resize_file(path, keep, ec);
            if (ec)
                fail(ErrorKind::IoFailure, "cannot truncate " + path.string() + ": " + ec.message());
        }
        std::istringstream in(text);
        const auto events = parse_session(in);
        if (!events.empty()) {
            next_seq = events.back().seq + 1;
            last_t = events.back().t_us;
        }
    }
    auto out = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::app);
    if (!*out)
        fail(ErrorKind::IoFailure, "cannot open session log " + path.string());
    return std::unique_ptr<SessionWriter>(new SessionWriter(std::move(out), next_seq, last_t));
}

const SessionEvent& SessionWriter::record(std::int64_t t_us, EventPayload payload)
{
    if (next_seq_ > 0 && t_us < last_t_us_)
        fail(ErrorKind::TimestampRegression,
             "event at t_us=" + std::to_string(t_us) + " after t_us=" + std::to_string(last_t_us_));
    SessionEvent e{next_seq_, t_us, std::move(payload)};
    *out_ << serialize_event(e) << '\n';
    out_->flush();
    if (!*out_)
        fail(ErrorKind::IoFailure, "session log write failed");
    ++next_seq_;
    last_t_us_ = t_us;
    last_ = std::move(e);
    return *last_;
}

std::vector<SessionEvent> parse_session(std::istream& in)
{
    std::vector<SessionEvent> events;
    std::string line;
    while (std::getline(in, line)) {
        if (in.eof())
            fail(ErrorKind::CorruptLog, "truncated final line (no newline) after seq " +
                                            std::to_string(events.empty() ? 0 : events.back().seq));
        auto e = parse_event(line);
        if (e.seq != events.size())
            fail(ErrorKind::CorruptLog, "expected seq " + std::to_string(events.size()) + ", found " +
                                            std::to_string(e.seq));
        if (!events.empty() && e.t_us < events.back().t_us)
            fail(ErrorKind::CorruptLog, "timestamp regression at seq " + std::to_string(e.seq));
        events.push_back(std::move(e));
    }
    return events;
}

std::vector<SessionEvent> read_session(const std::filesystem::path& path)
{
    auto bytes = read_file_bytes(path);
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    return parse_session(in);
}

DatasetManifest export_dataset(const std::filesystem::path& session_path, const std::filesystem::path& out_dir)
{
    const auto events = read_session(session_path);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        fail(ErrorKind::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());

    DatasetManifest manifest;
    manifest.manifest_path = out_dir / "manifest.txt";

    std::optional<event::ImageLoaded> image;
    int slice = 0;
    std::vector<GazeSample> gaze;
    std::map<std::uint64_t, PromptSet> prompts;
    std::optional<event::MaskProduced> mask;

    for (const auto& e : events) {
        std::visit(overloaded{
                       [&](const event::ImageLoaded& ev) {
                           image = ev;
                           slice = 0;
                           mask.reset();
                       },
                       [&](const event::SliceChanged& ev) {
                           slice = ev.z;
                           mask.reset();
                       },
                       [&](const event::Cleared&) { mask.reset(); },
                       [&](const event::Gaze& ev) { gaze.push_back(ev.sample); },
                       [&](const event::PromptIssued& ev) { prompts[ev.request_id] = ev.prompt; },
                       [&](const event::MaskProduced& ev) { mask = ev; },
                       [&](const event::MaskSaved&) {
                           if (!image || !mask)
                               fail(ErrorKind::CorruptLog, "mask_saved at seq " + std::to_string(e.seq) +
                                                               " without an image and mask");
                           const auto k = manifest.entries.size();
                           const auto stem = "triple_" + std::to_string(k);
                           const auto gaze_path = out_dir / (stem + "_gaze.log");
                           const auto mask_path = out_dir / (stem + "_mask.pgm");
                           {
                               std::ofstream g(gaze_path, std::ios::binary | std::ios::trunc);
                               if (!g)
                                   fail(ErrorKind::IoFailure, "cannot create " + gaze_path.string());
                               write_gaze_log(g, gaze);
                           }
                           Bitmask bits;
                           try {
                               bits = rle_decode(mask->rle, image->width, image->height);
                           } catch (const Error&) {
                               fail(ErrorKind::CorruptLog, "mask runs do not match image dimensions");
                           }
                           MaskMeta meta{image->image_id, slice, 0, ""};
                           if (auto it = prompts.find(mask->request_id); it != prompts.end()) {
                               meta.revision = it->second.revision;
                               meta.mode = std::string(to_string(it->second.mode));
                           }
                           save_mask(bits, meta, mask_path);
                           manifest.entries.push_back(
                               {image->path, image->image_id, gaze_path.filename().string(), mask_path.filename().string(), slice});
                       },
                       [](const auto&) {},
                   },
                   e.payload);
    }

    std::ofstream m(manifest.manifest_path, std::ios::binary | std::ios::trunc);
    if (!m)
        fail(ErrorKind::IoFailure, "cannot create " + manifest.manifest_path.string());
    for (const auto& t : manifest.entries)
        m << "volume=" << t.volume_path << " gaze=" << t.gaze_path << " mask=" << t.mask_path << " slice=" << t.slice
          << " image_id=" << t.image_id << '\n';
    if (!m.flush())
        fail(ErrorKind::IoFailure, "manifest write failed");
    return manifest;
}

} // namespace gazeseg
