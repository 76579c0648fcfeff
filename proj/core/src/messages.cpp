#include "gazeseg/messages.hpp"

#include "gazeseg/errors.hpp"

#include "json.hpp"

namespace gazeseg {

using ojson = nlohmann::ordered_json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

ojson rect_json(const Viewport& vp)
{
    return {{"x0", vp.x0}, {"y0", vp.y0}, {"dw", vp.width}, {"dh", vp.height}};
}

Viewport rect_from(const ojson& j)
{
    Viewport vp;
    vp.x0 = j.at("x0").get<double>();
    vp.y0 = j.at("y0").get<double>();
    vp.width = j.at("dw").get<double>();
    vp.height = j.at("dh").get<double>();
    vp.image_width = j.value("iw", 0);
    vp.image_height = j.value("ih", 0);
    return vp;
}

ojson points_json(const std::vector<PromptPoint>& pts)
{
    ojson a = ojson::array();
    for (const auto& p : pts)
        a.push_back({p.x, p.y});
    return a;
}

} // namespace

std::string_view type_name(const ClientMessage& msg) noexcept
{
    static constexpr std::string_view names[] = {"load_image", "start_tracking", "stop_tracking",
                                                 "set_mode",   "set_slice",      "set_window",
                                                 "gaze_feed",  "clear",          "save_mask"};
    return names[msg.index()];
}

std::string_view type_name(const ServerMessage& msg) noexcept
{
    static constexpr std::string_view names[] = {"image_meta", "gaze_cursor", "fixation",
                                                 "mask_update", "saved_ack",  "error"};
    return names[msg.index()];
}

ClientMessage parse_client_message(std::string_view json_text)
{
    try {
        const auto j = ojson::parse(json_text);
        const auto type = j.at("type").get<std::string>();
        if (type == "load_image") {
            client::LoadImage m{j.at("path").get<std::string>(), std::nullopt};
            if (j.contains("viewport") && !j["viewport"].is_null())
                m.viewport = rect_from(j["viewport"]);
            return m;
        }
        if (type == "start_tracking")
            return client::StartTracking{};
        if (type == "stop_tracking")
            return client::StopTracking{};
        if (type == "set_mode") {
            auto mode = parse_prompt_mode(j.at("mode").get<std::string>());
            if (!mode)
                fail(ErrorKind::InvalidArgument, "set_mode: mode must be one_point or all_points");
            return client::SetMode{*mode};
        }
        if (type == "set_slice")
            return client::SetSlice{j.at("z").get<int>()};
        if (type == "set_window")
            return client::SetWindow{j.at("center").get<double>(), j.at("width").get<double>()};
        if (type == "gaze_feed") {
            const bool valid = j.contains("valid") ? (j["valid"].is_boolean() ? j["valid"].get<bool>()
                                                                               : j["valid"].get<int>() != 0)
                                                   : true;
            return client::GazeFeed{
                GazeSample{j.at("t_us").get<std::int64_t>(), {j.at("sx").get<double>(), j.at("sy").get<double>()}, valid}};
        }
        if (type == "clear")
            return client::Clear{};
        if (type == "save_mask") {
            client::SaveMask m;
            if (j.contains("path") && j["path"].is_string())
                m.path = j["path"].get<std::string>();
            return m;
        }
        fail(ErrorKind::InvalidArgument, "unknown client message type '" + type + "'");
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::InvalidArgument, std::string("malformed client message: ") + e.what());
    }
}

std::string to_json(const ClientMessage& msg)
{
    ojson j;
    j["type"] = type_name(msg);
    std::visit(overloaded{
                   [&](const client::LoadImage& m) {
                       j["path"] = m.path;
                       if (m.viewport)
                           j["viewport"] = rect_json(*m.viewport);
                   },
                   [&](const client::SetMode& m) { j["mode"] = to_string(m.mode); },
                   [&](const client::SetSlice& m) { j["z"] = m.z; },
                   [&](const client::SetWindow& m) {
                       j["center"] = m.center;
                       j["width"] = m.width;
                   },
                   [&](const client::GazeFeed& m) {
                       j["t_us"] = m.sample.t_us;
                       j["sx"] = m.sample.point.x;
                       j["sy"] = m.sample.point.y;
                       j["valid"] = m.sample.valid;
                   },
                   [&](const client::SaveMask& m) {
                       if (m.path)
                           j["path"] = *m.path;
                   },
                   [](const auto&) {},
               },
               msg);
    return j.dump();
}

std::string to_json(const ServerMessage& msg)
{
    ojson j;
    j["type"] = type_name(msg);
    std::visit(overloaded{
                   [&](const server::ImageMeta& m) {
                       j["image_id"] = m.image_id;
                       j["path"] = m.path;
                       j["iw"] = m.iw;
                       j["ih"] = m.ih;
                       j["depth"] = m.depth;
                       j["spacing"] = {m.spacing.x, m.spacing.y, m.spacing.z};
                       j["slice"] = m.slice;
                       j["window_center"] = m.window_center;
                       j["window_width"] = m.window_width;
                       j["min_intensity"] = m.min_intensity;
                       j["max_intensity"] = m.max_intensity;
                       j["viewport"] = rect_json(m.viewport);
                   },
                   [&](const server::GazeCursor& m) {
                       j["t_us"] = m.t_us;
                       j["sx"] = m.sx;
                       j["sy"] = m.sy;
                   },
                   [&](const server::FixationEvent& m) {
                       j["sx"] = m.fixation.centroid.x;
                       j["sy"] = m.fixation.centroid.y;
                       j["onset_us"] = m.fixation.onset_us;
                       j["duration_us"] = m.fixation.duration_us;
                       j["n_samples"] = m.fixation.n_samples;
                       j["ix"] = m.image_point ? ojson(m.image_point->x) : ojson(nullptr);
                       j["iy"] = m.image_point ? ojson(m.image_point->y) : ojson(nullptr);
                   },
                   [&](const server::MaskUpdate& m) {
                       j["version"] = m.version;
                       j["request_id"] = m.request_id;
                       j["revision"] = m.revision;
                       j["slice"] = m.slice;
                       j["iw"] = m.iw;
                       j["ih"] = m.ih;
                       j["rle"] = m.rle;
                       j["score"] = m.score;
                       j["points"] = points_json(m.points);
                   },
                   [&](const server::SavedAck& m) {
                       j["path"] = m.path;
                       j["image_id"] = m.image_id;
                       j["slice"] = m.slice;
                       j["revision"] = m.revision;
                   },
                   [&](const server::ErrorReply& m) {
                       j["code"] = m.code;
                       j["message"] = m.message;
                   },
               },
               msg);
    return j.dump();
}

ServerMessage parse_server_message(std::string_view json_text)
{
    try {
        const auto j = ojson::parse(json_text);
        const auto type = j.at("type").get<std::string>();
        if (type == "image_meta") {
            server::ImageMeta m;
            m.image_id = j.at("image_id").get<std::string>();
            m.path = j.at("path").get<std::string>();
            m.iw = j.at("iw").get<int>();
            m.ih = j.at("ih").get<int>();
            m.depth = j.at("depth").get<int>();
            const auto& sp = j.at("spacing");
            m.spacing = {sp.at(0).get<double>(), sp.at(1).get<double>(), sp.at(2).get<double>()};
            m.slice = j.at("slice").get<int>();
            m.window_center = j.at("window_center").get<double>();
            m.window_width = j.at("window_width").get<double>();
            m.min_intensity = j.at("min_intensity").get<std::int16_t>();
            m.max_intensity = j.at("max_intensity").get<std::int16_t>();
            m.viewport = rect_from(j.at("viewport"));
            m.viewport.image_width = m.iw;
            m.viewport.image_height = m.ih;
            return m;
        }
        if (type == "gaze_cursor")
            return server::GazeCursor{j.at("t_us").get<std::int64_t>(), j.at("sx").get<double>(),
                                      j.at("sy").get<double>()};
        if (type == "fixation") {
            server::FixationEvent m;
            m.fixation = Fixation{{j.at("sx").get<double>(), j.at("sy").get<double>()},
                                  j.at("onset_us").get<std::int64_t>(),
                                  j.at("duration_us").get<std::int64_t>(),
                                  j.at("n_samples").get<std::size_t>()};
            if (!j.at("ix").is_null())
                m.image_point = PromptPoint{j["ix"].get<int>(), j["iy"].get<int>(), PointLabel::Foreground,
                                            m.fixation.onset_us};
            return m;
        }
        if (type == "mask_update") {
            server::MaskUpdate m;
            m.version = j.at("version").get<std::uint64_t>();
            m.request_id = j.at("request_id").get<std::uint64_t>();
            m.revision = j.at("revision").get<std::uint64_t>();
            m.slice = j.at("slice").get<int>();
            m.iw = j.at("iw").get<int>();
            m.ih = j.at("ih").get<int>();
            m.rle = j.at("rle").get<std::vector<std::uint32_t>>();
            m.score = j.at("score").get<double>();
            for (const auto& p : j.at("points"))
                m.points.push_back({p.at(0).get<int>(), p.at(1).get<int>(), PointLabel::Foreground, 0});
            return m;
        }
        if (type == "saved_ack")
            return server::SavedAck{j.at("path").get<std::string>(), j.at("image_id").get<std::string>(),
                                    j.at("slice").get<int>(), j.at("revision").get<std::uint64_t>()};
        if (type == "error")
            return server::ErrorReply{j.at("code").get<std::string>(), j.at("message").get<std::string>()};
        fail(ErrorKind::InvalidArgument, "unknown server message type '" + type + "'");
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::InvalidArgument, std::string("malformed server message: ") + e.what());
    }
}

} // namespace gazeseg
