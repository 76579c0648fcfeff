#pragma once

#include "gazeseg/gaze_stream.hpp"
#include "gazeseg/geometry.hpp"
#include "gazeseg/image_volume.hpp"
#include "gazeseg/prompt.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gazeseg {

// Client -> server. Each message is one JSON object with a "type" field.
namespace client {

struct LoadImage {
    std::string path;
    std::optional<Viewport> viewport;  ///< {"x0","y0","dw","dh"}; defaults to the configured rect
};
struct StartTracking {};
struct StopTracking {};
struct SetMode {
    PromptMode mode = PromptMode::AllPoints;
};
struct SetSlice {
    int z = 0;
};
struct SetWindow {
    double center = 0.0;
    double width = 1.0;
};
struct GazeFeed {
    GazeSample sample;
};
struct Clear {};
struct SaveMask {
    std::optional<std::string> path;
};

} // namespace client

using ClientMessage = std::variant<client::LoadImage, client::StartTracking, client::StopTracking, client::SetMode,
                                   client::SetSlice, client::SetWindow, client::GazeFeed, client::Clear,
                                   client::SaveMask>;

// Server -> client.
namespace server {

struct ImageMeta {
    std::string image_id;
    std::string path;
    int iw = 0;
    int ih = 0;
    int depth = 0;
    Spacing spacing;
    int slice = 0;
    double window_center = 0.0;
    double window_width = 1.0;
    std::int16_t min_intensity = 0;
    std::int16_t max_intensity = 0;
    Viewport viewport;
};
struct GazeCursor {
    std::int64_t t_us = 0;
    double sx = 0.0;
    double sy = 0.0;
};
struct FixationEvent {
    Fixation fixation;
    std::optional<PromptPoint> image_point;  ///< ix/iy, null when off-image
};
struct MaskUpdate {
    std::uint64_t version = 0;
    std::uint64_t request_id = 0;
    std::uint64_t revision = 0;
    int slice = 0;
    int iw = 0;
    int ih = 0;
    std::vector<std::uint32_t> rle;
    double score = 1.0;
    std::vector<PromptPoint> points;
};
struct SavedAck {
    std::string path;
    std::string image_id;
    int slice = 0;
    std::uint64_t revision = 0;
};
struct ErrorReply {
    std::string code;
    std::string message;
};

} // namespace server

using ServerMessage = std::variant<server::ImageMeta, server::GazeCursor, server::FixationEvent, server::MaskUpdate,
                                   server::SavedAck, server::ErrorReply>;

/// Throws Error{InvalidArgument} on unknown types or missing fields.
ClientMessage parse_client_message(std::string_view json_text);
std::string to_json(const ClientMessage& msg);

std::string to_json(const ServerMessage& msg);
/// Used by tests and the headless transcript.
ServerMessage parse_server_message(std::string_view json_text);

std::string_view type_name(const ServerMessage& msg) noexcept;
std::string_view type_name(const ClientMessage& msg) noexcept;

} // namespace gazeseg
