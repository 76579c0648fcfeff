#include "gazeseg/config.hpp"

#include "gazeseg/errors.hpp"
#include "gazeseg/remote_backend.hpp"
#include "text_util.hpp"

#include <fstream>
#include <ostream>

namespace gazeseg {

BackendSelector BackendSelector::parse(std::string_view text)
{
    text = detail::trim(text);
    if (text == "reference")
        return {Kind::Reference, {}};
    if (text.starts_with("remote:") && text.size() > 7)
        return {Kind::Remote, std::string(detail::trim(text.substr(7)))};
    fail(ErrorKind::BadConfig, "backend must be `reference` or `remote:<command>`, got '" + std::string(text) + "'");
}

std::string BackendSelector::to_string() const
{
    return kind == Kind::Reference ? "reference" : "remote:" + command;
}

GazeSourceSpec GazeSourceSpec::parse(std::string_view text)
{
    text = detail::trim(text);
    if (text == "feed")
        return {Kind::Feed, {}};
    if (text == "ui-mouse")
        return {Kind::UiMouse, {}};
    if (text.starts_with("simulate:") && text.size() > 9)
        return {Kind::Simulate, std::filesystem::path(std::string(text.substr(9)))};
    if (text.starts_with("log:") && text.size() > 4)
        return {Kind::Log, std::filesystem::path(std::string(text.substr(4)))};
    fail(ErrorKind::BadConfig,
         "gaze_source must be simulate:<path>, log:<path>, feed or ui-mouse, got '" + std::string(text) + "'");
}

std::string GazeSourceSpec::to_string() const
{
    switch (kind) {
    case Kind::Simulate: return "simulate:" + path.string();
    case Kind::Log: return "log:" + path.string();
    case Kind::Feed: return "feed";
    case Kind::UiMouse: return "ui-mouse";
    }
    return "feed";
}

void EngineConfig::validate() const
{
    if (!(fixation.dispersion_px > 0.0))
        fail(ErrorKind::BadConfig, "dispersion_px must be positive");
    if (fixation.min_duration_us <= 0)
        fail(ErrorKind::BadConfig, "min_duration_us must be positive");
    if (prompt.min_spacing_px <= 0)
        fail(ErrorKind::BadConfig, "min_spacing_px must be positive");
    if (tolerance && !(*tolerance > 0.0))
        fail(ErrorKind::BadConfig, "tolerance must be positive or `auto`");
    if (port < 0 || port > 65535)
        fail(ErrorKind::BadConfig, "port out of range");
    if (viewport && !(viewport->width > 0.0 && viewport->height > 0.0))
        fail(ErrorKind::BadConfig, "viewport needs positive display width and height");
    if (backend_timeout.count() <= 0)
        fail(ErrorKind::BadConfig, "backend_timeout_ms must be positive");
}

namespace {

template <typename T>
T number(const detail::KeyValueLine& kv)
{
    auto v = detail::parse_number<T>(kv.value);
    if (!v)
        fail(ErrorKind::BadConfig, "line " + std::to_string(kv.line_no) + ": '" + kv.key + "' needs a number");
    return *v;
}

bool boolean(const detail::KeyValueLine& kv)
{
    if (kv.value == "true" || kv.value == "1" || kv.value == "yes")
        return true;
    if (kv.value == "false" || kv.value == "0" || kv.value == "no")
        return false;
    fail(ErrorKind::BadConfig, "line " + std::to_string(kv.line_no) + ": '" + kv.key + "' needs true/false");
}

Viewport rect(const detail::KeyValueLine& kv)
{
    std::string text = kv.value;
    for (auto& c : text)
        if (c == ',')
            c = ' ';
    const auto tok = detail::split_ws(text);
    std::array<double, 4> v{};
    bool ok = tok.size() == 4;
    for (std::size_t i = 0; ok && i < 4; ++i) {
        auto d = detail::parse_number<double>(tok[i]);
        ok = d.has_value();
        if (ok)
            v[i] = *d;
    }
    if (!ok)
        fail(ErrorKind::BadConfig, "line " + std::to_string(kv.line_no) + ": viewport is `x0,y0,dw,dh`");
    return Viewport{v[0], v[1], v[2], v[3], 0, 0};
}

} // namespace

EngineConfig parse_config(std::istream& in)
{
    EngineConfig c;
    for (const auto& kv : detail::read_key_values(in)) {
        const auto& k = kv.key;
        if (k.empty())
            fail(ErrorKind::BadConfig, "line " + std::to_string(kv.line_no) + ": expected key=value");
        if (k == "dispersion_px")
            c.fixation.dispersion_px = number<double>(kv);
        else if (k == "min_duration_us")
            c.fixation.min_duration_us = number<std::int64_t>(kv);
        else if (k == "min_spacing_px")
            c.prompt.min_spacing_px = number<int>(kv);
        else if (k == "tolerance")
            c.tolerance = kv.value == "auto" ? std::nullopt : std::optional<double>(number<double>(kv));
        else if (k == "backend")
            c.backend = BackendSelector::parse(kv.value);
        else if (k == "gaze_source")
            c.gaze_source = GazeSourceSpec::parse(kv.value);
        else if (k == "port")
            c.port = number<int>(kv);
        else if (k == "bind")
            c.bind_address = kv.value;
        else if (k == "session")
            c.session_path = kv.value;
        else if (k == "dispatch") {
            if (kv.value == "sync")
                c.dispatch = DispatchMode::Synchronous;
            else if (kv.value == "latest")
                c.dispatch = DispatchMode::LatestWins;
            else
                fail(ErrorKind::BadConfig, "dispatch must be `latest` or `sync`");
        } else if (k == "mask_dir")
            c.mask_dir = kv.value;
        else if (k == "viewport")
            c.viewport = rect(kv);
        else if (k == "calibration")
            c.calibration_path = kv.value;
        else if (k == "seed")
            c.seed = number<std::uint64_t>(kv);
        else if (k == "realtime")
            c.realtime = boolean(kv);
        else if (k == "webui_dir")
            c.webui_dir = kv.value;
        else if (k == "backend_timeout_ms")
            c.backend_timeout = std::chrono::milliseconds(number<long long>(kv));
        else
            fail(ErrorKind::BadConfig, "line " + std::to_string(kv.line_no) + ": unknown key '" + k + "'");
    }
    c.validate();
    return c;
}

EngineConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        fail(ErrorKind::BadConfig, "cannot open config " + path.string());
    auto config = parse_config(in);
    // Relative paths inside the config resolve against its directory.
    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    auto resolve = [&](std::filesystem::path& p) {
        if (!p.empty() && p.is_relative())
            p = base / p;
    };
    resolve(config.gaze_source.path);
    resolve(config.session_path);
    resolve(config.mask_dir);
    resolve(config.calibration_path);
    resolve(config.webui_dir);
    return config;
}

void write_config(std::ostream& out, const EngineConfig& c)
{
    out << "dispersion_px=" << detail::format_double(c.fixation.dispersion_px) << '\n'
        << "min_duration_us=" << c.fixation.min_duration_us << '\n'
        << "min_spacing_px=" << c.prompt.min_spacing_px << '\n'
        << "tolerance=" << (c.tolerance ? detail::format_double(*c.tolerance) : std::string("auto")) << '\n'
        << "backend=" << c.backend.to_string() << '\n'
        << "gaze_source=" << c.gaze_source.to_string() << '\n'
        << "port=" << c.port << '\n'
        << "bind=" << c.bind_address << '\n'
        << "dispatch=" << (c.dispatch == DispatchMode::Synchronous ? "sync" : "latest") << '\n'
        << "mask_dir=" << c.mask_dir.string() << '\n'
        << "seed=" << c.seed << '\n'
        << "realtime=" << (c.realtime ? "true" : "false") << '\n'
        << "backend_timeout_ms=" << c.backend_timeout.count() << '\n';
    if (!c.session_path.empty())
        out << "session=" << c.session_path.string() << '\n';
    if (c.viewport)
        out << "viewport=" << detail::format_double(c.viewport->x0) << ',' << detail::format_double(c.viewport->y0)
            << ',' << detail::format_double(c.viewport->width) << ',' << detail::format_double(c.viewport->height)
            << '\n';
    if (!c.calibration_path.empty())
        out << "calibration=" << c.calibration_path.string() << '\n';
    if (!c.webui_dir.empty())
        out << "webui_dir=" << c.webui_dir.string() << '\n';
}

std::shared_ptr<SegmentationBackend> make_backend(const BackendSelector& selector, std::optional<double> tolerance,
                                                  std::chrono::milliseconds timeout)
{
    if (selector.kind == BackendSelector::Kind::Reference)
        return std::make_shared<ReferenceBackend>(tolerance);
    return std::make_shared<RemoteBackend>(selector.command, timeout);
}

} // namespace gazeseg
