#pragma once

#include "gazeseg/config.hpp"
#include "gazeseg/runtime.hpp"

#include <memory>

namespace gazeseg {

/// Client channel: WebSocket endpoint (any path) carrying one JSON message
/// per frame, plus plain HTTP on the same port:
///   GET /slice?z=<n>[&center=<c>&width=<w>]  8-bit windowed slice, raw bytes,
///                                            X-Width / X-Height headers
///   GET /meta                                current image_meta as JSON
///   GET /<file>                              static files from webui_dir
class ChannelServer {
public:
    explicit ChannelServer(const EngineConfig& config, std::shared_ptr<SegmentationBackend> backend = nullptr);
    ~ChannelServer();

    ChannelServer(const ChannelServer&) = delete;
    ChannelServer& operator=(const ChannelServer&) = delete;

    /// Bound port; differs from config.port when that is 0.
    unsigned short port() const noexcept;

    /// Serves on the calling thread until stop().
    void run();
    /// Serves on a background thread.
    void start();
    void stop();

    Orchestrator& orchestrator() noexcept;

    struct Impl;

private:
    std::shared_ptr<Impl> impl_;
};

} // namespace gazeseg
