#pragma once

#include "gazeseg/backend.hpp"

#include <chrono>
#include <string>
#include <sys/types.h>

namespace gazeseg {

/// Backend living in a worker process that speaks newline-delimited JSON on
/// its stdin/stdout:
///
///   -> {"type":"hello"}                             <- {"type":"hello_ack","name":..,"version":..}
///   -> {"type":"set_image","image_path":..,"slice":z} <- {"type":"ready","image_id":..}
///   -> {"type":"segment","request_id":n,"points":[[x,y],..],"labels":[1,..]}
///                                                   <- {"type":"mask","request_id":n,"iw":..,"ih":..,"rle":[..],"score":s}
///   -> {"type":"shutdown"}                          <- process exits 0
///
/// An {"type":"error"} reply, a malformed reply, a timeout or a dead worker
/// all surface as Error{BackendUnavailable}.
class RemoteBackend final : public SegmentationBackend {
public:
    /// `command` is run through /bin/sh -c. Performs the hello handshake.
    explicit RemoteBackend(const std::string& command,
                           std::chrono::milliseconds reply_timeout = std::chrono::seconds(30));
    ~RemoteBackend() override;

    RemoteBackend(const RemoteBackend&) = delete;
    RemoteBackend& operator=(const RemoteBackend&) = delete;

    void prepare(std::shared_ptr<const ImageVolume> volume, int slice_index) override;
    SegmentResult segment(const SegmentRequest& request) override;
    std::string name() const override { return worker_name_; }

    const std::string& worker_version() const noexcept { return worker_version_; }

    /// Sends shutdown and reaps the worker; returns its exit status (-1 if killed).
    int shutdown();

private:
    void send_line(const std::string& line);
    std::string read_line();
    [[noreturn]] void unavailable(const std::string& why);

    pid_t pid_ = -1;
    int to_worker_ = -1;
    int from_worker_ = -1;
    std::string buffer_;
    std::chrono::milliseconds timeout_;
    std::string worker_name_ = "remote";
    std::string worker_version_;
    std::string prepared_image_id_;
    int prepared_slice_ = -1;
    int prepared_width_ = 0;
    int prepared_height_ = 0;
};

} // namespace gazeseg
