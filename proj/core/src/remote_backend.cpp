#include "gazeseg/remote_backend.hpp"

#include "gazeseg/errors.hpp"

#include "json.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

namespace gazeseg {

using nlohmann::json;

namespace {

void ignore_sigpipe_once()
{
    static const bool done = [] {
        std::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)done;
}

} // namespace

RemoteBackend::RemoteBackend(const std::string& command, std::chrono::milliseconds reply_timeout)
    : timeout_(reply_timeout)
{
    ignore_sigpipe_once();
    int in_pipe[2];
    int out_pipe[2];
    if (pipe2(in_pipe, O_CLOEXEC) != 0)
        fail(ErrorKind::BackendUnavailable, std::string("pipe: ") + std::strerror(errno));
    if (pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        fail(ErrorKind::BackendUnavailable, std::string("pipe: ") + std::strerror(errno));
    }
    pid_ = fork();
    if (pid_ < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]})
            ::close(fd);
        fail(ErrorKind::BackendUnavailable, std::string("fork: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_worker_ = in_pipe[1];
    from_worker_ = out_pipe[0];

    try {
        send_line(R"({"type":"hello"})");
        const auto reply = json::parse(read_line());
        if (reply.value("type", "") != "hello_ack")
            unavailable("expected hello_ack");
        worker_name_ = reply.value("name", std::string("remote"));
        worker_version_ = reply.value("version", std::string());
    } catch (const json::exception& e) {
        shutdown();
        fail(ErrorKind::BackendUnavailable, std::string("malformed hello reply: ") + e.what());
    } catch (...) {
        shutdown();
        throw;
    }
}

RemoteBackend::~RemoteBackend()
{
    shutdown();
}

int RemoteBackend::shutdown()
{
    if (pid_ <= 0)
        return 0;
    if (to_worker_ >= 0) {
        const std::string msg = "{\"type\":\"shutdown\"}\n";
        [[maybe_unused]] auto n = ::write(to_worker_, msg.data(), msg.size());
        ::close(to_worker_);
        to_worker_ = -1;
    }
    int status = 0;
    int result = -1;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
    while (true) {
        const pid_t r = ::waitpid(pid_, &status, WNOHANG);
        if (r == pid_) {
            result = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
            break;
        }
        if (r < 0 || std::chrono::steady_clock::now() > deadline) {
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, &status, 0);
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (from_worker_ >= 0) {
        ::close(from_worker_);
        from_worker_ = -1;
    }
    pid_ = -1;
    return result;
}

void RemoteBackend::unavailable(const std::string& why)
{
    fail(ErrorKind::BackendUnavailable, worker_name_ + ": " + why);
}

void RemoteBackend::send_line(const std::string& line)
{
    if (to_worker_ < 0)
        unavailable("worker is not running");
    std::string data = line + '\n';
    std::size_t off = 0;
    while (off < data.size()) {
        const auto n = ::write(to_worker_, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            unavailable(std::string("write to worker failed: ") + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

std::string RemoteBackend::read_line()
{
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    while (true) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            auto line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        if (from_worker_ < 0)
            unavailable("worker is not running");
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0)
            unavailable("timed out waiting for worker reply");
        pollfd p{from_worker_, POLLIN, 0};
        const int r = ::poll(&p, 1, static_cast<int>(left.count()));
        if (r < 0 && errno == EINTR)
            continue;
        if (r < 0)
            unavailable(std::string("poll failed: ") + std::strerror(errno));
        if (r == 0)
            continue;
        char chunk[65536];
        const auto n = ::read(from_worker_, chunk, sizeof(chunk));
        if (n < 0 && errno == EINTR)
            continue;
        if (n <= 0)
            unavailable("worker closed its output");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

void RemoteBackend::prepare(std::shared_ptr<const ImageVolume> volume, int slice_index)
{
    if (!volume || volume->source_path().empty())
        unavailable("remote workers need a volume loaded from a file");
    volume->slice(slice_index);  // range check
    if (prepared_image_id_ == volume->image_id() && prepared_slice_ == slice_index)
        return;
    json msg = {{"type", "set_image"}, {"image_path", volume->source_path()}, {"slice", slice_index}};
    send_line(msg.dump());
    json reply;
    try {
        reply = json::parse(read_line());
    } catch (const json::exception& e) {
        unavailable(std::string("malformed reply: ") + e.what());
    }
    const auto type = reply.value("type", "");
    if (type == "error")
        unavailable(reply.value("message", std::string("worker error")));
    if (type != "ready")
        unavailable("expected ready, got '" + type + "'");
    const auto id = reply.value("image_id", std::string());
    if (id != volume->image_id())
        unavailable("worker image_id " + id.substr(0, 12) + " does not match volume");
    prepared_image_id_ = id;
    prepared_slice_ = slice_index;
    prepared_width_ = volume->width();
    prepared_height_ = volume->height();
}

SegmentResult RemoteBackend::segment(const SegmentRequest& request)
{
    const auto start = std::chrono::steady_clock::now();
    if (request.image_id != prepared_image_id_ || request.slice_index != prepared_slice_)
        fail(ErrorKind::NotPrepared, "slice " + std::to_string(request.slice_index) + " is not prepared");
    if (request.prompt.points.empty())
        fail(ErrorKind::EmptyPrompt, "segment request carries no prompt points");

    json points = json::array();
    json labels = json::array();
    for (const auto& p : request.prompt.points) {
        points.push_back({p.x, p.y});
        labels.push_back(static_cast<int>(p.label));
    }
    json msg = {{"type", "segment"}, {"request_id", request.request_id}, {"points", points}, {"labels", labels}};
    send_line(msg.dump());

    SegmentResult result;
    try {
        const auto reply = json::parse(read_line());
        const auto type = reply.at("type").get<std::string>();
        if (type == "error")
            unavailable(reply.value("message", std::string("worker error")));
        if (type != "mask")
            unavailable("expected mask, got '" + type + "'");
        result.request_id = reply.at("request_id").get<std::uint64_t>();
        if (result.request_id != request.request_id)
            unavailable("reply for request " + std::to_string(result.request_id) + " while waiting for " +
                        std::to_string(request.request_id));
        const int iw = reply.at("iw").get<int>();
        const int ih = reply.at("ih").get<int>();
        if (iw != prepared_width_ || ih != prepared_height_)
            unavailable("mask dimensions do not match the prepared slice");
        auto runs = reply.at("rle").get<std::vector<std::uint32_t>>();
        result.score = reply.value("score", 1.0);
        if (!(result.score >= 0.0 && result.score <= 1.0))
            unavailable("score outside [0, 1]");
        result.mask = MaskSlice{iw, ih, std::move(runs), request.request_id};
        if (!result.mask.consistent())
            unavailable("mask runs do not cover the slice");
    } catch (const json::exception& e) {
        unavailable(std::string("malformed reply: ") + e.what());
    }
    result.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return result;
}

} // namespace gazeseg
