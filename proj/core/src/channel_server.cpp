#include "gazeseg/channel_server.hpp"

#include "gazeseg/errors.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace gazeseg {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

std::map<std::string, std::string> parse_query(std::string_view target)
{
    std::map<std::string, std::string> out;
    const auto q = target.find('?');
    if (q == std::string_view::npos)
        return out;
    auto rest = target.substr(q + 1);
    while (!rest.empty()) {
        const auto amp = rest.find('&');
        const auto part = rest.substr(0, amp);
        const auto eq = part.find('=');
        if (eq != std::string_view::npos)
            out[std::string(part.substr(0, eq))] = std::string(part.substr(eq + 1));
        if (amp == std::string_view::npos)
            break;
        rest = rest.substr(amp + 1);
    }
    return out;
}

std::string_view mime_type(const std::filesystem::path& p)
{
    const auto ext = p.extension().string();
    if (ext == ".html")
        return "text/html";
    if (ext == ".js" || ext == ".mjs")
        return "application/javascript";
    if (ext == ".css")
        return "text/css";
    if (ext == ".json")
        return "application/json";
    if (ext == ".png")
        return "image/png";
    if (ext == ".svg")
        return "image/svg+xml";
    return "application/octet-stream";
}

} // namespace

class WsSession;

struct ChannelServer::Impl : std::enable_shared_from_this<ChannelServer::Impl> {
    EngineConfig config;
    net::io_context ioc{1};
    tcp::acceptor acceptor{ioc};
    std::mutex sessions_mutex;
    std::set<std::shared_ptr<WsSession>> sessions;
    std::unique_ptr<Orchestrator> orchestrator;
    std::thread io_thread;

    void accept();
    void broadcast(std::shared_ptr<const std::string> text);
    void remove(const std::shared_ptr<WsSession>& s);
    http::response<http::vector_body<std::uint8_t>> handle_http(const http::request<http::string_body>& req);
};

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket socket, std::weak_ptr<ChannelServer::Impl> server)
        : ws_(std::move(socket)), server_(std::move(server))
    {
    }

    void start(http::request<http::string_body> req)
    {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
            if (ec)
                return self->close();
            self->read();
        });
    }

    void send(std::shared_ptr<const std::string> text)
    {
        outbox_.push_back(std::move(text));
        if (outbox_.size() == 1)
            write_next();
    }

private:
    void read()
    {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec)
                return self->close();
            const auto text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            auto server = self->server_.lock();
            if (!server)
                return;
            try {
                server->orchestrator->post_client(parse_client_message(text));
            } catch (const Error& e) {
                self->send(std::make_shared<const std::string>(
                    to_json(server::ErrorReply{std::string(to_string(e.kind())), e.what()})));
            }
            self->read();
        });
    }

    void write_next()
    {
        ws_.text(true);
        ws_.async_write(net::buffer(*outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec)
                return self->close();
            self->outbox_.pop_front();
            if (!self->outbox_.empty())
                self->write_next();
        });
    }

    void close()
    {
        if (auto server = server_.lock())
            server->remove(shared_from_this());
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    std::deque<std::shared_ptr<const std::string>> outbox_;
    std::weak_ptr<ChannelServer::Impl> server_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket socket, std::weak_ptr<ChannelServer::Impl> server)
        : stream_(std::move(socket)), server_(std::move(server))
    {
    }

    void start()
    {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec)
                return;
            self->on_request();
        });
    }

private:
    void on_request()
    {
        auto server = server_.lock();
        if (!server)
            return;
        if (websocket::is_upgrade(req_)) {
            stream_.expires_never();
            auto ws = std::make_shared<WsSession>(stream_.release_socket(), server_);
            {
                std::lock_guard lock(server->sessions_mutex);
                server->sessions.insert(ws);
            }
            ws->start(std::move(req_));
            return;
        }
        auto res = std::make_shared<http::response<http::vector_body<std::uint8_t>>>(server->handle_http(req_));
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
            if (ec || !res->keep_alive()) {
                beast::error_code ignored;
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                return;
            }
            self->start();
        });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    std::weak_ptr<ChannelServer::Impl> server_;
};

void ChannelServer::Impl::accept()
{
    acceptor.async_accept(net::make_strand(ioc), [self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
        if (ec)
            return;
        std::make_shared<HttpSession>(std::move(socket), self)->start();
        self->accept();
    });
}

void ChannelServer::Impl::broadcast(std::shared_ptr<const std::string> text)
{
    net::post(ioc, [self = shared_from_this(), text = std::move(text)] {
        std::vector<std::shared_ptr<WsSession>> targets;
        {
            std::lock_guard lock(self->sessions_mutex);
            targets.assign(self->sessions.begin(), self->sessions.end());
        }
        for (auto& s : targets)
            s->send(text);
    });
}

void ChannelServer::Impl::remove(const std::shared_ptr<WsSession>& s)
{
    std::lock_guard lock(sessions_mutex);
    sessions.erase(s);
}

http::response<http::vector_body<std::uint8_t>> ChannelServer::Impl::handle_http(
    const http::request<http::string_body>& req)
{
    http::response<http::vector_body<std::uint8_t>> res{http::status::ok, req.version()};
    res.keep_alive(req.keep_alive());
    res.set(http::field::access_control_allow_origin, "*");
    auto text_reply = [&](http::status status, std::string_view body, std::string_view type = "text/plain") {
        res.result(status);
        res.set(http::field::content_type, std::string(type));
        res.body().assign(body.begin(), body.end());
        res.prepare_payload();
        return res;
    };
    if (req.method() != http::verb::get)
        return text_reply(http::status::method_not_allowed, "GET only\n");

    const std::string target(req.target());
    const std::string path = target.substr(0, target.find('?'));
    if (path == "/slice") {
        auto vol = orchestrator->volume();
        auto meta = orchestrator->image_meta();
        if (!vol || !meta)
            return text_reply(http::status::not_found, "no image loaded\n");
        const auto q = parse_query(target);
        try {
            const int z = q.count("z") ? std::stoi(q.at("z")) : meta->slice;
            const double center = q.count("center") ? std::stod(q.at("center")) : meta->window_center;
            const double width = q.count("width") ? std::stod(q.at("width")) : meta->window_width;
            auto bytes = window_normalize(vol->slice(z), center, width);
            res.set(http::field::content_type, "application/octet-stream");
            res.set("X-Width", std::to_string(vol->width()));
            res.set("X-Height", std::to_string(vol->height()));
            res.set(http::field::access_control_expose_headers, "X-Width, X-Height");
            res.body() = std::move(bytes);
            res.prepare_payload();
            return res;
        } catch (const std::exception& e) {
            return text_reply(http::status::bad_request, std::string(e.what()) + "\n");
        }
    }
    if (path == "/meta") {
        auto meta = orchestrator->image_meta();
        if (!meta)
            return text_reply(http::status::not_found, "no image loaded\n");
        return text_reply(http::status::ok, to_json(ServerMessage{*meta}), "application/json");
    }
    if (!config.webui_dir.empty() && path.find("..") == std::string::npos) {
        auto file = config.webui_dir / (path == "/" ? std::string("index.html") : path.substr(1));
        std::error_code ec;
        if (std::filesystem::is_regular_file(file, ec)) {
            res.set(http::field::content_type, std::string(mime_type(file)));
            res.body() = read_file_bytes(file);
            res.prepare_payload();
            return res;
        }
    }
    return text_reply(http::status::not_found, "not found\n");
}

ChannelServer::ChannelServer(const EngineConfig& config, std::shared_ptr<SegmentationBackend> backend)
    : impl_(std::make_shared<Impl>())
{
    impl_->config = config;
    std::weak_ptr<Impl> weak = impl_;
    impl_->orchestrator = std::make_unique<Orchestrator>(
        config,
        [weak](const ServerMessage& m) {
            if (auto impl = weak.lock())
                impl->broadcast(std::make_shared<const std::string>(to_json(m)));
        },
        std::move(backend));

    beast::error_code ec;
    const auto address = net::ip::make_address(config.bind_address, ec);
    if (ec)
        fail(ErrorKind::BadConfig, "bad bind address '" + config.bind_address + "'");
    const tcp::endpoint endpoint{address, static_cast<unsigned short>(config.port)};
    impl_->acceptor.open(endpoint.protocol(), ec);
    if (!ec)
        impl_->acceptor.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec)
        impl_->acceptor.bind(endpoint, ec);
    if (!ec)
        impl_->acceptor.listen(net::socket_base::max_listen_connections, ec);
    if (ec)
        fail(ErrorKind::IoFailure, "cannot listen on " + config.bind_address + ":" + std::to_string(config.port) +
                                       ": " + ec.message());
    impl_->accept();
}

ChannelServer::~ChannelServer()
{
    stop();
}

unsigned short ChannelServer::port() const noexcept
{
    beast::error_code ec;
    return impl_->acceptor.local_endpoint(ec).port();
}

void ChannelServer::run()
{
    impl_->orchestrator->start_source();
    impl_->ioc.run();
}

void ChannelServer::start()
{
    impl_->orchestrator->start_source();
    impl_->io_thread = std::thread([impl = impl_] { impl->ioc.run(); });
}

void ChannelServer::stop()
{
    if (!impl_)
        return;
    if (impl_->orchestrator)
        impl_->orchestrator->stop();
    impl_->ioc.stop();
    if (impl_->io_thread.joinable() && impl_->io_thread.get_id() != std::this_thread::get_id())
        impl_->io_thread.join();
    {
        std::lock_guard lock(impl_->sessions_mutex);
        impl_->sessions.clear();
    }
}

Orchestrator& ChannelServer::orchestrator() noexcept
{
    return *impl_->orchestrator;
}

} // namespace gazeseg
