#include "vdm/gateway/server.hpp"

#include <poll.h>

#include <condition_variable>
#include <deque>
#include <optional>
#include <random>
#include <sstream>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "vdm/frames/codec.hpp"
#include "vdm/llm/request.hpp"

namespace vdm::gateway {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using json = nlohmann::json;

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

namespace {

// JSON uploads carry base64, which is 4/3 the size of the image.
constexpr std::size_t kMaxBodyBytes = kMaxFrameBytes / 3 * 4 + 64 * 1024;

Response json_response(http::status status, const json& body) {
    Response res{status, 11};
    res.set(http::field::content_type, "application/json");
    res.body() = body.dump();
    return res;
}

Response error_response(http::status status, const std::string& message, const std::string& kind = "") {
    json body = {{"error", message}};
    if (!kind.empty()) body["kind"] = kind;
    return json_response(status, body);
}

std::vector<std::string> split_path(std::string_view target) {
    if (const auto q = target.find('?'); q != std::string_view::npos) target = target.substr(0, q);
    std::vector<std::string> parts;
    std::string current;
    for (char c : target) {
        if (c == '/') {
            if (!current.empty()) parts.push_back(std::move(current));
            current.clear();
        } else {
            current += c;
        }
    }
    if (!current.empty()) parts.push_back(std::move(current));
    return parts;
}

json element_json(const ContextElement& element) {
    if (const auto* f = std::get_if<Frame>(&element)) {
        json out = {{"kind", "frame"},
                    {"frame_id", f->frame_id.value},
                    {"is_full_resolution", f->is_full_resolution},
                    {"width", f->width},
                    {"height", f->height}};
        try {
            const auto thumb = frames::downscale(frames::FrameImage{f->image, f->width, f->height},
                                                 kThumbnailLongSide, 80);
            out["thumbnail_b64"] = llm::base64_encode(thumb.image.data());
        } catch (const std::exception& e) {
            spdlog::warn("thumbnail for frame {} failed: {}", f->frame_id.value, e.what());
        }
        return out;
    }
    if (const auto* l = std::get_if<DialogueLine>(&element)) {
        return {{"kind", l->speaker == Speaker::User ? "user" : "agent"}, {"text", l->text}};
    }
    const auto& s = std::get<Summary>(element);
    json covers = json::array();
    for (auto id : s.covers_frame_ids) covers.push_back(id.value);
    return {{"kind", "summary"}, {"text", s.text}, {"covers", covers}};
}

}  // namespace

json describe_state(const PromptView& view, std::size_t token_estimate) {
    json elements = json::array();
    for (const auto& e : view.elements()) elements.push_back(element_json(e));
    return {{"elements", elements}, {"frame_count", view.frame_count()}, {"token_estimate", token_estimate}};
}

struct Server::Impl {
    GatewayConfig config;
    BackendFactory factory;

    net::io_context ioc;
    std::optional<tcp::acceptor> acceptor;
    std::thread accept_thread;
    std::atomic<bool> stopping{false};

    mutable std::mutex sessions_mutex;
    std::map<std::string, std::shared_ptr<orchestrator::Session>> sessions;
    std::mt19937_64 rng{std::random_device{}()};

    std::mutex connections_mutex;
    std::vector<std::thread> connection_threads;
    std::vector<std::weak_ptr<tcp::socket>> sockets;

    Impl(GatewayConfig c, BackendFactory f) : config(std::move(c)), factory(std::move(f)) {}

    std::shared_ptr<orchestrator::Session> find(const std::string& id) const {
        std::lock_guard lock(sessions_mutex);
        auto it = sessions.find(id);
        return it == sessions.end() ? nullptr : it->second;
    }

    void accept_next() {
        acceptor->async_accept([this](beast::error_code ec, tcp::socket socket) {
            if (ec || stopping) return;
            auto shared = std::make_shared<tcp::socket>(std::move(socket));
            {
                std::lock_guard lock(connections_mutex);
                sockets.push_back(shared);
                connection_threads.emplace_back([this, shared] { serve(shared); });
            }
            accept_next();
        });
    }

    void add_cors(const Request& req, Response& res) const {
        const std::string origin(req[http::field::origin]);
        if (origin.empty()) return;
        for (const auto& allowed : config.cors_allow) {
            if (allowed == "*" || allowed == origin) {
                res.set(http::field::access_control_allow_origin, origin);
                res.set(http::field::vary, "Origin");
                return;
            }
        }
    }

    void serve(std::shared_ptr<tcp::socket> socket) {
        beast::flat_buffer buffer;
        while (!stopping) {
            http::request_parser<http::string_body> parser;
            parser.body_limit(kMaxBodyBytes);
            beast::error_code ec;
            http::read_header(*socket, buffer, parser, ec);
            if (ec) break;
            if (const auto length = parser.content_length(); length && *length > kMaxBodyBytes) {
                write_and_close(*socket, error_response(http::status::payload_too_large, "request body too large"));
                break;
            }
            http::read(*socket, buffer, parser, ec);
            if (ec == http::error::body_limit) {
                write_and_close(*socket, error_response(http::status::payload_too_large, "request body too large"));
                break;
            }
            if (ec) break;

            if (websocket::is_upgrade(parser.get())) {
                serve_websocket(*socket, parser.release());
                break;
            }
            Request req = parser.release();
            Response res = route(req);
            add_cors(req, res);
            res.version(req.version());
            res.keep_alive(req.keep_alive());
            res.prepare_payload();
            http::write(*socket, res, ec);
            if (ec || !req.keep_alive()) break;
        }
        beast::error_code ignored;
        socket->shutdown(tcp::socket::shutdown_both, ignored);
    }

    static void write_and_close(tcp::socket& socket, Response res) {
        res.keep_alive(false);
        res.prepare_payload();
        beast::error_code ec;
        http::write(socket, res, ec);
    }

    Response route(Request& req) {
        if (req.method() == http::verb::options) {
            Response res{http::status::no_content, 11};
            res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
            res.set(http::field::access_control_allow_headers, "Content-Type");
            return res;
        }
        const auto parts = split_path(std::string_view(req.target().data(), req.target().size()));
        if (parts.size() < 2 || parts[0] != "api" || parts[1] != "session") {
            return error_response(http::status::not_found, "no such endpoint");
        }
        if (parts.size() == 2) {
            if (req.method() != http::verb::post) return error_response(http::status::method_not_allowed, "use POST");
            return create_session(req);
        }
        auto session = find(parts[2]);
        if (!session) return error_response(http::status::not_found, "unknown session " + parts[2]);
        const std::string action = parts.size() > 3 ? parts[3] : "";
        if (parts.size() == 4 && action == "message" && req.method() == http::verb::post) {
            return post_message(*session, req);
        }
        if (parts.size() == 4 && action == "frame" && req.method() == http::verb::post) {
            return post_frame(*session, req);
        }
        if (parts.size() == 4 && action == "state" && req.method() == http::verb::get) {
            const auto view = session->snapshot();
            const auto tokens = llm::estimate_tokens(llm::render_prompt(view, session->config().render));
            return json_response(http::status::ok, describe_state(view, tokens));
        }
        if (parts.size() == 4 && action == "metrics" && req.method() == http::verb::get) {
            return json_response(http::status::ok, orchestrator::to_json(session->metrics()));
        }
        return error_response(http::status::not_found, "no such endpoint");
    }

    Response create_session(const Request& req) {
        auto policy = config.policy;
        if (!req.body().empty()) {
            const auto body = json::parse(req.body(), nullptr, false);
            if (body.is_discarded() || !body.is_object()) {
                return error_response(http::status::bad_request, "body must be a JSON object");
            }
            try {
                policy = SummarisationPolicy(body.value("n", policy.n()), body.value("m", policy.m()));
            } catch (const std::invalid_argument& e) {
                return error_response(http::status::bad_request, e.what());
            } catch (const json::exception&) {
                return error_response(http::status::bad_request, "n and m must be integers");
            }
        }
        Backends backends;
        try {
            backends = factory(config);
        } catch (const std::exception& e) {
            return error_response(http::status::service_unavailable, std::string("backend unavailable: ") + e.what());
        }
        auto conversation = config.conversation_config();
        conversation.policy = policy;

        std::string id;
        {
            std::lock_guard lock(sessions_mutex);
            do {
                std::ostringstream out;
                out << std::hex << rng();
                id = out.str();
            } while (sessions.contains(id));
        }
        orchestrator::SessionOptions options;
        if (config.transcript) options.transcript_path = *config.transcript / (id + ".jsonl");
        auto session = std::make_shared<orchestrator::Session>(id, std::move(conversation), backends.reply,
                                                               backends.summary, options);
        {
            std::lock_guard lock(sessions_mutex);
            sessions.emplace(id, std::move(session));
        }
        return json_response(http::status::created, {{"session_id", id}, {"n", policy.n()}, {"m", policy.m()}});
    }

    Response post_message(orchestrator::Session& session, const Request& req) {
        const auto body = json::parse(req.body(), nullptr, false);
        if (body.is_discarded() || !body.is_object() || !body.contains("text") || !body["text"].is_string()) {
            return error_response(http::status::bad_request, "body must be {\"text\": string}");
        }
        std::future<llm::Reply> future;
        try {
            future = session.submit_message(body["text"].get<std::string>());
        } catch (const orchestrator::QueueFullError& e) {
            return error_response(http::status::conflict, e.what());
        } catch (const std::invalid_argument& e) {
            return error_response(http::status::bad_request, e.what());
        } catch (const orchestrator::SessionClosedError& e) {
            return error_response(http::status::service_unavailable, e.what());
        }
        try {
            const auto reply = future.get();
            return json_response(http::status::ok, {{"reply", reply.text}, {"latency_ms", reply.latency_ms}});
        } catch (const llm::BackendError& e) {
            return error_response(http::status::bad_gateway, e.what(), std::string(llm::to_string(e.kind())));
        } catch (const std::exception& e) {
            return error_response(http::status::service_unavailable, e.what());
        }
    }

    Response post_frame(orchestrator::Session& session, const Request& req) {
        std::vector<std::uint8_t> bytes;
        std::optional<MediaType> declared;
        const std::string content_type(req[http::field::content_type]);
        if (content_type.starts_with("application/json")) {
            const auto body = json::parse(req.body(), nullptr, false);
            if (body.is_discarded() || !body.is_object() || !body.contains("image_b64") ||
                !body["image_b64"].is_string()) {
                return error_response(http::status::unsupported_media_type, "expected {\"image_b64\": string}");
            }
            std::string_view encoded = body["image_b64"].get_ref<const std::string&>();
            if (encoded.starts_with("data:")) {
                const auto comma = encoded.find(',');
                encoded = comma == std::string_view::npos ? std::string_view{} : encoded.substr(comma + 1);
            }
            try {
                bytes = llm::base64_decode(encoded);
            } catch (const std::invalid_argument&) {
                return error_response(http::status::unsupported_media_type, "image_b64 is not valid base64");
            }
        } else {
            bytes.assign(req.body().begin(), req.body().end());
            if (content_type.starts_with("image/jpeg")) declared = MediaType::Jpeg;
            if (content_type.starts_with("image/png")) declared = MediaType::Png;
        }
        if (bytes.size() > kMaxFrameBytes) {
            return error_response(http::status::payload_too_large, "image exceeds 8 MiB");
        }
        try {
            auto image = frames::encode_frame(std::move(bytes), declared);
            const auto id = session.submit_frame(std::move(image));
            return json_response(http::status::ok, {{"frame_id", id.value}});
        } catch (const frames::ImageDecodeError& e) {
            return error_response(http::status::unsupported_media_type, e.what());
        } catch (const orchestrator::SessionClosedError& e) {
            return error_response(http::status::service_unavailable, e.what());
        }
    }

    void serve_websocket(tcp::socket& socket, Request req) {
        const auto parts = split_path(std::string_view(req.target().data(), req.target().size()));
        websocket::stream<tcp::socket&> ws(socket);
        beast::error_code ec;
        ws.accept(req, ec);
        if (ec) return;
        std::shared_ptr<orchestrator::Session> session;
        if (parts.size() == 4 && parts[0] == "api" && parts[1] == "session" && parts[3] == "events") {
            session = find(parts[2]);
        }
        if (!session) {
            ws.close(websocket::close_reason(websocket::close_code::policy_error, "unknown session"), ec);
            return;
        }

        struct Channel {
            std::mutex mutex;
            std::condition_variable cv;
            std::deque<std::string> pending;
        };
        auto channel = std::make_shared<Channel>();
        const auto subscription = session->transcript().subscribe([channel](const orchestrator::TranscriptEvent& e) {
            {
                std::lock_guard lock(channel->mutex);
                channel->pending.push_back(json(e).dump());
            }
            channel->cv.notify_one();
        });

        ws.text(true);
        beast::flat_buffer incoming;
        while (!stopping) {
            std::deque<std::string> batch;
            {
                std::unique_lock lock(channel->mutex);
                channel->cv.wait_for(lock, std::chrono::milliseconds(50), [&] { return !channel->pending.empty(); });
                batch.swap(channel->pending);
            }
            for (const auto& message : batch) {
                ws.write(net::buffer(message), ec);
                if (ec) break;
            }
            if (ec) break;
            // Client frames (close, ping) are only read once they are waiting,
            // so this thread never blocks on a quiet client.
            pollfd pfd{socket.native_handle(), POLLIN, 0};
            if (::poll(&pfd, 1, 0) > 0) {
                ws.read(incoming, ec);
                incoming.clear();
                if (ec) break;
            }
        }
        session->transcript().unsubscribe(subscription);
        if (stopping) ws.close(websocket::close_code::going_away, ec);
    }
};

Server::Server(GatewayConfig config, BackendFactory factory)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(factory))) {
    impl_->config.validate();
}

Server::~Server() { stop(); }

void Server::start() {
    auto& impl = *impl_;
    const auto address = net::ip::make_address(impl.config.host);
    impl.acceptor.emplace(impl.ioc);
    tcp::endpoint endpoint(address, static_cast<unsigned short>(impl.config.port));
    impl.acceptor->open(endpoint.protocol());
    impl.acceptor->set_option(net::socket_base::reuse_address(true));
    impl.acceptor->bind(endpoint);
    impl.acceptor->listen();
    bound_port_ = impl.acceptor->local_endpoint().port();
    impl.accept_next();
    impl.accept_thread = std::thread([&impl] { impl.ioc.run(); });
    spdlog::info("gateway listening on {}:{}", impl.config.host, bound_port_.load());
}

void Server::stop() {
    auto& impl = *impl_;
    if (impl.stopping.exchange(true)) return;
    net::post(impl.ioc, [&impl] {
        beast::error_code ec;
        if (impl.acceptor) impl.acceptor->close(ec);
    });
    if (impl.accept_thread.joinable()) impl.accept_thread.join();
    std::vector<std::thread> threads;
    {
        std::lock_guard lock(impl.connections_mutex);
        for (auto& weak : impl.sockets) {
            if (auto socket = weak.lock()) {
                beast::error_code ec;
                socket->shutdown(tcp::socket::shutdown_both, ec);
            }
        }
        threads.swap(impl.connection_threads);
    }
    for (auto& t : threads) {
        if (t.joinable()) t.join();
    }
    std::lock_guard lock(impl.sessions_mutex);
    impl.sessions.clear();
}

std::shared_ptr<orchestrator::Session> Server::find_session(const std::string& id) const {
    return impl_->find(id);
}

}  // namespace vdm::gateway
