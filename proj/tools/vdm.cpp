// vdm: command-line front end for the vision dialogue manager.
//
//   vdm run --source video:demo.mp4 --interval-ms 5000 --n 4 --m 3 --backend mock --transcript out.jsonl
//   vdm chat --backend http
//   vdm replay script.json --backend mock
//   vdm serve --port 8080

#include <atomic>
#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "vdm/frames/source.hpp"
#include "vdm/gateway/config.hpp"
#include "vdm/gateway/server.hpp"
#include "vdm/orchestrator/replay.hpp"
#include "vdm/orchestrator/session.hpp"

namespace {

using vdm::gateway::GatewayConfig;

std::atomic<bool> g_interrupted{false};

struct CommonFlags {
    std::string config_path;
    std::string backend;
    std::string base_url;
    std::string model;
    int n = 0;
    int m = 0;
    int mock_delay_ms = -1;
    std::string transcript;
    std::string log_level = "warn";
};

void add_common(CLI::App& app, CommonFlags& flags) {
    app.add_option("--config", flags.config_path, "JSON config file (flags override it)");
    app.add_option("--backend", flags.backend, "mock or http")->check(CLI::IsMember({"mock", "http"}));
    app.add_option("--base-url", flags.base_url, "OpenAI-compatible endpoint base URL");
    app.add_option("--model", flags.model, "Model id for replies and summaries");
    app.add_option("--n", flags.n, "Frames kept before summarising (default 4)");
    app.add_option("--m", flags.m, "Frames summarised per run (default 3)");
    app.add_option("--mock-delay-ms", flags.mock_delay_ms, "Delay for mock replies");
    app.add_option("--transcript", flags.transcript, "Transcript JSONL path (directory for serve)");
    app.add_option("--log-level", flags.log_level, "trace, debug, info, warn, error");
}

GatewayConfig resolve(const CommonFlags& flags) {
    GatewayConfig config;
    if (!flags.config_path.empty()) config = vdm::gateway::load_config(flags.config_path);
    if (!flags.backend.empty()) config.backend = vdm::gateway::backend_kind_from_string(flags.backend);
    if (!flags.base_url.empty()) config.backend_config.base_url = flags.base_url;
    if (!flags.model.empty()) {
        config.backend_config.model_id = flags.model;
        config.backend_config.summary_model_id = flags.model;
    }
    if (flags.n != 0 || flags.m != 0) {
        try {
            config.policy = vdm::SummarisationPolicy(flags.n != 0 ? flags.n : config.policy.n(),
                                                     flags.m != 0 ? flags.m : config.policy.m());
        } catch (const std::invalid_argument& e) {
            throw vdm::gateway::ConfigError(std::string("policy: ") + e.what());
        }
    }
    if (flags.mock_delay_ms >= 0) config.mock_delay_ms = flags.mock_delay_ms;
    if (!flags.transcript.empty()) config.transcript = flags.transcript;
    return config;
}

void print_metrics(const vdm::orchestrator::Metrics& metrics) {
    std::cerr << "metrics: " << vdm::orchestrator::to_json(metrics).dump() << "\n";
}

// Terminal chat, optionally with a frame source feeding the same session.
int interactive(const GatewayConfig& config, bool with_source) {
    auto backends = vdm::gateway::make_backends(config);
    vdm::orchestrator::SessionOptions options;
    options.transcript_path = config.transcript;
    vdm::orchestrator::Session session("cli", config.conversation_config(), backends.reply, backends.summary,
                                       options);

    std::unique_ptr<vdm::frames::FrameSource> source;
    std::unique_ptr<vdm::frames::FramePump> pump;
    if (with_source) {
        source = vdm::frames::make_source(config.source);
        pump = std::make_unique<vdm::frames::FramePump>(
            *source, std::chrono::milliseconds(config.source.interval_ms),
            [&session](vdm::frames::SourcedFrame frame) { session.submit_frame(std::move(frame.image)); });
    }

    std::string line;
    while (!g_interrupted && std::getline(std::cin, line)) {
        if (vdm::trim(line).empty()) continue;
        try {
            const auto reply = session.submit_message(line).get();
            std::cout << "agent> " << reply.text << std::endl;
        } catch (const vdm::llm::BackendError& e) {
            std::cerr << "error (" << vdm::llm::to_string(e.kind()) << "): " << e.what() << std::endl;
        }
    }
    if (pump && !g_interrupted) pump->wait();
    pump.reset();
    session.flush().get();
    print_metrics(session.metrics());
    return 0;
}

int replay_script(const GatewayConfig& config, const std::string& script_path, bool explicit_policy) {
    auto script = vdm::orchestrator::load_script(script_path);
    if (explicit_policy) {
        script.n.reset();
        script.m.reset();
    }
    auto backends = vdm::gateway::make_backends(config);
    const auto result = vdm::orchestrator::replay(script, config.conversation_config(), backends.reply,
                                                  backends.summary, config.transcript);
    for (const auto& step : result.steps) {
        std::cout << step.action << "\t" << step.buffer << "\n";
    }
    print_metrics(result.metrics);
    return 0;
}

int serve(const GatewayConfig& config) {
    vdm::gateway::Server server(config);
    server.start();
    std::cout << "listening on http://" << config.host << ":" << server.port() << std::endl;
    while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vision-enabled dialogue manager"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string source_spec;
    int interval_ms = 5000;
    int max_frames = 0;
    std::string script_path;
    std::string host;
    int port = -1;

    auto* run = app.add_subcommand("run", "Chat in the terminal while frames stream from a source");
    add_common(*run, flags);
    run->add_option("--source", source_spec, "video:PATH or dir:PATH")->required();
    run->add_option("--interval-ms", interval_ms, "Frame interval in ms (default 5000)");
    run->add_option("--max-frames", max_frames, "Stop the source after this many frames");

    auto* chat = app.add_subcommand("chat", "Interactive terminal chat");
    add_common(*chat, flags);
    chat->add_option("--source", source_spec, "Optional frame source: video:PATH or dir:PATH");
    chat->add_option("--interval-ms", interval_ms, "Frame interval in ms (default 5000)");

    auto* replay = app.add_subcommand("replay", "Replay a session script on logical time");
    add_common(*replay, flags);
    replay->add_option("script", script_path, "Session script (JSON)")->required()->check(CLI::ExistingFile);

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP/WebSocket gateway");
    add_common(*serve_cmd, flags);
    serve_cmd->add_option("--host", host, "Listen address");
    serve_cmd->add_option("--port", port, "Listen port (0 picks a free one)");

    CLI11_PARSE(app, argc, argv);

    std::signal(SIGINT, [](int) { g_interrupted = true; });
    std::signal(SIGTERM, [](int) { g_interrupted = true; });

    try {
        spdlog::set_level(spdlog::level::from_str(flags.log_level));
        auto config = resolve(flags);
        if (!source_spec.empty()) {
            if (source_spec == "push") {
                std::cerr << "push sources are fed through `vdm serve`\n";
                return 2;
            }
            config.source = vdm::frames::parse_source_spec(source_spec, interval_ms);
            if (max_frames > 0) config.source.max_frames = max_frames;
        }
        if (!host.empty()) config.host = host;
        if (port >= 0) config.port = port;
        config.validate();

        if (*run) return interactive(config, true);
        if (*chat) return interactive(config, !source_spec.empty());
        if (*replay) return replay_script(config, script_path, flags.n != 0 || flags.m != 0);
        if (*serve_cmd) return serve(config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
