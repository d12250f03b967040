// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "test_support.hpp"
#include "vdm/llm/http_backend.hpp"
#include "vdm/orchestrator/conversation.hpp"
#include "vdm/orchestrator/replay.hpp"
#include "vdm/orchestrator/session.hpp"

using namespace vdm;
using namespace vdm::orchestrator;
using vdm::llm::MockBackend;
using Clock = std::chrono::steady_clock;

namespace {

const std::filesystem::path kScripts = VDM_SCRIPTS_DIR;

// Collects violations; the first few are echoed in the result line.
struct Outcome {
    std::vector<std::string> violations;
    std::string detail;

    void expect(bool ok, const std::string& what) {
        if (!ok) violations.push_back(what);
    }
};

long long elapsed_ms(Clock::time_point since) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - since).count();
}

struct Conv {
    explicit Conv(SummarisationPolicy policy, std::shared_ptr<llm::LlmBackend> summary = nullptr) {
        config.policy = policy;
        if (summary) summary_backend = std::move(summary);
        conversation = std::make_unique<Conversation>(config, reply, summary_backend, clock, transcript,
                                                      [this] { return clock.now(); });
    }
    ConversationConfig config;
    std::shared_ptr<MockBackend> reply = std::make_shared<MockBackend>(&MockBackend::default_reply);
    std::shared_ptr<llm::LlmBackend> summary_backend =
        std::make_shared<MockBackend>(&MockBackend::default_summary);
    ManualClock clock;
    Transcript transcript;
    std::unique_ptr<Conversation> conversation;
};

const frames::FrameImage& tiny_image() {
    static const auto image = frames::encode_frame(test::make_jpeg(16, 12));
    return image;
}

// ---------------------------------------------------------------------------

Outcome trace_reproduction() {
    Outcome o;
    const auto started = Clock::now();
    const auto script = load_script(kScripts / "summarisation_trace.json");
    const auto result = replay(script, ConversationConfig{}, std::make_shared<MockBackend>(),
                               std::make_shared<MockBackend>(&MockBackend::default_summary));
    std::vector<std::string> buffers;
    for (const auto& s : result.steps) buffers.push_back(s.buffer);
    const std::vector<std::string> expected = {"[F1]",
                                               "[F1, F2]",
                                               "[S(1,2), F3]",
                                               "[S(1,2), F3, L, R]",
                                               "[S(1,2), F3, L, R, F4]",
                                               "[S(1,2), S(3), L, R, F4, F5]"};
    o.expect(buffers == expected, "buffer states differ: last was " + (buffers.empty() ? "" : buffers.back()));
    const auto ms = elapsed_ms(started);
    o.expect(ms < 1000, "took " + std::to_string(ms) + " ms");
    o.detail = "final " + (buffers.empty() ? std::string("[]") : buffers.back()) + " in " + std::to_string(ms) + " ms";
    return o;
}

Outcome property_suite() {
    Outcome o;
    const auto started = Clock::now();
    std::mt19937 rng(424242);
    constexpr int kSequences = 1000;
    std::size_t total_events = 0;
    std::size_t total_summaries = 0;

    for (int seq = 0; seq < kSequences && o.violations.size() < 20; ++seq) {
        const int n = std::uniform_int_distribution<int>(2, 8)(rng);
        const int m = std::uniform_int_distribution<int>(1, n - 1)(rng);
        const int length = std::uniform_int_distribution<int>(1, 200)(rng);
        const double frame_share = std::uniform_real_distribution<double>(0.3, 0.95)(rng);
        const std::string where = "seq " + std::to_string(seq) + " (n=" + std::to_string(n) +
                                  ", m=" + std::to_string(m) + ")";
        Conv c(SummarisationPolicy(n, m));
        auto& conv = *c.conversation;

        // (b) checked at the moment each summary is recorded.
        c.transcript.subscribe([&](const TranscriptEvent& e) {
            if (e.kind != EventKind::SummaryCreated) return;
            ++total_summaries;
            o.expect(conv.buffer().frame_count() >= static_cast<std::size_t>(n - m),
                     where + ": fewer than n-m frames after a summary");
            o.expect(conv.buffer().frame_count() >= 1, where + ": no frame left after a summary");
        });

        std::string kinds_fed;
        std::vector<std::string> dialogue_fed;
        std::uint64_t frames_fed = 0;
        for (int i = 0; i < length; ++i) {
            c.clock.set(SessionTime(i * 1000));
            const auto summaries_before = c.transcript.size();
            if (std::bernoulli_distribution(frame_share)(rng)) {
                conv.handle_frame(tiny_image());
                ++frames_fed;
                kinds_fed += 'F';
            } else {
                const std::string text = "u" + std::to_string(i);
                const auto reply = conv.handle_user_message(text);
                dialogue_fed.push_back(text);
                dialogue_fed.push_back(reply.text);
                kinds_fed += "LL";
            }
            ++total_events;
            const auto& elements = conv.buffer().elements();
            const auto count = conv.buffer().frame_count();

            // (a)
            o.expect(count <= static_cast<std::size_t>(n), where + ": more than n frames");
            bool summarised = false;
            const auto events = c.transcript.events();
            for (std::size_t k = summaries_before; k < events.size(); ++k) {
                summarised = summarised || events[k].kind == EventKind::SummaryCreated;
            }
            if (summarised) o.expect(count <= static_cast<std::size_t>(n - 1), where + ": trigger left n frames");

            // (e)
            const auto kinds = test::kinds_of(elements);
            const auto oracle = test::brute_force_run(kinds, m);
            if (oracle.length == 0) {
                o.expect(count == 0, where + ": scanner found no frame");
            } else {
                const auto run = select_run(elements, m);
                o.expect(run.start_index == oracle.start && run.frames.size() == oracle.length,
                         where + ": select_run disagrees with the scanner");
            }
        }

        const auto& elements = conv.buffer().elements();
        // Runs chosen along the way must reproduce the simulated trigger rule.
        o.expect(test::kinds_of(elements) == test::simulate_trigger_rule(kinds_fed, n, m),
                 where + ": buffer shape differs from the trigger-rule simulation");

        // (c)
        std::vector<std::string> dialogue;
        for (const auto& e : elements) {
            if (const auto* l = std::get_if<DialogueLine>(&e)) dialogue.push_back(l->text);
        }
        o.expect(dialogue == dialogue_fed, where + ": dialogue order changed");

        // (d)
        std::vector<std::uint64_t> covered;
        std::vector<std::uint64_t> retained;
        for (const auto& e : elements) {
            if (const auto* f = std::get_if<Frame>(&e)) retained.push_back(f->frame_id.value);
            if (const auto* s = std::get_if<Summary>(&e)) {
                for (auto id : s->covers_frame_ids) covered.push_back(id.value);
            }
        }
        std::vector<std::uint64_t> all = covered;
        all.insert(all.end(), retained.begin(), retained.end());
        std::set<std::uint64_t> unique(all.begin(), all.end());
        o.expect(unique.size() == all.size(), where + ": a frame id appears twice");
        o.expect(all.size() == frames_fed && (unique.empty() || (*unique.begin() == 1 && *unique.rbegin() == frames_fed)),
                 where + ": frame ids lost");
        if (!covered.empty() && !retained.empty()) {
            o.expect(*std::max_element(covered.begin(), covered.end()) <
                         *std::min_element(retained.begin(), retained.end()),
                     where + ": a summary covers a frame newer than a retained one");
        }
    }
    const auto ms = elapsed_ms(started);
    o.expect(ms < 30000, "took " + std::to_string(ms) + " ms");
    o.detail = std::to_string(kSequences) + " sequences, " + std::to_string(total_events) + " events, " +
               std::to_string(total_summaries) + " summaries in " + std::to_string(ms) + " ms";
    return o;
}

Outcome prompt_boundedness() {
    Outcome o;
    // Ten turns spread over the first 20 frames, then frames only, so the
    // 20-frame and 100-frame prompts carry the same dialogue.
    auto fixed = std::make_shared<MockBackend>(
        [](const llm::ChatVisionRequest&, std::size_t) { return std::string("a fixed-size note of what I saw"); });
    Conv c(SummarisationPolicy(4, 3), fixed);
    auto& conv = *c.conversation;
    std::string kinds_fed;
    std::size_t estimate_at_20 = 0;
    for (int frame = 1; frame <= 100; ++frame) {
        conv.handle_frame(tiny_image());
        kinds_fed += 'F';
        if (frame <= 20 && frame % 2 == 0) {
            conv.handle_user_message("turn " + std::to_string(frame / 2));
            kinds_fed += "LL";
        }
        if (frame == 20) estimate_at_20 = conv.metrics().prompt_token_estimate;
    }
    const auto request = llm::render_prompt(conv.snapshot(), c.config.render);
    const auto estimate_at_100 = llm::estimate_tokens(request);
    std::size_t summaries = 0;
    for (const auto& e : conv.buffer().elements()) summaries += std::holds_alternative<Summary>(e) ? 1 : 0;
    const auto oracle = test::simulate_trigger_rule(kinds_fed, 4, 3);
    const auto expected = static_cast<std::size_t>(std::count(oracle.begin(), oracle.end(), 'S'));

    o.expect(request.image_part_count() <= 4, "request has " + std::to_string(request.image_part_count()) + " images");
    o.expect(summaries == expected,
             std::to_string(summaries) + " summaries, trigger-rule oracle says " + std::to_string(expected));
    o.expect(estimate_at_100 < 2 * estimate_at_20, "estimate grew from " + std::to_string(estimate_at_20) +
                                                       " to " + std::to_string(estimate_at_100));
    o.detail = std::to_string(request.image_part_count()) + " images, " + std::to_string(summaries) +
               " summaries (oracle " + std::to_string(expected) + "), tokens " + std::to_string(estimate_at_20) +
               " at 20 frames vs " + std::to_string(estimate_at_100) + " at 100";
    return o;
}

Outcome resolution_policy() {
    Outcome o;
    std::mt19937 rng(77);
    const std::vector<std::pair<int, int>> sizes = {{1920, 1080}, {1280, 720}, {640, 480},
                                                    {320, 240},   {500, 900},  {96, 64}};
    std::size_t frames_checked = 0;
    for (int seq = 0; seq < 12; ++seq) {
        Conv c(SummarisationPolicy(std::uniform_int_distribution<int>(2, 6)(rng), 1));
        auto& conv = *c.conversation;
        std::map<std::uint64_t, std::pair<int, int>> original;
        for (int i = 0; i < 14; ++i) {
            if (std::bernoulli_distribution(0.25)(rng)) {
                conv.handle_user_message("hello");
                continue;
            }
            const auto [w, h] = sizes[std::uniform_int_distribution<std::size_t>(0, sizes.size() - 1)(rng)];
            const auto id = conv.handle_frame(frames::encode_frame(test::make_jpeg(w, h, i)));
            original[id.value] = {w, h};

            const auto& elements = conv.buffer().elements();
            std::vector<const Frame*> frames;
            for (const auto& e : elements) {
                if (const auto* f = std::get_if<Frame>(&e)) frames.push_back(f);
            }
            const auto full = std::count_if(frames.begin(), frames.end(), [](auto* f) { return f->is_full_resolution; });
            o.expect(full == 1, "expected exactly one full-resolution frame, found " + std::to_string(full));
            o.expect(frames.back()->is_full_resolution, "newest frame is not the full-resolution one");
            for (const auto* f : frames) {
                ++frames_checked;
                const auto [ow, oh] = original[f->frame_id.value];
                o.expect(f->width <= ow && f->height <= oh, "frame was upscaled");
                if (!f->is_full_resolution) {
                    o.expect(std::max(f->width, f->height) <= 512, "reduced frame longer than 512 px");
                } else {
                    o.expect(f->width == ow && f->height == oh, "full-resolution frame was resized");
                }
                o.expect(test::decoded_size(f->image.data()) == std::pair{f->width, f->height},
                         "stored size does not match the image bytes");
            }
        }
    }
    o.detail = std::to_string(frames_checked) + " frame states checked";
    return o;
}

Outcome prompt_rendering() {
    Outcome o;
    std::mt19937 rng(99);
    const std::string system(llm::kDefaultSystemInstructions);
    for (int b = 0; b < 100; ++b) {
        const int n = std::uniform_int_distribution<int>(2, 8)(rng);
        Conv c(SummarisationPolicy(n, std::uniform_int_distribution<int>(1, n - 1)(rng)));
        auto& conv = *c.conversation;
        const int length = std::uniform_int_distribution<int>(0, 40)(rng);
        for (int i = 0; i < length; ++i) {
            if (std::bernoulli_distribution(0.7)(rng)) {
                conv.handle_frame(frames::encode_frame(test::make_jpeg(16, 12, i)));
            } else {
                conv.handle_user_message("line " + std::to_string(i));
            }
        }
        const auto calls_before = c.reply->call_count();
        conv.handle_user_message("what now?");
        const auto request = c.reply->requests().at(calls_before);

        // Buffer as the model saw it: everything but the agent line just added.
        auto elements = conv.buffer().elements();
        elements.pop_back();
        const std::string where = "buffer " + std::to_string(b);

        o.expect(!request.messages.empty() && request.messages[0].role == llm::Role::System,
                 where + ": system message not first");
        o.expect(request.messages[0].parts.size() == 1 &&
                     std::get<llm::TextPart>(request.messages[0].parts[0]).text == system,
                 where + ": system text differs");

        // Expected part sequence straight from the buffer.
        std::vector<std::pair<llm::Role, std::string>> expected;
        for (const auto& e : elements) {
            if (const auto* f = std::get_if<Frame>(&e)) {
                expected.emplace_back(llm::Role::User, llm::to_data_uri(f->image));
            } else if (const auto* l = std::get_if<DialogueLine>(&e)) {
                expected.emplace_back(l->speaker == Speaker::User ? llm::Role::User : llm::Role::Assistant, l->text);
            } else {
                expected.emplace_back(llm::Role::User, "[You saw]: " + std::get<Summary>(e).text);
            }
        }
        std::vector<std::pair<llm::Role, std::string>> actual;
        for (std::size_t k = 1; k < request.messages.size(); ++k) {
            const auto& msg = request.messages[k];
            o.expect(msg.role != request.messages[k - 1].role, where + ": adjacent messages share a role");
            for (const auto& p : msg.parts) {
                if (const auto* t = std::get_if<llm::TextPart>(&p)) {
                    actual.emplace_back(msg.role, t->text);
                } else {
                    actual.emplace_back(msg.role, std::get<llm::ImagePart>(p).data_uri);
                }
            }
        }
        o.expect(actual == expected, where + ": part order differs from buffer order");
        o.expect(request.image_part_count() == frame_count(elements), where + ": image count != frame count");
    }
    o.detail = "100 buffers";
    return o;
}

Outcome http_contract() {
    Outcome o;
    ::setenv("VDM_ACCEPTANCE_KEY", "sk-acceptance", 1);
    llm::BackendConfig config;
    config.api_key_env = "VDM_ACCEPTANCE_KEY";
    config.max_retries = 2;
    config.initial_backoff_ms = 20;
    config.timeout_ms = 2000;

    // JSON shape.
    {
        test::StubLlmServer stub([](const std::string&, std::size_t) {
            return test::StubLlmServer::Response{200, test::StubLlmServer::completion_body("hi"), 0};
        });
        config.base_url = stub.base_url();
        llm::HttpBackend backend(config);
        const PromptView view("sys", {test::frame(1), test::user_line("hello")});
        const auto request = llm::render_prompt(view);
        backend.complete(request);
        const auto body = nlohmann::json::parse(stub.bodies().at(0));
        o.expect(body["model"] == "gpt-4o", "model id missing");
        o.expect(body["messages"][0]["role"] == "system", "system role missing");
        const auto& content = body["messages"][1]["content"];
        o.expect(content.is_array() && content[0]["type"] == "image_url", "image part missing");
        const std::string url = content[0]["image_url"]["url"];
        o.expect(url == "data:image/jpeg;base64," + llm::base64_encode(test::frame(1).image.data()),
                 "image part is not a base64 data URI of the frame");
        o.expect(content[1]["type"] == "text" && content[1]["text"] == "hello", "text part missing");
        o.expect(stub.authorization_headers().at(0) == "Bearer sk-acceptance", "bearer header missing");
    }
    // 429 -> retry -> success.
    int retries = 0;
    {
        test::StubLlmServer stub([](const std::string&, std::size_t i) {
            if (i == 0) return test::StubLlmServer::Response{429, "{}", 0};
            return test::StubLlmServer::Response{200, test::StubLlmServer::completion_body("after retry"), 0};
        });
        config.base_url = stub.base_url();
        llm::HttpBackend backend(config);
        const auto completion = backend.complete(llm::render_prompt(PromptView("sys", {test::user_line("x")})));
        retries = backend.retry_count();
        o.expect(completion.text == "after retry", "retry did not reach the success response");
        o.expect(retries == 1 && stub.calls() == 2, "retry not observable");
    }
    // Timeout while summarising: typed error, buffer unchanged, trigger re-armed.
    bool timed_out = false;
    {
        std::atomic<bool> slow{true};
        test::StubLlmServer stub([&slow](const std::string&, std::size_t) {
            return test::StubLlmServer::Response{200, test::StubLlmServer::completion_body("a cat"),
                                                 slow ? 1000 : 0};
        });
        auto summary_config = config;
        summary_config.base_url = stub.base_url();
        summary_config.timeout_ms = 250;
        Conv c(SummarisationPolicy(3, 2), std::make_shared<llm::HttpBackend>(summary_config));
        auto& conv = *c.conversation;
        for (int i = 0; i < 3; ++i) conv.handle_frame(tiny_image());
        const auto last = c.transcript.events().back();
        timed_out = last.kind == EventKind::BackendError && last.payload["error"] == "timeout";
        o.expect(timed_out, "timeout was not reported as a typed error");
        o.expect(trace_string(conv.buffer().elements()) == "[F1, F2, F3]", "buffer changed after the timeout");
        slow = false;
        conv.handle_frame(tiny_image());
        o.expect(trace_string(conv.buffer().elements()) == "[S(1,2), F3, F4]", "trigger was not re-armed");
    }
    o.detail = "data-URI shape ok, " + std::to_string(retries) + " retry, timeout " +
               (timed_out ? "typed" : "untyped");
    return o;
}

Outcome replay_determinism() {
    Outcome o;
    const auto dir = test::fresh_dir("acceptance-replay");
    std::size_t bytes = 0;
    for (const auto* name : {"summarisation_trace.json", "lab.json", "kitchen_morning.json"}) {
        const auto script = load_script(kScripts / name);
        std::vector<std::string> runs;
        for (int r = 0; r < 3; ++r) {
            const auto path = dir / (std::string(name) + "." + std::to_string(r) + ".jsonl");
            replay(script, ConversationConfig{}, std::make_shared<MockBackend>(),
                   std::make_shared<MockBackend>(&MockBackend::default_summary), path);
            std::ifstream in(path, std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            runs.push_back(ss.str());
        }
        o.expect(runs[0] == runs[1] && runs[1] == runs[2], std::string(name) + ": transcripts differ");
        o.expect(runs[0].size() > Transcript::header_line().size(), std::string(name) + ": empty transcript");
        bytes += runs[0].size();
    }
    o.detail = "3 scripts x 3 runs, " + std::to_string(bytes) + " bytes per run";
    return o;
}

Outcome latency_metrics() {
    Outcome o;
    auto reply = std::make_shared<MockBackend>(&MockBackend::default_reply);
    reply->set_delay(std::chrono::milliseconds(200));
    Session session("latency", ConversationConfig{}, reply, std::make_shared<MockBackend>(&MockBackend::default_summary));
    std::vector<std::int64_t> seen;
    for (int i = 0; i < 3; ++i) {
        session.submit_message("hello " + std::to_string(i)).get();
    }
    session.flush().get();
    for (const auto& e : session.transcript().events()) {
        if (e.kind == EventKind::AgentReply) seen.push_back(e.payload["latency_ms"].get<std::int64_t>());
    }
    o.expect(seen.size() == 3, "expected 3 replies");
    std::string list;
    for (auto ms : seen) {
        o.expect(ms >= 200 && ms <= 400, "latency " + std::to_string(ms) + " ms outside [200, 400]");
        list += (list.empty() ? "" : ", ") + std::to_string(ms);
    }
    const auto metrics = session.metrics();
    o.expect(metrics.reply_count == 3, "metrics reply_count is not 3");
    o.expect(metrics.max_latency_ms >= 200 && metrics.max_latency_ms <= 400, "metrics max latency out of range");
    o.detail = "AgentReply latency_ms = [" + list + "]";
    return o;
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::off);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"trace_reproduction", trace_reproduction}, {"property_suite", property_suite},
        {"prompt_boundedness", prompt_boundedness}, {"resolution_policy", resolution_policy},
        {"prompt_rendering", prompt_rendering},     {"http_contract", http_contract},
        {"replay_determinism", replay_determinism}, {"latency_metrics", latency_metrics},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome outcome;
        try {
            outcome = check();
        } catch (const std::exception& e) {
            outcome.violations.push_back(std::string("exception: ") + e.what());
        }
        const bool pass = outcome.violations.empty();
        failed += pass ? 0 : 1;
        std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << outcome.detail;
        if (!pass) {
            std::cout << " | " << outcome.violations.size() << " violation(s), first: " << outcome.violations.front();
        }
        std::cout << std::endl;
    }
    std::cout << (failed == 0 ? "all acceptance criteria passed" : std::to_string(failed) + " criteria failed")
              << std::endl;
    return failed == 0 ? 0 : 1;
}
