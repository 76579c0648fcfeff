#include "gazeseg/runtime.hpp"

#include "gazeseg/errors.hpp"

#include "json.hpp"

#include <fstream>
#include <ostream>

namespace gazeseg {

EngineOptions engine_options_from(const EngineConfig& config, Dispatcher::Sink async_sink,
                                  std::shared_ptr<SegmentationBackend> backend)
{
    EngineOptions opts;
    opts.config = config;
    opts.backend = backend ? std::move(backend) : make_backend(config.backend, config.tolerance, config.backend_timeout);
    opts.async_sink = std::move(async_sink);
    if (!config.session_path.empty())
        opts.recorder = SessionWriter::open(config.session_path);
    if (!config.calibration_path.empty()) {
        std::ifstream in(config.calibration_path);
        if (!in)
            fail(ErrorKind::BadConfig, "cannot open calibration model " + config.calibration_path.string());
        opts.calibration = read_calibration_model(in);
    }
    return opts;
}

std::vector<GazeSample> load_gaze_source(const EngineConfig& config)
{
    const auto& src = config.gaze_source;
    if (src.external())
        return {};
    std::ifstream in(src.path);
    if (!in)
        fail(ErrorKind::BadConfig, "cannot open gaze source " + src.path.string());
    if (src.kind == GazeSourceSpec::Kind::Simulate)
        return simulate_scanpath(read_scanpath(in), config.seed);
    // A session log works as a gaze log: its gaze events are replayed.
    in >> std::ws;
    if (in.peek() != '{')
        return read_gaze_log(in);
    std::vector<GazeSample> out;
    for (const auto& ev : parse_session(in))
        if (const auto* g = std::get_if<event::Gaze>(&ev.payload))
            out.push_back(g->sample);
    return out;
}

std::vector<ScriptedMessage> read_script(std::istream& in)
{
    std::vector<ScriptedMessage> out;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        ScriptedMessage sm;
        try {
            auto j = nlohmann::json::parse(line);
            if (j.contains("at_us")) {
                const auto& at = j["at_us"];
                if (at.is_string() && at.get<std::string>() == "end") {
                    sm.when = ScriptedMessage::When::End;
                } else {
                    sm.when = ScriptedMessage::When::At;
                    sm.at_us = at.get<std::int64_t>();
                }
                j.erase("at_us");
            }
            sm.message = parse_client_message(j.dump());
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::InvalidArgument, "script line " + std::to_string(no) + ": " + e.what());
        } catch (const Error& e) {
            fail(ErrorKind::InvalidArgument, "script line " + std::to_string(no) + ": " + e.what());
        }
        out.push_back(std::move(sm));
    }
    return out;
}

HeadlessResult run_headless(const EngineConfig& config, std::span<const ScriptedMessage> script,
                            std::ostream* transcript, std::shared_ptr<SegmentationBackend> backend)
{
    std::mutex outcome_mutex;
    std::vector<DispatchOutcome> outcomes;
    auto sink = [&](DispatchOutcome o) {
        std::lock_guard lock(outcome_mutex);
        outcomes.push_back(std::move(o));
    };
    Engine engine(engine_options_from(config, sink, std::move(backend)));
    const auto samples = load_gaze_source(config);

    HeadlessResult result;
    auto emit = [&](std::vector<ServerMessage> msgs) {
        for (auto& m : msgs) {
            if (transcript)
                *transcript << to_json(m) << '\n';
            result.transcript.push_back(std::move(m));
        }
    };
    auto drain_async = [&] {
        std::vector<DispatchOutcome> ready;
        {
            std::lock_guard lock(outcome_mutex);
            ready.swap(outcomes);
        }
        for (const auto& o : ready)
            emit(engine.handle_result(o));
    };

    std::size_t next = 0;
    auto feed_until = [&](std::optional<std::int64_t> limit) {
        while (next < samples.size() && (!limit || samples[next].t_us < *limit)) {
            emit(engine.handle_raw_gaze(samples[next++]));
            drain_async();
        }
    };

    std::optional<std::int64_t> position = std::int64_t{0};
    for (const auto& sm : script) {
        if (sm.when == ScriptedMessage::When::At)
            position = sm.at_us;
        else if (sm.when == ScriptedMessage::When::End)
            position.reset();
        feed_until(position);
        emit(engine.handle_client(sm.message));
        drain_async();
    }
    feed_until(std::nullopt);

    if (auto* lw = dynamic_cast<LatestWinsDispatcher*>(&engine.dispatcher())) {
        lw->wait_idle();
        drain_async();
    }
    result.stats = engine.stats();
    return result;
}

} // namespace gazeseg
