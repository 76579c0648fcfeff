#include "phantom.hpp"

#include "gazeseg/channel_server.hpp"
#include "gazeseg/errors.hpp"
#include "gazeseg/replay.hpp"
#include "gazeseg/runtime.hpp"
#include "gazeseg/session.hpp"

#include "CLI11.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <pthread.h>

namespace {

using namespace gazeseg;
namespace fs = std::filesystem;

std::ifstream open_in(const fs::path& p)
{
    std::ifstream in(p);
    if (!in)
        fail(ErrorKind::IoFailure, "cannot open " + p.string());
    return in;
}

std::ofstream open_out(const fs::path& p)
{
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out)
        fail(ErrorKind::IoFailure, "cannot write " + p.string());
    return out;
}

void print_stats(const EngineStats& s)
{
    std::cerr << "samples=" << s.samples_accepted << " valid=" << s.valid_samples_accepted
              << " ignored=" << s.samples_ignored << " fixations=" << s.fixations << " prompts=" << s.prompts_issued
              << " masks=" << s.masks_published << " stale=" << s.stale_results << '\n';
}

struct ServeArgs {
    fs::path config;
    std::optional<int> port;
    bool headless = false;
    fs::path script;
    fs::path transcript;
};

int serve(const ServeArgs& a)
{
    auto config = load_config(a.config);
    if (a.port)
        config.port = *a.port;
    config.validate();

    if (a.headless) {
        std::vector<ScriptedMessage> script;
        if (!a.script.empty()) {
            auto in = open_in(a.script);
            script = read_script(in);
        }
        std::ofstream transcript;
        if (!a.transcript.empty())
            transcript = open_out(a.transcript);
        const auto result = run_headless(config, script, a.transcript.empty() ? nullptr : &transcript);
        print_stats(result.stats);
        return 0;
    }

    // Block the stop signals before any thread starts so only sigwait sees them.
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

    ChannelServer server(config);
    server.start();
    std::cerr << "listening on " << config.bind_address << ':' << server.port() << '\n';
    int sig = 0;
    sigwait(&stop_signals, &sig);
    server.stop();
    print_stats(server.orchestrator().stats());
    return 0;
}

int replay_cmd(const fs::path& session, const std::string& backend_sel, const fs::path& out_dir,
               std::chrono::milliseconds timeout)
{
    const auto events = read_session(session);
    std::optional<double> tolerance;
    if (!events.empty())
        if (const auto* s = std::get_if<event::SessionStarted>(&events.front().payload))
            tolerance = s->tolerance;
    auto backend = make_backend(BackendSelector::parse(backend_sel), tolerance, timeout);
    const auto report = replay(session, backend, out_dir);
    for (const auto& p : report.saved_masks)
        std::cout << p.string() << '\n';
    for (const auto& p : report.final_mask_files)
        std::cout << p.string() << '\n';
    std::cerr << "gaze=" << report.gaze_events << " prompts=" << report.prompts_issued
              << " mismatches=" << report.mask_mismatches << '\n';
    return report.mask_mismatches == 0 ? 0 : 3;
}

int simulate_cmd(const fs::path& scanpath, const fs::path& out, std::uint64_t seed, bool gaze_log)
{
    auto in = open_in(scanpath);
    const auto samples = simulate_scanpath(read_scanpath(in), seed);
    auto os = open_out(out);
    if (gaze_log) {
        write_gaze_log(os, samples);
    } else {
        SessionWriter writer(os);
        writer.record(samples.empty() ? 0 : samples.front().t_us, event::SessionStarted{});
        for (const auto& s : samples)
            writer.record(s.t_us, event::Gaze{s});
    }
    if (!os.flush())
        fail(ErrorKind::IoFailure, "write failed: " + out.string());
    std::cerr << samples.size() << " samples\n";
    return 0;
}

int calibrate_cmd(const fs::path& points, const fs::path& out)
{
    auto in = open_in(points);
    const auto pairs = read_calibration_points(in);
    const auto model = fit_calibration(pairs);
    auto os = open_out(out);
    write_calibration_model(os, model);
    write_calibration_model(std::cout, model);
    return 0;
}

int export_cmd(const fs::path& session, const fs::path& out)
{
    const auto manifest = export_dataset(session, out);
    std::cout << manifest.manifest_path.string() << '\n';
    std::cerr << manifest.entries.size() << " triples\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Gaze-driven interactive segmentation engine"};
    app.require_subcommand(1);

    ServeArgs serve_args;
    auto* serve_cmd = app.add_subcommand("serve", "Run the engine with a client channel");
    serve_cmd->add_option("--config", serve_args.config, "Config file")->required()->check(CLI::ExistingFile);
    serve_cmd->add_option("--port", serve_args.port, "Override the configured port");
    serve_cmd->add_flag("--headless", serve_args.headless, "No client channel; drive with --script");
    serve_cmd->add_option("--script", serve_args.script, "JSON-lines client messages (headless)")
        ->check(CLI::ExistingFile);
    serve_cmd->add_option("--transcript", serve_args.transcript, "Write server messages here (headless)");

    fs::path session, out, scanpath, points;
    std::string backend_sel = "reference";
    std::int64_t timeout_ms = 30'000;
    auto* replay_sub = app.add_subcommand("replay", "Re-run a recorded session and write its masks");
    replay_sub->add_option("--session", session, "Session log")->required()->check(CLI::ExistingFile);
    replay_sub->add_option("--backend", backend_sel, "reference | remote:<command>")->required();
    replay_sub->add_option("--out", out, "Output directory")->required();
    replay_sub->add_option("--timeout-ms", timeout_ms, "Remote backend reply timeout");

    std::uint64_t seed = 1;
    bool gaze_log = false;
    auto* simulate_sub = app.add_subcommand("simulate", "Generate gaze samples from a scanpath");
    simulate_sub->add_option("--scanpath", scanpath, "Scanpath file")->required()->check(CLI::ExistingFile);
    simulate_sub->add_option("--out", out, "Output session log")->required();
    simulate_sub->add_option("--seed", seed, "Jitter seed");
    simulate_sub->add_flag("--gaze-log", gaze_log, "Write a plain gaze log instead of a session log");

    auto* calibrate_sub = app.add_subcommand("calibrate", "Fit an affine gaze calibration");
    calibrate_sub->add_option("--points", points, "Calibration point pairs")->required()->check(CLI::ExistingFile);
    calibrate_sub->add_option("--out", out, "Model file")->required();

    auto* export_sub = app.add_subcommand("export", "Export (volume, gaze, mask) triples from a session");
    export_sub->add_option("--session", session, "Session log")->required()->check(CLI::ExistingFile);
    export_sub->add_option("--out", out, "Output directory")->required();

    int width = 128, height = 128, depth = 8;
    auto* phantom_sub = app.add_subcommand("phantom", "Write a synthetic test volume (.gsv)");
    phantom_sub->add_option("--width", width)->check(CLI::PositiveNumber);
    phantom_sub->add_option("--height", height)->check(CLI::PositiveNumber);
    phantom_sub->add_option("--depth", depth)->check(CLI::PositiveNumber);
    phantom_sub->add_option("--seed", seed);
    phantom_sub->add_option("--out", out, "Output volume")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve_cmd)
            return serve(serve_args);
        if (*replay_sub)
            return replay_cmd(session, backend_sel, out, std::chrono::milliseconds(timeout_ms));
        if (*simulate_sub)
            return simulate_cmd(scanpath, out, seed, gaze_log);
        if (*calibrate_sub)
            return calibrate_cmd(points, out);
        if (*export_sub)
            return export_cmd(session, out);
        if (*phantom_sub) {
            write_volume(out, tools::make_phantom(width, height, depth, seed));
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
