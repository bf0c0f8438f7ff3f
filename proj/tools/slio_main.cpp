#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "slio/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"slio: decentralized swarm LiDAR-inertial odometry simulator"};
    app.require_subcommand(1);

    // run
    std::string config_path, out_dir = "out", mode;
    std::uint64_t seed = 0;
    double duration = 0.0;
    int threads = 0;
    auto* run = app.add_subcommand("run", "run a scenario config");
    run->add_option("config", config_path, "scenario config (JSON)")->required();
    auto* seed_opt = run->add_option("--seed", seed, "override the scenario seed");
    auto* dur_opt = run->add_option("--duration", duration, "override duration, s");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--mode", mode, "swarm|solo")->check(CLI::IsMember({"swarm", "solo"}));
    run->add_option("--threads", threads, "0 = single-threaded loop, N = agent threads")
        ->check(CLI::Range(0, 64));

    // report
    std::string run_dir;
    auto* report = app.add_subcommand("report", "summarize a finished run directory");
    report->add_option("rundir", run_dir, "run output directory")->required();

    // fuzz-wire
    std::uint64_t fuzz_count = 1000000, fuzz_seed = 1;
    auto* fuzz = app.add_subcommand("fuzz-wire", "randomized wire-format decode check");
    fuzz->add_option("--count", fuzz_count, "number of buffers");
    fuzz->add_option("--seed", fuzz_seed, "fuzz seed");

    // dump-msgs
    std::string capture_path;
    auto* dump = app.add_subcommand("dump-msgs", "hex-dump and round-trip a message capture");
    dump->add_option("capture", capture_path, "capture.jsonl from a run")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            slio::RunOptions opt;
            opt.out_dir = out_dir;
            opt.threads = threads;
            if (seed_opt->count()) opt.seed = seed;
            if (dur_opt->count()) opt.duration = duration;
            if (!mode.empty()) opt.mode = mode;
            const slio::RunReport rep = slio::run_scenario_file(config_path, opt);
            for (const auto& d : rep.drones) {
                std::printf("drone %d: rmse %.4f m over %d scans, %.0f B/s, %.2f ms/scan\n",
                            d.id, d.rmse, d.scans, d.bytes_per_s, d.mean_proc_ms);
            }
            std::printf("wrote %s/run.csv, extrinsics.csv, summary.json\n", out_dir.c_str());
            return 0;
        }
        if (report->parsed()) return slio::print_report(run_dir);
        if (fuzz->parsed()) {
            const slio::FuzzStats st = slio::fuzz_decode(fuzz_count, fuzz_seed);
            std::printf("fuzz-wire: %llu inputs, %llu decoded, %llu rejected, 0 crashes\n",
                        static_cast<unsigned long long>(st.total),
                        static_cast<unsigned long long>(st.decoded),
                        static_cast<unsigned long long>(st.errors));
            return 0;
        }
        if (dump->parsed()) return slio::dump_messages(capture_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
