#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tarot/report.hpp"
#include "tarot/simulator.hpp"

namespace {

int do_run(const std::string& manifest_path, const std::string& trace_path,
           const std::string& mode, const std::string& abr, const std::string& fec,
           const std::string& loss, double gamma, std::uint64_t seed,
           const std::string& hp_path, const std::string& out_path, bool per_segment) {
    using namespace tarot;

    const sim::Manifest manifest = sim::load_manifest(manifest_path);
    const sim::NetworkTrace trace = sim::load_trace(trace_path);

    sim::SessionConfig config = sim::SessionConfig::for_mode(sim::streaming_mode_from_string(mode));
    config.abr = sim::abr_kind_from_string(abr);
    config.fec = sim::fec_strategy_from_string(fec);
    config.loss_profile = loss::LossProfile::parse(loss);
    config.gamma = gamma;
    config.seed = seed;
    if (!hp_path.empty()) config.hp = ctrl::load_hyperparameters(hp_path);

    const sim::SessionReport report = sim::run_session(manifest, trace, config);
    const report::MetricsSummary summary = report::summarize(report);
    const std::string json = report::session_report_to_json(report, per_segment);

    if (out_path.empty()) {
        std::cout << json;
    } else {
        report::write_text_file(out_path, json);
    }
    std::cerr << "segments=" << report.segments.size() << " quality=" << summary.avg_quality
              << " rebuffer_s=" << summary.rebuffer_s << " overhead_pct=" << summary.overhead_pct
              << " avg_bitrate_bps=" << summary.avg_bitrate_bps << '\n';
    return 0;
}

int do_sweep(const std::string& spec_path, const std::string& out_path, std::string format,
             const std::string& hp_path, unsigned jobs) {
    using namespace tarot;

    report::SweepSpec spec = report::load_sweep_spec(spec_path);
    if (!hp_path.empty()) spec.hp = ctrl::load_hyperparameters(hp_path);

    const report::SweepTable table = report::run_sweep(spec, jobs);
    for (const auto& err : table.errors)
        std::cerr << "cell " << err.cell.mode << '/' << err.cell.loss << '/' << err.cell.strategy
                  << '/' << err.cell.abr << ": " << err.message << '\n';
    if (table.rows.empty()) {
        std::cerr << "error: no sweep cell produced data\n";
        return 1;
    }

    if (format.empty())
        format = out_path.size() >= 4 && out_path.substr(out_path.size() - 4) == ".csv" ? "csv"
                                                                                        : "json";
    report::write_text_file(out_path,
                            format == "csv" ? report::to_csv(table) : report::to_json(table));
    std::cerr << "rows=" << table.rows.size() << " errors=" << table.errors.size() << " -> "
              << out_path << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming session simulator with adaptive per-segment FEC control"};
    app.require_subcommand(1);

    std::string manifest_path, trace_path, out_path, hp_path;
    std::string mode = "vod", abr = "throughput", fec = "none", loss = "none";
    double gamma = tarot::loss::kDefaultGamma;
    std::uint64_t seed = 1;
    bool per_segment = false;

    CLI::App* run = app.add_subcommand("run", "Simulate one streaming session");
    run->add_option("--manifest", manifest_path, "Manifest JSON path")->required();
    run->add_option("--trace", trace_path, "Network trace JSON path")->required();
    run->add_option("--mode", mode, "Streaming mode")
        ->check(CLI::IsMember({"vod", "lll"}))
        ->capture_default_str();
    run->add_option("--abr", abr, "Bitrate adaptation rule")
        ->check(CLI::IsMember({"throughput", "dynamic"}))
        ->capture_default_str();
    run->add_option("--fec", fec, "FEC strategy")
        ->check(CLI::IsMember({"none", "rs", "rq", "xor", "rs-tarot", "rq-tarot", "rfec"}))
        ->capture_default_str();
    run->add_option("--loss", loss, "Loss profile: none | const:<L> | var:<lo>:<hi>")
        ->capture_default_str();
    run->add_option("--gamma", gamma, "Goodput collapse factor")->capture_default_str();
    run->add_option("--seed", seed, "Session RNG seed")->capture_default_str();
    run->add_option("--hp", hp_path, "Hyperparameter overrides JSON path");
    run->add_option("--out", out_path, "Write the session report here (default: stdout)");
    run->add_flag("--per-segment", per_segment, "Include per-segment records in the report");

    std::string spec_path, sweep_out, sweep_format, sweep_hp;
    unsigned jobs = 0;

    CLI::App* sweep = app.add_subcommand("sweep", "Run a batch experiment grid");
    sweep->add_option("--spec", spec_path, "Sweep spec JSON path")->required();
    sweep->add_option("--out", sweep_out, "Output path (.csv selects CSV)")->required();
    sweep->add_option("--format", sweep_format, "Force output format")
        ->check(CLI::IsMember({"csv", "json"}));
    sweep->add_option("--hp", sweep_hp, "Hyperparameter overrides JSON path");
    sweep->add_option("--jobs", jobs, "Worker threads (default: hardware concurrency)");

    try {
        app.parse(argc, argv);
        if (run->parsed())
            return do_run(manifest_path, trace_path, mode, abr, fec, loss, gamma, seed, hp_path,
                          out_path, per_segment);
        return do_sweep(spec_path, sweep_out, sweep_format, sweep_hp, jobs);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
