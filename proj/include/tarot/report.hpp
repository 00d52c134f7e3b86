#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tarot/controller.hpp"
#include "tarot/simulator.hpp"

// Experiment orchestration: session metrics, batch sweeps across
// traces x loss profiles x strategies x ABRs, and stable CSV/JSON output.
namespace tarot::report {

struct MetricsSummary {
    double avg_quality = 0.0;        // mean per-segment quality index
    double rebuffer_s = 0.0;
    double rebuffer_pct = 0.0;       // of total session wall time
    double overhead_pct = 0.0;       // repair bytes / source bytes * 100
    double avg_bitrate_bps = 0.0;
    double decision_us_mean = 0.0;   // FEC decision wall time
    double decision_us_p99 = 0.0;
};

MetricsSummary summarize(const sim::SessionReport& report);

// One aggregate row per (mode, loss, strategy, abr); sessions iterate the
// spec's traces x seeds and are averaged arithmetically.
struct SweepSpec {
    std::string vod_manifest;  // required when the matching mode is listed
    std::string lll_manifest;
    std::vector<std::string> traces;
    std::vector<std::string> loss_profiles;
    std::vector<sim::FecStrategy> strategies;
    std::vector<sim::AbrKind> abrs;
    std::vector<sim::StreamingMode> modes;
    std::vector<std::uint64_t> seeds;
    double gamma = loss::kDefaultGamma;
    ctrl::Hyperparameters hp;

    void validate() const;
};

SweepSpec parse_sweep_spec(const std::string& json_text, const std::filesystem::path& base_dir);
SweepSpec load_sweep_spec(const std::filesystem::path& path);

struct SweepCell {
    std::string mode;
    std::string loss;
    std::string strategy;
    std::string abr;
};

struct SweepRow {
    SweepCell cell;
    MetricsSummary metrics;
    int sessions = 0;
};

struct SweepError {
    SweepCell cell;
    std::string message;
};

struct SweepTable {
    std::vector<SweepRow> rows;      // spec axis order, independent of scheduling
    std::vector<SweepError> errors;  // failed (cell, input) pairs; sweep continues
};

// Runs every cell; cells execute in parallel but merge deterministically by
// cell key. parallelism == 0 picks the hardware concurrency.
SweepTable run_sweep(const SweepSpec& spec, unsigned parallelism = 0);

inline constexpr const char* kCsvHeader =
    "mode,loss,strategy,abr,quality,rebuffer_s,rebuffer_pct,overhead_pct,avg_bitrate_bps,"
    "decision_us_mean,decision_us_p99";

std::string to_csv(const SweepTable& table);   // 6 significant digits
std::string to_json(const SweepTable& table);  // schema_version tagged

// Inverse of to_csv, for round-trip checks and downstream tooling.
SweepTable parse_table_csv(const std::string& csv_text);

// Session report serialization. Decision-latency fields are measured wall
// time and therefore vary run to run; exclude them when comparing runs.
std::string session_report_to_json(const sim::SessionReport& report, bool include_segments,
                                   bool include_timing = true);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace tarot::report
