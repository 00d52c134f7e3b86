#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tarot/abr.hpp"
#include "tarot/controller.hpp"
#include "tarot/fec_core.hpp"
#include "tarot/loss_model.hpp"

// Per-segment streaming session engine: replays a bandwidth trace, integrates
// download time under loss and FEC, tracks the playback buffer and wires the
// ABR + FEC controller decisions together into a deterministic report.
namespace tarot::sim {

struct TracePeriod {
    double duration_s = 0.0;
    double bandwidth_bps = 0.0;
    double latency_s = 0.0;
};

// Bandwidth trace; replay loops back to the first period when exhausted.
struct NetworkTrace {
    std::vector<TracePeriod> periods;

    double total_duration_s() const;
    double mean_bandwidth_bps() const;  // duration-weighted
    void validate() const;
};

NetworkTrace parse_trace(const std::string& json_text);
NetworkTrace load_trace(const std::filesystem::path& path);

NetworkTrace constant_trace(double bandwidth_bps, double latency_s, double duration_s = 3600.0);

// Per-period Gaussian bandwidth, floored so outages stay rare but possible.
NetworkTrace gaussian_trace(double mean_bps, double stddev_bps, int periods, double period_s,
                            double latency_s, std::uint64_t seed, double floor_bps = 1e6);

// Alternating high/low regimes (cell handover pattern).
NetworkTrace handover_trace(double high_mean_bps, double high_stddev_bps, double low_mean_bps,
                            double low_stddev_bps, int regime_periods, int periods,
                            double period_s, double latency_s, std::uint64_t seed,
                            double floor_bps = 1e6);

// Synthetic stand-ins for the usual public 5G/LTE trace suites, keyed by
// their headline mean +/- stddev statistics.
enum class TraceArchetype { HighVariance5G, Moderate5G, SteadyLte, Handover };

const char* to_string(TraceArchetype a);
NetworkTrace archetype_trace(TraceArchetype a, std::uint64_t seed);

// Position within a looping trace; advances by elapsed wall time.
class TraceCursor {
public:
    explicit TraceCursor(const NetworkTrace& trace);

    const TracePeriod& period() const { return trace_->periods[index_]; }
    const NetworkTrace& trace() const { return *trace_; }
    double time_left_in_period() const { return period().duration_s - offset_; }
    void advance(double seconds);

private:
    const NetworkTrace* trace_;
    std::size_t index_ = 0;
    double offset_ = 0.0;
};

struct Manifest {
    double segment_duration_s = 0.0;
    abr::BitrateLadder ladder;
    // segment_bytes[representation][segment]
    std::vector<std::vector<double>> segment_bytes;

    std::size_t segment_count() const {
        return segment_bytes.empty() ? 0 : segment_bytes.front().size();
    }
    void validate() const;
};

Manifest parse_manifest(const std::string& json_text);
Manifest load_manifest(const std::filesystem::path& path);

// VBR manifest with per-segment size jitter shared across representations.
Manifest synthetic_manifest(const std::vector<double>& bitrates_bps, double segment_duration_s,
                            std::size_t segments, std::uint64_t seed);

enum class StreamingMode { Vod, Lll };
enum class AbrKind { Throughput, Dynamic };
enum class FecStrategy { None, StaticRs, StaticRq, StaticXor, TarotRs, TarotRq, RFec };

const char* to_string(StreamingMode m);
const char* to_string(AbrKind a);
const char* to_string(FecStrategy s);
StreamingMode streaming_mode_from_string(std::string_view s);
AbrKind abr_kind_from_string(std::string_view s);
FecStrategy fec_strategy_from_string(std::string_view s);

struct SessionConfig {
    StreamingMode mode = StreamingMode::Vod;
    double buffer_capacity_s = 60.0;
    std::optional<double> segment_duration_override_s;
    AbrKind abr = AbrKind::Throughput;
    FecStrategy fec = FecStrategy::None;
    loss::LossProfile loss_profile;
    double gamma = loss::kDefaultGamma;
    std::uint64_t seed = 1;
    ctrl::Hyperparameters hp;

    // Plumbing knobs; defaults follow the reference setup.
    double abr_safety = 0.9;
    std::size_t throughput_window = 3;
    double startup_estimate_bps = 0.0;
    int playback_start_segments = 1;
    double dynamic_switch_buffer_s = 10.0;
    bool compose_loss_collapse = false;  // run residual loss back through the
                                         // goodput collapse during transfer

    static SessionConfig for_mode(StreamingMode mode);
    void validate(const Manifest& manifest) const;
};

struct SegmentRecord {
    std::size_t index = 0;
    std::size_t representation = 0;
    double bitrate_bps = 0.0;
    double quality_index = 0.0;
    fec::FecConfig fec_config;
    double source_bytes = 0.0;
    double repair_bytes = 0.0;
    double download_s = 0.0;
    double encoding_s = 0.0;
    double buffer_before_s = 0.0;
    double buffer_after_s = 0.0;
    double rebuffer_s = 0.0;
    double sampled_loss = 0.0;
    double residual_loss = 0.0;
    double smoothed_loss = 0.0;  // estimate the FEC decision saw
    double decision_us = 0.0;    // measured wall time of the FEC decision
};

struct SessionReport {
    // Identity echo.
    StreamingMode mode = StreamingMode::Vod;
    AbrKind abr = AbrKind::Throughput;
    FecStrategy fec = FecStrategy::None;
    std::string loss_profile;
    double gamma = loss::kDefaultGamma;
    std::uint64_t seed = 1;
    double buffer_capacity_s = 0.0;
    double segment_duration_s = 0.0;

    std::vector<SegmentRecord> segments;

    // Disjoint wall-time partition: every second of the session is exactly
    // one of pre-playback startup, playback-while-downloading, stall, or
    // downloader-idle wait (playback keeps draining during idle).
    double startup_s = 0.0;
    double play_s = 0.0;
    double rebuffer_s = 0.0;
    double idle_s = 0.0;
    double total_wall_s = 0.0;
};

struct DownloadResult {
    double elapsed_s = 0.0;
    double encoding_s = 0.0;
    double residual_loss = 0.0;
};

// Piecewise-exact transfer of one segment: request latency, encoder delay,
// then payload bits against the per-period effective rate (payload goodput
// when repair symbols ship, plain loss-collapsed goodput otherwise). The
// cursor advances by the total elapsed time.
DownloadResult download_segment(double source_bytes, const fec::FecConfig& cfg,
                                TraceCursor& cursor, double loss, double gamma,
                                double request_latency_s, bool compose_loss_collapse = false);

SessionReport run_session(const Manifest& manifest, const NetworkTrace& trace,
                          const SessionConfig& config);

}  // namespace tarot::sim
