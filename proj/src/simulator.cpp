#include "tarot/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tarot/rng.hpp"

namespace tarot::sim {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

std::string read_file(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) fail(std::string(what) + ": cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

double require_number(const json& obj, const char* field, const std::string& where) {
    if (!obj.contains(field) || !obj[field].is_number())
        fail(where + ": missing numeric field '" + field + "'");
    return obj[field].get<double>();
}

}  // namespace

double NetworkTrace::total_duration_s() const {
    double total = 0.0;
    for (const auto& p : periods) total += p.duration_s;
    return total;
}

double NetworkTrace::mean_bandwidth_bps() const {
    double weighted = 0.0;
    double total = 0.0;
    for (const auto& p : periods) {
        weighted += p.bandwidth_bps * p.duration_s;
        total += p.duration_s;
    }
    return total > 0.0 ? weighted / total : 0.0;
}

void NetworkTrace::validate() const {
    if (periods.empty()) fail("trace: no periods");
    for (std::size_t i = 0; i < periods.size(); ++i) {
        const auto& p = periods[i];
        const std::string where = "trace[" + std::to_string(i) + "]";
        if (!(p.duration_s > 0.0)) fail(where + ": duration must be > 0");
        if (!(p.bandwidth_bps >= 0.0)) fail(where + ": bandwidth must be >= 0");
        if (!(p.latency_s >= 0.0)) fail(where + ": latency must be >= 0");
    }
}

NetworkTrace parse_trace(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(std::string("trace: invalid JSON: ") + e.what());
    }
    if (!doc.is_array()) fail("trace: top-level value must be an array of periods");
    NetworkTrace trace;
    trace.periods.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const std::string where = "trace[" + std::to_string(i) + "]";
        if (!doc[i].is_object()) fail(where + ": period must be an object");
        TracePeriod p;
        p.duration_s = require_number(doc[i], "duration_ms", where) / 1000.0;
        p.bandwidth_bps = require_number(doc[i], "bandwidth_kbps", where) * 1000.0;
        p.latency_s = require_number(doc[i], "latency_ms", where) / 1000.0;
        trace.periods.push_back(p);
    }
    trace.validate();
    return trace;
}

NetworkTrace load_trace(const std::filesystem::path& path) {
    try {
        return parse_trace(read_file(path, "trace"));
    } catch (const std::invalid_argument& e) {
        fail(path.string() + ": " + e.what());
    }
}

NetworkTrace constant_trace(double bandwidth_bps, double latency_s, double duration_s) {
    NetworkTrace t;
    t.periods.push_back({duration_s, bandwidth_bps, latency_s});
    t.validate();
    return t;
}

NetworkTrace gaussian_trace(double mean_bps, double stddev_bps, int periods, double period_s,
                            double latency_s, std::uint64_t seed, double floor_bps) {
    NetworkTrace t;
    t.periods.reserve(static_cast<std::size_t>(periods));
    for (int i = 0; i < periods; ++i) {
        const double bw =
            mean_bps + stddev_bps * rng::normal01(seed, static_cast<std::uint64_t>(i));
        t.periods.push_back({period_s, std::max(floor_bps, bw), latency_s});
    }
    t.validate();
    return t;
}

NetworkTrace handover_trace(double high_mean_bps, double high_stddev_bps, double low_mean_bps,
                            double low_stddev_bps, int regime_periods, int periods,
                            double period_s, double latency_s, std::uint64_t seed,
                            double floor_bps) {
    if (regime_periods < 1) fail("handover trace: regime length must be >= 1");
    NetworkTrace t;
    t.periods.reserve(static_cast<std::size_t>(periods));
    for (int i = 0; i < periods; ++i) {
        const bool high = (i / regime_periods) % 2 == 0;
        const double mean = high ? high_mean_bps : low_mean_bps;
        const double stddev = high ? high_stddev_bps : low_stddev_bps;
        const double bw = mean + stddev * rng::normal01(seed, static_cast<std::uint64_t>(i));
        t.periods.push_back({period_s, std::max(floor_bps, bw), latency_s});
    }
    t.validate();
    return t;
}

const char* to_string(TraceArchetype a) {
    switch (a) {
        case TraceArchetype::HighVariance5G: return "5g-high-variance";
        case TraceArchetype::Moderate5G: return "5g-moderate";
        case TraceArchetype::SteadyLte: return "lte-steady";
        case TraceArchetype::Handover: return "handover";
    }
    return "?";
}

NetworkTrace archetype_trace(TraceArchetype a, std::uint64_t seed) {
    constexpr int kPeriods = 400;
    constexpr double kPeriodS = 1.0;
    constexpr double kLatencyS = 0.05;
    switch (a) {
        case TraceArchetype::HighVariance5G:
            return gaussian_trace(33e6, 18e6, kPeriods, kPeriodS, kLatencyS,
                                  rng::derive(seed, 1));
        case TraceArchetype::Moderate5G:
            return gaussian_trace(25e6, 10e6, kPeriods, kPeriodS, kLatencyS,
                                  rng::derive(seed, 2));
        case TraceArchetype::SteadyLte:
            return gaussian_trace(20e6, 5e6, kPeriods, kPeriodS, kLatencyS, rng::derive(seed, 3));
        case TraceArchetype::Handover:
            return handover_trace(45e6, 8e6, 15e6, 4e6, 30, kPeriods, kPeriodS, kLatencyS,
                                  rng::derive(seed, 4));
    }
    fail("unknown trace archetype");
}

TraceCursor::TraceCursor(const NetworkTrace& trace) : trace_(&trace) { trace.validate(); }

void TraceCursor::advance(double seconds) {
    while (seconds > 0.0) {
        const double left = time_left_in_period();
        if (seconds < left) {
            offset_ += seconds;
            return;
        }
        seconds -= left;
        index_ = (index_ + 1) % trace_->periods.size();
        offset_ = 0.0;
    }
}

void Manifest::validate() const {
    if (!(segment_duration_s > 0.0)) fail("manifest: segment duration must be > 0");
    ladder.validate();
    if (segment_bytes.size() != ladder.size())
        fail("manifest: " + std::to_string(segment_bytes.size()) +
             " size rows for " + std::to_string(ladder.size()) + " representations");
    if (segment_bytes.empty() || segment_bytes.front().empty())
        fail("manifest: no segments");
    const std::size_t count = segment_bytes.front().size();
    for (std::size_t r = 0; r < segment_bytes.size(); ++r) {
        if (segment_bytes[r].size() != count)
            fail("manifest: segment_sizes_bits[" + std::to_string(r) + "] has " +
                 std::to_string(segment_bytes[r].size()) + " entries, expected " +
                 std::to_string(count));
        for (std::size_t s = 0; s < count; ++s)
            if (!(segment_bytes[r][s] > 0.0))
                fail("manifest: segment_sizes_bits[" + std::to_string(r) + "][" +
                     std::to_string(s) + "] must be > 0");
    }
}

Manifest parse_manifest(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(std::string("manifest: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) fail("manifest: top-level value must be an object");

    Manifest m;
    m.segment_duration_s = require_number(doc, "segment_duration_ms", "manifest") / 1000.0;

    if (!doc.contains("bitrates_kbps") || !doc["bitrates_kbps"].is_array())
        fail("manifest: missing array field 'bitrates_kbps'");
    std::vector<double> bitrates;
    for (const auto& b : doc["bitrates_kbps"]) {
        if (!b.is_number()) fail("manifest: bitrates_kbps entries must be numbers");
        bitrates.push_back(b.get<double>() * 1000.0);
    }

    std::vector<double> quality;
    if (doc.contains("quality")) {
        if (!doc["quality"].is_array() || doc["quality"].size() != bitrates.size())
            fail("manifest: 'quality' must list one value per representation");
        for (const auto& q : doc["quality"]) {
            if (!q.is_number()) fail("manifest: quality entries must be numbers");
            quality.push_back(q.get<double>());
        }
    } else {
        quality = abr::BitrateLadder::default_quality(bitrates);
    }

    m.ladder.representations.reserve(bitrates.size());
    for (std::size_t i = 0; i < bitrates.size(); ++i)
        m.ladder.representations.push_back({bitrates[i], quality[i]});

    if (!doc.contains("segment_sizes_bits") || !doc["segment_sizes_bits"].is_array())
        fail("manifest: missing array field 'segment_sizes_bits'");
    const auto& rows = doc["segment_sizes_bits"];
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!rows[r].is_array())
            fail("manifest: segment_sizes_bits[" + std::to_string(r) + "] must be an array");
        std::vector<double> bytes;
        bytes.reserve(rows[r].size());
        for (std::size_t s = 0; s < rows[r].size(); ++s) {
            if (!rows[r][s].is_number())
                fail("manifest: segment_sizes_bits[" + std::to_string(r) + "][" +
                     std::to_string(s) + "] must be a number");
            bytes.push_back(rows[r][s].get<double>() / 8.0);
        }
        m.segment_bytes.push_back(std::move(bytes));
    }

    m.validate();
    return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
    try {
        return parse_manifest(read_file(path, "manifest"));
    } catch (const std::invalid_argument& e) {
        fail(path.string() + ": " + e.what());
    }
}

Manifest synthetic_manifest(const std::vector<double>& bitrates_bps, double segment_duration_s,
                            std::size_t segments, std::uint64_t seed) {
    if (segments == 0) fail("synthetic manifest: need at least one segment");
    Manifest m;
    m.segment_duration_s = segment_duration_s;
    const auto quality = abr::BitrateLadder::default_quality(bitrates_bps);
    for (std::size_t i = 0; i < bitrates_bps.size(); ++i)
        m.ladder.representations.push_back({bitrates_bps[i], quality[i]});
    // Scene-complexity jitter shared across the ladder, like real VBR encodes.
    for (double bitrate : bitrates_bps) {
        std::vector<double> bytes;
        bytes.reserve(segments);
        for (std::size_t s = 0; s < segments; ++s) {
            const double factor = 0.8 + 0.4 * rng::uniform01(seed, s);
            const double bits =
                std::max(1.0, std::round(bitrate * segment_duration_s * factor));
            bytes.push_back(bits / 8.0);
        }
        m.segment_bytes.push_back(std::move(bytes));
    }
    m.validate();
    return m;
}

const char* to_string(StreamingMode m) { return m == StreamingMode::Vod ? "vod" : "lll"; }

const char* to_string(AbrKind a) { return a == AbrKind::Throughput ? "throughput" : "dynamic"; }

const char* to_string(FecStrategy s) {
    switch (s) {
        case FecStrategy::None: return "none";
        case FecStrategy::StaticRs: return "rs";
        case FecStrategy::StaticRq: return "rq";
        case FecStrategy::StaticXor: return "xor";
        case FecStrategy::TarotRs: return "rs-tarot";
        case FecStrategy::TarotRq: return "rq-tarot";
        case FecStrategy::RFec: return "rfec";
    }
    return "?";
}

StreamingMode streaming_mode_from_string(std::string_view s) {
    if (s == "vod") return StreamingMode::Vod;
    if (s == "lll") return StreamingMode::Lll;
    fail("unknown mode '" + std::string(s) + "' (expected vod or lll)");
}

AbrKind abr_kind_from_string(std::string_view s) {
    if (s == "throughput") return AbrKind::Throughput;
    if (s == "dynamic") return AbrKind::Dynamic;
    fail("unknown abr '" + std::string(s) + "' (expected throughput or dynamic)");
}

FecStrategy fec_strategy_from_string(std::string_view s) {
    if (s == "none") return FecStrategy::None;
    if (s == "rs") return FecStrategy::StaticRs;
    if (s == "rq") return FecStrategy::StaticRq;
    if (s == "xor") return FecStrategy::StaticXor;
    if (s == "rs-tarot") return FecStrategy::TarotRs;
    if (s == "rq-tarot") return FecStrategy::TarotRq;
    if (s == "rfec") return FecStrategy::RFec;
    fail("unknown fec strategy '" + std::string(s) +
         "' (expected none, rs, rq, xor, rs-tarot, rq-tarot or rfec)");
}

SessionConfig SessionConfig::for_mode(StreamingMode mode) {
    SessionConfig c;
    c.mode = mode;
    c.buffer_capacity_s = mode == StreamingMode::Vod ? 60.0 : 6.0;
    return c;
}

void SessionConfig::validate(const Manifest& manifest) const {
    const double seg = segment_duration_override_s.value_or(manifest.segment_duration_s);
    if (!(seg > 0.0)) fail("session: segment duration must be > 0");
    if (!(buffer_capacity_s > seg))
        fail("session: buffer capacity must exceed the segment duration");
    if (!(gamma > 0.0)) fail("session: gamma must be > 0");
    if (!(abr_safety > 0.0 && abr_safety <= 1.0)) fail("session: abr safety must be in (0, 1]");
    if (throughput_window == 0) fail("session: throughput window must be >= 1");
    if (playback_start_segments < 1) fail("session: playback start threshold must be >= 1");
    if (static_cast<double>(playback_start_segments) * seg > buffer_capacity_s)
        fail("session: playback start threshold exceeds the buffer capacity");
    hp.validate();
}

namespace {

// Default static protection block and the R-FEC baseline shape.
const fec::FecConfig kStaticRs{20, 10, 64, fec::CodecFamily::reed_solomon()};
const fec::FecConfig kStaticRq{20, 10, 64, fec::CodecFamily::raptorq()};
const fec::FecConfig kStaticXor{2, 1, 64, fec::CodecFamily::xor_parity()};
constexpr std::int64_t kRfecSourceSymbols = 20;
constexpr std::int64_t kRfecSymbolSize = 64;

}  // namespace

DownloadResult download_segment(double source_bytes, const fec::FecConfig& cfg,
                                TraceCursor& cursor, double loss, double gamma,
                                double request_latency_s, bool compose_loss_collapse) {
    if (!(source_bytes > 0.0)) fail("download: source bytes must be > 0");

    DownloadResult out;
    out.encoding_s = fec::encoding_latency_s(cfg);
    out.residual_loss = loss::residual_loss(loss, fec::coverage(cfg).value());

    double elapsed = 0.0;
    cursor.advance(request_latency_s);
    elapsed += request_latency_s;
    cursor.advance(out.encoding_s);
    elapsed += out.encoding_s;

    double remaining_bits = 8.0 * source_bytes;
    double starved_s = 0.0;  // consecutive time with zero effective rate
    // One full zero-rate loop of the trace means it can never finish.
    const double starvation_limit = cursor.trace().total_duration_s() + 1.0;
    while (remaining_bits > 0.0) {
        const double bandwidth = cursor.period().bandwidth_bps;
        double rate;
        if (!cfg.unprotected()) {
            rate = compose_loss_collapse
                       ? loss::fec_payload_goodput_composed(bandwidth, loss, cfg, gamma)
                       : loss::fec_payload_goodput(bandwidth, loss, cfg);
        } else {
            rate = loss::goodput_under_loss(bandwidth, loss, gamma);
        }
        const double left = cursor.time_left_in_period();
        if (!(rate > 0.0)) {
            starved_s += left;
            if (starved_s > starvation_limit)
                throw std::runtime_error("download starved: trace offers no bandwidth");
            cursor.advance(left);
            elapsed += left;
            continue;
        }
        starved_s = 0.0;
        const double capacity_bits = rate * left;
        if (remaining_bits <= capacity_bits) {
            const double dt = remaining_bits / rate;
            cursor.advance(dt);
            elapsed += dt;
            break;
        }
        remaining_bits -= capacity_bits;
        cursor.advance(left);
        elapsed += left;
    }

    out.elapsed_s = elapsed;
    return out;
}

namespace {

fec::FecConfig choose_fec(FecStrategy strategy, const ctrl::TelemetryState& state,
                          const fec::CandidateLibrary* library, const ctrl::Hyperparameters& hp) {
    switch (strategy) {
        case FecStrategy::None: return fec::FecConfig::no_fec();
        case FecStrategy::StaticRs: return kStaticRs;
        case FecStrategy::StaticRq: return kStaticRq;
        case FecStrategy::StaticXor: return kStaticXor;
        case FecStrategy::TarotRs:
        case FecStrategy::TarotRq: return ctrl::select_config(state, *library, hp);
        case FecStrategy::RFec:
            return ctrl::rfec_select(state, kRfecSourceSymbols, kRfecSymbolSize,
                                     fec::CodecFamily::raptorq(), hp);
    }
    fail("unknown fec strategy");
}

}  // namespace

SessionReport run_session(const Manifest& manifest, const NetworkTrace& trace,
                          const SessionConfig& config) {
    manifest.validate();
    trace.validate();
    config.validate(manifest);

    const double segment_duration =
        config.segment_duration_override_s.value_or(manifest.segment_duration_s);
    const double capacity = config.buffer_capacity_s;
    const double ewma_lambda = config.mode == StreamingMode::Lll ? config.hp.ewma_lambda_lll
                                                                 : config.hp.ewma_lambda_vod;

    fec::CandidateLibrary library;
    if (config.fec == FecStrategy::TarotRs)
        library = fec::build_candidate_library(
            fec::GridSpec::default_grid(fec::CodecFamily::reed_solomon()));
    else if (config.fec == FecStrategy::TarotRq)
        library =
            fec::build_candidate_library(fec::GridSpec::default_grid(fec::CodecFamily::raptorq()));

    SessionReport report;
    report.mode = config.mode;
    report.abr = config.abr;
    report.fec = config.fec;
    report.loss_profile = config.loss_profile.to_string();
    report.gamma = config.gamma;
    report.seed = config.seed;
    report.buffer_capacity_s = capacity;
    report.segment_duration_s = segment_duration;

    const std::size_t segment_count = manifest.segment_count();
    report.segments.reserve(segment_count);

    abr::ThroughputHistory history(config.throughput_window, config.startup_estimate_bps);
    const abr::DynamicAbrParams dynamic_params{config.abr_safety, config.dynamic_switch_buffer_s,
                                               capacity};
    TraceCursor cursor(trace);

    double buffer = 0.0;
    double smoothed_loss = 0.0;
    bool playing = false;
    int completed = 0;

    for (std::size_t i = 0; i < segment_count; ++i) {
        // The downloader idles when fetching another segment would overflow
        // the buffer; playback keeps draining meanwhile.
        if (playing) {
            const double wait = buffer + segment_duration - capacity;
            if (wait > 0.0) {
                cursor.advance(wait);
                buffer -= wait;
                report.idle_s += wait;
                report.total_wall_s += wait;
            }
        }

        const double estimate = history.estimate_bps();
        const std::size_t rep =
            config.abr == AbrKind::Throughput
                ? abr::throughput_abr_decide(estimate, manifest.ladder, config.abr_safety)
                : abr::dynamic_abr_decide(buffer, estimate, manifest.ladder, dynamic_params);

        ctrl::TelemetryState state;
        state.playback_bitrate_bps = manifest.ladder[rep].bitrate_bps;
        state.buffer_level_s = buffer;
        state.smoothed_loss = smoothed_loss;
        state.goodput_bps = estimate;

        const auto decide_start = std::chrono::steady_clock::now();
        const fec::FecConfig fec_cfg = choose_fec(config.fec, state, &library, config.hp);
        const auto decide_end = std::chrono::steady_clock::now();
        const double decision_us =
            std::chrono::duration<double, std::micro>(decide_end - decide_start).count();

        const double sampled_loss = loss::sample_loss(config.loss_profile, config.seed, i);
        const double request_latency = cursor.period().latency_s;
        const double source_bytes = manifest.segment_bytes[rep][i];

        const DownloadResult dl =
            download_segment(source_bytes, fec_cfg, cursor, sampled_loss, config.gamma,
                             request_latency, config.compose_loss_collapse);

        SegmentRecord record;
        record.index = i;
        record.representation = rep;
        record.bitrate_bps = manifest.ladder[rep].bitrate_bps;
        record.quality_index = manifest.ladder[rep].quality_index;
        record.fec_config = fec_cfg;
        record.source_bytes = source_bytes;
        record.repair_bytes = source_bytes * fec::overhead(fec_cfg).value();
        record.download_s = dl.elapsed_s;
        record.encoding_s = dl.encoding_s;
        record.buffer_before_s = buffer;
        record.sampled_loss = sampled_loss;
        record.residual_loss = dl.residual_loss;
        record.smoothed_loss = smoothed_loss;
        record.decision_us = decision_us;

        if (playing) {
            const double drained = std::min(buffer, dl.elapsed_s);
            buffer -= drained;
            report.play_s += drained;
            record.rebuffer_s = dl.elapsed_s - drained;
            report.rebuffer_s += record.rebuffer_s;
        } else {
            report.startup_s += dl.elapsed_s;
        }
        report.total_wall_s += dl.elapsed_s;

        buffer += segment_duration;
        ++completed;
        if (!playing && completed >= config.playback_start_segments) playing = true;

        record.buffer_after_s = buffer;
        report.segments.push_back(record);

        history.push(source_bytes, dl.elapsed_s);
        smoothed_loss = ctrl::smooth_loss(sampled_loss, smoothed_loss, ewma_lambda);
    }

    // Drain whatever is left in the buffer: the tail of the session plays
    // out with the downloader finished.
    report.play_s += buffer;
    report.total_wall_s += buffer;

    return report;
}

}  // namespace tarot::sim
