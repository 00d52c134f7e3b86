#include "tarot/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace tarot::report {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

MetricsSummary summarize(const sim::SessionReport& report) {
    if (report.segments.empty()) fail("summarize: report has no segments");

    MetricsSummary m;
    double source_bytes = 0.0;
    double repair_bytes = 0.0;
    std::vector<double> decisions;
    decisions.reserve(report.segments.size());
    for (const auto& seg : report.segments) {
        m.avg_quality += seg.quality_index;
        m.avg_bitrate_bps += seg.bitrate_bps;
        source_bytes += seg.source_bytes;
        repair_bytes += seg.repair_bytes;
        m.decision_us_mean += seg.decision_us;
        decisions.push_back(seg.decision_us);
    }
    const double count = static_cast<double>(report.segments.size());
    m.avg_quality /= count;
    m.avg_bitrate_bps /= count;
    m.decision_us_mean /= count;
    // Divide before scaling: when repair is an exact dyadic fraction of source
    // (static 50% protection), the quotient is representable and the reported
    // percentage stays exact instead of drifting an ulp.
    m.overhead_pct = 100.0 * (repair_bytes / source_bytes);
    m.rebuffer_s = report.rebuffer_s;
    m.rebuffer_pct = 100.0 * report.rebuffer_s / report.total_wall_s;

    std::sort(decisions.begin(), decisions.end());
    const std::size_t rank = static_cast<std::size_t>(
        std::ceil(0.99 * static_cast<double>(decisions.size())));
    m.decision_us_p99 = decisions[std::max<std::size_t>(rank, 1) - 1];
    return m;
}

void SweepSpec::validate() const {
    if (traces.empty()) fail("sweep: no traces");
    if (loss_profiles.empty()) fail("sweep: no loss profiles");
    if (strategies.empty()) fail("sweep: no strategies");
    if (abrs.empty()) fail("sweep: no abrs");
    if (modes.empty()) fail("sweep: no modes");
    if (seeds.empty()) fail("sweep: no seeds");
    if (!(gamma > 0.0)) fail("sweep: gamma must be > 0");
    for (const auto& l : loss_profiles) loss::LossProfile::parse(l);
    for (auto m : modes) {
        if (m == sim::StreamingMode::Vod && vod_manifest.empty())
            fail("sweep: vod mode listed but no vod manifest given");
        if (m == sim::StreamingMode::Lll && lll_manifest.empty())
            fail("sweep: lll mode listed but no lll manifest given");
    }
    hp.validate();
}

SweepSpec parse_sweep_spec(const std::string& json_text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(std::string("sweep spec: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) fail("sweep spec: top-level value must be an object");

    auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return path.is_absolute() ? path.string() : (base_dir / path).string();
    };

    SweepSpec spec;
    if (!doc.contains("manifests") || !doc["manifests"].is_object())
        fail("sweep spec: missing object field 'manifests'");
    const auto& manifests = doc["manifests"];
    if (manifests.contains("vod")) spec.vod_manifest = resolve(manifests["vod"].get<std::string>());
    if (manifests.contains("lll")) spec.lll_manifest = resolve(manifests["lll"].get<std::string>());

    auto string_list = [&](const char* field) {
        if (!doc.contains(field) || !doc[field].is_array() || doc[field].empty())
            fail(std::string("sweep spec: missing non-empty array '") + field + "'");
        return doc[field].get<std::vector<std::string>>();
    };

    for (const auto& t : string_list("traces")) spec.traces.push_back(resolve(t));
    spec.loss_profiles = string_list("loss_profiles");
    for (const auto& s : string_list("strategies"))
        spec.strategies.push_back(sim::fec_strategy_from_string(s));
    for (const auto& a : string_list("abrs")) spec.abrs.push_back(sim::abr_kind_from_string(a));
    for (const auto& m : string_list("modes"))
        spec.modes.push_back(sim::streaming_mode_from_string(m));

    if (doc.contains("seeds")) {
        spec.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
    } else {
        const std::uint64_t replications =
            doc.contains("replications") ? doc["replications"].get<std::uint64_t>() : 1;
        for (std::uint64_t s = 1; s <= replications; ++s) spec.seeds.push_back(s);
    }
    if (doc.contains("gamma")) spec.gamma = doc["gamma"].get<double>();
    if (doc.contains("hyperparameters"))
        spec.hp = ctrl::load_hyperparameters(resolve(doc["hyperparameters"].get<std::string>()));

    spec.validate();
    return spec;
}

SweepSpec load_sweep_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("sweep spec: cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_sweep_spec(buf.str(), path.has_parent_path()
                                               ? path.parent_path()
                                               : std::filesystem::path("."));
    } catch (const std::invalid_argument& e) {
        fail(path.string() + ": " + e.what());
    }
}

namespace {

struct CellJob {
    sim::StreamingMode mode;
    std::string loss;
    sim::FecStrategy strategy;
    sim::AbrKind abr;
};

struct CellOutcome {
    SweepCell cell;
    MetricsSummary sum;  // accumulated then divided
    int sessions = 0;
    std::vector<std::string> errors;
};

void accumulate(MetricsSummary& into, const MetricsSummary& part) {
    into.avg_quality += part.avg_quality;
    into.rebuffer_s += part.rebuffer_s;
    into.rebuffer_pct += part.rebuffer_pct;
    into.overhead_pct += part.overhead_pct;
    into.avg_bitrate_bps += part.avg_bitrate_bps;
    into.decision_us_mean += part.decision_us_mean;
    into.decision_us_p99 += part.decision_us_p99;
}

void divide(MetricsSummary& m, double n) {
    m.avg_quality /= n;
    m.rebuffer_s /= n;
    m.rebuffer_pct /= n;
    m.overhead_pct /= n;
    m.avg_bitrate_bps /= n;
    m.decision_us_mean /= n;
    m.decision_us_p99 /= n;
}

}  // namespace

SweepTable run_sweep(const SweepSpec& spec, unsigned parallelism) {
    spec.validate();

    // Load shared immutable inputs once; a bad input surfaces as a per-cell
    // error for every cell that touches it rather than aborting the sweep.
    sim::Manifest vod_manifest, lll_manifest;
    std::string vod_error, lll_error;
    const bool wants_vod = std::count(spec.modes.begin(), spec.modes.end(),
                                      sim::StreamingMode::Vod) > 0;
    const bool wants_lll = std::count(spec.modes.begin(), spec.modes.end(),
                                      sim::StreamingMode::Lll) > 0;
    if (wants_vod) {
        try {
            vod_manifest = sim::load_manifest(spec.vod_manifest);
        } catch (const std::exception& e) {
            vod_error = e.what();
        }
    }
    if (wants_lll) {
        try {
            lll_manifest = sim::load_manifest(spec.lll_manifest);
        } catch (const std::exception& e) {
            lll_error = e.what();
        }
    }
    struct LoadedTrace {
        std::string path;
        sim::NetworkTrace trace;
        std::string error;
    };
    std::vector<LoadedTrace> traces;
    for (const auto& path : spec.traces) {
        LoadedTrace t;
        t.path = path;
        try {
            t.trace = sim::load_trace(path);
        } catch (const std::exception& e) {
            t.error = e.what();
        }
        traces.push_back(std::move(t));
    }

    std::vector<CellJob> jobs;
    for (auto mode : spec.modes)
        for (const auto& loss : spec.loss_profiles)
            for (auto strategy : spec.strategies)
                for (auto abr : spec.abrs) jobs.push_back({mode, loss, strategy, abr});

    std::vector<CellOutcome> outcomes(jobs.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size()) return;
            const CellJob& job = jobs[j];
            CellOutcome& out = outcomes[j];
            out.cell = {sim::to_string(job.mode), job.loss, sim::to_string(job.strategy),
                        sim::to_string(job.abr)};

            const bool vod = job.mode == sim::StreamingMode::Vod;
            const std::string& manifest_error = vod ? vod_error : lll_error;
            if (!manifest_error.empty()) {
                out.errors.push_back(manifest_error);
                continue;
            }
            const sim::Manifest& manifest = vod ? vod_manifest : lll_manifest;

            for (const auto& loaded : traces) {
                if (!loaded.error.empty()) {
                    out.errors.push_back(loaded.error);
                    continue;
                }
                for (auto seed : spec.seeds) {
                    sim::SessionConfig config = sim::SessionConfig::for_mode(job.mode);
                    config.abr = job.abr;
                    config.fec = job.strategy;
                    config.loss_profile = loss::LossProfile::parse(job.loss);
                    config.gamma = spec.gamma;
                    config.seed = seed;
                    config.hp = spec.hp;
                    try {
                        const sim::SessionReport report =
                            sim::run_session(manifest, loaded.trace, config);
                        accumulate(out.sum, summarize(report));
                        ++out.sessions;
                    } catch (const std::exception& e) {
                        out.errors.push_back(loaded.path + ": " + e.what());
                    }
                }
            }
        }
    };

    unsigned threads = parallelism != 0 ? parallelism : std::thread::hardware_concurrency();
    if (threads == 0) threads = 1;
    threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    SweepTable table;
    for (auto& out : outcomes) {
        for (const auto& message : out.errors) table.errors.push_back({out.cell, message});
        if (out.sessions > 0) {
            divide(out.sum, static_cast<double>(out.sessions));
            table.rows.push_back({out.cell, out.sum, out.sessions});
        }
    }
    return table;
}

std::string to_csv(const SweepTable& table) {
    std::ostringstream out;
    out << kCsvHeader << '\n';
    for (const auto& row : table.rows) {
        const auto& m = row.metrics;
        out << row.cell.mode << ',' << row.cell.loss << ',' << row.cell.strategy << ','
            << row.cell.abr << ',' << format_number(m.avg_quality) << ','
            << format_number(m.rebuffer_s) << ',' << format_number(m.rebuffer_pct) << ','
            << format_number(m.overhead_pct) << ',' << format_number(m.avg_bitrate_bps) << ','
            << format_number(m.decision_us_mean) << ',' << format_number(m.decision_us_p99)
            << '\n';
    }
    return out.str();
}

namespace {

json metrics_to_json(const MetricsSummary& m, bool include_timing) {
    json j{{"quality", m.avg_quality},
           {"rebuffer_s", m.rebuffer_s},
           {"rebuffer_pct", m.rebuffer_pct},
           {"overhead_pct", m.overhead_pct},
           {"avg_bitrate_bps", m.avg_bitrate_bps}};
    if (include_timing) {
        j["decision_us_mean"] = m.decision_us_mean;
        j["decision_us_p99"] = m.decision_us_p99;
    }
    return j;
}

}  // namespace

std::string to_json(const SweepTable& table) {
    json rows = json::array();
    for (const auto& row : table.rows) {
        json r{{"mode", row.cell.mode},
               {"loss", row.cell.loss},
               {"strategy", row.cell.strategy},
               {"abr", row.cell.abr},
               {"sessions", row.sessions}};
        r.update(metrics_to_json(row.metrics, true));
        rows.push_back(std::move(r));
    }
    json errors = json::array();
    for (const auto& err : table.errors)
        errors.push_back(json{{"mode", err.cell.mode},
                              {"loss", err.cell.loss},
                              {"strategy", err.cell.strategy},
                              {"abr", err.cell.abr},
                              {"error", err.message}});
    const json doc{{"schema_version", 1}, {"rows", rows}, {"errors", errors}};
    return doc.dump(2) + "\n";
}

SweepTable parse_table_csv(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) fail("csv: empty document");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) fail("csv: unexpected header '" + line + "'");

    SweepTable table;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream fs(line);
        std::string field;
        while (std::getline(fs, field, ',')) fields.push_back(field);
        if (fields.size() != 11)
            fail("csv line " + std::to_string(line_no) + ": expected 11 fields, got " +
                 std::to_string(fields.size()));
        SweepRow row;
        row.cell = {fields[0], fields[1], fields[2], fields[3]};
        const auto num = [&](std::size_t i) {
            try {
                return std::stod(fields[i]);
            } catch (const std::exception&) {
                fail("csv line " + std::to_string(line_no) + ": bad number '" + fields[i] + "'");
            }
        };
        row.metrics.avg_quality = num(4);
        row.metrics.rebuffer_s = num(5);
        row.metrics.rebuffer_pct = num(6);
        row.metrics.overhead_pct = num(7);
        row.metrics.avg_bitrate_bps = num(8);
        row.metrics.decision_us_mean = num(9);
        row.metrics.decision_us_p99 = num(10);
        table.rows.push_back(std::move(row));
    }
    return table;
}

namespace {

json fec_config_to_json(const fec::FecConfig& cfg) {
    return json{{"n", cfg.source_symbols},
                {"k", cfg.repair_symbols},
                {"S", cfg.symbol_size_bytes},
                {"codec", fec::to_string(cfg.codec.kind)}};
}

}  // namespace

std::string session_report_to_json(const sim::SessionReport& report, bool include_segments,
                                   bool include_timing) {
    json doc;
    doc["schema_version"] = 1;
    doc["session"] = json{{"mode", sim::to_string(report.mode)},
                          {"abr", sim::to_string(report.abr)},
                          {"fec", sim::to_string(report.fec)},
                          {"loss", report.loss_profile},
                          {"gamma", report.gamma},
                          {"seed", report.seed},
                          {"buffer_capacity_s", report.buffer_capacity_s},
                          {"segment_duration_s", report.segment_duration_s},
                          {"segments", report.segments.size()}};
    doc["time"] = json{{"startup_s", report.startup_s},
                       {"play_s", report.play_s},
                       {"rebuffer_s", report.rebuffer_s},
                       {"idle_s", report.idle_s},
                       {"total_wall_s", report.total_wall_s}};
    doc["summary"] = metrics_to_json(summarize(report), include_timing);
    if (include_segments) {
        json segments = json::array();
        for (const auto& seg : report.segments) {
            json s{{"index", seg.index},
                   {"representation", seg.representation},
                   {"bitrate_bps", seg.bitrate_bps},
                   {"quality_index", seg.quality_index},
                   {"fec", fec_config_to_json(seg.fec_config)},
                   {"source_bytes", seg.source_bytes},
                   {"repair_bytes", seg.repair_bytes},
                   {"download_s", seg.download_s},
                   {"encoding_s", seg.encoding_s},
                   {"buffer_before_s", seg.buffer_before_s},
                   {"buffer_after_s", seg.buffer_after_s},
                   {"rebuffer_s", seg.rebuffer_s},
                   {"sampled_loss", seg.sampled_loss},
                   {"residual_loss", seg.residual_loss},
                   {"smoothed_loss", seg.smoothed_loss}};
            if (include_timing) s["decision_us"] = seg.decision_us;
            segments.push_back(std::move(s));
        }
        doc["segments"] = std::move(segments);
    }
    return doc.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace tarot::report
