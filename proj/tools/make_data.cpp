// Regenerates the committed demo inputs under data/: manifests, synthetic
// traces, the default candidate grid, hyperparameter defaults and the
// reference sweep spec. Usage: make_data [output_root]
#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tarot/controller.hpp"
#include "tarot/report.hpp"
#include "tarot/simulator.hpp"

namespace {

using nlohmann::json;
using namespace tarot;

json manifest_to_json(const sim::Manifest& m) {
    json doc;
    doc["segment_duration_ms"] = std::llround(m.segment_duration_s * 1000.0);
    json bitrates = json::array();
    json quality = json::array();
    for (const auto& r : m.ladder.representations) {
        bitrates.push_back(std::llround(r.bitrate_bps / 1000.0));
        quality.push_back(r.quality_index);
    }
    doc["bitrates_kbps"] = std::move(bitrates);
    doc["quality"] = std::move(quality);
    json rows = json::array();
    for (const auto& rep : m.segment_bytes) {
        json row = json::array();
        for (double bytes : rep) row.push_back(std::llround(bytes * 8.0));
        rows.push_back(std::move(row));
    }
    doc["segment_sizes_bits"] = std::move(rows);
    return doc;
}

json trace_to_json(const sim::NetworkTrace& t) {
    json doc = json::array();
    for (const auto& p : t.periods)
        doc.push_back(json{{"duration_ms", p.duration_s * 1000.0},
                           {"bandwidth_kbps", p.bandwidth_bps / 1000.0},
                           {"latency_ms", p.latency_s * 1000.0}});
    return doc;
}

json grid_to_json(const fec::GridSpec& g) {
    return json{{"n", g.source_symbol_counts},
                {"r", g.redundancy_ratios},
                {"S", g.symbol_sizes_bytes},
                {"codec", fec::to_string(g.codec.kind)}};
}

json hyperparameters_to_json(const ctrl::Hyperparameters& hp) {
    return json{{"B_sat", hp.b_sat},
                {"B_crit", hp.b_crit},
                {"h_cap", hp.h_cap},
                {"alpha_min", hp.alpha_min},
                {"alpha_B", hp.alpha_b},
                {"alpha_h", hp.alpha_h},
                {"o_0", hp.o_0},
                {"k_B", hp.k_b},
                {"k_h", hp.k_h},
                {"o_cap", hp.o_cap},
                {"alpha_over", hp.alpha_over},
                {"eta", hp.eta},
                {"hardcap_tblk", hp.hardcap_tblk},
                {"w_loss_min", hp.w_loss_min},
                {"lambda_p", hp.lambda_p},
                {"p_cap", hp.p_cap},
                {"w_over_min", hp.w_over_min},
                {"lambda_B", hp.lambda_b},
                {"lambda_h", hp.lambda_h},
                {"w_blk_min", hp.w_blk_min},
                {"lambda_risk", hp.lambda_risk},
                {"lambda_hneg", hp.lambda_hneg},
                {"epsilon", hp.epsilon},
                {"epsilon_pl", hp.epsilon_pl},
                {"ewma_lambda_lll", hp.ewma_lambda_lll},
                {"ewma_lambda_vod", hp.ewma_lambda_vod}};
}

void dump(const std::filesystem::path& path, const json& doc) {
    report::write_text_file(path, doc.dump(2) + "\n");
    std::cerr << "wrote " << path.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    const std::filesystem::path root = argc > 1 ? argv[1] : "data";
    constexpr std::uint64_t kSeed = 42;

    std::filesystem::create_directories(root / "manifests");
    std::filesystem::create_directories(root / "traces");
    std::filesystem::create_directories(root / "grids");
    std::filesystem::create_directories(root / "hyperparameters");
    std::filesystem::create_directories(root / "sweeps");

    // Ten representations, 0.5 -> 40 Mbps; ~4.5 minutes of content per mode.
    const std::vector<double> ladder_bps = {500e3, 1000e3, 2000e3, 3500e3, 5000e3,
                                            8000e3, 12000e3, 18000e3, 25000e3, 40000e3};
    dump(root / "manifests" / "demo_vod.json",
         manifest_to_json(sim::synthetic_manifest(ladder_bps, 4.0, 68, kSeed)));
    dump(root / "manifests" / "demo_lll.json",
         manifest_to_json(sim::synthetic_manifest(ladder_bps, 2.0, 135, kSeed + 1)));

    dump(root / "traces" / "5g_high_variance.json",
         trace_to_json(sim::archetype_trace(sim::TraceArchetype::HighVariance5G, kSeed)));
    dump(root / "traces" / "5g_moderate.json",
         trace_to_json(sim::archetype_trace(sim::TraceArchetype::Moderate5G, kSeed)));
    dump(root / "traces" / "lte_steady.json",
         trace_to_json(sim::archetype_trace(sim::TraceArchetype::SteadyLte, kSeed)));
    dump(root / "traces" / "handover.json",
         trace_to_json(sim::archetype_trace(sim::TraceArchetype::Handover, kSeed)));
    dump(root / "traces" / "constant_33mbps.json",
         trace_to_json(sim::constant_trace(33e6, 0.05)));

    dump(root / "grids" / "default_rq.json",
         grid_to_json(fec::GridSpec::default_grid(fec::CodecFamily::raptorq())));
    dump(root / "hyperparameters" / "defaults.json",
         hyperparameters_to_json(ctrl::Hyperparameters{}));

    const json sweep{
        {"manifests",
         {{"vod", "../manifests/demo_vod.json"}, {"lll", "../manifests/demo_lll.json"}}},
        {"traces",
         {"../traces/5g_high_variance.json", "../traces/5g_moderate.json",
          "../traces/lte_steady.json", "../traces/handover.json"}},
        {"loss_profiles", {"none", "const:0.01", "const:0.05", "var:0:0.05"}},
        {"strategies", {"none", "rs", "rq", "rq-tarot", "rfec"}},
        {"abrs", {"throughput"}},
        {"modes", {"vod", "lll"}},
        {"seeds", {1, 2, 3}},
        {"gamma", 0.5}};
    dump(root / "sweeps" / "full_grid.json", sweep);

    std::cerr << "done\n";
    return 0;
}
