// Acceptance gate: one criterion per line, [PASS]/[FAIL] verdicts, nonzero
// exit when anything fails. Every input is generated in memory so the gate is
// hermetic; criteria that are probabilistic state their sample sizes inline.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "tarot/abr.hpp"
#include "tarot/controller.hpp"
#include "tarot/fec_core.hpp"
#include "tarot/loss_model.hpp"
#include "tarot/report.hpp"
#include "tarot/rng.hpp"
#include "tarot/simulator.hpp"

#include "../test_support.hpp"

using namespace tarot;
using testsupport::random_state;

namespace {

void expect(bool condition, const std::string& what) {
    if (!condition) throw std::runtime_error(what);
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream out;
    out << std::setprecision(precision) << v;
    return out.str();
}

struct NamedTrace {
    std::string name;
    sim::NetworkTrace trace;
};

struct Fixtures {
    sim::Manifest vod = testsupport::vod_manifest();
    sim::Manifest lll = testsupport::lll_manifest();
    std::vector<NamedTrace> traces;               // four archetypes + constant mean
    const sim::NetworkTrace* constant33 = nullptr;
    fec::CandidateLibrary default_rq;
    fec::CandidateLibrary wide_rs;
    ctrl::Hyperparameters hp;

    Fixtures() {
        for (auto a : testsupport::all_archetypes())
            traces.push_back({sim::to_string(a), sim::archetype_trace(a, 42)});
        traces.push_back({"constant-33mbps", sim::constant_trace(33e6, 0.05)});
        constant33 = &traces.back().trace;
        default_rq =
            fec::build_candidate_library(fec::GridSpec::default_grid(fec::CodecFamily::raptorq()));
        wide_rs = fec::build_candidate_library(
            testsupport::no_collision_grid_400(fec::CodecFamily::reed_solomon()));
    }

    const sim::Manifest& manifest(sim::StreamingMode mode) const {
        return mode == sim::StreamingMode::Vod ? vod : lll;
    }
};

sim::SessionReport run_one(const Fixtures& fx, sim::StreamingMode mode,
                           const sim::NetworkTrace& trace, sim::FecStrategy fec,
                           sim::AbrKind abr, const std::string& loss, std::uint64_t seed) {
    auto cfg = sim::SessionConfig::for_mode(mode);
    cfg.fec = fec;
    cfg.abr = abr;
    cfg.loss_profile = loss::LossProfile::parse(loss);
    cfg.seed = seed;
    return sim::run_session(fx.manifest(mode), trace, cfg);
}

double overhead_pct(const sim::SessionReport& r) { return report::summarize(r).overhead_pct; }

constexpr std::array<sim::StreamingMode, 2> kModes = {sim::StreamingMode::Vod,
                                                      sim::StreamingMode::Lll};

// --- C1: with loss disabled the controller ships zero repair bytes. ---------

std::string criterion_zero_loss(const Fixtures& fx) {
    int sessions = 0;
    for (auto mode : kModes) {
        for (auto strategy : {sim::FecStrategy::TarotRs, sim::FecStrategy::TarotRq}) {
            for (const auto& named : fx.traces) {
                const auto r = run_one(fx, mode, named.trace, strategy,
                                       sim::AbrKind::Throughput, "none", 1);
                double repair = 0.0;
                for (const auto& seg : r.segments) {
                    repair += seg.repair_bytes;
                    expect(seg.fec_config.unprotected(),
                           named.name + ": segment shipped protection without loss");
                }
                expect(repair == 0.0, named.name + ": nonzero repair bytes at zero loss");
                expect(overhead_pct(r) == 0.0, named.name + ": nonzero aggregate overhead");
                ++sessions;
            }
        }
    }
    return std::to_string(sessions) + " sessions, 0 repair bytes in every one";
}

// --- C2: static (20,10,64) protection reports exactly 50% overhead. ---------

std::string criterion_static_pin(const Fixtures& fx) {
    int sessions = 0;
    for (auto mode : kModes) {
        for (auto strategy : {sim::FecStrategy::StaticRs, sim::FecStrategy::StaticRq}) {
            for (const auto& named : fx.traces) {
                for (const char* loss : {"none", "const:0.05"}) {
                    const auto r = run_one(fx, mode, named.trace, strategy,
                                           sim::AbrKind::Throughput, loss, 1);
                    const double pct = overhead_pct(r);
                    expect(pct == 50.0, named.name + " " + loss + ": overhead " + fmt(pct, 17) +
                                            "% is not exactly 50%");
                    ++sessions;
                }
            }
        }
    }
    return std::to_string(sessions) + " sessions, aggregate overhead == 50% bit-exact";
}

// --- C3: at 5% constant loss the controller runs far leaner than static. ----

std::string criterion_overhead_reduction(const Fixtures& fx) {
    std::ostringstream detail;
    for (auto mode : kModes) {
        const double static_pct = overhead_pct(run_one(fx, mode, *fx.constant33,
                                                       sim::FecStrategy::StaticRq,
                                                       sim::AbrKind::Throughput, "const:0.05", 1));
        expect(static_pct == 50.0, "static reference lost its 50% pin");
        for (auto strategy : {sim::FecStrategy::TarotRq, sim::FecStrategy::TarotRs}) {
            const auto r = run_one(fx, mode, *fx.constant33, strategy,
                                   sim::AbrKind::Throughput, "const:0.05", 1);
            const double pct = overhead_pct(r);
            const std::string label =
                std::string(sim::to_string(mode)) + "/" + sim::to_string(strategy);
            expect(pct >= 3.0 && pct <= 25.0,
                   label + ": overhead " + fmt(pct) + "% outside [3%, 25%]");
            expect(static_pct - pct >= 25.0,
                   label + ": only " + fmt(static_pct - pct) + " points below static");
            detail << label << " " << fmt(pct) << "% ";
        }
    }
    return detail.str() + "vs static 50%";
}

// --- C4: adaptive protection wins the quality ordering at 5% loss. ----------

std::string criterion_quality_ordering(const Fixtures& fx) {
    const std::vector<std::uint64_t> seeds = {1, 2, 3};
    int wins = 0;
    std::ostringstream detail;
    for (auto a : testsupport::all_archetypes()) {
        const auto trace = sim::archetype_trace(a, 42);
        auto mean_quality = [&](sim::FecStrategy s) {
            double total = 0.0;
            for (auto seed : seeds)
                total += report::summarize(run_one(fx, sim::StreamingMode::Vod, trace, s,
                                                   sim::AbrKind::Throughput, "const:0.05", seed))
                             .avg_quality;
            return total / static_cast<double>(seeds.size());
        };
        const double adaptive = mean_quality(sim::FecStrategy::TarotRq);
        const double none = mean_quality(sim::FecStrategy::None);
        const double fixed = mean_quality(sim::FecStrategy::StaticRq);
        const bool win = adaptive > none && adaptive > fixed;
        wins += win ? 1 : 0;
        detail << sim::to_string(a) << " " << fmt(adaptive) << (win ? ">" : "!>")
               << "max(" << fmt(none) << "," << fmt(fixed) << ") ";
    }
    expect(wins >= 3, "quality ordering held on only " + std::to_string(wins) +
                          "/4 archetypes: " + detail.str());
    return std::to_string(wins) + "/4 archetypes ordered: " + detail.str();
}

// --- C5: goodput-collapse pins. ----------------------------------------------

std::string criterion_goodput_pins(const Fixtures&) {
    const double a = loss::goodput_under_loss(10e6, 0.01, 0.5) * 1e-6;
    const double b = loss::goodput_under_loss(10e6, 0.05, 0.5) * 1e-6;
    expect(std::abs(a - 9.5238) <= 1e-3, "1% loss pin off: " + fmt(a, 10));
    expect(std::abs(b - 6.4137) <= 1e-3, "5% loss pin off: " + fmt(b, 10));
    return "10 Mbps collapses to " + fmt(a, 6) + " / " + fmt(b, 6) +
           " Mbps at 1% / 5% loss (pins 9.5238 / 6.4137 +/- 1e-3)";
}

// --- C6: the production selector equals the brute-force oracle. --------------

std::string criterion_oracle_equivalence(const Fixtures& fx) {
    auto disagreements = [&](const fec::CandidateLibrary& lib, std::uint64_t seed, int count) {
        rng::Splitmix64 r(seed);
        int bad = 0;
        for (int i = 0; i < count; ++i) {
            const auto state = random_state(r);
            const auto fast = ctrl::select_config(state, lib, fx.hp);
            const auto slow = ctrl::brute_force_select(state, lib, fx.hp);
            if (!fec::same_shape(fast, slow) || fast.codec.kind != slow.codec.kind) ++bad;
        }
        return bad;
    };
    const int d_default = disagreements(fx.default_rq, 1301, 10000);
    const int d_wide = disagreements(fx.wide_rs, 1302, 10000);
    expect(d_default == 0, std::to_string(d_default) + " disagreements on the default grid");
    expect(d_wide == 0, std::to_string(d_wide) + " disagreements on the 400-candidate grid");
    return "10000 states x " + std::to_string(fx.default_rq.size()) +
           "-candidate default grid and 10000 x " + std::to_string(fx.wide_rs.size()) +
           "-candidate wide grid, 0 disagreements";
}

// --- C7: Monte-Carlo decode failure obeys the protection-margin bound. ------

std::string criterion_markov_bound(const Fixtures& fx) {
    // Each selection event must satisfy p(fail | its loss) <= 1/(its margin)
    // + 3 sigma. Testing every event is too slow, so events are bucketed by
    // (config, margin band); inside a bucket the max loss and max margin are
    // tested together. That pairing dominates every event in the bucket
    // (failure grows with loss, the bound shrinks with margin), and the
    // narrow band keeps the pairing close to a real, feasible event instead
    // of welding a high loss from a lax-margin state onto a strict margin
    // from a low-loss one.
    struct Bucket {
        fec::FecConfig config;
        double max_loss = 0.0;
        double max_alpha = 0.0;
        int events = 0;
    };
    using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t, int>;
    std::map<Key, Bucket> buckets;
    std::set<std::tuple<std::int64_t, std::int64_t, std::int64_t>> configs;

    rng::Splitmix64 r(606);
    for (int i = 0; i < 10000; ++i) {
        const auto state = random_state(r);
        const auto sel = ctrl::select_config_detailed(state, fx.default_rq, fx.hp);
        // The bound presumes a protected block chosen through the feasibility
        // prune; clean links ship no block and fallbacks bypass the prune.
        if (sel.clean_link || sel.fallback || sel.config.unprotected()) continue;
        const double alpha = ctrl::protection_margin(state, fx.hp);
        const int band = static_cast<int>(std::floor(alpha / 0.25));
        auto& b = buckets[{sel.config.source_symbols, sel.config.repair_symbols,
                           sel.config.symbol_size_bytes, band}];
        b.config = sel.config;
        b.max_loss = std::max(b.max_loss, state.smoothed_loss);
        b.max_alpha = std::max(b.max_alpha, alpha);
        ++b.events;
        configs.insert({sel.config.source_symbols, sel.config.repair_symbols,
                        sel.config.symbol_size_bytes});
    }
    expect(configs.size() >= 5, "state suite selected too few distinct configs");

    constexpr int kBlocks = 100000;
    double worst_slack = 1e9;
    std::uint64_t stream = 0;
    for (const auto& [key, b] : buckets) {
        rng::Splitmix64 draws(rng::derive(4242, ++stream));
        int failures = 0;
        for (int blk = 0; blk < kBlocks; ++blk) {
            std::int64_t src = 0, rep = 0;
            for (std::int64_t s = 0; s < b.config.source_symbols; ++s)
                if (draws.next_uniform01() >= b.max_loss) ++src;
            for (std::int64_t s = 0; s < b.config.repair_symbols; ++s)
                if (draws.next_uniform01() >= b.max_loss) ++rep;
            if (!fec::decode_feasible(src, rep, b.config.source_symbols)) ++failures;
        }
        const double p_hat = static_cast<double>(failures) / kBlocks;
        const double sigma =
            std::sqrt(std::max(p_hat * (1.0 - p_hat), 1.0 / kBlocks) / kBlocks);
        const double bound = 1.0 / b.max_alpha + 3.0 * sigma;
        expect(p_hat <= bound, "config (" + std::to_string(b.config.source_symbols) + "," +
                                   std::to_string(b.config.repair_symbols) + ") at loss " +
                                   fmt(b.max_loss) + ", margin " + fmt(b.max_alpha) +
                                   ": failure " + fmt(p_hat) + " exceeds bound " + fmt(bound));
        worst_slack = std::min(worst_slack, bound - p_hat);
    }
    return std::to_string(configs.size()) + " distinct selected configs in " +
           std::to_string(buckets.size()) + " margin-band buckets x 1e5 blocks, worst bound "
           "slack " + fmt(worst_slack);
}

// --- C8: no scored candidate Pareto-dominates a winner. ----------------------

std::string criterion_pareto(const Fixtures& fx) {
    rng::Splitmix64 r(808);
    int audited = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto state = random_state(r);
        const auto sel = ctrl::select_config_detailed(state, fx.default_rq, fx.hp);
        if (sel.clean_link || sel.fallback) continue;
        ++audited;
        const auto winner = ctrl::score_candidate(sel.config, state, fx.hp);
        expect(winner.status == ctrl::CandidateStatus::Scored, "winner failed rescoring");
        expect(winner.weights.loss > 0.0 && winner.weights.over > 0.0 &&
                   winner.weights.blk > 0.0,
               "non-positive adaptive weight");
        for (const auto& cand : fx.default_rq.candidates) {
            const auto scored = ctrl::score_candidate(cand, state, fx.hp);
            if (scored.status != ctrl::CandidateStatus::Scored) continue;
            const bool dominates = scored.loss_penalty < winner.loss_penalty &&
                                   scored.overhead_penalty < winner.overhead_penalty &&
                                   scored.block_penalty < winner.block_penalty;
            expect(!dominates, "state " + std::to_string(i) + ": (" +
                                   std::to_string(cand.source_symbols) + "," +
                                   std::to_string(cand.repair_symbols) + "," +
                                   std::to_string(cand.symbol_size_bytes) +
                                   ") dominates the winner on all three penalties");
        }
    }
    expect(audited >= 3000, "too few scored selections to audit");
    return std::to_string(audited) +
           " scored selections over 10000 states, 0 dominated, all weights positive";
}

// --- C9: a larger library never scores worse. --------------------------------

std::string criterion_monotonic_improvement(const Fixtures& fx) {
    const auto& parent = fx.default_rq.candidates;
    rng::Splitmix64 r(909);
    int exercised = 0;
    double worst = 0.0;
    for (int pair = 0; pair < 1000; ++pair) {
        fec::CandidateLibrary small, large;
        for (const auto& cand : parent) {
            const double roll = r.next_uniform01();
            if (roll < 0.25) {
                small.candidates.push_back(cand);
                large.candidates.push_back(cand);
            } else if (roll < 0.5) {
                large.candidates.push_back(cand);
            }
        }
        if (small.candidates.empty()) small.candidates.push_back(parent[pair % parent.size()]);
        if (large.candidates.size() == small.candidates.size())
            large.candidates.push_back(parent[(pair * 7) % parent.size()]);

        const auto state = random_state(r);
        const auto s1 = ctrl::select_config_detailed(state, small, fx.hp);
        const auto s2 = ctrl::select_config_detailed(state, large, fx.hp);
        if (std::isinf(s1.score)) continue;  // nothing feasible in the subset
        ++exercised;
        worst = std::max(worst, s2.score - s1.score);
        expect(s2.score <= s1.score + 1e-12,
               "pair " + std::to_string(pair) + ": objective regressed by " +
                   fmt(s2.score - s1.score));
    }
    expect(exercised >= 500, "too few finite-objective pairs");
    return "1000 nested pairs (" + std::to_string(exercised) +
           " with finite objectives), worst regression " + fmt(worst);
}

// --- C10: decisions stay interactive on the 400-candidate grid. --------------

std::string criterion_decision_latency(const Fixtures& fx) {
    expect(fx.wide_rs.size() == 400, "wide grid is not 400 candidates");
    rng::Splitmix64 r(5150);
    std::vector<ctrl::TelemetryState> states;
    while (states.size() < 2000) {
        auto s = random_state(r);
        if (s.smoothed_loss < 2e-4) s.smoothed_loss = 2e-4 + r.next_uniform01() * 0.25;
        states.push_back(s);
    }
    volatile std::int64_t sink = 0;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& s : states)
        sink = sink + ctrl::select_config(s, fx.wide_rs, fx.hp).repair_symbols;
    const double total_us =
        std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start)
            .count();
    const double mean_us = total_us / static_cast<double>(states.size());
    expect(mean_us <= 5000.0, "mean selection latency " + fmt(mean_us) + " us exceeds 5 ms");
    (void)sink;

    const auto session = run_one(fx, sim::StreamingMode::Vod, fx.traces[0].trace,
                                 sim::FecStrategy::TarotRq, sim::AbrKind::Throughput,
                                 "const:0.05", 1);
    const auto m = report::summarize(session);
    expect(m.decision_us_mean > 0.0, "session summary lost its decision timing");
    return "mean " + fmt(mean_us) + " us over 2000 selections x 400 candidates; session summary "
           "reports mean " + fmt(m.decision_us_mean) + " us / p99 " + fmt(m.decision_us_p99) +
           " us";
}

// --- C11: determinism, wall-time conservation and buffer bounds. -------------

std::string criterion_determinism(const Fixtures& fx) {
    const std::vector<std::string> losses = {"none", "const:0.01", "const:0.05", "var:0:0.05"};
    const std::vector<sim::FecStrategy> strategies = {
        sim::FecStrategy::None,     sim::FecStrategy::StaticRs, sim::FecStrategy::StaticRq,
        sim::FecStrategy::StaticXor, sim::FecStrategy::TarotRs, sim::FecStrategy::TarotRq,
        sim::FecStrategy::RFec};
    const std::vector<sim::AbrKind> abrs = {sim::AbrKind::Throughput, sim::AbrKind::Dynamic};

    int cells = 0;
    double worst_conservation = 0.0;
    for (auto mode : kModes) {
        for (const auto& named : fx.traces) {
            for (const auto& loss : losses) {
                for (auto strategy : strategies) {
                    for (auto abr : abrs) {
                        const auto r1 = run_one(fx, mode, named.trace, strategy, abr, loss, 1);
                        const auto r2 = run_one(fx, mode, named.trace, strategy, abr, loss, 1);
                        const std::string label = std::string(sim::to_string(mode)) + "/" +
                                                  named.name + "/" + loss + "/" +
                                                  sim::to_string(strategy) + "/" +
                                                  sim::to_string(abr);
                        // Timing fields are wall-clock measurements; everything
                        // else must reproduce byte for byte.
                        expect(report::session_report_to_json(r1, true, false) ==
                                   report::session_report_to_json(r2, true, false),
                               label + ": reruns differ");
                        const double parts =
                            r1.startup_s + r1.play_s + r1.rebuffer_s + r1.idle_s;
                        const double err = std::abs(parts - r1.total_wall_s);
                        worst_conservation = std::max(worst_conservation, err);
                        expect(err <= 1e-6, label + ": wall-time conservation off by " +
                                                fmt(err, 10));
                        for (const auto& seg : r1.segments) {
                            expect(seg.buffer_before_s >= -1e-9 &&
                                       seg.buffer_before_s <= r1.buffer_capacity_s + 1e-9 &&
                                       seg.buffer_after_s >= -1e-9 &&
                                       seg.buffer_after_s <= r1.buffer_capacity_s + 1e-9,
                                   label + ": buffer bound violated at segment " +
                                       std::to_string(seg.index));
                            expect(seg.download_s > 0.0 && seg.repair_bytes >= 0.0 &&
                                       seg.rebuffer_s >= 0.0,
                                   label + ": malformed segment record");
                        }
                        ++cells;
                    }
                }
            }
        }
    }
    return std::to_string(cells) + " grid cells run twice, byte-identical timing-free "
           "reports, worst conservation error " + fmt(worst_conservation, 3);
}

// --- C12: the reactive baseline spends at least as much redundancy. ----------

std::string criterion_reactive_direction(const Fixtures& fx) {
    double min_gap = 1e9;
    int cells = 0;
    for (auto a : testsupport::all_archetypes()) {
        const auto trace = sim::archetype_trace(a, 42);
        for (auto mode : kModes) {
            const double reactive = overhead_pct(run_one(fx, mode, trace, sim::FecStrategy::RFec,
                                                         sim::AbrKind::Throughput,
                                                         "const:0.05", 1));
            const double adaptive = overhead_pct(run_one(fx, mode, trace,
                                                         sim::FecStrategy::TarotRq,
                                                         sim::AbrKind::Throughput,
                                                         "const:0.05", 1));
            expect(reactive >= adaptive - 1e-9,
                   std::string(sim::to_string(a)) + "/" + sim::to_string(mode) + ": reactive " +
                       fmt(reactive) + "% fell below adaptive " + fmt(adaptive) + "%");
            min_gap = std::min(min_gap, reactive - adaptive);
            ++cells;
        }
    }
    return std::to_string(cells) + " archetype/mode cells, reactive overhead >= adaptive "
           "(smallest gap " + fmt(min_gap) + " points)";
}

struct Harness {
    int failed = 0;

    void run(int id, const std::string& label, const std::function<std::string()>& body) {
        std::string verdict, detail;
        try {
            detail = body();
            verdict = "[PASS]";
        } catch (const std::exception& e) {
            detail = e.what();
            verdict = "[FAIL]";
            ++failed;
        }
        std::printf("%s C%-2d %s — %s\n", verdict.c_str(), id, label.c_str(), detail.c_str());
        std::fflush(stdout);
    }
};

}  // namespace

int main() {
    try {
        const Fixtures fx;
        Harness h;
        h.run(1, "zero-loss suppression", [&] { return criterion_zero_loss(fx); });
        h.run(2, "static overhead pin", [&] { return criterion_static_pin(fx); });
        h.run(3, "overhead reduction under loss", [&] { return criterion_overhead_reduction(fx); });
        h.run(4, "quality ordering at 5% loss", [&] { return criterion_quality_ordering(fx); });
        h.run(5, "goodput collapse pins", [&] { return criterion_goodput_pins(fx); });
        h.run(6, "oracle equivalence", [&] { return criterion_oracle_equivalence(fx); });
        h.run(7, "decode-failure Markov bound", [&] { return criterion_markov_bound(fx); });
        h.run(8, "Pareto-efficient selections", [&] { return criterion_pareto(fx); });
        h.run(9, "monotonic improvement", [&] { return criterion_monotonic_improvement(fx); });
        h.run(10, "decision latency", [&] { return criterion_decision_latency(fx); });
        h.run(11, "determinism and conservation", [&] { return criterion_determinism(fx); });
        h.run(12, "reactive-baseline direction", [&] { return criterion_reactive_direction(fx); });
        std::printf("%d/12 criteria passed\n", 12 - h.failed);
        return h.failed == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::printf("[FAIL] fixture setup — %s\n", e.what());
        return 1;
    }
}
