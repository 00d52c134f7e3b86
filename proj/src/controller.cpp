#include "tarot/controller.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tarot/loss_model.hpp"

namespace tarot::ctrl {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

}  // namespace

void TelemetryState::validate() const {
    if (!(playback_bitrate_bps > 0.0)) fail("telemetry: playback bitrate must be > 0");
    if (!(buffer_level_s >= 0.0)) fail("telemetry: buffer level must be >= 0");
    if (!(smoothed_loss >= 0.0 && smoothed_loss <= 1.0))
        fail("telemetry: smoothed loss must lie in [0, 1]");
    if (!(goodput_bps >= 0.0)) fail("telemetry: goodput must be >= 0");
}

void Hyperparameters::validate() const {
    const struct {
        const char* name;
        double value;
    } fields[] = {
        {"B_sat", b_sat},         {"B_crit", b_crit},
        {"h_cap", h_cap},         {"alpha_min", alpha_min},
        {"alpha_B", alpha_b},     {"alpha_h", alpha_h},
        {"o_0", o_0},             {"k_B", k_b},
        {"k_h", k_h},             {"o_cap", o_cap},
        {"alpha_over", alpha_over}, {"eta", eta},
        {"hardcap_tblk", hardcap_tblk}, {"w_loss_min", w_loss_min},
        {"lambda_p", lambda_p},   {"p_cap", p_cap},
        {"w_over_min", w_over_min}, {"lambda_B", lambda_b},
        {"lambda_h", lambda_h},   {"w_blk_min", w_blk_min},
        {"lambda_risk", lambda_risk}, {"lambda_hneg", lambda_hneg},
        {"epsilon", epsilon},     {"epsilon_pl", epsilon_pl},
        {"ewma_lambda_lll", ewma_lambda_lll}, {"ewma_lambda_vod", ewma_lambda_vod},
    };
    for (const auto& f : fields)
        if (!(f.value > 0.0))
            fail(std::string("hyperparameters: ") + f.name + " must be > 0");
    if (ewma_lambda_lll > 1.0 || ewma_lambda_vod > 1.0)
        fail("hyperparameters: EWMA lambdas must lie in (0, 1]");
}

Hyperparameters parse_hyperparameters(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(std::string("hyperparameters: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) fail("hyperparameters: top-level value must be an object");

    Hyperparameters hp;
    const std::pair<const char*, double*> fields[] = {
        {"B_sat", &hp.b_sat},         {"B_crit", &hp.b_crit},
        {"h_cap", &hp.h_cap},         {"alpha_min", &hp.alpha_min},
        {"alpha_B", &hp.alpha_b},     {"alpha_h", &hp.alpha_h},
        {"o_0", &hp.o_0},             {"k_B", &hp.k_b},
        {"k_h", &hp.k_h},             {"o_cap", &hp.o_cap},
        {"alpha_over", &hp.alpha_over}, {"eta", &hp.eta},
        {"hardcap_tblk", &hp.hardcap_tblk}, {"w_loss_min", &hp.w_loss_min},
        {"lambda_p", &hp.lambda_p},   {"p_cap", &hp.p_cap},
        {"w_over_min", &hp.w_over_min}, {"lambda_B", &hp.lambda_b},
        {"lambda_h", &hp.lambda_h},   {"w_blk_min", &hp.w_blk_min},
        {"lambda_risk", &hp.lambda_risk}, {"lambda_hneg", &hp.lambda_hneg},
        {"epsilon", &hp.epsilon},     {"epsilon_pl", &hp.epsilon_pl},
        {"ewma_lambda_lll", &hp.ewma_lambda_lll}, {"ewma_lambda_vod", &hp.ewma_lambda_vod},
    };
    for (const auto& [key, value] : doc.items()) {
        bool known = false;
        for (const auto& [name, slot] : fields) {
            if (key == name) {
                if (!value.is_number()) fail("hyperparameters: '" + key + "' must be a number");
                *slot = value.get<double>();
                known = true;
                break;
            }
        }
        if (!known) fail("hyperparameters: unknown field '" + key + "'");
    }
    hp.validate();
    return hp;
}

Hyperparameters load_hyperparameters(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("hyperparameters: cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_hyperparameters(buf.str());
    } catch (const std::invalid_argument& e) {
        fail(path.string() + ": " + e.what());
    }
}

double smooth_loss(double sampled_loss, double previous, double lambda) {
    if (!(sampled_loss >= 0.0 && sampled_loss <= 1.0) || !(previous >= 0.0 && previous <= 1.0) ||
        !(lambda >= 0.0 && lambda <= 1.0))
        fail("smooth_loss: arguments must be fractions in [0, 1]");
    return lambda * sampled_loss + (1.0 - lambda) * previous;
}

double effective_buffer(double buffer_level_s, const Hyperparameters& hp) {
    return std::min(std::max(buffer_level_s, 0.0), hp.b_sat);
}

Headroom headroom(double rate_bps, double playback_bitrate_bps, const Hyperparameters& hp) {
    const double raw =
        (rate_bps - playback_bitrate_bps) / std::max(playback_bitrate_bps, hp.epsilon);
    Headroom h;
    h.value = std::min(std::max(raw, -10.0), 10.0);
    h.positive = std::max(0.0, h.value);
    h.negative = std::max(0.0, -h.value);
    return h;
}

double protection_margin(const TelemetryState& state, const Hyperparameters& hp) {
    const double b_eff = effective_buffer(state.buffer_level_s, hp);
    const Headroom h = headroom(state.goodput_bps, state.playback_bitrate_bps, hp);
    return std::max(0.5, hp.alpha_min + hp.alpha_b * std::max(0.0, hp.b_crit - b_eff) -
                             hp.alpha_h * std::min(h.positive, hp.h_cap));
}

Headroom fec_aware_headroom(const TelemetryState& state, const fec::FecConfig& cfg,
                            const Hyperparameters& hp) {
    const double o = fec::overhead(cfg).value();
    const double residue = loss::residual_loss(state.smoothed_loss, fec::coverage(cfg).value());
    const double payload = state.goodput_bps * (1.0 - residue) /
                           (std::max(1.0 - state.smoothed_loss, hp.epsilon) * (1.0 + o));
    return headroom(payload, state.playback_bitrate_bps, hp);
}

double overhead_allowance(double effective_buffer_s, double fec_aware_positive_headroom,
                          const Hyperparameters& hp) {
    const double raw = hp.o_0 + hp.k_b * std::max(0.0, hp.b_crit - effective_buffer_s) +
                       hp.k_h * std::min(fec_aware_positive_headroom, hp.h_cap);
    return std::min(std::max(raw, 0.0), hp.o_cap);
}

double loss_penalty(const fec::FecConfig& cfg, double smoothed_loss) {
    const double expected = std::max(0.0, static_cast<double>(cfg.source_symbols) * smoothed_loss -
                                              cfg.codec.repair_efficiency *
                                                  static_cast<double>(cfg.repair_symbols));
    return expected * expected;
}

double overhead_penalty(double overhead, double allowance, const Hyperparameters& hp) {
    return std::pow(std::max(0.0, overhead - allowance), hp.alpha_over);
}

BlockTiming block_penalty(const fec::FecConfig& cfg, double goodput_bps,
                          double effective_buffer_s, const Hyperparameters& hp) {
    BlockTiming t;
    t.block_time_s = 8.0 *
                         static_cast<double>(cfg.source_symbols + cfg.repair_symbols) *
                         static_cast<double>(cfg.symbol_size_bytes) /
                         std::max(goodput_bps, hp.epsilon) +
                     fec::encoding_latency_s(cfg);
    if (t.block_time_s > hp.hardcap_tblk * effective_buffer_s) {
        t.rejected = true;
        return t;
    }
    t.penalty = std::min(1.0, std::max(0.0, t.block_time_s / (hp.eta * effective_buffer_s) - 1.0));
    return t;
}

Weights adaptive_weights(double smoothed_loss, double effective_buffer_s,
                         double positive_headroom, double negative_headroom,
                         const Hyperparameters& hp) {
    const double w_loss = hp.w_loss_min + hp.lambda_p * std::min(smoothed_loss, hp.p_cap);
    const double w_over = hp.w_over_min + hp.lambda_b * (effective_buffer_s / hp.b_sat) +
                          hp.lambda_h * std::min(positive_headroom, hp.h_cap);
    const double w_blk = hp.w_blk_min +
                         hp.lambda_risk * std::max(0.0, 1.0 - effective_buffer_s / hp.b_crit) +
                         hp.lambda_hneg * negative_headroom;
    const double total = w_loss + w_over + w_blk;
    return {w_loss / total, w_over / total, w_blk / total};
}

ScoredCandidate score_candidate(const fec::FecConfig& cfg, const TelemetryState& state,
                                const Hyperparameters& hp) {
    ScoredCandidate out;
    out.config = cfg;

    const double b_eff = effective_buffer(state.buffer_level_s, hp);
    const double alpha = protection_margin(state, hp);
    const double pl = state.smoothed_loss;

    const double o = fec::overhead(cfg).value();
    if (o < alpha * pl) {
        out.status = CandidateStatus::Infeasible;
        return out;
    }

    const Headroom h = fec_aware_headroom(state, cfg, hp);
    const double allowance = overhead_allowance(b_eff, h.positive, hp);
    const double p_over = overhead_penalty(o, allowance, hp);

    const BlockTiming timing = block_penalty(cfg, state.goodput_bps, b_eff, hp);
    if (timing.rejected) {
        out.status = CandidateStatus::Rejected;
        return out;
    }

    const double p_loss = loss_penalty(cfg, pl);
    const Weights w = adaptive_weights(pl, b_eff, h.positive, h.negative, hp);

    out.status = CandidateStatus::Scored;
    out.loss_penalty = p_loss;
    out.overhead_penalty = p_over;
    out.block_penalty = timing.penalty;
    out.weights = w;
    out.score = w.loss * p_loss + w.over * p_over + w.blk * timing.penalty;
    return out;
}

Selection select_config_detailed(const TelemetryState& state, const fec::CandidateLibrary& lib,
                                 const Hyperparameters& hp) {
    state.validate();
    if (lib.candidates.empty()) fail("select_config: empty candidate library");

    Selection sel;
    if (state.smoothed_loss < hp.epsilon_pl) {
        sel.config = fec::FecConfig::no_fec();
        sel.clean_link = true;
        return sel;
    }

    bool have_best = false;
    ScoredCandidate best;
    for (const auto& cfg : lib.candidates) {
        const ScoredCandidate sc = score_candidate(cfg, state, hp);
        if (sc.status != CandidateStatus::Scored) continue;
        ++sel.feasible_count;
        if (!have_best || sc.score < best.score) {
            best = sc;
            have_best = true;
        }
    }
    if (have_best) {
        sel.config = best.config;
        sel.score = best.score;
        return sel;
    }

    // Nothing both feasible and deliverable: protect as hard as possible.
    // Prefer the max-coverage candidate whose block time respects the hard
    // cap; if even that fails, take max coverage outright.
    sel.fallback = true;
    sel.score = std::numeric_limits<double>::infinity();
    const double b_eff = effective_buffer(state.buffer_level_s, hp);
    bool have_capped = false;
    double best_capped_cov = -1.0;
    bool have_any = false;
    double best_any_cov = -1.0;
    fec::FecConfig capped_cfg, any_cfg;
    for (const auto& cfg : lib.candidates) {
        const double cov = fec::coverage(cfg).value();
        if (!have_any || cov > best_any_cov) {
            best_any_cov = cov;
            any_cfg = cfg;
            have_any = true;
        }
        if (!block_penalty(cfg, state.goodput_bps, b_eff, hp).rejected &&
            (!have_capped || cov > best_capped_cov)) {
            best_capped_cov = cov;
            capped_cfg = cfg;
            have_capped = true;
        }
    }
    sel.config = have_capped ? capped_cfg : any_cfg;
    return sel;
}

fec::FecConfig select_config(const TelemetryState& state, const fec::CandidateLibrary& lib,
                             const Hyperparameters& hp) {
    return select_config_detailed(state, lib, hp).config;
}

fec::FecConfig brute_force_select(const TelemetryState& state, const fec::CandidateLibrary& lib,
                                  const Hyperparameters& hp) {
    state.validate();
    if (lib.candidates.empty()) fail("brute_force_select: empty candidate library");

    const double br = state.playback_bitrate_bps;
    const double bl = state.buffer_level_s;
    const double pl = state.smoothed_loss;
    const double gp = state.goodput_bps;

    if (pl < hp.epsilon_pl) return fec::FecConfig::no_fec();

    const double b_eff = std::min(std::max(bl, 0.0), hp.b_sat);
    const double h_raw = (gp - br) / std::max(br, hp.epsilon);
    const double h_clamped = std::min(std::max(h_raw, -10.0), 10.0);
    const double h_pos = std::max(0.0, h_clamped);
    const double alpha =
        std::max(0.5, hp.alpha_min + hp.alpha_b * std::max(0.0, hp.b_crit - b_eff) -
                          hp.alpha_h * std::min(h_pos, hp.h_cap));

    bool have_best = false;
    double best_score = 0.0;
    fec::FecConfig best_cfg;
    bool have_capped = false;
    double best_capped_cov = -1.0;
    fec::FecConfig capped_cfg;
    bool have_any = false;
    double best_any_cov = -1.0;
    fec::FecConfig any_cfg;

    for (const auto& cfg : lib.candidates) {
        const double n = static_cast<double>(cfg.source_symbols);
        const double k = static_cast<double>(cfg.repair_symbols);
        const double symbol = static_cast<double>(cfg.symbol_size_bytes);

        double enc;
        if (cfg.repair_symbols == 0)
            enc = 0.0;
        else if (cfg.codec.kind == fec::CodecKind::Xor)
            enc = fec::kXorEncodeLatencyS;
        else
            enc = n * symbol * cfg.codec.encode_cost_ns_per_byte * 1e-9;
        const double t_blk =
            8.0 * static_cast<double>(cfg.source_symbols + cfg.repair_symbols) * symbol /
                std::max(gp, hp.epsilon) +
            enc;
        const bool hardcapped = t_blk > hp.hardcap_tblk * b_eff;

        const double cov = k / static_cast<double>(cfg.source_symbols + cfg.repair_symbols);
        if (!have_any || cov > best_any_cov) {
            best_any_cov = cov;
            any_cfg = cfg;
            have_any = true;
        }
        if (!hardcapped && (!have_capped || cov > best_capped_cov)) {
            best_capped_cov = cov;
            capped_cfg = cfg;
            have_capped = true;
        }

        const double o = k / n;
        const bool feasible = !(o < alpha * pl);
        if (!feasible || hardcapped) continue;

        double residue;
        if (pl <= cov && cov > 0.0) {
            const double slack = (cov - pl) / cov;
            residue = pl * (0.4 + 0.6 * (1.0 - slack));
        } else {
            residue = pl - 0.8 * cov;
        }
        if (residue < 0.0) residue = 0.0;
        if (residue > pl) residue = pl;

        const double payload = gp * (1.0 - residue) / (std::max(1.0 - pl, hp.epsilon) * (1.0 + o));
        const double h2_raw = (payload - br) / std::max(br, hp.epsilon);
        const double h2 = std::min(std::max(h2_raw, -10.0), 10.0);
        const double h2_pos = std::max(0.0, h2);
        const double h2_neg = std::max(0.0, -h2);

        const double allowance_raw = hp.o_0 + hp.k_b * std::max(0.0, hp.b_crit - b_eff) +
                                     hp.k_h * std::min(h2_pos, hp.h_cap);
        const double allowance = std::min(std::max(allowance_raw, 0.0), hp.o_cap);
        const double p_over = std::pow(std::max(0.0, o - allowance), hp.alpha_over);

        const double p_blk = std::min(1.0, std::max(0.0, t_blk / (hp.eta * b_eff) - 1.0));

        const double expected_loss =
            std::max(0.0, n * pl - cfg.codec.repair_efficiency * k);
        const double p_loss = expected_loss * expected_loss;

        const double w_loss_raw = hp.w_loss_min + hp.lambda_p * std::min(pl, hp.p_cap);
        const double w_over_raw = hp.w_over_min + hp.lambda_b * (b_eff / hp.b_sat) +
                                  hp.lambda_h * std::min(h2_pos, hp.h_cap);
        const double w_blk_raw = hp.w_blk_min +
                                 hp.lambda_risk * std::max(0.0, 1.0 - b_eff / hp.b_crit) +
                                 hp.lambda_hneg * h2_neg;
        const double total = w_loss_raw + w_over_raw + w_blk_raw;
        const double score = (w_loss_raw / total) * p_loss + (w_over_raw / total) * p_over +
                             (w_blk_raw / total) * p_blk;

        if (!have_best || score < best_score) {
            best_score = score;
            best_cfg = cfg;
            have_best = true;
        }
    }

    if (have_best) return best_cfg;
    return have_capped ? capped_cfg : any_cfg;
}

fec::FecConfig rfec_select(const TelemetryState& state, std::int64_t source_symbols,
                           std::int64_t symbol_size_bytes, const fec::CodecFamily& codec,
                           const Hyperparameters& hp) {
    state.validate();
    fec::FecConfig cfg{source_symbols, 0, symbol_size_bytes, codec};
    cfg.validate();
    if (state.smoothed_loss < hp.epsilon_pl) return cfg;

    const double required = protection_margin(state, hp) * state.smoothed_loss;
    const double n = static_cast<double>(source_symbols);
    std::int64_t k = static_cast<std::int64_t>(std::ceil(required * n - 1e-9));
    if (k < 0) k = 0;
    while (static_cast<double>(k) / n < required) ++k;
    cfg.repair_symbols = k;
    return cfg;
}

}  // namespace tarot::ctrl
