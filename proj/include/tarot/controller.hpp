#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tarot/fec_core.hpp"

// Per-segment FEC parameter controller. Given smoothed telemetry it scores
// every candidate (n, k, S) against three normalized penalties --
// under-protection, overhead waste and block-latency risk -- with weights that
// adapt to loss, buffer level and bandwidth headroom, then picks the scored
// minimum.
namespace tarot::ctrl {

// Controller inputs for one decision. All rates are bits per second, buffer
// in seconds, loss rates are fractions.
struct TelemetryState {
    double playback_bitrate_bps = 0.0;  // bitrate of the segment about to ship
    double buffer_level_s = 0.0;
    double smoothed_loss = 0.0;         // EWMA over past segment loss samples
    double goodput_bps = 0.0;           // current throughput estimate

    void validate() const;
};

// Tuning surface. Defaults reproduce the reference tuning; any subset can be
// overridden from a JSON document using these field names.
struct Hyperparameters {
    double b_sat = 6.0;         // buffer level treated as fully comfortable, s
    double b_crit = 3.0;        // buffer level below which protection scales up, s
    double h_cap = 2.0;         // headroom beyond this earns no extra credit
    double alpha_min = 1.0;     // baseline protection margin
    double alpha_b = 0.5;       // margin gain per missing buffer second
    double alpha_h = 0.5;       // margin relief per unit of positive headroom
    double o_0 = 0.01;          // overhead considered free regardless of state
    double k_b = 0.02;          // free-overhead gain per missing buffer second
    double k_h = 0.03;          // free-overhead gain per unit of headroom
    double o_cap = 0.35;        // free overhead never exceeds this
    double alpha_over = 1.5;    // curvature of the overhead penalty
    double eta = 0.5;           // block time is "safe" below eta * effective buffer
    double hardcap_tblk = 1.5;  // reject candidates whose block time exceeds this * buffer
    double w_loss_min = 0.5;    // raw weight floors / gains for the three penalties
    double lambda_p = 6.0;
    double p_cap = 0.15;
    double w_over_min = 0.5;
    double lambda_b = 0.5;
    double lambda_h = 0.4;
    double w_blk_min = 0.3;
    double lambda_risk = 0.6;
    double lambda_hneg = 0.6;
    double epsilon = 1e-9;      // division guard
    double epsilon_pl = 1e-4;   // loss below this counts as a clean link
    double ewma_lambda_lll = 0.5;   // loss-smoothing gain, low-latency mode
    double ewma_lambda_vod = 0.25;  // loss-smoothing gain, VoD mode

    void validate() const;
};

Hyperparameters parse_hyperparameters(const std::string& json_text);
Hyperparameters load_hyperparameters(const std::filesystem::path& path);

// EWMA update feeding TelemetryState::smoothed_loss.
double smooth_loss(double sampled_loss, double previous, double lambda);

// Buffer clamped to [0, b_sat]: beyond saturation extra buffer buys nothing.
double effective_buffer(double buffer_level_s, const Hyperparameters& hp);

struct Headroom {
    double value = 0.0;     // (rate - bitrate) / bitrate, clamped to [-10, 10]
    double positive = 0.0;  // max(0, value)
    double negative = 0.0;  // max(0, -value)
};

Headroom headroom(double rate_bps, double playback_bitrate_bps, const Hyperparameters& hp);

// Required protection margin alpha >= 0.5: higher when the buffer is low,
// lower when raw bandwidth headroom is plentiful. Candidates with
// k/n < alpha * smoothed_loss are infeasible.
double protection_margin(const TelemetryState& state, const Hyperparameters& hp);

// Headroom recomputed against what the candidate actually delivers: payload
// goodput after residual loss, smoothed-loss discount and repair expansion.
Headroom fec_aware_headroom(const TelemetryState& state, const fec::FecConfig& cfg,
                            const Hyperparameters& hp);

// Overhead the current state forgives before the overhead penalty engages.
double overhead_allowance(double effective_buffer_s, double fec_aware_positive_headroom,
                          const Hyperparameters& hp);

// Penalty terms. Each is >= 0; block penalty saturates at 1.
double loss_penalty(const fec::FecConfig& cfg, double smoothed_loss);
double overhead_penalty(double overhead, double allowance, const Hyperparameters& hp);

struct BlockTiming {
    double block_time_s = 0.0;
    bool rejected = false;  // block time breaches the hard cap
    double penalty = 0.0;
};

BlockTiming block_penalty(const fec::FecConfig& cfg, double goodput_bps,
                          double effective_buffer_s, const Hyperparameters& hp);

struct Weights {
    double loss = 0.0;  // normalized to sum 1
    double over = 0.0;
    double blk = 0.0;
};

Weights adaptive_weights(double smoothed_loss, double effective_buffer_s,
                         double positive_headroom, double negative_headroom,
                         const Hyperparameters& hp);

enum class CandidateStatus { Scored, Infeasible, Rejected };

struct ScoredCandidate {
    fec::FecConfig config;
    CandidateStatus status = CandidateStatus::Infeasible;
    double score = 0.0;
    double loss_penalty = 0.0;
    double overhead_penalty = 0.0;
    double block_penalty = 0.0;
    Weights weights;
};

// Full scoring pipeline for one candidate against one telemetry state.
ScoredCandidate score_candidate(const fec::FecConfig& cfg, const TelemetryState& state,
                                const Hyperparameters& hp);

struct Selection {
    fec::FecConfig config;
    double score = 0.0;
    bool clean_link = false;   // smoothed loss below epsilon_pl; no FEC shipped
    bool fallback = false;     // no candidate was feasible; coverage fallback used
    std::size_t feasible_count = 0;
};

// The controller decision: clean-link short-circuit, feasibility pruning,
// penalty scoring, argmin with first-wins tie-break in library order. When
// nothing is feasible, falls back to the max-coverage candidate that respects
// the block-time hard cap (or max coverage outright if none does).
Selection select_config_detailed(const TelemetryState& state, const fec::CandidateLibrary& lib,
                                 const Hyperparameters& hp);
fec::FecConfig select_config(const TelemetryState& state, const fec::CandidateLibrary& lib,
                             const Hyperparameters& hp);

// Independent re-derivation of the same decision rule, written straight from
// the objective with no shared helpers. Exists so tests can prove the
// production path equivalent to an oracle; never called by the simulator.
fec::FecConfig brute_force_select(const TelemetryState& state, const fec::CandidateLibrary& lib,
                                  const Hyperparameters& hp);

// Reactive baseline: fixed n and S, k chosen as the smallest count satisfying
// k/n >= alpha * smoothed_loss. No overhead or block-time reasoning.
fec::FecConfig rfec_select(const TelemetryState& state, std::int64_t source_symbols,
                           std::int64_t symbol_size_bytes, const fec::CodecFamily& codec,
                           const Hyperparameters& hp);

}  // namespace tarot::ctrl
