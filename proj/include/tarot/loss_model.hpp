#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "tarot/fec_core.hpp"

// Analytical throughput/loss models: how packet loss collapses TCP-like
// goodput, how much loss survives a given FEC coverage, and the payload
// goodput once repair overhead is paid.
namespace tarot::loss {

inline constexpr double kDefaultGamma = 0.5;

// Loss trajectory for a session: no loss, a constant rate, or a per-segment
// uniform draw from [lo, hi] keyed by (seed, segment index).
struct LossProfile {
    enum class Kind { None, Constant, Variable };

    Kind kind = Kind::None;
    double constant = 0.0;
    double lo = 0.0;
    double hi = 0.0;

    static LossProfile none();
    static LossProfile constant_rate(double rate);
    static LossProfile variable(double lo, double hi);

    // Accepts "none", "const:<L>" or "var:<lo>:<hi>"; rates are fractions.
    static LossProfile parse(std::string_view text);
    std::string to_string() const;
};

double sample_loss(const LossProfile& profile, std::uint64_t seed, std::uint64_t segment_index);

// Goodput of a loss-afflicted link: B / (1 + gamma * L * 100 * sqrt(L)).
// Superlinear in L, so a few percent of loss already costs a third of the
// link. L is a fraction in [0, 1]; gamma scales the collapse.
double goodput_under_loss(double link_bps, double loss, double gamma = kDefaultGamma);

// Loss remaining after FEC recovery at coverage cov = k/(n+k). Piecewise:
// under-coverage leaves a deliberately discontinuous residue at loss == cov
// (block decoding either succeeds or does not), above coverage repair absorbs
// 80% of its budget. Result is clipped to [0, loss].
double residual_loss(double loss, double coverage);

// Application-visible goodput once residual loss and repair overhead are both
// paid: B * (1 - residual) / ((n + k) / n). With k == 0 this is exactly
// B * (1 - loss).
double fec_payload_goodput(double link_bps, double loss, const fec::FecConfig& cfg);

// Optional composition mode: run the residual loss back through the goodput
// collapse instead of scaling linearly. Off by default everywhere.
double fec_payload_goodput_composed(double link_bps, double loss, const fec::FecConfig& cfg,
                                    double gamma);

}  // namespace tarot::loss
