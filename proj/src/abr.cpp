#include "tarot/abr.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tarot::abr {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

}  // namespace

void BitrateLadder::validate() const {
    if (representations.empty()) fail("ladder: no representations");
    double prev = 0.0;
    for (std::size_t i = 0; i < representations.size(); ++i) {
        const auto& r = representations[i];
        if (!(r.bitrate_bps > prev))
            fail("ladder: bitrates must be positive and strictly increasing (index " +
                 std::to_string(i) + ")");
        if (!(r.quality_index >= 0.0))
            fail("ladder: quality must be >= 0 (index " + std::to_string(i) + ")");
        prev = r.bitrate_bps;
    }
}

std::vector<double> BitrateLadder::default_quality(const std::vector<double>& bitrates_bps) {
    std::vector<double> q(bitrates_bps.size(), 0.0);
    if (bitrates_bps.size() < 2) return q;
    const double lo = bitrates_bps.front();
    const double span = std::log(bitrates_bps.back() / lo);
    for (std::size_t i = 0; i < bitrates_bps.size(); ++i)
        q[i] = 100.0 * std::log(bitrates_bps[i] / lo) / span;
    return q;
}

ThroughputHistory::ThroughputHistory(std::size_t window, double startup_estimate_bps)
    : window_(window), startup_estimate_bps_(startup_estimate_bps) {
    if (window_ == 0) fail("throughput history: window must be >= 1");
}

void ThroughputHistory::push(double bytes, double seconds) {
    if (!(bytes > 0.0) || !(seconds > 0.0))
        fail("throughput history: samples need positive bytes and duration");
    samples_.push_back(8.0 * bytes / seconds);
    if (samples_.size() > window_) samples_.pop_front();
}

double ThroughputHistory::estimate_bps() const {
    if (samples_.empty()) return startup_estimate_bps_;
    double inverse_sum = 0.0;
    for (double rate : samples_) inverse_sum += 1.0 / rate;
    return static_cast<double>(samples_.size()) / inverse_sum;
}

std::size_t throughput_abr_decide(double estimate_bps, const BitrateLadder& ladder,
                                  double safety) {
    std::size_t pick = 0;
    for (std::size_t i = 0; i < ladder.size(); ++i)
        if (ladder[i].bitrate_bps <= safety * estimate_bps) pick = i;
    return pick;
}

std::size_t dynamic_abr_decide(double buffer_level_s, double estimate_bps,
                               const BitrateLadder& ladder, const DynamicAbrParams& params) {
    if (buffer_level_s < params.bola_switch_buffer_s || ladder.size() < 2)
        return throughput_abr_decide(estimate_bps, ladder, params.safety);

    // Utility curve u_i = ln(b_i / b_0); control parameters derived so the
    // lowest representation scores zero exactly at the switch buffer and the
    // highest wins on a full buffer.
    const double u_top = std::log(ladder[ladder.top()].bitrate_bps / ladder[0].bitrate_bps);
    const double capacity_ratio = params.buffer_capacity_s / params.bola_switch_buffer_s;
    if (!(u_top > 1.0) || !(capacity_ratio > 1.0))
        return throughput_abr_decide(estimate_bps, ladder, params.safety);
    const double gain = (u_top - 1.0) / (capacity_ratio - 1.0);
    const double v = params.bola_switch_buffer_s / gain;

    std::size_t pick = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        const double utility = std::log(ladder[i].bitrate_bps / ladder[0].bitrate_bps);
        const double score =
            (v * (utility + gain) - buffer_level_s) / ladder[i].bitrate_bps;
        if (i == 0 || score > best) {
            best = score;
            pick = i;
        }
    }
    return pick;
}

}  // namespace tarot::abr
