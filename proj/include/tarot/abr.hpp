#pragma once

#include <cstddef>
#include <deque>
#include <vector>

// Bitrate adaptation: a sliding-window harmonic throughput estimator plus the
// two classic rules (rate-based pick, and the buffer/utility hybrid used by
// production players).
namespace tarot::abr {

struct Representation {
    double bitrate_bps = 0.0;
    double quality_index = 0.0;  // 0..100 viewer-facing quality score
};

struct BitrateLadder {
    std::vector<Representation> representations;  // ascending bitrate

    std::size_t size() const { return representations.size(); }
    const Representation& operator[](std::size_t i) const { return representations[i]; }
    std::size_t top() const { return representations.size() - 1; }

    void validate() const;

    // Logarithmic quality curve mapped to [0, 100] across the ladder.
    static std::vector<double> default_quality(const std::vector<double>& bitrates_bps);
};

// Harmonic mean of the last `window` download rates; harmonic so that one
// slow segment drags the estimate down harder than one fast segment lifts it.
class ThroughputHistory {
public:
    explicit ThroughputHistory(std::size_t window = 3, double startup_estimate_bps = 0.0);

    void push(double bytes, double seconds);
    double estimate_bps() const;  // startup estimate until the first sample
    bool empty() const { return samples_.empty(); }

private:
    std::size_t window_;
    double startup_estimate_bps_;
    std::deque<double> samples_;  // bits per second per download
};

// Highest representation whose bitrate fits within safety * estimate;
// lowest representation when nothing fits or no estimate exists yet.
std::size_t throughput_abr_decide(double estimate_bps, const BitrateLadder& ladder,
                                  double safety = 0.9);

struct DynamicAbrParams {
    double safety = 0.9;
    double bola_switch_buffer_s = 10.0;  // below this, fall back to the rate rule
    double buffer_capacity_s = 60.0;
};

// Buffer-aware hybrid: rate rule while the buffer is short, utility argmax
// (log-utility vs buffer occupancy) once it is comfortable.
std::size_t dynamic_abr_decide(double buffer_level_s, double estimate_bps,
                               const BitrateLadder& ladder, const DynamicAbrParams& params);

}  // namespace tarot::abr
