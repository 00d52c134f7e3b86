#include "tarot/loss_model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tarot/rng.hpp"

namespace tarot::loss {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

void check_rate(double value, const char* what) {
    if (!(value >= 0.0 && value <= 1.0))
        fail(std::string(what) + " must be a fraction in [0, 1]");
}

}  // namespace

LossProfile LossProfile::none() { return {}; }

LossProfile LossProfile::constant_rate(double rate) {
    check_rate(rate, "loss rate");
    LossProfile p;
    p.kind = Kind::Constant;
    p.constant = rate;
    return p;
}

LossProfile LossProfile::variable(double lo, double hi) {
    check_rate(lo, "loss lower bound");
    check_rate(hi, "loss upper bound");
    if (lo > hi) fail("loss lower bound exceeds upper bound");
    LossProfile p;
    p.kind = Kind::Variable;
    p.lo = lo;
    p.hi = hi;
    return p;
}

LossProfile LossProfile::parse(std::string_view text) {
    const std::string s(text);
    if (s == "none") return none();
    auto number_after = [&](std::size_t pos, std::size_t end) {
        const std::string part = s.substr(pos, end - pos);
        try {
            std::size_t used = 0;
            const double v = std::stod(part, &used);
            if (used != part.size()) throw std::invalid_argument(part);
            return v;
        } catch (const std::exception&) {
            fail("loss profile '" + s + "': bad number '" + part + "'");
        }
    };
    if (s.rfind("const:", 0) == 0) return constant_rate(number_after(6, s.size()));
    if (s.rfind("var:", 0) == 0) {
        const auto sep = s.find(':', 4);
        if (sep == std::string::npos)
            fail("loss profile '" + s + "': expected var:<lo>:<hi>");
        return variable(number_after(4, sep), number_after(sep + 1, s.size()));
    }
    fail("unknown loss profile '" + s + "' (expected none, const:<L> or var:<lo>:<hi>)");
}

std::string LossProfile::to_string() const {
    std::ostringstream out;
    switch (kind) {
        case Kind::None: out << "none"; break;
        case Kind::Constant: out << "const:" << constant; break;
        case Kind::Variable: out << "var:" << lo << ":" << hi; break;
    }
    return out.str();
}

double sample_loss(const LossProfile& profile, std::uint64_t seed, std::uint64_t segment_index) {
    switch (profile.kind) {
        case LossProfile::Kind::None: return 0.0;
        case LossProfile::Kind::Constant: return profile.constant;
        case LossProfile::Kind::Variable:
            return profile.lo + rng::uniform01(seed, segment_index) * (profile.hi - profile.lo);
    }
    return 0.0;
}

double goodput_under_loss(double link_bps, double loss, double gamma) {
    if (!(link_bps >= 0.0)) fail("link rate must be >= 0");
    check_rate(loss, "loss");
    if (!(gamma > 0.0)) fail("gamma must be > 0");
    return link_bps / (1.0 + gamma * loss * 100.0 * std::sqrt(loss));
}

double residual_loss(double loss, double coverage) {
    double residue;
    if (loss <= coverage && coverage > 0.0) {
        // Within coverage most blocks decode; the residue shrinks with the
        // unused share of the repair budget.
        const double slack = (coverage - loss) / coverage;
        residue = loss * (0.4 + 0.6 * (1.0 - slack));
    } else {
        residue = loss - 0.8 * coverage;
    }
    if (residue < 0.0) residue = 0.0;
    if (residue > loss) residue = loss;
    return residue;
}

double fec_payload_goodput(double link_bps, double loss, const fec::FecConfig& cfg) {
    if (!(link_bps >= 0.0)) fail("link rate must be >= 0");
    check_rate(loss, "loss");
    const double residue = residual_loss(loss, fec::coverage(cfg).value());
    const double expansion = static_cast<double>(cfg.source_symbols + cfg.repair_symbols) /
                             static_cast<double>(cfg.source_symbols);
    return link_bps * (1.0 - residue) / expansion;
}

double fec_payload_goodput_composed(double link_bps, double loss, const fec::FecConfig& cfg,
                                    double gamma) {
    if (!(link_bps >= 0.0)) fail("link rate must be >= 0");
    check_rate(loss, "loss");
    const double residue = residual_loss(loss, fec::coverage(cfg).value());
    const double expansion = static_cast<double>(cfg.source_symbols + cfg.repair_symbols) /
                             static_cast<double>(cfg.source_symbols);
    return goodput_under_loss(link_bps, residue, gamma) / expansion;
}

}  // namespace tarot::loss
