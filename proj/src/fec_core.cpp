#include "tarot/fec_core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

namespace tarot::fec {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

}  // namespace

const char* to_string(CodecKind kind) {
    switch (kind) {
        case CodecKind::ReedSolomon: return "rs";
        case CodecKind::RaptorQ: return "rq";
        case CodecKind::Xor: return "xor";
    }
    return "?";
}

CodecKind codec_kind_from_string(std::string_view name) {
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "rs" || s == "reed-solomon" || s == "reedsolomon") return CodecKind::ReedSolomon;
    if (s == "rq" || s == "raptorq" || s == "raptor-q") return CodecKind::RaptorQ;
    if (s == "xor") return CodecKind::Xor;
    fail("unknown codec '" + std::string(name) + "' (expected rs, rq or xor)");
}

CodecFamily CodecFamily::reed_solomon() { return {CodecKind::ReedSolomon, 1.0, 35.0}; }
CodecFamily CodecFamily::raptorq() { return {CodecKind::RaptorQ, 0.99, 22.0}; }
CodecFamily CodecFamily::xor_parity() { return {CodecKind::Xor, 0.8, 0.0}; }

void CodecFamily::validate() const {
    if (!(repair_efficiency > 0.0) || repair_efficiency > 1.0)
        fail("codec repair_efficiency must lie in (0, 1]");
    if (encode_cost_ns_per_byte < 0.0) fail("codec encode cost must be >= 0");
    if (kind != CodecKind::Xor && !(encode_cost_ns_per_byte > 0.0))
        fail("block codecs must declare a positive encode cost");
}

FecConfig FecConfig::no_fec() { return FecConfig{1, 0, 1, CodecFamily::reed_solomon()}; }

void FecConfig::validate() const {
    if (source_symbols < 1) fail("source_symbols must be >= 1");
    if (repair_symbols < 0) fail("repair_symbols must be >= 0");
    if (symbol_size_bytes < 1) fail("symbol_size_bytes must be >= 1");
    codec.validate();
}

bool same_shape(const FecConfig& a, const FecConfig& b) {
    return a.source_symbols == b.source_symbols && a.repair_symbols == b.repair_symbols &&
           a.symbol_size_bytes == b.symbol_size_bytes;
}

std::int64_t symbolize(std::int64_t payload_bytes, std::int64_t symbol_size_bytes) {
    if (payload_bytes <= 0) fail("symbolize: payload must be positive");
    if (symbol_size_bytes <= 0) fail("symbolize: symbol size must be positive");
    return (payload_bytes + symbol_size_bytes - 1) / symbol_size_bytes;
}

std::int64_t repair_count(std::int64_t source_symbols, double redundancy) {
    if (source_symbols < 1) fail("repair_count: source_symbols must be >= 1");
    if (!(redundancy >= 0.0)) fail("repair_count: redundancy must be >= 0");
    const double exact = redundancy * static_cast<double>(source_symbols);
    return static_cast<std::int64_t>(std::ceil(exact - 1e-9));
}

Ratio overhead(const FecConfig& cfg) { return {cfg.repair_symbols, cfg.source_symbols}; }

Ratio coverage(const FecConfig& cfg) {
    return {cfg.repair_symbols, cfg.source_symbols + cfg.repair_symbols};
}

bool decode_feasible(std::int64_t source_received, std::int64_t repair_received,
                     std::int64_t source_symbols) {
    if (source_symbols < 1) fail("decode_feasible: source_symbols must be >= 1");
    if (source_received < 0 || source_received > source_symbols)
        fail("decode_feasible: received source symbols out of range");
    if (repair_received < 0) fail("decode_feasible: received repair symbols out of range");
    return source_received + repair_received >= source_symbols;
}

double encoding_latency_s(const FecConfig& cfg) {
    if (cfg.unprotected()) return 0.0;
    if (cfg.codec.kind == CodecKind::Xor) return kXorEncodeLatencyS;
    const double block_bytes =
        static_cast<double>(cfg.source_symbols) * static_cast<double>(cfg.symbol_size_bytes);
    return block_bytes * cfg.codec.encode_cost_ns_per_byte * 1e-9;
}

GridSpec GridSpec::default_grid(CodecFamily codec) {
    GridSpec g;
    g.source_symbol_counts = {4, 8, 10, 16, 20, 32, 40, 50, 64, 100};
    g.redundancy_ratios = {0.01, 0.02, 0.05, 0.075, 0.1, 0.15, 0.2, 0.25, 0.3, 0.5};
    g.symbol_sizes_bytes = {64, 128, 256, 512};
    g.codec = codec;
    return g;
}

void GridSpec::validate() const {
    if (source_symbol_counts.empty()) fail("grid: n list is empty");
    if (redundancy_ratios.empty()) fail("grid: r list is empty");
    if (symbol_sizes_bytes.empty()) fail("grid: S list is empty");
    for (auto n : source_symbol_counts)
        if (n < 1) fail("grid: n values must be >= 1");
    for (auto r : redundancy_ratios)
        if (!(r >= 0.0)) fail("grid: r values must be >= 0");
    for (auto s : symbol_sizes_bytes)
        if (s < 1) fail("grid: S values must be >= 1");
    codec.validate();
}

CandidateLibrary build_candidate_library(const GridSpec& grid) {
    grid.validate();
    CandidateLibrary lib;
    lib.candidates.reserve(grid.source_symbol_counts.size() * grid.redundancy_ratios.size() *
                           grid.symbol_sizes_bytes.size());
    for (auto n : grid.source_symbol_counts)
        for (auto r : grid.redundancy_ratios)
            for (auto s : grid.symbol_sizes_bytes)
                lib.candidates.push_back(FecConfig{n, repair_count(n, r), s, grid.codec});

    auto key = [](const FecConfig& c) {
        return std::tuple(c.source_symbols, c.repair_symbols, c.symbol_size_bytes);
    };
    std::sort(lib.candidates.begin(), lib.candidates.end(),
              [&](const FecConfig& a, const FecConfig& b) { return key(a) < key(b); });
    lib.candidates.erase(std::unique(lib.candidates.begin(), lib.candidates.end(),
                                     [&](const FecConfig& a, const FecConfig& b) {
                                         return key(a) == key(b);
                                     }),
                         lib.candidates.end());
    return lib;
}

GridSpec parse_grid_spec(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(std::string("grid: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) fail("grid: top-level value must be an object");
    for (const char* field : {"n", "r", "S"})
        if (!doc.contains(field) || !doc[field].is_array())
            fail(std::string("grid: missing array field '") + field + "'");

    GridSpec g;
    g.source_symbol_counts = doc["n"].get<std::vector<std::int64_t>>();
    g.redundancy_ratios = doc["r"].get<std::vector<double>>();
    g.symbol_sizes_bytes = doc["S"].get<std::vector<std::int64_t>>();
    g.codec = CodecFamily::reed_solomon();
    if (doc.contains("codec")) {
        switch (codec_kind_from_string(doc["codec"].get<std::string>())) {
            case CodecKind::ReedSolomon: g.codec = CodecFamily::reed_solomon(); break;
            case CodecKind::RaptorQ: g.codec = CodecFamily::raptorq(); break;
            case CodecKind::Xor: g.codec = CodecFamily::xor_parity(); break;
        }
    }
    g.validate();
    return g;
}

GridSpec load_grid_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("grid: cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_grid_spec(buf.str());
    } catch (const std::invalid_argument& e) {
        fail(path.string() + ": " + e.what());
    }
}

}  // namespace tarot::fec
