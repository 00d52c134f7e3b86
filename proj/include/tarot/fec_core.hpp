#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Block-FEC arithmetic: symbol counts, overhead/coverage ratios, decode
// feasibility and encoding cost for the codec families the controller can
// choose between.
namespace tarot::fec {

enum class CodecKind { ReedSolomon, RaptorQ, Xor };

const char* to_string(CodecKind kind);
CodecKind codec_kind_from_string(std::string_view name);

// A codec family is described by its repair efficiency (the expected fraction
// of a repair symbol that contributes to recovery) and its per-byte encoding
// cost on commodity hardware.
struct CodecFamily {
    CodecKind kind = CodecKind::ReedSolomon;
    double repair_efficiency = 1.0;       // in (0, 1]
    double encode_cost_ns_per_byte = 35.0;

    static CodecFamily reed_solomon();  // ideal MDS, 35 ns/byte
    static CodecFamily raptorq();       // near-optimal fountain, 22 ns/byte
    static CodecFamily xor_parity();    // single-parity, negligible cost

    void validate() const;
};

// Exact rational, so overhead k/n and coverage k/(n+k) carry no rounding
// until a caller asks for the double value.
struct Ratio {
    std::int64_t num = 0;
    std::int64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// One protection choice: n source symbols of `symbol_size_bytes` each plus
// k repair symbols. repair_symbols == 0 means the segment ships unprotected.
struct FecConfig {
    std::int64_t source_symbols = 1;   // n >= 1
    std::int64_t repair_symbols = 0;   // k >= 0
    std::int64_t symbol_size_bytes = 1;
    CodecFamily codec;

    bool unprotected() const { return repair_symbols == 0; }
    static FecConfig no_fec();

    void validate() const;
};

// Equal symbol geometry (n, k, S); codec identity is a separate concern.
bool same_shape(const FecConfig& a, const FecConfig& b);

// Number of symbols needed to hold `payload_bytes` (ceiling division).
std::int64_t symbolize(std::int64_t payload_bytes, std::int64_t symbol_size_bytes);

// k = ceil(redundancy * n), with an epsilon guard so binary noise in the
// product cannot bump the count (0.075 * 40 must give 3, not 4).
std::int64_t repair_count(std::int64_t source_symbols, double redundancy);

Ratio overhead(const FecConfig& cfg);  // k : n
Ratio coverage(const FecConfig& cfg);  // k : n + k

// A block decodes iff received source + repair symbols reach n.
bool decode_feasible(std::int64_t source_received, std::int64_t repair_received,
                     std::int64_t source_symbols);

// Sender-side encoding latency in seconds. Unprotected segments cost nothing;
// XOR parity is a fixed near-zero constant; RS/RQ scale with block payload.
inline constexpr double kXorEncodeLatencyS = 1e-6;
double encoding_latency_s(const FecConfig& cfg);

// Cartesian candidate grid the controller searches over.
struct GridSpec {
    std::vector<std::int64_t> source_symbol_counts;
    std::vector<double> redundancy_ratios;
    std::vector<std::int64_t> symbol_sizes_bytes;
    CodecFamily codec;

    static GridSpec default_grid(CodecFamily codec);

    void validate() const;
};

struct CandidateLibrary {
    std::vector<FecConfig> candidates;  // deduplicated, sorted by (n, k, S)

    std::size_t size() const { return candidates.size(); }
};

CandidateLibrary build_candidate_library(const GridSpec& grid);

// Grid document: {"n": [...], "r": [...], "S": [...], "codec": "..."}.
GridSpec parse_grid_spec(const std::string& json_text);
GridSpec load_grid_spec(const std::filesystem::path& path);

}  // namespace tarot::fec
