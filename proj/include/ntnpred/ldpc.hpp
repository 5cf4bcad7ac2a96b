#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ntnpred {

struct LdpcDecodeResult {
    std::vector<std::uint8_t> info_bits;
    std::vector<std::uint8_t> codeword;
    /// All parity checks satisfied and no posterior LLR exactly zero.
    bool success = false;
    int iterations = 0;
};

/// Binary LDPC code from a sparse parity-check matrix H (m x n).
///
/// At construction H is brought to reduced row-echelon form with pivots taken
/// from the rightmost columns first. Pivot columns carry parity, the others
/// information, so codes with a dual-diagonal parity part on the right are
/// systematic in natural order. Rank-deficient H is rejected.
class LdpcCode {
public:
    /// check_rows[c] lists the variable indices of check c (0-based).
    LdpcCode(std::size_t n, std::vector<std::vector<std::uint32_t>> check_rows);

    static LdpcCode from_alist(const std::string& text);
    static LdpcCode load(const std::filesystem::path& path);
    std::string to_alist() const;

    std::size_t n() const { return n_; }
    std::size_t m() const { return check_rows_.size(); }
    std::size_t k() const { return info_pos_.size(); }
    const std::vector<std::uint32_t>& info_positions() const { return info_pos_; }
    const std::vector<std::vector<std::uint32_t>>& check_rows() const { return check_rows_; }

    std::vector<std::uint8_t> encode(std::span<const std::uint8_t> info) const;
    /// H c == 0 over GF(2).
    bool is_codeword(std::span<const std::uint8_t> codeword) const;
    /// Normalized min-sum with flooding schedule. Positive LLR means bit 0.
    LdpcDecodeResult decode(std::span<const double> llr, int max_iters = 25, double scale = 0.75) const;

private:
    std::size_t n_;
    std::vector<std::vector<std::uint32_t>> check_rows_;
    std::vector<std::uint32_t> info_pos_;
    std::vector<std::uint32_t> parity_pos_;
    // parity_pos_[r] = XOR of info bits selected by row r of encoder_ (packed).
    std::vector<std::uint64_t> encoder_;
    std::size_t encoder_words_ = 0;
    // Edge arrays, grouped by check.
    std::vector<std::uint32_t> edge_var_;
    std::vector<std::uint32_t> check_start_;
    std::vector<std::uint32_t> var_edges_;
    std::vector<std::uint32_t> var_start_;
};

/// Progressive-edge-growth construction with a dual-diagonal (staircase)
/// parity part in the last n-k columns and column weight info_degree on the
/// first k columns. Each new edge goes to the lowest-degree check among those
/// farthest from the variable in the current graph, which keeps local girth
/// large. Ties are broken with a seeded RNG.
LdpcCode peg_staircase_code(std::size_t n, std::size_t k, std::size_t info_degree, std::uint64_t seed);

/// Code dimensions for one slot: n = data REs * bits per symbol, k = 3n/4.
std::string ldpc_code_filename(std::size_t n, std::size_t k);
std::filesystem::path default_ldpc_dir();

/// Loads (and caches, thread-safely) the shipped code of the given size.
/// Throws ConfigError when no such file exists.
std::shared_ptr<const LdpcCode> ldpc_code_for(std::size_t n, std::size_t k,
                                              const std::filesystem::path& dir = default_ldpc_dir());

}  // namespace ntnpred
