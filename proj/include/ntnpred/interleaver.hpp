#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ntnpred {

/// Pseudo-random permutation determined only by (length, seed).
std::vector<std::size_t> interleaver_permutation(std::size_t length, std::uint64_t seed);

/// out[i] = in[perm[i]].
std::vector<std::uint8_t> interleave(std::span<const std::uint8_t> bits, std::uint64_t seed);
/// Exact inverse of interleave for the same seed.
std::vector<std::uint8_t> deinterleave(std::span<const std::uint8_t> bits, std::uint64_t seed);
std::vector<double> deinterleave(std::span<const double> llrs, std::uint64_t seed);

/// Deinterleave against a precomputed permutation; throws UsageError when the
/// lengths differ.
std::vector<double> deinterleave(std::span<const double> llrs, std::span<const std::size_t> perm);

}  // namespace ntnpred
