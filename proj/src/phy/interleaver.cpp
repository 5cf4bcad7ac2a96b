#include "ntnpred/interleaver.hpp"

#include <numeric>
#include <string>

#include "ntnpred/errors.hpp"
#include "ntnpred/rng.hpp"

namespace ntnpred {

std::vector<std::size_t> interleaver_permutation(std::size_t length, std::uint64_t seed) {
    std::vector<std::size_t> p(length);
    std::iota(p.begin(), p.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x1eaf, length));
    // Fisher-Yates
    for (std::size_t i = length; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
    return p;
}

namespace {

template <class T>
std::vector<T> apply_inverse(std::span<const T> in, std::span<const std::size_t> perm) {
    if (in.size() != perm.size())
        throw UsageError("deinterleave: length " + std::to_string(in.size()) + " does not match permutation length " +
                         std::to_string(perm.size()));
    std::vector<T> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[perm[i]] = in[i];
    return out;
}

}  // namespace

std::vector<std::uint8_t> interleave(std::span<const std::uint8_t> bits, std::uint64_t seed) {
    const auto p = interleaver_permutation(bits.size(), seed);
    std::vector<std::uint8_t> out(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) out[i] = bits[p[i]];
    return out;
}

std::vector<std::uint8_t> deinterleave(std::span<const std::uint8_t> bits, std::uint64_t seed) {
    const auto p = interleaver_permutation(bits.size(), seed);
    return apply_inverse<std::uint8_t>(bits, p);
}

std::vector<double> deinterleave(std::span<const double> llrs, std::uint64_t seed) {
    const auto p = interleaver_permutation(llrs.size(), seed);
    return apply_inverse<double>(llrs, p);
}

std::vector<double> deinterleave(std::span<const double> llrs, std::span<const std::size_t> perm) {
    return apply_inverse<double>(llrs, perm);
}

}  // namespace ntnpred
