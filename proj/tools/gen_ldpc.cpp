// Writes the shipped LDPC codes: one rate-3/4 code per (modulation, slot
// type), sized so a codeword fills one slot's data REs.
//   gen_ldpc <out_dir> [seed]
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "ntnpred/io.hpp"
#include "ntnpred/ldpc.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <out_dir> [seed]\n", argv[0]);
        return 2;
    }
    const std::filesystem::path dir = argv[1];
    const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 20240611ULL;
    constexpr std::size_t kSubcarriers = 48;
    constexpr std::size_t kInfoDegree = 3;
    for (std::size_t bits : {2u, 4u, 6u}) {
        for (std::size_t data_symbols : {12u, 14u}) {
            const std::size_t n = kSubcarriers * data_symbols * bits;
            const std::size_t k = 3 * n / 4;
            const auto code = ntnpred::peg_staircase_code(n, k, kInfoDegree, seed + n);
            const auto path = dir / ntnpred::ldpc_code_filename(n, k);
            ntnpred::write_file_atomic(path, code.to_alist());
            std::printf("%s  n=%zu k=%zu\n", path.c_str(), n, k);
        }
    }
    return 0;
}
