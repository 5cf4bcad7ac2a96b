#include <algorithm>
#include <limits>

#include "ntnpred/errors.hpp"
#include "ntnpred/ldpc.hpp"
#include "ntnpred/rng.hpp"

namespace ntnpred {

LdpcCode peg_staircase_code(std::size_t n, std::size_t k, std::size_t info_degree, std::uint64_t seed) {
    if (k == 0 || k >= n) throw ConfigError("PEG: need 0 < k < n");
    const std::size_t m = n - k;
    if (info_degree == 0 || info_degree > m) throw ConfigError("PEG: info column degree must be in [1, n-k]");

    std::vector<std::vector<std::uint32_t>> var_checks(n), check_vars(m);
    auto connect = [&](std::size_t v, std::size_t c) {
        var_checks[v].push_back(static_cast<std::uint32_t>(c));
        check_vars[c].push_back(static_cast<std::uint32_t>(v));
    };
    // Parity column k+j touches checks j and j+1.
    for (std::size_t j = 0; j < m; ++j) {
        connect(k + j, j);
        if (j + 1 < m) connect(k + j, j + 1);
    }

    Rng rng(seed);
    std::vector<int> check_level(m);
    std::vector<char> var_seen(n);
    std::vector<std::uint32_t> frontier, next;
    std::vector<std::uint32_t> candidates;

    auto pick_min_degree = [&](const std::vector<std::uint32_t>& cands) {
        std::size_t best = std::numeric_limits<std::size_t>::max();
        std::vector<std::uint32_t> ties;
        for (auto c : cands) {
            const auto d = check_vars[c].size();
            if (d < best) {
                best = d;
                ties.clear();
            }
            if (d == best) ties.push_back(c);
        }
        return ties[rng.below(ties.size())];
    };

    for (std::size_t v = 0; v < k; ++v) {
        for (std::size_t e = 0; e < info_degree; ++e) {
            candidates.clear();
            if (var_checks[v].empty()) {
                for (std::uint32_t c = 0; c < m; ++c) candidates.push_back(c);
            } else {
                // Breadth-first expansion from v over the current graph.
                std::fill(check_level.begin(), check_level.end(), -1);
                std::fill(var_seen.begin(), var_seen.end(), 0);
                var_seen[v] = 1;
                frontier.assign(var_checks[v].begin(), var_checks[v].end());
                std::size_t reached = 0;
                int farthest = -1;  // level that completed the cover, if any
                for (auto c : frontier) check_level[c] = 0, ++reached;
                for (int level = 1;; ++level) {
                    next.clear();
                    for (auto c : frontier)
                        for (auto u : check_vars[c]) {
                            if (var_seen[u]) continue;
                            var_seen[u] = 1;
                            for (auto c2 : var_checks[u])
                                if (check_level[c2] < 0) {
                                    check_level[c2] = level;
                                    next.push_back(c2);
                                }
                        }
                    if (next.empty()) break;
                    if (reached + next.size() == m) {
                        farthest = level;
                        break;
                    }
                    reached += next.size();
                    frontier.swap(next);
                }
                // Complement of the last incomplete level set.
                for (std::uint32_t c = 0; c < m; ++c)
                    if (check_level[c] < 0 || (farthest > 0 && check_level[c] == farthest)) candidates.push_back(c);
            }
            connect(v, pick_min_degree(candidates));
        }
    }
    for (auto& row : check_vars) std::sort(row.begin(), row.end());
    return LdpcCode(n, std::move(check_vars));
}

}  // namespace ntnpred
