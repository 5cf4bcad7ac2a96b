#include "ntnpred/ldpc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include "ntnpred/errors.hpp"
#include "ntnpred/io.hpp"

namespace ntnpred {

namespace {

using Word = std::uint64_t;

struct BitRows {
    std::size_t words;
    std::vector<Word> bits;

    BitRows(std::size_t rows, std::size_t cols) : words((cols + 63) / 64), bits(rows * words, 0) {}
    Word* row(std::size_t r) { return bits.data() + r * words; }
    bool get(std::size_t r, std::size_t c) const { return (bits[r * words + c / 64] >> (c % 64)) & 1u; }
    void set(std::size_t r, std::size_t c) { bits[r * words + c / 64] ^= Word{1} << (c % 64); }
};

}  // namespace

LdpcCode::LdpcCode(std::size_t n, std::vector<std::vector<std::uint32_t>> check_rows)
    : n_(n), check_rows_(std::move(check_rows)) {
    const std::size_t m = check_rows_.size();
    if (n_ == 0 || m == 0 || m >= n_) throw ConfigError("LDPC: need 0 < m < n");
    for (auto& row : check_rows_) {
        std::sort(row.begin(), row.end());
        if (std::adjacent_find(row.begin(), row.end()) != row.end()) throw ConfigError("LDPC: duplicate edge");
        for (auto v : row)
            if (v >= n_) throw ConfigError("LDPC: variable index out of range");
    }

    // Reduced row echelon form, scanning columns right to left.
    BitRows h(m, n_);
    for (std::size_t r = 0; r < m; ++r)
        for (auto v : check_rows_[r]) h.set(r, v);
    std::vector<std::uint32_t> pivot_col;
    std::vector<bool> is_pivot(n_, false);
    std::size_t rank = 0;
    for (std::size_t c = n_; c-- > 0 && rank < m;) {
        std::size_t p = rank;
        while (p < m && !h.get(p, c)) ++p;
        if (p == m) continue;
        if (p != rank) std::swap_ranges(h.row(p), h.row(p) + h.words, h.row(rank));
        for (std::size_t r = 0; r < m; ++r) {
            if (r == rank || !h.get(r, c)) continue;
            Word* dst = h.row(r);
            const Word* src = h.row(rank);
            for (std::size_t w = 0; w < h.words; ++w) dst[w] ^= src[w];
        }
        pivot_col.push_back(static_cast<std::uint32_t>(c));
        is_pivot[c] = true;
        ++rank;
    }
    if (rank < m)
        throw ConfigError("LDPC: parity-check matrix has rank " + std::to_string(rank) + " < " + std::to_string(m));

    for (std::uint32_t c = 0; c < n_; ++c)
        if (!is_pivot[c]) info_pos_.push_back(c);
    parity_pos_ = pivot_col;
    const std::size_t k = info_pos_.size();
    encoder_words_ = (k + 63) / 64;
    encoder_.assign(m * encoder_words_, 0);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t i = 0; i < k; ++i)
            if (h.get(r, info_pos_[i])) encoder_[r * encoder_words_ + i / 64] |= Word{1} << (i % 64);

    check_start_.assign(m + 1, 0);
    for (std::size_t c = 0; c < m; ++c) {
        check_start_[c + 1] = check_start_[c] + static_cast<std::uint32_t>(check_rows_[c].size());
        edge_var_.insert(edge_var_.end(), check_rows_[c].begin(), check_rows_[c].end());
    }
    std::vector<std::uint32_t> deg(n_, 0);
    for (auto v : edge_var_) ++deg[v];
    var_start_.assign(n_ + 1, 0);
    for (std::size_t v = 0; v < n_; ++v) var_start_[v + 1] = var_start_[v] + deg[v];
    var_edges_.resize(edge_var_.size());
    std::vector<std::uint32_t> fill(var_start_.begin(), var_start_.end() - 1);
    for (std::uint32_t e = 0; e < edge_var_.size(); ++e) var_edges_[fill[edge_var_[e]]++] = e;
}

LdpcCode LdpcCode::from_alist(const std::string& text) {
    std::istringstream in(text);
    std::size_t n = 0, m = 0, max_col = 0, max_row = 0;  // maxima are informational
    if (!(in >> n >> m >> max_col >> max_row)) throw ConfigError("alist: malformed header");
    std::vector<std::size_t> col_deg(n), row_deg(m);
    for (auto& d : col_deg)
        if (!(in >> d)) throw ConfigError("alist: truncated column degrees");
    for (auto& d : row_deg)
        if (!(in >> d)) throw ConfigError("alist: truncated row degrees");
    // Zero entries are alist padding and carry no edge, so they are skipped.
    auto read_list = [&](std::size_t count, std::size_t limit, const char* what) {
        std::vector<std::uint32_t> out;
        while (out.size() < count) {
            long v = 0;
            if (!(in >> v)) throw ConfigError(std::string("alist: truncated ") + what);
            if (v == 0) continue;
            if (v < 0 || static_cast<std::size_t>(v) > limit) throw ConfigError(std::string("alist: bad index in ") + what);
            out.push_back(static_cast<std::uint32_t>(v - 1));
        }
        return out;
    };
    std::vector<std::vector<std::uint32_t>> cols(n);
    for (std::size_t j = 0; j < n; ++j) cols[j] = read_list(col_deg[j], m, "column lists");
    std::vector<std::vector<std::uint32_t>> rows(m);
    for (std::size_t i = 0; i < m; ++i) rows[i] = read_list(row_deg[i], n, "row lists");
    // Both halves describe the same matrix.
    std::vector<std::vector<std::uint32_t>> from_cols(m);
    for (std::size_t j = 0; j < n; ++j)
        for (auto r : cols[j]) from_cols[r].push_back(static_cast<std::uint32_t>(j));
    for (std::size_t i = 0; i < m; ++i) {
        auto a = rows[i], b = from_cols[i];
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) throw ConfigError("alist: row and column lists disagree at check " + std::to_string(i + 1));
    }
    return LdpcCode(n, std::move(rows));
}

LdpcCode LdpcCode::load(const std::filesystem::path& path) {
    try {
        return from_alist(read_file(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string LdpcCode::to_alist() const {
    const std::size_t m = check_rows_.size();
    std::vector<std::vector<std::uint32_t>> cols(n_);
    for (std::size_t i = 0; i < m; ++i)
        for (auto v : check_rows_[i]) cols[v].push_back(static_cast<std::uint32_t>(i));
    std::size_t max_col = 0, max_row = 0;
    for (const auto& c : cols) max_col = std::max(max_col, c.size());
    for (const auto& r : check_rows_) max_row = std::max(max_row, r.size());

    std::ostringstream out;
    out << n_ << ' ' << m << '\n' << max_col << ' ' << max_row << '\n';
    auto degrees = [&](const auto& lists) {
        for (std::size_t i = 0; i < lists.size(); ++i) out << (i ? " " : "") << lists[i].size();
        out << '\n';
    };
    degrees(cols);
    degrees(check_rows_);
    auto lists = [&](const auto& ls, std::size_t width) {
        for (const auto& l : ls) {
            for (std::size_t i = 0; i < width; ++i) out << (i ? " " : "") << (i < l.size() ? l[i] + 1 : 0);
            out << '\n';
        }
    };
    lists(cols, max_col);
    lists(check_rows_, max_row);
    return out.str();
}

std::vector<std::uint8_t> LdpcCode::encode(std::span<const std::uint8_t> info) const {
    if (info.size() != k())
        throw UsageError("ldpc encode: expected " + std::to_string(k()) + " info bits, got " + std::to_string(info.size()));
    std::vector<Word> packed(encoder_words_, 0);
    for (std::size_t i = 0; i < info.size(); ++i)
        if (info[i] & 1u) packed[i / 64] |= Word{1} << (i % 64);
    std::vector<std::uint8_t> cw(n_, 0);
    for (std::size_t i = 0; i < info_pos_.size(); ++i) cw[info_pos_[i]] = info[i] & 1u;
    for (std::size_t r = 0; r < parity_pos_.size(); ++r) {
        const Word* row = encoder_.data() + r * encoder_words_;
        int parity = 0;
        for (std::size_t w = 0; w < encoder_words_; ++w) parity ^= std::popcount(row[w] & packed[w]) & 1;
        cw[parity_pos_[r]] = static_cast<std::uint8_t>(parity);
    }
    return cw;
}

bool LdpcCode::is_codeword(std::span<const std::uint8_t> codeword) const {
    if (codeword.size() != n_) return false;
    for (const auto& row : check_rows_) {
        unsigned s = 0;
        for (auto v : row) s ^= codeword[v] & 1u;
        if (s) return false;
    }
    return true;
}

LdpcDecodeResult LdpcCode::decode(std::span<const double> llr, int max_iters, double scale) const {
    if (llr.size() != n_)
        throw UsageError("ldpc decode: expected " + std::to_string(n_) + " LLRs, got " + std::to_string(llr.size()));
    const std::size_t m = check_rows_.size();
    const std::size_t edges = edge_var_.size();
    std::vector<double> v2c(edges), c2v(edges, 0.0), total(llr.begin(), llr.end());
    for (std::size_t e = 0; e < edges; ++e) v2c[e] = llr[edge_var_[e]];

    LdpcDecodeResult res;
    res.codeword.assign(n_, 0);
    auto hard_and_check = [&]() {
        bool zero = false;
        for (std::size_t v = 0; v < n_; ++v) {
            res.codeword[v] = total[v] < 0.0 ? 1 : 0;
            zero |= total[v] == 0.0;
        }
        return !zero && is_codeword(res.codeword);
    };

    res.success = hard_and_check();
    for (int it = 0; it < max_iters && !res.success; ++it) {
        for (std::size_t c = 0; c < m; ++c) {
            double min1 = std::numeric_limits<double>::infinity(), min2 = min1;
            std::size_t arg = 0;
            int sign = 1;
            for (std::uint32_t e = check_start_[c]; e < check_start_[c + 1]; ++e) {
                const double a = std::abs(v2c[e]);
                if (v2c[e] < 0.0) sign = -sign;
                if (a < min1) {
                    min2 = min1;
                    min1 = a;
                    arg = e;
                } else if (a < min2) {
                    min2 = a;
                }
            }
            for (std::uint32_t e = check_start_[c]; e < check_start_[c + 1]; ++e) {
                const double mag = scale * (e == arg ? min2 : min1);
                const int s = v2c[e] < 0.0 ? -sign : sign;
                c2v[e] = s * mag;
            }
        }
        for (std::size_t v = 0; v < n_; ++v) {
            double t = llr[v];
            for (std::uint32_t i = var_start_[v]; i < var_start_[v + 1]; ++i) t += c2v[var_edges_[i]];
            total[v] = t;
            for (std::uint32_t i = var_start_[v]; i < var_start_[v + 1]; ++i) {
                const auto e = var_edges_[i];
                v2c[e] = t - c2v[e];
            }
        }
        res.iterations = it + 1;
        res.success = hard_and_check();
    }
    res.info_bits.resize(info_pos_.size());
    for (std::size_t i = 0; i < info_pos_.size(); ++i) res.info_bits[i] = res.codeword[info_pos_[i]];
    return res;
}

std::string ldpc_code_filename(std::size_t n, std::size_t k) {
    return "ldpc_n" + std::to_string(n) + "_k" + std::to_string(k) + ".alist";
}

std::filesystem::path default_ldpc_dir() {
    if (const char* env = std::getenv("NTNPRED_DATA_DIR"); env && *env) return std::filesystem::path(env) / "ldpc";
    return std::filesystem::path(NTNPRED_DATA_DIR) / "ldpc";
}

std::shared_ptr<const LdpcCode> ldpc_code_for(std::size_t n, std::size_t k, const std::filesystem::path& dir) {
    static std::mutex mu;
    static std::map<std::filesystem::path, std::shared_ptr<const LdpcCode>> cache;
    const auto path = dir / ldpc_code_filename(n, k);
    std::lock_guard lock(mu);
    if (auto it = cache.find(path); it != cache.end()) return it->second;
    if (!std::filesystem::exists(path))
        throw ConfigError("no LDPC code for n=" + std::to_string(n) + ", k=" + std::to_string(k) + " (" +
                          path.string() + ")");
    auto code = std::make_shared<const LdpcCode>(LdpcCode::load(path));
    if (code->n() != n || code->k() != k) throw ConfigError(path.string() + ": code dimensions do not match its name");
    cache.emplace(path, code);
    return code;
}

}  // namespace ntnpred
