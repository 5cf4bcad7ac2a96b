#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "ntnpred/rng.hpp"
#include "ntnpred/tensor.hpp"

namespace ntnpred::test {

inline Tensor random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
    Tensor t(std::move(shape));
    Rng rng(seed);
    for (auto& v : t.values()) v = scale * rng.normal();
    return t;
}

/// Central differences with step h. Each checked entry passes when the
/// relative error is below rel_tol, or when the absolute difference is below
/// the round-off floor max(abs_floor, 16 eps |loss| / h): entries whose true
/// derivative is zero (e.g. a bias feeding a train-mode BatchNorm) produce
/// pure round-off in the finite difference.
struct GradCheck {
    double worst_rel = 0.0;
    std::size_t checked = 0;
    std::size_t failed = 0;
};

inline GradCheck check_gradient(Tensor& param, const std::vector<double>& analytic,
                                const std::function<double()>& loss, std::size_t max_entries = 64,
                                double h = 1e-5, double rel_tol = 1e-4, double abs_floor = 1e-8) {
    GradCheck r;
    const double floor =
        std::max(abs_floor, 16.0 * std::numeric_limits<double>::epsilon() * std::abs(loss()) / h);
    std::vector<std::size_t> idx(param.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (idx.size() > max_entries) {
        Rng rng(param.size());
        std::shuffle(idx.begin(), idx.end(), rng.engine());
        idx.resize(max_entries);
    }
    for (std::size_t i : idx) {
        const double keep = param[i];
        param[i] = keep + h;
        const double up = loss();
        param[i] = keep - h;
        const double down = loss();
        param[i] = keep;
        const double fd = (up - down) / (2 * h);
        const double an = analytic[i];
        const double diff = std::abs(fd - an);
        const double rel = diff / std::max({std::abs(fd), std::abs(an), 1e-300});
        ++r.checked;
        if (diff < floor) continue;
        r.worst_rel = std::max(r.worst_rel, rel);
        if (rel >= rel_tol) ++r.failed;
    }
    return r;
}

}  // namespace ntnpred::test
