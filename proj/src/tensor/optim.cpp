#include "ntnpred/optim.hpp"

#include <cmath>
#include <numbers>

#include "ntnpred/errors.hpp"

namespace ntnpred {

ParamGroup& ParamStore::add_group(std::string layer, bool counted) {
    if (contains(layer)) throw ConfigError("duplicate parameter group '" + layer + "'");
    groups_.push_back(ParamGroup{std::move(layer), {}, {}, counted});
    return groups_.back();
}

void ParamStore::add(const std::string& layer, std::string name, Tensor t) {
    for (auto& g : groups_)
        if (g.layer == layer) {
            t.enable_grad();
            g.names.push_back(std::move(name));
            g.tensors.push_back(std::move(t));
            return;
        }
    throw ConfigError("no parameter group '" + layer + "'");
}

std::vector<Tensor>& ParamStore::at(const std::string& layer) {
    for (auto& g : groups_)
        if (g.layer == layer) return g.tensors;
    throw ConfigError("no parameter group '" + layer + "'");
}

const std::vector<Tensor>& ParamStore::at(const std::string& layer) const {
    for (const auto& g : groups_)
        if (g.layer == layer) return g.tensors;
    throw ConfigError("no parameter group '" + layer + "'");
}

bool ParamStore::contains(const std::string& layer) const {
    for (const auto& g : groups_)
        if (g.layer == layer) return true;
    return false;
}

ParamGroup& ParamStore::add_buffer_group(std::string layer) {
    buffers_.push_back(ParamGroup{std::move(layer), {}, {}, false});
    return buffers_.back();
}

std::vector<Tensor>& ParamStore::buffers(const std::string& layer) {
    for (auto& g : buffers_)
        if (g.layer == layer) return g.tensors;
    throw ConfigError("no buffer group '" + layer + "'");
}

std::size_t ParamStore::parameter_count(bool counted_only) const {
    std::size_t n = 0;
    for (const auto& g : groups_)
        if (g.counted || !counted_only)
            for (const auto& t : g.tensors) n += t.size();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& g : groups_)
        for (auto& t : g.tensors) t.zero_grad();
}

std::vector<Tensor*> ParamStore::trainable() {
    std::vector<Tensor*> r;
    for (auto& g : groups_)
        for (auto& t : g.tensors) r.push_back(&t);
    return r;
}

std::vector<const Tensor*> ParamStore::trainable() const {
    std::vector<const Tensor*> r;
    for (const auto& g : groups_)
        for (const auto& t : g.tensors) r.push_back(&t);
    return r;
}

void LrSchedule::validate() const {
    if (!(max_lr > min_lr && min_lr > 0.0)) throw ConfigError("lr schedule: need max_lr > min_lr > 0");
    if (warmup_epochs < 0) throw ConfigError("lr schedule: warmup_epochs must be >= 0");
    if (annealing_period_epochs < 1) throw ConfigError("lr schedule: annealing_period_epochs must be >= 1");
}

double lr_at_epoch(const LrSchedule& s, int epoch) {
    if (epoch < 0) throw UsageError("lr_at_epoch: negative epoch");
    if (epoch < s.warmup_epochs)
        return s.min_lr + (s.max_lr - s.min_lr) * static_cast<double>(epoch) / s.warmup_epochs;
    const int phase = (epoch - s.warmup_epochs) % s.annealing_period_epochs;
    const double frac = static_cast<double>(phase) / s.annealing_period_epochs;
    return s.min_lr + 0.5 * (s.max_lr - s.min_lr) * (1.0 + std::cos(std::numbers::pi * frac));
}

void Adam::ensure_shapes(const ParamStore& params) {
    const auto ts = params.trainable();
    if (m_.size() == ts.size()) {
        bool ok = true;
        for (std::size_t i = 0; i < ts.size(); ++i) ok = ok && m_[i].size() == ts[i]->size();
        if (ok) return;
    }
    m_.clear();
    v_.clear();
    for (const auto* t : ts) {
        m_.emplace_back(t->size(), 0.0);
        v_.emplace_back(t->size(), 0.0);
    }
    t_ = 0;
}

void Adam::step(ParamStore& params, double lr, double l2) {
    ensure_shapes(params);
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    auto ts = params.trainable();
    for (std::size_t i = 0; i < ts.size(); ++i) {
        Tensor& p = *ts[i];
        if (!p.has_grad()) throw InternalError("adam: parameter without grad slot");
        auto w = p.data();
        auto g = p.grad();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double gk = g[k] + l2 * w[k];
            m[k] = beta1 * m[k] + (1.0 - beta1) * gk;
            v[k] = beta2 * v[k] + (1.0 - beta2) * gk * gk;
            w[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
        }
    }
}

}  // namespace ntnpred
