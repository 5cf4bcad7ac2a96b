#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ntnpred/tensor.hpp"

namespace ntnpred {

/// One layer's tensors, in a fixed order (e.g. weight, bias).
struct ParamGroup {
    std::string layer;
    std::vector<std::string> names;
    std::vector<Tensor> tensors;
    /// Counted towards the architecture's trainable-parameter total. BN scale
    /// and shift are trainable but reported separately.
    bool counted = true;
};

/// Trainable tensors (with grad slots) plus non-trainable buffers such as
/// BatchNorm running statistics. Group order is insertion order.
class ParamStore {
public:
    std::uint64_t rng_seed = 0;

    ParamGroup& add_group(std::string layer, bool counted = true);
    void add(const std::string& layer, std::string name, Tensor t);
    std::vector<Tensor>& at(const std::string& layer);
    const std::vector<Tensor>& at(const std::string& layer) const;
    bool contains(const std::string& layer) const;

    const std::vector<ParamGroup>& groups() const { return groups_; }
    std::vector<ParamGroup>& groups() { return groups_; }

    ParamGroup& add_buffer_group(std::string layer);
    std::vector<Tensor>& buffers(const std::string& layer);
    const std::vector<ParamGroup>& buffer_groups() const { return buffers_; }
    std::vector<ParamGroup>& buffer_groups() { return buffers_; }

    /// Trainable element count over counted groups only (or all groups).
    std::size_t parameter_count(bool counted_only = true) const;
    void zero_grad();

    std::vector<Tensor*> trainable();
    std::vector<const Tensor*> trainable() const;

private:
    std::vector<ParamGroup> groups_;
    std::vector<ParamGroup> buffers_;
};

struct LrSchedule {
    double max_lr = 0.03;
    double min_lr = 0.001;
    int warmup_epochs = 40;
    int annealing_period_epochs = 100;

    void validate() const;
};

/// Linear warm-up from min_lr to max_lr, then cosine annealing from max_lr to
/// min_lr restarting every annealing period.
double lr_at_epoch(const LrSchedule& schedule, int epoch);

/// Adam with the L2 term l2*w added to each gradient before the moment
/// updates. Moment buffers persist across calls.
class Adam {
public:
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void step(ParamStore& params, double lr, double l2);
    std::uint64_t steps() const { return t_; }

    // Exposed for checkpointing.
    std::vector<std::vector<double>>& first_moments() { return m_; }
    std::vector<std::vector<double>>& second_moments() { return v_; }
    const std::vector<std::vector<double>>& first_moments() const { return m_; }
    const std::vector<std::vector<double>>& second_moments() const { return v_; }
    void set_steps(std::uint64_t t) { t_ = t; }
    void ensure_shapes(const ParamStore& params);

private:
    std::vector<std::vector<double>> m_, v_;
    std::uint64_t t_ = 0;
};

}  // namespace ntnpred
