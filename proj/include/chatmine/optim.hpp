#pragma once

#include <vector>

#include "chatmine/tensor.hpp"

namespace chatmine::nn {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected Adam. step() consumes the accumulated gradients and zeroes them.
class Adam {
 public:
    Adam(ParameterSet& params, AdamConfig cfg);

    void step();
    std::size_t steps() const { return step_; }
    const AdamConfig& config() const { return cfg_; }

    const Tensor& first_moment(std::size_t i) const { return m_[i]; }
    const Tensor& second_moment(std::size_t i) const { return v_[i]; }

 private:
    ParameterSet& params_;
    AdamConfig cfg_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    std::size_t step_ = 0;
};

}  // namespace chatmine::nn
