#include "chatmine/optim.hpp"

#include <cmath>

#include "chatmine/error.hpp"

namespace chatmine::nn {

Adam::Adam(ParameterSet& params, AdamConfig cfg) : params_(params), cfg_(cfg) {
    CHATMINE_REQUIRE(cfg.lr > 0 && cfg.beta1 >= 0 && cfg.beta1 < 1 && cfg.beta2 >= 0 && cfg.beta2 < 1 && cfg.epsilon > 0,
                     "invalid Adam hyperparameters");
    for (const auto& p : params_) {
        m_.emplace_back(p->value.shape);
        v_.emplace_back(p->value.shape);
    }
}

void Adam::step() {
    CHATMINE_REQUIRE(m_.size() == params_.size(), "parameter set changed after optimizer construction");
    ++step_;
    const double t = static_cast<double>(step_);
    const double c1 = 1.0 - std::pow(cfg_.beta1, t);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t);
    for (std::size_t k = 0; k < params_.size(); ++k) {
        Parameter& p = params_[k];
        auto& m = m_[k].data;
        auto& v = v_[k].data;
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad.data[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            p.value.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        }
        p.grad.fill(0.0);
    }
}

}  // namespace chatmine::nn
