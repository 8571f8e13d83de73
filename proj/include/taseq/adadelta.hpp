#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "taseq/tensor.hpp"

namespace taseq {

// Per-parameter running averages for AdaDelta.
struct AdaDeltaState {
  Tensor accum_grad_sq;    // E[g^2]
  Tensor accum_update_sq;  // E[dx^2]
};

// AdaDelta with a global learning-rate multiplier so the training schedule
// can halve it. Update per element:
//   E[g^2]  <- rho E[g^2] + (1-rho) g^2
//   dx       = -(sqrt(E[dx^2]+eps) / sqrt(E[g^2]+eps)) g
//   E[dx^2] <- rho E[dx^2] + (1-rho) dx^2
//   x       <- x + lr dx
class AdaDelta {
 public:
  explicit AdaDelta(double rho = 0.95, double epsilon = 1e-6)
      : rho_(rho), epsilon_(epsilon) {}

  double rho() const { return rho_; }
  double epsilon() const { return epsilon_; }

  void update(Parameter& p, double learning_rate) {
    AdaDeltaState& st = state_for_(p);
    Tensor& g2 = st.accum_grad_sq;
    Tensor& x2 = st.accum_update_sq;
    for (std::size_t i = 0; i < p.value.numel(); ++i) {
      const double g = p.grad.data[i];
      g2.data[i] = rho_ * g2.data[i] + (1.0 - rho_) * g * g;
      const double step =
          -(std::sqrt(x2.data[i] + epsilon_) / std::sqrt(g2.data[i] + epsilon_)) * g;
      x2.data[i] = rho_ * x2.data[i] + (1.0 - rho_) * step * step;
      p.value.data[i] += learning_rate * step;
    }
  }

  void step(const std::vector<Parameter*>& params, double learning_rate) {
    for (Parameter* p : params) update(*p, learning_rate);
  }

  const AdaDeltaState& state(const std::string& name) const {
    auto it = states_.find(name);
    if (it == states_.end())
      throw ContractError("AdaDelta: no state for " + name);
    return it->second;
  }

  bool has_state(const std::string& name) const {
    return states_.count(name) != 0;
  }

  void set_state(const std::string& name, AdaDeltaState st) {
    states_[name] = std::move(st);
  }

  const std::map<std::string, AdaDeltaState>& states() const { return states_; }

 private:
  AdaDeltaState& state_for_(const Parameter& p) {
    auto it = states_.find(p.name);
    if (it == states_.end()) {
      AdaDeltaState st{Tensor::zeros(p.value.shape),
                       Tensor::zeros(p.value.shape)};
      it = states_.emplace(p.name, std::move(st)).first;
    } else if (!it->second.accum_grad_sq.same_shape(p.value)) {
      throw DimensionError("AdaDelta: state shape mismatch for " + p.name);
    }
    return it->second;
  }

  double rho_;
  double epsilon_;
  std::map<std::string, AdaDeltaState> states_;
};

}  // namespace taseq
