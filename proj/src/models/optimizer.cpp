#include "eotk/models/optimizer.hpp"

#include <cmath>

#include "eotk/core/error.hpp"

namespace eotk {

Adam::Adam(const ParameterSet& params, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(zeros_like(params)),
      v_(zeros_like(params)) {
  if (!(learning_rate > 0.0)) throw Error(Errc::invalid_params, "learning_rate must be > 0");
}

void Adam::step(ParameterSet& params, const ParameterSet& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw Error(Errc::shape_mismatch, "optimizer state does not match the parameter set");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& w = params[p].tensor.values;
    const auto& g = grads[p].tensor.values;
    auto& m = m_[p].tensor.values;
    auto& v = v_[p].tensor.values;
    if (w.size() != g.size() || w.size() != m.size()) {
      throw Error(Errc::shape_mismatch, "gradient shape differs for " + params[p].name);
    }
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      w[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + epsilon_);
    }
  }
}

}  // namespace eotk
