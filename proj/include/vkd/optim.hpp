#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vkd/checkpoint.hpp"
#include "vkd/errors.hpp"
#include "vkd/model.hpp"

namespace vkd {

// Adam with bias correction. Moment buffers are keyed by parameter name so
// they serialize into checkpoints and survive a reload for exact resume.
class Adam {
 public:
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void step(const std::vector<NamedParam>& params, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (const auto& p : params) {
      auto& m = m_[p.name];
      auto& v = v_[p.name];
      if (m.size() != p.value->size()) m.assign(p.value->size(), 0.0);
      if (v.size() != p.value->size()) v.assign(p.value->size(), 0.0);
      for (std::size_t i = 0; i < p.value->size(); ++i) {
        const double g = (*p.grad)[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        (*p.value)[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

  std::uint64_t steps() const { return t_; }

  void write_to(Checkpoint& ck) const {
    ck.meta["optim.kind"] = "adam";
    ck.meta["optim.t"] = std::to_string(t_);
    ck.tensors["optim.hyper"] = {beta1, beta2, eps};
    for (const auto& [name, m] : m_) ck.tensors["optim.m." + name] = m;
    for (const auto& [name, v] : v_) ck.tensors["optim.v." + name] = v;
  }

  void read_from(const Checkpoint& ck) {
    if (ck.meta_at("optim.kind") != "adam") throw IntegrityError("unknown optimizer kind");
    t_ = std::stoull(ck.meta_at("optim.t"));
    const auto& hyper = ck.tensor("optim.hyper");
    if (hyper.size() != 3) throw IntegrityError("bad optimizer hyperparameter tensor");
    beta1 = hyper[0];
    beta2 = hyper[1];
    eps = hyper[2];
    m_.clear();
    v_.clear();
    for (const auto& [name, data] : ck.tensors) {
      if (name.rfind("optim.m.", 0) == 0) m_[name.substr(8)] = data;
      if (name.rfind("optim.v.", 0) == 0) v_[name.substr(8)] = data;
    }
  }

 private:
  std::uint64_t t_ = 0;
  std::map<std::string, std::vector<double>> m_;
  std::map<std::string, std::vector<double>> v_;
};

}  // namespace vkd
