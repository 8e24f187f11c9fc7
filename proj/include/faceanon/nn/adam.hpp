#pragma once

#include <cmath>
#include <string>
#include <unordered_map>

#include "faceanon/core/archive.hpp"
#include "faceanon/nn/params.hpp"

namespace faceanon {

/// ADAM with bias correction: p -= lr * m_hat / (sqrt(v_hat) + eps).
/// Moment buffers are keyed by parameter name and serialized alongside the
/// parameters, which is what makes checkpoint-resume bit-exact.
template <typename T>
class Adam {
public:
    Adam(T lr, T beta1, T beta2, T eps = T(1e-8))
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ParamStore<T>& params) {
        ++t_;
        const T bc1 = T(1) - std::pow(beta1_, T(t_));
        const T bc2 = T(1) - std::pow(beta2_, T(t_));
        for (const auto& name : params.names()) {
            auto p = params.get(name);
            auto& slot = moments_[name];
            if (slot.m.numel() == 0) {
                slot.m = Tensor<T>::zeros(p->value.shape());
                slot.v = Tensor<T>::zeros(p->value.shape());
            }
            const bool has_grad = p->grad_live;
            for (std::int64_t i = 0; i < p->value.numel(); ++i) {
                const T g = has_grad ? p->grad[i] : T(0);
                slot.m[i] = beta1_ * slot.m[i] + (T(1) - beta1_) * g;
                slot.v[i] = beta2_ * slot.v[i] + (T(1) - beta2_) * g * g;
                const T m_hat = slot.m[i] / bc1;
                const T v_hat = slot.v[i] / bc2;
                p->value[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
            }
        }
    }

    std::int64_t step_count() const { return t_; }
    T learning_rate() const { return lr_; }

    void save_to(Archive& ar, const std::string& prefix) const {
        for (const auto& [name, slot] : moments_) {
            ar.put(prefix + name + ".m", slot.m);
            ar.put(prefix + name + ".v", slot.v);
        }
        Tensor<std::int64_t> t({1});
        t[0] = t_;
        ar.put(prefix + "__t__", t);
    }

    void load_from(const Archive& ar, const std::string& prefix, const ParamStore<T>& params) {
        moments_.clear();
        for (const auto& name : params.names()) {
            // moments absent before the first step; lazily zero-initialized
            if (!ar.contains(prefix + name + ".m")) continue;
            Slot slot;
            slot.m = ar.get<T>(prefix + name + ".m");
            slot.v = ar.get<T>(prefix + name + ".v");
            moments_[name] = std::move(slot);
        }
        t_ = ar.get<std::int64_t>(prefix + "__t__")[0];
    }

private:
    struct Slot {
        Tensor<T> m, v;
    };

    T lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
    std::unordered_map<std::string, Slot> moments_;
};

}  // namespace faceanon
