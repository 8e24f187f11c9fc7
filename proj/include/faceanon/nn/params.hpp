#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "faceanon/autodiff/tape.hpp"
#include "faceanon/core/archive.hpp"
#include "faceanon/core/rng.hpp"

namespace faceanon {

/// Named parameter leaves for one network. Creation order is recorded so
/// that initialization draws, optimizer iteration, and serialization all walk
/// the parameters in one fixed order.
template <typename T>
class ParamStore {
public:
    /// Fan-in scaled normal init (std = sqrt(2/fan_in)).
    ad::Value<T> create_weight(const std::string& name, Shape shape, std::int64_t fan_in,
                               Rng& rng) {
        Tensor<T> t(shape);
        const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (std::int64_t i = 0; i < t.numel(); ++i)
            t[i] = static_cast<T>(rng.normal() * std_dev);
        return insert(name, std::move(t));
    }

    ad::Value<T> create_zeros(const std::string& name, Shape shape) {
        return insert(name, Tensor<T>(std::move(shape)));
    }

    ad::Value<T> get(const std::string& name) const {
        auto it = map_.find(name);
        require(it != map_.end(), "params", "parameter not found: " + name +
                                                " (network not built?)");
        return it->second;
    }

    bool has(const std::string& name) const { return map_.count(name) > 0; }
    bool empty() const { return order_.empty(); }
    const std::vector<std::string>& names() const { return order_; }

    std::int64_t numel() const {
        std::int64_t n = 0;
        for (const auto& name : order_) n += map_.at(name)->value.numel();
        return n;
    }

    void zero_grad() {
        for (const auto& name : order_) map_.at(name)->clear_grad();
    }

    void set_requires_grad(bool v) {
        for (const auto& name : order_) map_.at(name)->requires_grad = v;
    }

    bool values_equal(const ParamStore& other) const {
        if (order_ != other.order_) return false;
        for (const auto& name : order_) {
            const auto& a = map_.at(name)->value;
            const auto& b = other.map_.at(name)->value;
            if (a.shape() != b.shape()) return false;
            for (std::int64_t i = 0; i < a.numel(); ++i)
                if (a[i] != b[i]) return false;
        }
        return true;
    }

    void save_to(Archive& ar, const std::string& prefix) const {
        for (const auto& name : order_) ar.put(prefix + name, map_.at(name)->value);
    }

    /// Loads values into existing parameters (shapes must match the built
    /// architecture).
    void load_from(const Archive& ar, const std::string& prefix) {
        for (const auto& name : order_) {
            const auto& t = ar.get<T>(prefix + name);
            auto& dst = map_.at(name)->value;
            require(t.shape() == dst.shape(), "checkpoint",
                    "parameter shape mismatch for " + name);
            dst = t;
        }
    }

private:
    ad::Value<T> insert(const std::string& name, Tensor<T> t) {
        require(map_.find(name) == map_.end(), "params", "duplicate parameter: " + name);
        auto v = ad::leaf(std::move(t), name);
        order_.push_back(name);
        map_[name] = v;
        return v;
    }

    std::vector<std::string> order_;
    std::unordered_map<std::string, ad::Value<T>> map_;
};

}  // namespace faceanon
