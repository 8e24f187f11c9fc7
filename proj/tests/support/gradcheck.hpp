#pragma once

// Central finite-difference gradient checking for the reverse-mode graph.
// Used across the unit and acceptance suites; works at double precision.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "faceanon/autodiff/tape.hpp"
#include "faceanon/core/rng.hpp"

namespace testsupport {

struct GradCheckResult {
    double worst_rel = 0.0;
    std::string worst_at;
    int checked = 0;
};

/// build() must construct a fresh scalar graph from the given leaves.
/// Checks up to max_coords_per_leaf randomly sampled coordinates per leaf.
inline GradCheckResult check_gradients(
    const std::vector<faceanon::ad::Value<double>>& leaves,
    const std::function<faceanon::ad::Value<double>()>& build, double rtol, double atol,
    int max_coords_per_leaf = 24, std::uint64_t seed = 1234) {
    using faceanon::Rng;

    for (const auto& l : leaves) l->clear_grad();
    auto root = build();
    faceanon::ad::backward(root);

    GradCheckResult res;
    Rng rng(seed);
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        auto& leaf = leaves[li];
        const auto n = leaf->value.numel();
        std::vector<std::int64_t> coords;
        if (n <= max_coords_per_leaf) {
            for (std::int64_t i = 0; i < n; ++i) coords.push_back(i);
        } else {
            for (int i = 0; i < max_coords_per_leaf; ++i)
                coords.push_back(static_cast<std::int64_t>(rng.uniform_int(n)));
        }
        for (auto ci : coords) {
            const double x0 = leaf->value[ci];
            const double h = 1e-5 * std::max(1.0, std::abs(x0));
            leaf->value[ci] = x0 + h;
            const double fp = build()->value[0];
            leaf->value[ci] = x0 - h;
            const double fm = build()->value[0];
            leaf->value[ci] = x0;
            const double fd = (fp - fm) / (2 * h);
            const double an = leaf->grad_live ? leaf->grad[ci] : 0.0;
            const double denom = std::max({std::abs(fd), std::abs(an), atol / rtol});
            const double rel = std::abs(fd - an) / denom;
            ++res.checked;
            if (rel > res.worst_rel) {
                res.worst_rel = rel;
                res.worst_at =
                    "leaf " + std::to_string(li) + " coord " + std::to_string(ci) + " fd=" +
                    std::to_string(fd) + " analytic=" + std::to_string(an);
            }
        }
    }
    return res;
}

}  // namespace testsupport
