#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "faceanon/autodiff/ops.hpp"
#include "faceanon/autodiff/tape.hpp"
#include "faceanon/core/common.hpp"
#include "faceanon/core/tensor.hpp"

namespace faceanon {

/// Least-squares GAN regression targets: a for fake, b for real.
struct GanLabels {
    double fake = 0.0;
    double real = 1.0;
};

// ----------------------------------------------------------------- plain API
//
// Direct evaluations used by tests and metrics. Training goes through the
// graph builders below, which are cross-checked against these in the unit
// suite.

template <typename T>
T lsgan_d_loss(const std::vector<T>& d_real, const std::vector<T>& d_fake,
               const GanLabels& labels) {
    require(!d_real.empty() && !d_fake.empty(), "empty-batch", "lsgan_d_loss: empty batch");
    T acc_r = 0, acc_f = 0;
    for (T v : d_real) acc_r += (v - T(labels.real)) * (v - T(labels.real));
    for (T v : d_fake) acc_f += (v - T(labels.fake)) * (v - T(labels.fake));
    return acc_r / T(2 * d_real.size()) + acc_f / T(2 * d_fake.size());
}

template <typename T>
T lsgan_g_loss(const std::vector<T>& d_fake, const GanLabels& labels) {
    require(!d_fake.empty(), "empty-batch", "lsgan_g_loss: empty batch");
    T acc = 0;
    for (T v : d_fake) acc += (v - T(labels.real)) * (v - T(labels.real));
    return acc / T(2 * d_fake.size());
}

namespace detail {

template <typename T>
void l2_normalize_row(const T* src, T* dst, std::int64_t e) {
    T sq = 0;
    for (std::int64_t j = 0; j < e; ++j) sq += src[j] * src[j];
    const T inv = T(1) / std::max(std::sqrt(sq), T(1e-12));
    for (std::int64_t j = 0; j < e; ++j) dst[j] = src[j] * inv;
}

}  // namespace detail

/// Proxy-NCA loss of one embedding against a proxy bank. Embedding and
/// proxies are L2-normalized internally; distances are squared Euclidean.
/// loss = -log( exp(-d(x,p_y)) / sum_{z != y} exp(-d(x,p_z)) ).
template <typename T>
T proxy_nca_loss(const Tensor<T>& embedding, std::int64_t label, const Tensor<T>& proxies) {
    const auto n = proxies.dim(0), e = proxies.dim(1);
    require(n >= 2, "proxy-nca", "proxy_nca_loss: need at least 2 proxies");
    require(embedding.numel() == e, "shape-mismatch", "proxy_nca_loss: embedding dim mismatch");
    require(label >= 0 && label < n, "proxy-nca", "proxy_nca_loss: label out of range");

    std::vector<T> xn(e);
    detail::l2_normalize_row(embedding.data(), xn.data(), e);
    std::vector<T> d(n);
    for (std::int64_t z = 0; z < n; ++z) {
        std::vector<T> pn(e);
        detail::l2_normalize_row(proxies.data() + z * e, pn.data(), e);
        T acc = 0;
        for (std::int64_t j = 0; j < e; ++j) {
            const T dd = xn[j] - pn[j];
            acc += dd * dd;
        }
        d[z] = acc;
    }
    // log-sum-exp over the negatives of -d
    T m = -std::numeric_limits<T>::infinity();
    for (std::int64_t z = 0; z < n; ++z)
        if (z != label) m = std::max(m, -d[z]);
    T lse = 0;
    for (std::int64_t z = 0; z < n; ++z)
        if (z != label) lse += std::exp(-d[z] - m);
    return d[label] + m + std::log(lse);
}

/// Contrastive loss on an embedding pair with Euclidean distance d:
/// same -> d^2/2, different -> max(0, margin - d)^2 / 2.
template <typename T>
T contrastive_loss(const Tensor<T>& e1, const Tensor<T>& e2, bool same, T margin) {
    require(e1.same_shape(e2), "shape-mismatch", "contrastive_loss: shapes differ");
    T sq = 0;
    for (std::int64_t i = 0; i < e1.numel(); ++i) {
        const T d = e1[i] - e2[i];
        sq += d * d;
    }
    if (same) return sq / T(2);
    const T d = std::sqrt(sq);
    const T gap = margin - d;
    return gap > T(0) ? gap * gap / T(2) : T(0);
}

// -------------------------------------------------------------- graph losses

namespace ad_losses {

using namespace faceanon::ad;

/// 0.5*mean((d_real-b)^2) + 0.5*mean((d_fake-a)^2)
template <typename T>
Value<T> lsgan_d(const Value<T>& d_real, const Value<T>& d_fake, const GanLabels& labels) {
    return add(half_mse_to(d_real, T(labels.real)), half_mse_to(d_fake, T(labels.fake)));
}

/// 0.5*mean((d_fake-b)^2)
template <typename T>
Value<T> lsgan_g(const Value<T>& d_fake, const GanLabels& labels) {
    return half_mse_to(d_fake, T(labels.real));
}

/// Batched Proxy-NCA over pre-normalized rows: x_norm [B,E], p_norm [N,E].
/// Returns the mean loss; gradients flow into both inputs.
template <typename T>
Value<T> proxy_nca_core(const Value<T>& x_norm, const Value<T>& p_norm,
                        std::vector<std::int64_t> labels) {
    const auto b = x_norm->value.dim(0), e = x_norm->value.dim(1);
    const auto n = p_norm->value.dim(0);
    require(n >= 2, "proxy-nca", "proxy_nca: need at least 2 proxies");
    require(static_cast<std::int64_t>(labels.size()) == b, "shape-mismatch",
            "proxy_nca: label count mismatch");

    // d[i,z] = ||x_i - p_z||^2 = |x|^2 + |p|^2 - 2 x.p  (rows may not be
    // exactly unit when callers skip normalization, so keep the norms).
    Tensor<T> dots({b, n});
    matmul(x_norm->value.data(), p_norm->value.data(), dots.data(), b, e, n, false, true);
    std::vector<T> x_sq(b, T(0)), p_sq(n, T(0));
    for (std::int64_t i = 0; i < b; ++i)
        for (std::int64_t j = 0; j < e; ++j) x_sq[i] += x_norm->value.at2(i, j) * x_norm->value.at2(i, j);
    for (std::int64_t z = 0; z < n; ++z)
        for (std::int64_t j = 0; j < e; ++j) p_sq[z] += p_norm->value.at2(z, j) * p_norm->value.at2(z, j);

    auto weights = std::make_shared<Tensor<T>>(Shape{b, n});  // softmax over negatives
    T total = 0;
    for (std::int64_t i = 0; i < b; ++i) {
        const auto y = labels[i];
        require(y >= 0 && y < n, "proxy-nca", "proxy_nca: label out of range");
        T m = -std::numeric_limits<T>::infinity();
        for (std::int64_t z = 0; z < n; ++z)
            if (z != y) m = std::max(m, -(x_sq[i] + p_sq[z] - 2 * dots.at2(i, z)));
        T lse = 0;
        for (std::int64_t z = 0; z < n; ++z) {
            if (z == y) continue;
            lse += std::exp(-(x_sq[i] + p_sq[z] - 2 * dots.at2(i, z)) - m);
        }
        for (std::int64_t z = 0; z < n; ++z) {
            weights->at2(i, z) =
                z == y ? T(0)
                       : std::exp(-(x_sq[i] + p_sq[z] - 2 * dots.at2(i, z)) - m) / lse;
        }
        total += (x_sq[i] + p_sq[y] - 2 * dots.at2(i, y)) + m + std::log(lse);
    }

    Tensor<T> out = Tensor<T>::scalar(total / T(b));
    auto labels_ptr = std::make_shared<std::vector<std::int64_t>>(std::move(labels));
    return make_op<T>(std::move(out), {x_norm, p_norm}, [b, e, n, weights, labels_ptr](Node<T>& t) {
        const T g0 = t.grad[0] / T(b);
        // dL_i/dd_y = 1, dL_i/dd_z = -w_z; dd_z/dx = 2(x - p_z).
        // coeff[i,z]: +1 at z=y, -w_z elsewhere.
        Tensor<T> coeff({b, n});
        for (std::int64_t i = 0; i < b; ++i)
            for (std::int64_t z = 0; z < n; ++z)
                coeff.at2(i, z) = (z == (*labels_ptr)[i]) ? T(1) : -weights->at2(i, z);
        auto& xn = *t.inputs[0];
        auto& pn = *t.inputs[1];
        if (xn.requires_grad) {
            auto& gx = xn.ensure_grad();
            // dx_i += 2*g0 * [ (sum_z coeff_z) * x_i - sum_z coeff_z p_z ]
            Tensor<T> cp({b, e});
            matmul(coeff.data(), pn.value.data(), cp.data(), b, n, e, false, false);
            for (std::int64_t i = 0; i < b; ++i) {
                T csum = 0;
                for (std::int64_t z = 0; z < n; ++z) csum += coeff.at2(i, z);
                for (std::int64_t j = 0; j < e; ++j)
                    gx.at2(i, j) += 2 * g0 * (csum * xn.value.at2(i, j) - cp.at2(i, j));
            }
        }
        if (pn.requires_grad) {
            auto& gp = pn.ensure_grad();
            // dp_z += 2*g0 * coeff[i,z] * (p_z - x_i), summed over i
            Tensor<T> cx({n, e});
            matmul(coeff.data(), xn.value.data(), cx.data(), n, b, e, true, false);
            for (std::int64_t z = 0; z < n; ++z) {
                T csum = 0;
                for (std::int64_t i = 0; i < b; ++i) csum += coeff.at2(i, z);
                for (std::int64_t j = 0; j < e; ++j)
                    gp.at2(z, j) += 2 * g0 * (csum * pn.value.at2(z, j) - cx.at2(z, j));
            }
        }
    });
}

/// Mean Proxy-NCA with internal L2 normalization of embeddings and proxies.
template <typename T>
Value<T> proxy_nca(const Value<T>& embeddings, const Value<T>& proxies,
                   std::vector<std::int64_t> labels) {
    return proxy_nca_core(l2_normalize_rows(embeddings), l2_normalize_rows(proxies),
                          std::move(labels));
}

/// Mean contrastive loss over row pairs of e1/e2 with per-row same flags.
template <typename T>
Value<T> contrastive(const Value<T>& e1, const Value<T>& e2, std::vector<std::uint8_t> same,
                     T margin) {
    const auto b = e1->value.dim(0), e = e1->value.dim(1);
    require(e1->value.same_shape(e2->value), "shape-mismatch", "contrastive: shapes differ");
    require(static_cast<std::int64_t>(same.size()) == b, "shape-mismatch",
            "contrastive: flag count mismatch");

    auto dist = std::make_shared<std::vector<T>>(b);
    T total = 0;
    for (std::int64_t i = 0; i < b; ++i) {
        T sq = 0;
        for (std::int64_t j = 0; j < e; ++j) {
            const T d = e1->value.at2(i, j) - e2->value.at2(i, j);
            sq += d * d;
        }
        const T d = std::sqrt(sq);
        (*dist)[i] = d;
        if (same[i]) {
            total += sq / T(2);
        } else {
            const T gap = margin - d;
            if (gap > T(0)) total += gap * gap / T(2);
        }
    }
    Tensor<T> out = Tensor<T>::scalar(total / T(b));
    auto flags = std::make_shared<std::vector<std::uint8_t>>(std::move(same));
    return make_op<T>(std::move(out), {e1, e2}, [b, e, dist, flags, margin](Node<T>& t) {
        const T g0 = t.grad[0] / T(b);
        auto& a = *t.inputs[0];
        auto& bb = *t.inputs[1];
        for (std::int64_t i = 0; i < b; ++i) {
            T coef;
            if ((*flags)[i]) {
                coef = g0;  // d(sq/2)/de1 = (e1-e2)
            } else {
                const T d = (*dist)[i];
                const T gap = margin - d;
                if (gap <= T(0)) continue;
                coef = -g0 * gap / std::max(d, T(1e-12));
            }
            for (std::int64_t j = 0; j < e; ++j) {
                const T diff = a.value.at2(i, j) - bb.value.at2(i, j);
                if (a.requires_grad) a.ensure_grad().at2(i, j) += coef * diff;
                if (bb.requires_grad) bb.ensure_grad().at2(i, j) -= coef * diff;
            }
        }
    });
}

}  // namespace ad_losses

}  // namespace faceanon
