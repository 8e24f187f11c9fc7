#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "faceanon/autodiff/tape.hpp"
#include "faceanon/core/gemm.hpp"
#include "faceanon/core/parallel.hpp"
#include "faceanon/core/tensor.hpp"

namespace faceanon::ad {

namespace detail {

template <typename T>
std::vector<T>& tls_buffer(int slot) {
    thread_local std::vector<T> bufs[3];
    return bufs[slot];
}

/// Unrolls x[C,H,W] into col[C*k*k, OH*OW] for a stride-1 convolution.
template <typename T>
void im2col(const T* x, std::int64_t c_in, std::int64_t h, std::int64_t w, int k, int pad,
            T* col) {
    const std::int64_t oh_n = h + 2 * pad - k + 1;
    const std::int64_t ow_n = w + 2 * pad - k + 1;
    std::int64_t row = 0;
    for (std::int64_t c = 0; c < c_in; ++c) {
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj, ++row) {
                T* dst = col + row * oh_n * ow_n;
                const std::int64_t dh = ki - pad;
                const std::int64_t dw = kj - pad;
                for (std::int64_t oh = 0; oh < oh_n; ++oh, dst += ow_n) {
                    const std::int64_t ih = oh + dh;
                    if (ih < 0 || ih >= h) {
                        std::fill(dst, dst + ow_n, T(0));
                        continue;
                    }
                    const T* src = x + (c * h + ih) * w;
                    const std::int64_t lo = std::max<std::int64_t>(0, -dw);
                    const std::int64_t hi = std::min<std::int64_t>(ow_n, w - dw);
                    for (std::int64_t ow = 0; ow < lo; ++ow) dst[ow] = T(0);
                    for (std::int64_t ow = lo; ow < hi; ++ow) dst[ow] = src[ow + dw];
                    for (std::int64_t ow = hi; ow < ow_n; ++ow) dst[ow] = T(0);
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* col, std::int64_t c_in, std::int64_t h, std::int64_t w, int k, int pad,
                T* dx) {
    const std::int64_t oh_n = h + 2 * pad - k + 1;
    const std::int64_t ow_n = w + 2 * pad - k + 1;
    std::int64_t row = 0;
    for (std::int64_t c = 0; c < c_in; ++c) {
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj, ++row) {
                const T* src = col + row * oh_n * ow_n;
                const std::int64_t dh = ki - pad;
                const std::int64_t dw = kj - pad;
                for (std::int64_t oh = 0; oh < oh_n; ++oh, src += ow_n) {
                    const std::int64_t ih = oh + dh;
                    if (ih < 0 || ih >= h) continue;
                    T* dst = dx + (c * h + ih) * w;
                    const std::int64_t lo = std::max<std::int64_t>(0, -dw);
                    const std::int64_t hi = std::min<std::int64_t>(ow_n, w - dw);
                    for (std::int64_t ow = lo; ow < hi; ++ow) dst[ow + dw] += src[ow];
                }
            }
        }
    }
}

// Fixed slot count for cross-sample weight-gradient reduction. Slot s owns
// samples s, s+8, ... processed in ascending order, and the slot partials are
// reduced in slot order, so the result does not depend on the thread count.
constexpr std::int64_t kGradSlots = 8;

}  // namespace detail

// ---------------------------------------------------------------- elementwise

template <typename T>
Value<T> add(const Value<T>& a, const Value<T>& b) {
    require(a->value.same_shape(b->value), "shape-mismatch", "add: shapes differ");
    Tensor<T> out = a->value;
    out.add_(b->value);
    return make_op<T>(std::move(out), {a, b}, [](Node<T>& n) {
        if (n.inputs[0]->requires_grad) n.inputs[0]->ensure_grad().add_(n.grad);
        if (n.inputs[1]->requires_grad) n.inputs[1]->ensure_grad().add_(n.grad);
    });
}

template <typename T>
Value<T> sub(const Value<T>& a, const Value<T>& b) {
    require(a->value.same_shape(b->value), "shape-mismatch", "sub: shapes differ");
    Tensor<T> out = a->value;
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] -= b->value[i];
    return make_op<T>(std::move(out), {a, b}, [](Node<T>& n) {
        if (n.inputs[0]->requires_grad) n.inputs[0]->ensure_grad().add_(n.grad);
        if (n.inputs[1]->requires_grad) {
            auto& g = n.inputs[1]->ensure_grad();
            for (std::int64_t i = 0; i < g.numel(); ++i) g[i] -= n.grad[i];
        }
    });
}

template <typename T>
Value<T> mul(const Value<T>& a, const Value<T>& b) {
    require(a->value.same_shape(b->value), "shape-mismatch", "mul: shapes differ");
    Tensor<T> out = a->value;
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= b->value[i];
    return make_op<T>(std::move(out), {a, b}, [](Node<T>& n) {
        if (n.inputs[0]->requires_grad) {
            auto& g = n.inputs[0]->ensure_grad();
            for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * n.inputs[1]->value[i];
        }
        if (n.inputs[1]->requires_grad) {
            auto& g = n.inputs[1]->ensure_grad();
            for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * n.inputs[0]->value[i];
        }
    });
}

template <typename T>
Value<T> mul_scalar(const Value<T>& a, T s) {
    Tensor<T> out = a->value;
    out.scale_(s);
    return make_op<T>(std::move(out), {a}, [s](Node<T>& n) {
        if (!n.inputs[0]->requires_grad) return;
        auto& g = n.inputs[0]->ensure_grad();
        for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += s * n.grad[i];
    });
}

/// Elementwise multiply by a constant tensor (mask compositing).
template <typename T>
Value<T> mul_const(const Value<T>& a, Tensor<T> c) {
    require(a->value.same_shape(c), "shape-mismatch", "mul_const: shapes differ");
    Tensor<T> out = a->value;
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= c[i];
    auto cp = std::make_shared<Tensor<T>>(std::move(c));
    return make_op<T>(std::move(out), {a}, [cp](Node<T>& n) {
        if (!n.inputs[0]->requires_grad) return;
        auto& g = n.inputs[0]->ensure_grad();
        for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * (*cp)[i];
    });
}

template <typename T>
Value<T> add_const(const Value<T>& a, const Tensor<T>& c) {
    require(a->value.same_shape(c), "shape-mismatch", "add_const: shapes differ");
    Tensor<T> out = a->value;
    out.add_(c);
    return make_op<T>(std::move(out), {a}, [](Node<T>& n) {
        if (n.inputs[0]->requires_grad) n.inputs[0]->ensure_grad().add_(n.grad);
    });
}

// --------------------------------------------------------------- activations

template <typename T>
Value<T> relu(const Value<T>& a) {
    Tensor<T> out = a->value;
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = out[i] > T(0) ? out[i] : T(0);
    return make_op<T>(std::move(out), {a}, [](Node<T>& n) {
        if (!n.inputs[0]->requires_grad) return;
        auto& g = n.inputs[0]->ensure_grad();
        const auto& x = n.inputs[0]->value;
        for (std::int64_t i = 0; i < g.numel(); ++i)
            if (x[i] > T(0)) g[i] += n.grad[i];
    });
}

template <typename T>
Value<T> leaky_relu(const Value<T>& a, T slope) {
    Tensor<T> out = a->value;
    for (std::int64_t i = 0; i < out.numel(); ++i)
        out[i] = out[i] > T(0) ? out[i] : slope * out[i];
    return make_op<T>(std::move(out), {a}, [slope](Node<T>& n) {
        if (!n.inputs[0]->requires_grad) return;
        auto& g = n.inputs[0]->ensure_grad();
        const auto& x = n.inputs[0]->value;
        for (std::int64_t i = 0; i < g.numel(); ++i)
            g[i] += (x[i] > T(0) ? T(1) : slope) * n.grad[i];
    });
}

template <typename T>
Value<T> tanh_op(const Value<T>& a) {
    Tensor<T> out = a->value;
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(out[i]);
    return make_op<T>(std::move(out), {a}, [](Node<T>& n) {
        if (!n.inputs[0]->requires_grad) return;
        auto& g = n.inputs[0]->ensure_grad();
        const auto& y = n.value;
        for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += (T(1) - y[i] * y[i]) * n.grad[i];
    });
}

// -------------------------------------------------------------------- linear

/// y[B,Out] = x[B,In] * w[Out,In]^T + b[Out]
template <typename T>
Value<T> linear(const Value<T>& x, const Value<T>& w, const Value<T>& b) {
    const auto batch = x->value.dim(0);
    const auto in = x->value.dim(1);
    const auto out_dim = w->value.dim(0);
    require(w->value.dim(1) == in, "shape-mismatch", "linear: weight/input mismatch");
    require(b->value.numel() == out_dim, "shape-mismatch", "linear: bias size mismatch");

    Tensor<T> y({batch, out_dim});
    matmul(x->value.data(), w->value.data(), y.data(), batch, in, out_dim, false, true);
    for (std::int64_t i = 0; i < batch; ++i)
        for (std::int64_t j = 0; j < out_dim; ++j) y.at2(i, j) += b->value[j];

    return make_op<T>(std::move(y), {x, w, b}, [batch, in, out_dim](Node<T>& n) {
        const auto& gy = n.grad;
        auto& xn = *n.inputs[0];
        auto& wn = *n.inputs[1];
        auto& bn = *n.inputs[2];
        if (xn.requires_grad) {
            auto& gx = xn.ensure_grad();
            matmul(gy.data(), wn.value.data(), gx.data(), batch, out_dim, in, false, false, true);
        }
        if (wn.requires_grad) {
            auto& gw = wn.ensure_grad();
            matmul(gy.data(), xn.value.data(), gw.data(), out_dim, batch, in, true, false, true);
        }
        if (bn.requires_grad) {
            auto& gb = bn.ensure_grad();
            for (std::int64_t i = 0; i < batch; ++i)
                for (std::int64_t j = 0; j < out_dim; ++j) gb[j] += gy.at2(i, j);
        }
    });
}

// -------------------------------------------------------------------- conv2d

/// Stride-1 2-D convolution, x[B,Cin,H,W], w[Cout,Cin,k,k], b[Cout].
template <typename T>
Value<T> conv2d(const Value<T>& x, const Value<T>& w, const Value<T>& b, int pad) {
    const auto batch = x->value.dim(0), c_in = x->value.dim(1);
    const auto h = x->value.dim(2), wd = x->value.dim(3);
    const auto c_out = w->value.dim(0);
    const int k = static_cast<int>(w->value.dim(2));
    require(w->value.dim(1) == c_in && w->value.dim(3) == k, "shape-mismatch",
            "conv2d: weight shape mismatch");
    const auto oh = h + 2 * pad - k + 1, ow = wd + 2 * pad - k + 1;
    require(oh > 0 && ow > 0, "shape-mismatch", "conv2d: output would be empty");
    const auto ckk = c_in * k * k;

    Tensor<T> y({batch, c_out, oh, ow});
    parallel_for(batch, [&](std::int64_t s) {
        auto& col = detail::tls_buffer<T>(0);
        col.resize(static_cast<std::size_t>(ckk * oh * ow));
        detail::im2col(x->value.data() + s * c_in * h * wd, c_in, h, wd, k, pad, col.data());
        T* ys = y.data() + s * c_out * oh * ow;
        matmul(w->value.data(), col.data(), ys, c_out, ckk, oh * ow);
        for (std::int64_t c = 0; c < c_out; ++c) {
            const T bias = b->value[c];
            T* row = ys + c * oh * ow;
            for (std::int64_t i = 0; i < oh * ow; ++i) row[i] += bias;
        }
    });

    return make_op<T>(std::move(y), {x, w, b}, [=](Node<T>& n) {
        const auto& gy = n.grad;
        auto& xn = *n.inputs[0];
        auto& wn = *n.inputs[1];
        auto& bn = *n.inputs[2];

        if (xn.requires_grad) {
            auto& gx = xn.ensure_grad();
            parallel_for(batch, [&](std::int64_t s) {
                auto& dcol = detail::tls_buffer<T>(1);
                dcol.resize(static_cast<std::size_t>(ckk * oh * ow));
                matmul(wn.value.data(), gy.data() + s * c_out * oh * ow, dcol.data(), ckk, c_out,
                       oh * ow, true, false);
                detail::col2im_add(dcol.data(), c_in, h, wd, k, pad,
                                   gx.data() + s * c_in * h * wd);
            });
        }
        if (wn.requires_grad || bn.requires_grad) {
            const std::int64_t nslots = std::min(detail::kGradSlots, batch);
            std::vector<Tensor<T>> gw_part(nslots), gb_part(nslots);
            for (std::int64_t t = 0; t < nslots; ++t) {
                gw_part[t] = Tensor<T>::zeros({c_out, ckk});
                gb_part[t] = Tensor<T>::zeros({c_out});
            }
            parallel_for(nslots, [&](std::int64_t slot) {
                auto& col = detail::tls_buffer<T>(2);
                col.resize(static_cast<std::size_t>(ckk * oh * ow));
                for (std::int64_t s = slot; s < batch; s += nslots) {
                    detail::im2col(xn.value.data() + s * c_in * h * wd, c_in, h, wd, k, pad,
                                   col.data());
                    const T* gys = gy.data() + s * c_out * oh * ow;
                    matmul(gys, col.data(), gw_part[slot].data(), c_out, oh * ow, ckk, false,
                           true, true);
                    for (std::int64_t c = 0; c < c_out; ++c) {
                        T acc = 0;
                        const T* row = gys + c * oh * ow;
                        for (std::int64_t i = 0; i < oh * ow; ++i) acc += row[i];
                        gb_part[slot][c] += acc;
                    }
                }
            });
            if (wn.requires_grad) {
                auto& gw = wn.ensure_grad();
                for (std::int64_t t = 0; t < nslots; ++t) gw.add_(gw_part[t].reshaped(gw.shape()));
            }
            if (bn.requires_grad) {
                auto& gb = bn.ensure_grad();
                for (std::int64_t t = 0; t < nslots; ++t) gb.add_(gb_part[t]);
            }
        }
    });
}

// ------------------------------------------------------------------- pooling

template <typename T>
Value<T> avg_pool2(const Value<T>& x) {
    const auto batch = x->value.dim(0), c = x->value.dim(1);
    const auto h = x->value.dim(2), w = x->value.dim(3);
    require(h % 2 == 0 && w % 2 == 0, "shape-mismatch", "avg_pool2: odd spatial dims");
    Tensor<T> y({batch, c, h / 2, w / 2});
    parallel_for(batch * c, [&](std::int64_t bc) {
        const T* src = x->value.data() + bc * h * w;
        T* dst = y.data() + bc * (h / 2) * (w / 2);
        for (std::int64_t i = 0; i < h / 2; ++i)
            for (std::int64_t j = 0; j < w / 2; ++j)
                dst[i * (w / 2) + j] =
                    (src[2 * i * w + 2 * j] + src[2 * i * w + 2 * j + 1] +
                     src[(2 * i + 1) * w + 2 * j] + src[(2 * i + 1) * w + 2 * j + 1]) /
                    T(4);
    });
    return make_op<T>(std::move(y), {x}, [=](Node<T>& n) {
        if (!n.inputs[0]->requires_grad) return;
        auto& gx = n.inputs[0]->ensure_grad();
        const auto& gy = n.grad;
        parallel_for(batch * c, [&](std::int64_t bc) {
            const T* g = gy.data() + bc * (h / 2) * (w / 2);
            T* dst = gx.data() + bc * h * w;
            for (std::int64_t i = 0; i < h / 2; ++i)
                for (std::int64_t j = 0; j < w / 2; ++j) {
                    const T v = g[i * (w / 2) + j] / T(4);
                    dst[2 * i * w + 2 * j] += v;
                    dst[2 * i * w + 2 * j + 1] += v;
                    dst[(2 * i + 1) * w + 2 * j] += v;
                    dst[(2 * i + 1) * w + 2 * j + 1] += v;
                }
        });
    });
}

/// 2x nearest-neighbor upsampling.
template <typename T>
Value<T> upsample2(const Value<T>& x) {
    const auto batch = x->value.dim(0), c = x->value.dim(1);
    const auto h = x->value.dim(2), w = x->value.dim(3);
    Tensor<T> y({batch, c, h * 2, w * 2});
    parallel_for(batch * c, [&](std::int64_t bc) {
        const T* src = x->value.data() + bc * h * w;
        T* dst = y.data() + bc * 4 * h * w;
        for (std::int64_t i = 0; i < h; ++i)
            for (std::int64_t j = 0; j < w; ++j) {
                const T v = src[i * w + j];
                dst[(2 * i) * 2 * w + 2 * j] = v;
                dst[(2 * i) * 2 * w + 2 * j + 1] = v;
                dst[(2 * i + 1) * 2 * w + 2 * j] = v;
                dst[(2 * i + 1) * 2 * w + 2 * j + 1] = v;
            }
    });
    return make_op<T>(std::move(y), {x}, [=](Node<T>& n) {
        if (!n.inputs[0]->requires_grad) return;
        auto& gx = n.inputs[0]->ensure_grad();
        const auto& gy = n.grad;
        parallel_for(batch * c, [&](std::int64_t bc) {
            T* dst = gx.data() + bc * h * w;
            const T* g = gy.data() + bc * 4 * h * w;
            for (std::int64_t i = 0; i < h; ++i)
                for (std::int64_t j = 0; j < w; ++j)
                    dst[i * w + j] += g[(2 * i) * 2 * w + 2 * j] + g[(2 * i) * 2 * w + 2 * j + 1] +
                                      g[(2 * i + 1) * 2 * w + 2 * j] +
                                      g[(2 * i + 1) * 2 * w + 2 * j + 1];
        });
    });
}

// ------------------------------------------------------------- normalization

/// Instance normalization over the spatial dims, no learned affine.
template <typename T>
Value<T> instance_norm(const Value<T>& x, T eps = T(1e-5)) {
    const auto batch = x->value.dim(0), c = x->value.dim(1);
    const auto hw = x->value.dim(2) * x->value.dim(3);
    Tensor<T> y(x->value.shape());
    auto inv_std = std::make_shared<Tensor<T>>(Shape{batch * c});
    parallel_for(batch * c, [&](std::int64_t bc) {
        const T* src = x->value.data() + bc * hw;
        T* dst = y.data() + bc * hw;
        T mean = 0;
        for (std::int64_t i = 0; i < hw; ++i) mean += src[i];
        mean /= T(hw);
        T var = 0;
        for (std::int64_t i = 0; i < hw; ++i) {
            const T d = src[i] - mean;
            var += d * d;
        }
        var /= T(hw);
        const T inv = T(1) / std::sqrt(var + eps);
        (*inv_std)[bc] = inv;
        for (std::int64_t i = 0; i < hw; ++i) dst[i] = (src[i] - mean) * inv;
    });
    return make_op<T>(std::move(y), {x}, [batch, c, hw, inv_std](Node<T>& n) {
        if (!n.inputs[0]->requires_grad) return;
        auto& gx = n.inputs[0]->ensure_grad();
        const auto& gy = n.grad;
        const auto& yv = n.value;
        parallel_for(batch * c, [&](std::int64_t bc) {
            const T* g = gy.data() + bc * hw;
            const T* yy = yv.data() + bc * hw;
            T* dst = gx.data() + bc * hw;
            T g_mean = 0, gy_mean = 0;
            for (std::int64_t i = 0; i < hw; ++i) {
                g_mean += g[i];
                gy_mean += g[i] * yy[i];
            }
            g_mean /= T(hw);
            gy_mean /= T(hw);
            const T inv = (*inv_std)[bc];
            for (std::int64_t i = 0; i < hw; ++i)
                dst[i] += inv * (g[i] - g_mean - yy[i] * gy_mean);
        });
    });
}

// ------------------------------------------------------------------- shaping

template <typename T>
Value<T> reshape(const Value<T>& x, Shape shape) {
    Tensor<T> out = x->value.reshaped(shape);
    return make_op<T>(std::move(out), {x}, [](Node<T>& n) {
        if (!n.inputs[0]->requires_grad) return;
        n.inputs[0]->ensure_grad().add_(n.grad.reshaped(n.inputs[0]->value.shape()));
    });
}

/// Concatenate along the channel axis of NCHW tensors.
template <typename T>
Value<T> concat_ch(const Value<T>& a, const Value<T>& b) {
    const auto& sa = a->value.shape();
    const auto& sb = b->value.shape();
    require(sa.size() == 4 && sb.size() == 4 && sa[0] == sb[0] && sa[2] == sb[2] && sa[3] == sb[3],
            "shape-mismatch", "concat_ch: incompatible shapes");
    const auto batch = sa[0], ca = sa[1], cb = sb[1], hw = sa[2] * sa[3];
    Tensor<T> y({batch, ca + cb, sa[2], sa[3]});
    for (std::int64_t s = 0; s < batch; ++s) {
        std::copy_n(a->value.data() + s * ca * hw, ca * hw, y.data() + s * (ca + cb) * hw);
        std::copy_n(b->value.data() + s * cb * hw, cb * hw,
                    y.data() + s * (ca + cb) * hw + ca * hw);
    }
    return make_op<T>(std::move(y), {a, b}, [batch, ca, cb, hw](Node<T>& n) {
        const auto& gy = n.grad;
        if (n.inputs[0]->requires_grad) {
            auto& ga = n.inputs[0]->ensure_grad();
            for (std::int64_t s = 0; s < batch; ++s) {
                const T* src = gy.data() + s * (ca + cb) * hw;
                T* dst = ga.data() + s * ca * hw;
                for (std::int64_t i = 0; i < ca * hw; ++i) dst[i] += src[i];
            }
        }
        if (n.inputs[1]->requires_grad) {
            auto& gb = n.inputs[1]->ensure_grad();
            for (std::int64_t s = 0; s < batch; ++s) {
                const T* src = gy.data() + s * (ca + cb) * hw + ca * hw;
                T* dst = gb.data() + s * cb * hw;
                for (std::int64_t i = 0; i < cb * hw; ++i) dst[i] += src[i];
            }
        }
    });
}

// ---------------------------------------------------------------- reductions

template <typename T>
Value<T> mean_all(const Value<T>& x) {
    const auto n_el = x->value.numel();
    Tensor<T> out = Tensor<T>::scalar(x->value.sum() / T(n_el));
    return make_op<T>(std::move(out), {x}, [n_el](Node<T>& n) {
        if (!n.inputs[0]->requires_grad) return;
        auto& g = n.inputs[0]->ensure_grad();
        const T v = n.grad[0] / T(n_el);
        for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += v;
    });
}

template <typename T>
Value<T> sum_all(const Value<T>& x) {
    Tensor<T> out = Tensor<T>::scalar(x->value.sum());
    return make_op<T>(std::move(out), {x}, [](Node<T>& n) {
        if (!n.inputs[0]->requires_grad) return;
        auto& g = n.inputs[0]->ensure_grad();
        const T v = n.grad[0];
        for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += v;
    });
}

/// 0.5 * mean((x - c)^2); the LSGAN building block.
template <typename T>
Value<T> half_mse_to(const Value<T>& x, T c) {
    const auto n_el = x->value.numel();
    require(n_el > 0, "empty-batch", "half_mse_to: empty input");
    T acc = 0;
    for (std::int64_t i = 0; i < n_el; ++i) {
        const T d = x->value[i] - c;
        acc += d * d;
    }
    Tensor<T> out = Tensor<T>::scalar(acc / T(2 * n_el));
    return make_op<T>(std::move(out), {x}, [c, n_el](Node<T>& n) {
        if (!n.inputs[0]->requires_grad) return;
        auto& g = n.inputs[0]->ensure_grad();
        const auto& x_v = n.inputs[0]->value;
        const T scale = n.grad[0] / T(n_el);
        for (std::int64_t i = 0; i < n_el; ++i) g[i] += scale * (x_v[i] - c);
    });
}

// ------------------------------------------------------------- metric spaces

/// Row-wise L2 normalization of a [M,E] matrix.
template <typename T>
Value<T> l2_normalize_rows(const Value<T>& x, T eps = T(1e-12)) {
    const auto m = x->value.dim(0), e = x->value.dim(1);
    Tensor<T> y({m, e});
    auto inv_norm = std::make_shared<Tensor<T>>(Shape{m});
    for (std::int64_t i = 0; i < m; ++i) {
        T sq = 0;
        for (std::int64_t j = 0; j < e; ++j) sq += x->value.at2(i, j) * x->value.at2(i, j);
        const T inv = T(1) / std::max(std::sqrt(sq), eps);
        (*inv_norm)[i] = inv;
        for (std::int64_t j = 0; j < e; ++j) y.at2(i, j) = x->value.at2(i, j) * inv;
    }
    return make_op<T>(std::move(y), {x}, [m, e, inv_norm](Node<T>& n) {
        if (!n.inputs[0]->requires_grad) return;
        auto& gx = n.inputs[0]->ensure_grad();
        const auto& gy = n.grad;
        const auto& yv = n.value;
        for (std::int64_t i = 0; i < m; ++i) {
            T dot = 0;
            for (std::int64_t j = 0; j < e; ++j) dot += yv.at2(i, j) * gy.at2(i, j);
            const T inv = (*inv_norm)[i];
            for (std::int64_t j = 0; j < e; ++j)
                gx.at2(i, j) += inv * (gy.at2(i, j) - yv.at2(i, j) * dot);
        }
    });
}

}  // namespace faceanon::ad
