#pragma once

#include <string>

#include "faceanon/autodiff/ops.hpp"
#include "faceanon/nn/params.hpp"

namespace faceanon::models {

using ad::Value;

template <typename T>
void build_conv(ParamStore<T>& ps, const std::string& name, int c_in, int c_out, int k,
                Rng& rng) {
    ps.create_weight(name + ".w", {c_out, c_in, k, k}, static_cast<std::int64_t>(c_in) * k * k,
                     rng);
    ps.create_zeros(name + ".b", {c_out});
}

template <typename T>
Value<T> conv(const ParamStore<T>& ps, const std::string& name, const Value<T>& x, int pad) {
    return ad::conv2d(x, ps.get(name + ".w"), ps.get(name + ".b"), pad);
}

template <typename T>
void build_linear(ParamStore<T>& ps, const std::string& name, int in, int out, Rng& rng) {
    ps.create_weight(name + ".w", {out, in}, in, rng);
    ps.create_zeros(name + ".b", {out});
}

template <typename T>
Value<T> linear(const ParamStore<T>& ps, const std::string& name, const Value<T>& x) {
    return ad::linear(x, ps.get(name + ".w"), ps.get(name + ".b"));
}

// Residual blocks. Main/skip wiring follows the reference layout: down and
// up blocks end with instance normalization after the skip summation; the
// plain block keeps its pre-sum normalization and is also normalized after
// the summation so all three block types expose a normalized output.

template <typename T>
void build_res_down(ParamStore<T>& ps, const std::string& p, int c_in, int c_out, Rng& rng) {
    build_conv(ps, p + ".conv1", c_in, c_out, 3, rng);
    build_conv(ps, p + ".conv2", c_out, c_out, 3, rng);
    build_conv(ps, p + ".skip", c_in, c_out, 1, rng);
}

/// conv3+ReLU -> conv3 -> avgpool ; skip: conv1 -> avgpool ; sum -> IN
template <typename T>
Value<T> res_down(const ParamStore<T>& ps, const std::string& p, const Value<T>& x) {
    auto main = ad::avg_pool2(conv(ps, p + ".conv2", ad::relu(conv(ps, p + ".conv1", x, 1)), 1));
    auto skip = ad::avg_pool2(conv(ps, p + ".skip", x, 0));
    return ad::instance_norm(ad::add(main, skip));
}

template <typename T>
void build_res_up(ParamStore<T>& ps, const std::string& p, int c_in, int c_out, Rng& rng) {
    build_conv(ps, p + ".conv1", c_in, c_out, 3, rng);
    build_conv(ps, p + ".conv2", c_out, c_out, 3, rng);
    build_conv(ps, p + ".skip", c_in, c_out, 1, rng);
}

/// IN+ReLU -> upsample -> conv3+IN+ReLU -> conv3 ; skip: upsample -> conv1 ;
/// sum -> IN. The trailing 2x2 average pool listed for the main path would
/// contradict the stated output sizes, so it is omitted.
template <typename T>
Value<T> res_up(const ParamStore<T>& ps, const std::string& p, const Value<T>& x) {
    auto h = ad::upsample2(ad::relu(ad::instance_norm(x)));
    h = ad::relu(ad::instance_norm(conv(ps, p + ".conv1", h, 1)));
    auto main = conv(ps, p + ".conv2", h, 1);
    auto skip = conv(ps, p + ".skip", ad::upsample2(x), 0);
    return ad::instance_norm(ad::add(main, skip));
}

template <typename T>
void build_res_plain(ParamStore<T>& ps, const std::string& p, int c, Rng& rng) {
    build_conv(ps, p + ".conv1", c, c, 3, rng);
    build_conv(ps, p + ".conv2", c, c, 3, rng);
}

/// conv3+IN+ReLU -> conv3+IN ; sum with input -> IN
template <typename T>
Value<T> res_plain(const ParamStore<T>& ps, const std::string& p, const Value<T>& x) {
    auto h = ad::relu(ad::instance_norm(conv(ps, p + ".conv1", x, 1)));
    auto main = ad::instance_norm(conv(ps, p + ".conv2", h, 1));
    return ad::instance_norm(ad::add(main, x));
}

}  // namespace faceanon::models
