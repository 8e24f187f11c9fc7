#pragma once

#include <string>
#include <vector>

#include "faceanon/models/blocks.hpp"
#include "faceanon/models/config.hpp"

namespace faceanon::models {

// ----------------------------------------------------------------- builders
//
// Parameter creation happens once, in a fixed order, before any forward
// pass; forwards only look parameters up. The control embedder is part of
// the generator's parameter store (prefix "embed."): it trains with the
// generator and feeds its bottleneck.

template <typename T>
void build_generator(ParamStore<T>& ps, const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    const auto downs = cfg.gen_down_channels();
    int c = 6;
    for (std::size_t i = 0; i < downs.size(); ++i) {
        build_res_down(ps, "down" + std::to_string(i), c, downs[i], rng);
        c = downs[i];
    }

    // control embedder: FC stack -> reshape -> three 3x3 convs to the
    // bottleneck channel count
    const int fc_w = cfg.embed_fc_width();
    int in = cfg.n_identities;
    for (int i = 0; i < cfg.embed_fc_layers; ++i) {
        build_linear(ps, "embed.fc" + std::to_string(i), in, fc_w, rng);
        in = fc_w;
    }
    int ec = cfg.embed_reshape_channels();
    for (int i = 0; i < 3; ++i) {
        const int next = std::max(cfg.bottleneck_channels() >> (2 - i), 1);
        build_conv(ps, "embed.conv" + std::to_string(i), ec, next, 3, rng);
        ec = next;
    }

    const int bc = cfg.bottleneck_channels();
    build_conv(ps, "fuse", bc + ec, bc, 3, rng);
    for (int i = 0; i < cfg.plain_blocks; ++i)
        build_res_plain(ps, "mid" + std::to_string(i), bc, rng);

    const auto ups = cfg.gen_up_channels();
    c = bc;
    for (std::size_t j = 0; j < ups.size(); ++j) {
        build_res_up(ps, "up" + std::to_string(j), c, ups[j], rng);
        c = ups[j];
    }
    build_conv(ps, "out", c, 3, 3, rng);
}

template <typename T>
void build_discriminator_trunk(ParamStore<T>& ps, const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    const auto downs = cfg.disc_down_channels();
    int c = 3;
    for (std::size_t i = 0; i < downs.size(); ++i) {
        build_res_down(ps, "down" + std::to_string(i), c, downs[i], rng);
        c = downs[i];
    }
    build_linear(ps, "fc0", c * 16, cfg.fc_width, rng);
}

template <typename T>
void build_discriminator(ParamStore<T>& ps, const ModelConfig& cfg, Rng& rng) {
    build_discriminator_trunk(ps, cfg, rng);
    build_linear(ps, "fc1", cfg.fc_width, 1, rng);
}

/// Siamese identity network: the discriminator architecture up to its
/// penultimate FC; that 1024-wide layer is the embedding.
template <typename T>
void build_identity_net(ParamStore<T>& ps, const ModelConfig& cfg, Rng& rng) {
    build_discriminator_trunk(ps, cfg, rng);
}

// ----------------------------------------------------------------- forwards

template <typename T>
void check_image_input(const Tensor<T>& x, const ModelConfig& cfg, int channels,
                       const char* who) {
    require(x.ndim() == 4 && x.dim(1) == channels && x.dim(2) == cfg.resolution &&
                x.dim(3) == cfg.resolution,
            "shape-mismatch", std::string(who) + ": expected [B," + std::to_string(channels) +
                                  "," + std::to_string(cfg.resolution) + "," +
                                  std::to_string(cfg.resolution) + "] input, got " +
                                  shape_str(x.shape()));
}

template <typename T>
void check_one_hot(const Tensor<T>& control, const ModelConfig& cfg) {
    require(control.ndim() == 2, "shape-mismatch", "control: expected [B,N]");
    require(control.dim(1) == cfg.n_identities, "shape-mismatch",
            "control: one-hot length " + std::to_string(control.dim(1)) +
                " does not match N=" + std::to_string(cfg.n_identities));
    for (std::int64_t i = 0; i < control.dim(0); ++i) {
        int nonzero = 0;
        bool unit = true;
        for (std::int64_t j = 0; j < control.dim(1); ++j) {
            const T v = control.at2(i, j);
            if (v != T(0)) {
                ++nonzero;
                if (v != T(1)) unit = false;
            }
        }
        require(nonzero == 1 && unit, "invalid-control",
                "control row " + std::to_string(i) + " is not one-hot");
    }
}

/// control [B,N] one-hot -> [B, bottleneck, 4, 4].
template <typename T>
ad::Value<T> embed_identity(const ParamStore<T>& ps, const ModelConfig& cfg,
                            const ad::Value<T>& control) {
    check_one_hot(control->value, cfg);
    const T slope = T(cfg.leaky_slope);
    auto h = control;
    for (int i = 0; i < cfg.embed_fc_layers; ++i)
        h = ad::leaky_relu(linear(ps, "embed.fc" + std::to_string(i), h), slope);
    h = ad::reshape(h, {h->value.dim(0), cfg.embed_reshape_channels(), 4, 4});
    for (int i = 0; i < 3; ++i)
        h = ad::instance_norm(
            ad::leaky_relu(conv(ps, "embed.conv" + std::to_string(i), h, 1), slope));
    return h;
}

/// conditioning [B,6,R,R] + one-hot control [B,N] -> image [B,3,R,R] in [-1,1].
template <typename T>
ad::Value<T> generator_forward(const ParamStore<T>& ps, const ModelConfig& cfg,
                               const ad::Value<T>& conditioning, const ad::Value<T>& control) {
    check_image_input(conditioning->value, cfg, 6, "generator");
    auto h = conditioning;
    for (std::size_t i = 0; i < cfg.gen_down_channels().size(); ++i)
        h = res_down(ps, "down" + std::to_string(i), h);
    auto id_embed = embed_identity(ps, cfg, control);
    h = ad::relu(conv(ps, "fuse", ad::concat_ch(h, id_embed), 1));
    for (int i = 0; i < cfg.plain_blocks; ++i) h = res_plain(ps, "mid" + std::to_string(i), h);
    for (std::size_t j = 0; j < cfg.gen_up_channels().size(); ++j)
        h = res_up(ps, "up" + std::to_string(j), h);
    return ad::tanh_op(conv(ps, "out", h, 1));
}

template <typename T>
ad::Value<T> discriminator_trunk_forward(const ParamStore<T>& ps, const ModelConfig& cfg,
                                         const ad::Value<T>& image) {
    check_image_input(image->value, cfg, 3, "discriminator");
    auto h = image;
    const auto downs = cfg.disc_down_channels();
    for (std::size_t i = 0; i < downs.size(); ++i)
        h = res_down(ps, "down" + std::to_string(i), h);
    h = ad::reshape(h, {h->value.dim(0), downs.back() * 16});
    return ad::leaky_relu(linear(ps, "fc0", h), T(cfg.leaky_slope));
}

/// image [B,3,R,R] -> scores [B,1]. The final FC carries no output
/// nonlinearity: LSGAN regresses the raw score toward the a/b labels.
template <typename T>
ad::Value<T> discriminator_forward(const ParamStore<T>& ps, const ModelConfig& cfg,
                                   const ad::Value<T>& image) {
    return linear(ps, "fc1", discriminator_trunk_forward(ps, cfg, image));
}

/// image [B,3,R,R] -> embeddings [B,E]. Weight sharing across branches is
/// by construction: every branch of a pair runs through the same store.
template <typename T>
ad::Value<T> identity_forward(const ParamStore<T>& ps, const ModelConfig& cfg,
                              const ad::Value<T>& image) {
    return discriminator_trunk_forward(ps, cfg, image);
}

}  // namespace faceanon::models
