#pragma once

#include <cmath>
#include <vector>

#include "faceanon/core/common.hpp"
#include "faceanon/core/tensor.hpp"

namespace faceanon {

/// Each b x b tile replaced by its mean; edge tiles use the partial-tile
/// mean. b=1 is the identity.
inline Tensor<float> pixelize(const Tensor<float>& image, int block) {
    require(image.ndim() == 3, "shape-mismatch", "pixelize: expected [C,H,W]");
    require(block >= 1, "baseline", "pixelize: block must be positive");
    const auto c = image.dim(0), h = image.dim(1), w = image.dim(2);
    Tensor<float> out(image.shape());
    for (std::int64_t ch = 0; ch < c; ++ch)
        for (std::int64_t i0 = 0; i0 < h; i0 += block)
            for (std::int64_t j0 = 0; j0 < w; j0 += block) {
                const auto i1 = std::min<std::int64_t>(i0 + block, h);
                const auto j1 = std::min<std::int64_t>(j0 + block, w);
                double acc = 0;
                for (std::int64_t i = i0; i < i1; ++i)
                    for (std::int64_t j = j0; j < j1; ++j) acc += image.at3(ch, i, j);
                const auto mean =
                    static_cast<float>(acc / static_cast<double>((i1 - i0) * (j1 - j0)));
                for (std::int64_t i = i0; i < i1; ++i)
                    for (std::int64_t j = j0; j < j1; ++j) out.at3(ch, i, j) = mean;
            }
    return out;
}

inline std::vector<double> gaussian_kernel(int k, double sigma) {
    require(k >= 1 && k % 2 == 1, "baseline", "blur: kernel size must be odd");
    if (sigma <= 0) sigma = static_cast<double>(k) / 6.0;
    std::vector<double> kern(k);
    const int c = k / 2;
    double sum = 0;
    for (int i = 0; i < k; ++i) {
        kern[i] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
        sum += kern[i];
    }
    for (auto& v : kern) v /= sum;
    return kern;
}

/// Separable Gaussian blur with reflective padding; the kernel is
/// normalized to sum 1 (sigma defaults to k/6).
inline Tensor<float> blur(const Tensor<float>& image, int k, double sigma = -1.0) {
    require(image.ndim() == 3, "shape-mismatch", "blur: expected [C,H,W]");
    const auto kern = gaussian_kernel(k, sigma);
    const auto c = image.dim(0), h = image.dim(1), w = image.dim(2);
    const int half = k / 2;
    auto reflect = [](std::int64_t i, std::int64_t n) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i;
            if (i >= n) i = 2 * n - 2 - i;
        }
        return i;
    };
    Tensor<float> tmp(image.shape()), out(image.shape());
    for (std::int64_t ch = 0; ch < c; ++ch)
        for (std::int64_t i = 0; i < h; ++i)
            for (std::int64_t j = 0; j < w; ++j) {
                double acc = 0;
                for (int t = -half; t <= half; ++t)
                    acc += kern[t + half] * image.at3(ch, i, reflect(j + t, w));
                tmp.at3(ch, i, j) = static_cast<float>(acc);
            }
    for (std::int64_t ch = 0; ch < c; ++ch)
        for (std::int64_t i = 0; i < h; ++i)
            for (std::int64_t j = 0; j < w; ++j) {
                double acc = 0;
                for (int t = -half; t <= half; ++t)
                    acc += kern[t + half] * tmp.at3(ch, reflect(i + t, h), j);
                out.at3(ch, i, j) = static_cast<float>(acc);
            }
    return out;
}

/// Constant fill inside the mask, source outside.
inline Tensor<float> mask_region(const Tensor<float>& image, const Tensor<std::uint8_t>& mask,
                                 float fill) {
    require(image.ndim() == 3 && mask.ndim() == 2 && image.dim(1) == mask.dim(0) &&
                image.dim(2) == mask.dim(1),
            "shape-mismatch", "mask_region: image/mask shapes differ");
    Tensor<float> out = image;
    for (std::int64_t c = 0; c < image.dim(0); ++c)
        for (std::int64_t i = 0; i < mask.dim(0); ++i)
            for (std::int64_t j = 0; j < mask.dim(1); ++j)
                if (mask.at2(i, j)) out.at3(c, i, j) = fill;
    return out;
}

/// Applies a baseline inside a face bounding box only (the classical
/// anonymization setting): the box is replaced by the transformed pixels.
enum class BaselineKind { pixelize, blur, mask };

inline Tensor<float> apply_baseline_in_box(const Tensor<float>& image, BaselineKind kind,
                                           double param, int x0, int y0, int x1, int y1) {
    const auto c = image.dim(0), h = image.dim(1), w = image.dim(2);
    x0 = std::clamp<int>(x0, 0, static_cast<int>(w));
    x1 = std::clamp<int>(x1, x0, static_cast<int>(w));
    y0 = std::clamp<int>(y0, 0, static_cast<int>(h));
    y1 = std::clamp<int>(y1, y0, static_cast<int>(h));
    if (x0 == x1 || y0 == y1) return image;

    Tensor<float> box({c, y1 - y0, x1 - x0});
    for (std::int64_t ch = 0; ch < c; ++ch)
        for (int i = y0; i < y1; ++i)
            for (int j = x0; j < x1; ++j) box.at3(ch, i - y0, j - x0) = image.at3(ch, i, j);

    Tensor<float> done;
    switch (kind) {
        case BaselineKind::pixelize: done = pixelize(box, static_cast<int>(param)); break;
        case BaselineKind::blur: done = blur(box, static_cast<int>(param)); break;
        case BaselineKind::mask: {
            Tensor<std::uint8_t> all({box.dim(1), box.dim(2)}, std::uint8_t{1});
            done = mask_region(box, all, static_cast<float>(param));
            break;
        }
    }
    Tensor<float> out = image;
    for (std::int64_t ch = 0; ch < c; ++ch)
        for (int i = y0; i < y1; ++i)
            for (int j = x0; j < x1; ++j) out.at3(ch, i, j) = done.at3(ch, i - y0, j - x0);
    return out;
}

}  // namespace faceanon
