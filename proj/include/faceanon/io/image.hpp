#pragma once

#include <filesystem>
#include <optional>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "faceanon/core/tensor.hpp"

namespace faceanon::io {

/// Decode to [3,H,W] float RGB in [0,1].
inline std::optional<Tensor<float>> read_image(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) return std::nullopt;
    Tensor<float> out({3, bgr.rows, bgr.cols});
    for (int i = 0; i < bgr.rows; ++i) {
        const auto* row = bgr.ptr<cv::Vec3b>(i);
        for (int j = 0; j < bgr.cols; ++j) {
            out.at3(0, i, j) = row[j][2] / 255.0f;
            out.at3(1, i, j) = row[j][1] / 255.0f;
            out.at3(2, i, j) = row[j][0] / 255.0f;
        }
    }
    return out;
}

/// Write [3,H,W] float RGB in [0,1]; values are clamped and quantized.
inline void write_image(const std::filesystem::path& path, const Tensor<float>& img) {
    require(img.ndim() == 3 && img.dim(0) == 3, "shape-mismatch",
            "write_image: expected [3,H,W]");
    const int h = static_cast<int>(img.dim(1)), w = static_cast<int>(img.dim(2));
    cv::Mat bgr(h, w, CV_8UC3);
    for (int i = 0; i < h; ++i) {
        auto* row = bgr.ptr<cv::Vec3b>(i);
        for (int j = 0; j < w; ++j) {
            auto q = [&](int c) {
                const float v = std::clamp(img.at3(c, i, j), 0.0f, 1.0f);
                return static_cast<unsigned char>(std::lround(v * 255.0f));
            };
            row[j] = cv::Vec3b(q(2), q(1), q(0));
        }
    }
    require(cv::imwrite(path.string(), bgr), "io", "failed to write " + path.string());
}

inline Tensor<float> resize_bilinear(const Tensor<float>& img, int out_h, int out_w) {
    require(img.ndim() == 3, "shape-mismatch", "resize: expected [C,H,W]");
    const int c = static_cast<int>(img.dim(0));
    const int h = static_cast<int>(img.dim(1)), w = static_cast<int>(img.dim(2));
    cv::Mat src(h, w, CV_MAKETYPE(CV_32F, c));
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int k = 0; k < c; ++k)
                src.ptr<float>(i)[j * c + k] = img.at3(k, i, j);
    cv::Mat dst;
    cv::resize(src, dst, cv::Size(out_w, out_h), 0, 0, cv::INTER_LINEAR);
    Tensor<float> out({c, out_h, out_w});
    for (int i = 0; i < out_h; ++i)
        for (int j = 0; j < out_w; ++j)
            for (int k = 0; k < c; ++k)
                out.at3(k, i, j) = dst.ptr<float>(i)[j * c + k];
    return out;
}

}  // namespace faceanon::io
