#pragma once

#include <string>
#include <vector>

#include "faceanon/anonymize/mapping.hpp"
#include "faceanon/data/dataset.hpp"
#include "faceanon/models/networks.hpp"

namespace faceanon {

namespace anonymize_detail {

inline Tensor<float> resize_bilinear_chw(const Tensor<float>& src, int out_h, int out_w) {
    const auto c = src.dim(0), h = src.dim(1), w = src.dim(2);
    Tensor<float> out({c, out_h, out_w});
    for (std::int64_t ch = 0; ch < c; ++ch)
        for (int i = 0; i < out_h; ++i)
            for (int j = 0; j < out_w; ++j) {
                const double sy = (i + 0.5) * static_cast<double>(h) / out_h - 0.5;
                const double sx = (j + 0.5) * static_cast<double>(w) / out_w - 0.5;
                const auto y0 = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(sy)),
                                                         0, h - 1);
                const auto x0 = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(sx)),
                                                         0, w - 1);
                const auto y1 = std::min<std::int64_t>(y0 + 1, h - 1);
                const auto x1 = std::min<std::int64_t>(x0 + 1, w - 1);
                const double fy = std::clamp(sy - static_cast<double>(y0), 0.0, 1.0);
                const double fx = std::clamp(sx - static_cast<double>(x0), 0.0, 1.0);
                const double v = (1 - fy) * ((1 - fx) * src.at3(ch, y0, x0) +
                                             fx * src.at3(ch, y0, x1)) +
                                 fy * ((1 - fx) * src.at3(ch, y1, x0) +
                                       fx * src.at3(ch, y1, x1));
                out.at3(ch, i, j) = static_cast<float>(v);
            }
    return out;
}

/// Interior-depth feather weights: 1 deep inside the mask, ramping linearly
/// to 1/(depth+1) at the boundary, 0 outside. Exterior pixels are never
/// touched, so background bit-exactness is unaffected.
inline Tensor<float> feather_weights(const Tensor<std::uint8_t>& mask, int depth) {
    const auto h = mask.dim(0), w = mask.dim(1);
    Tensor<std::int64_t> dist({h, w});
    const std::int64_t inf = h + w + 2;
    for (std::int64_t i = 0; i < h; ++i)
        for (std::int64_t j = 0; j < w; ++j) {
            if (!mask.at2(i, j)) {
                dist.at2(i, j) = 0;
                continue;
            }
            std::int64_t d = inf;
            if (i == 0 || j == 0 || i == h - 1 || j == w - 1) d = 1;
            if (i > 0) d = std::min(d, dist.at2(i - 1, j) + 1);
            if (j > 0) d = std::min(d, dist.at2(i, j - 1) + 1);
            dist.at2(i, j) = d;
        }
    for (std::int64_t i = h - 1; i >= 0; --i)
        for (std::int64_t j = w - 1; j >= 0; --j) {
            if (!mask.at2(i, j)) continue;
            auto d = dist.at2(i, j);
            if (i + 1 < h) d = std::min(d, dist.at2(i + 1, j) + 1);
            if (j + 1 < w) d = std::min(d, dist.at2(i, j + 1) + 1);
            dist.at2(i, j) = d;
        }
    Tensor<float> wgt({h, w});
    for (std::int64_t i = 0; i < h * w; ++i) {
        if (!dist[i]) continue;
        wgt[i] = static_cast<float>(std::min<std::int64_t>(dist[i], depth + 1)) /
                 static_cast<float>(depth + 1);
    }
    return wgt;
}

}  // namespace anonymize_detail

struct AnonymizeOptions {
    bool feather = false;   // 2-pixel linear feather inside the mask
    int feather_depth = 2;
};

/// Raw generator output for a record's conditioning, mapped back to [0,1].
inline Tensor<float> generate_face(const ParamStore<float>& gen, const ModelConfig& cfg,
                                   const AnnotatedFace& rec, std::int64_t target) {
    ad::NoGradGuard ng;
    std::vector<const AnnotatedFace*> one{&rec};
    auto out = models::generator_forward(gen, cfg, ad::constant(conditioning_batch(one)),
                                         ad::constant(one_hot_batch({target},
                                                                    cfg.n_identities)));
    Tensor<float> img({3, cfg.resolution, cfg.resolution});
    for (std::int64_t i = 0; i < img.numel(); ++i)
        img[i] = std::clamp((out->value[i] + 1.0f) / 2.0f, 0.0f, 1.0f);
    return img;
}

/// Generated pixels inside the face mask, source pixels outside (bit-exact).
inline Tensor<float> anonymize_face(const ParamStore<float>& gen, const ModelConfig& cfg,
                                    const AnnotatedFace& rec, std::int64_t target,
                                    const AnonymizeOptions& opt = {}) {
    auto generated = generate_face(gen, cfg, rec, target);
    Tensor<float> out = rec.image;
    if (opt.feather) {
        const auto wgt = anonymize_detail::feather_weights(rec.face_mask, opt.feather_depth);
        for (std::int64_t c = 0; c < 3; ++c)
            for (std::int64_t i = 0; i < rec.face_mask.dim(0); ++i)
                for (std::int64_t j = 0; j < rec.face_mask.dim(1); ++j) {
                    if (!rec.face_mask.at2(i, j)) continue;
                    const float a = wgt.at2(i, j);
                    out.at3(c, i, j) =
                        a * generated.at3(c, i, j) + (1 - a) * rec.image.at3(c, i, j);
                }
    } else {
        for (std::int64_t c = 0; c < 3; ++c)
            for (std::int64_t i = 0; i < rec.face_mask.dim(0); ++i)
                for (std::int64_t j = 0; j < rec.face_mask.dim(1); ++j)
                    if (rec.face_mask.at2(i, j)) out.at3(c, i, j) = generated.at3(c, i, j);
    }
    return out;
}

struct DetectedFace {
    LandmarkSet landmarks;  // 68 points in full-image coordinates
    std::string person_id;
};

struct FaceBox {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // crop box, half-open
    std::int64_t applied_identity = -1;
    std::string person_id;
};

struct CompositeResult {
    Tensor<float> image;
    std::vector<FaceBox> boxes;
};

/// Sequential multi-face anonymization of a full-resolution image. Each face
/// is cropped around its landmarks, generated at model resolution, scaled
/// back, and composited inside its full-resolution mask; later faces
/// overwrite earlier ones where masks overlap.
inline CompositeResult anonymize_image(const ParamStore<float>& gen, const ModelConfig& cfg,
                                       const Tensor<float>& image,
                                       const std::vector<DetectedFace>& faces,
                                       ControlMapping& mapping, const std::string& camera_id,
                                       const AnonymizeOptions& opt = {}) {
    require(image.ndim() == 3 && image.dim(0) == 3, "shape-mismatch",
            "anonymize_image: expected [3,H,W]");
    const auto h = image.dim(1), w = image.dim(2);

    CompositeResult result;
    result.image = image;
    for (const auto& face : faces) {
        require(face.landmarks.points.size() == landmark_ranges::kPointCount,
                "invalid-landmarks", "anonymize_image: face without 68 landmarks");
        // square crop around the landmark bounding box, expanded and clamped
        double x_min = face.landmarks.points[0].x, x_max = x_min;
        double y_min = face.landmarks.points[0].y, y_max = y_min;
        for (const auto& p : face.landmarks.points) {
            x_min = std::min(x_min, p.x);
            x_max = std::max(x_max, p.x);
            y_min = std::min(y_min, p.y);
            y_max = std::max(y_max, p.y);
        }
        const double cx = (x_min + x_max) / 2, cy = (y_min + y_max) / 2;
        const double half = 0.9 * std::max(x_max - x_min, y_max - y_min);
        auto x0 = static_cast<std::int64_t>(std::floor(cx - half));
        auto y0 = static_cast<std::int64_t>(std::floor(cy - half));
        auto x1 = static_cast<std::int64_t>(std::ceil(cx + half));
        auto y1 = static_cast<std::int64_t>(std::ceil(cy + half));
        x0 = std::clamp<std::int64_t>(x0, 0, w - 1);
        y0 = std::clamp<std::int64_t>(y0, 0, h - 1);
        x1 = std::clamp<std::int64_t>(x1, x0 + 1, w);
        y1 = std::clamp<std::int64_t>(y1, y0 + 1, h);
        const auto cw = x1 - x0, chh = y1 - y0;

        Tensor<float> crop({3, chh, cw});
        for (std::int64_t c = 0; c < 3; ++c)
            for (std::int64_t i = 0; i < chh; ++i)
                for (std::int64_t j = 0; j < cw; ++j)
                    crop.at3(c, i, j) = result.image.at3(c, y0 + i, x0 + j);

        // landmarks in crop coordinates for the conditioning
        LandmarkDetection det;
        det.landmarks = face.landmarks;
        for (auto& p : det.landmarks->points) {
            p.x -= static_cast<double>(x0);
            p.y -= static_cast<double>(y0);
        }
        DatasetOptions rec_opt;
        rec_opt.resolution = cfg.resolution;
        auto rec = make_record(crop, det, 0, rec_opt);

        const auto target = mapping.lookup(camera_id, face.person_id);
        auto generated = generate_face(gen, cfg, rec, target);
        auto generated_up = anonymize_detail::resize_bilinear_chw(
            generated, static_cast<int>(chh), static_cast<int>(cw));

        // full-resolution mask from the original landmark geometry
        auto subset = select_landmark_subset(face.landmarks);
        auto poly = face_region_polygon(subset);
        for (auto& p : poly) {
            p.x -= static_cast<double>(x0);
            p.y -= static_cast<double>(y0);
        }
        auto mask = fill_polygon(poly, static_cast<int>(chh), static_cast<int>(cw));
        Tensor<float> wgt;
        if (opt.feather) wgt = anonymize_detail::feather_weights(mask, opt.feather_depth);

        for (std::int64_t c = 0; c < 3; ++c)
            for (std::int64_t i = 0; i < chh; ++i)
                for (std::int64_t j = 0; j < cw; ++j) {
                    if (!mask.at2(i, j)) continue;
                    const float g = generated_up.at3(c, i, j);
                    if (opt.feather) {
                        const float a = wgt.at2(i, j);
                        result.image.at3(c, y0 + i, x0 + j) =
                            a * g + (1 - a) * result.image.at3(c, y0 + i, x0 + j);
                    } else {
                        result.image.at3(c, y0 + i, x0 + j) = g;
                    }
                }

        result.boxes.push_back({static_cast<int>(x0), static_cast<int>(y0),
                                static_cast<int>(x1), static_cast<int>(y1), target,
                                face.person_id});
    }
    return result;
}

}  // namespace faceanon
