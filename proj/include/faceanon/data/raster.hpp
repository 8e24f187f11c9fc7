#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "faceanon/core/tensor.hpp"
#include "faceanon/data/landmarks.hpp"

namespace faceanon {

namespace raster_detail {

inline double dist_to_segment(double px, double py, const Point& a, const Point& b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len_sq = vx * vx + vy * vy;
    double t = 0;
    if (len_sq > 0) t = std::clamp(((px - a.x) * vx + (py - a.y) * vy) / len_sq, 0.0, 1.0);
    const double dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

inline std::vector<std::pair<Point, Point>> group_segments(const std::vector<PolyGroup>& groups) {
    std::vector<std::pair<Point, Point>> segs;
    for (const auto& g : groups) {
        if (g.points.size() < 2) continue;
        for (std::size_t i = 0; i + 1 < g.points.size(); ++i)
            segs.emplace_back(g.points[i], g.points[i + 1]);
        if (g.closed) segs.emplace_back(g.points.back(), g.points.front());
    }
    return segs;
}

}  // namespace raster_detail

struct LandmarkRaster {
    Tensor<std::uint8_t> image;  // [H,W], values in {0,1}
    bool out_of_frame_warning = false;
};

/// Draws the subset polylines into a binary raster. Pixel (r,c) is set iff
/// the distance from (c,r) to some polyline segment is <= stroke_width/2.
inline LandmarkRaster render_landmark_image(const LandmarkSet& subset, int height, int width,
                                            double stroke_width = 1.0) {
    require(height > 0 && width > 0, "invalid-resolution", "resolution must be positive");
    LandmarkRaster out;
    out.image = Tensor<std::uint8_t>({height, width});
    if (subset.points.empty() || (subset.has_subset() && subset.subset_size() == 0)) return out;

    bool any_in_frame = false;
    for (std::size_t i = 0; i < subset.points.size(); ++i) {
        if (subset.has_subset() && !subset.subset_mask[i]) continue;
        const auto& p = subset.points[i];
        if (p.x >= 0 && p.x < width && p.y >= 0 && p.y < height) any_in_frame = true;
    }
    out.out_of_frame_warning = !any_in_frame;

    const auto segs = raster_detail::group_segments(subset_poly_groups(subset));
    const double r = stroke_width / 2.0;
    for (const auto& [a, b] : segs) {
        const int r0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - r - 1)));
        const int r1 =
            std::min(height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + r + 1)));
        const int c0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - r - 1)));
        const int c1 =
            std::min(width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + r + 1)));
        for (int row = r0; row <= r1; ++row)
            for (int col = c0; col <= c1; ++col)
                if (raster_detail::dist_to_segment(col, row, a, b) <= r)
                    out.image.at2(row, col) = 1;
    }
    return out;
}

/// Even-odd scanline polygon fill at integer pixel centers.
inline Tensor<std::uint8_t> fill_polygon(const std::vector<Point>& poly, int height, int width) {
    Tensor<std::uint8_t> mask({height, width});
    const auto n = poly.size();
    if (n < 3) return mask;
    for (int row = 0; row < height; ++row) {
        std::vector<double> xs;
        for (std::size_t i = 0; i < n; ++i) {
            const Point& a = poly[i];
            const Point& b = poly[(i + 1) % n];
            if ((a.y <= row && b.y > row) || (b.y <= row && a.y > row)) {
                const double t = (row - a.y) / (b.y - a.y);
                xs.push_back(a.x + t * (b.x - a.x));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            const int c0 = std::max(0, static_cast<int>(std::ceil(xs[i])));
            const int c1 = std::min(width - 1, static_cast<int>(std::floor(xs[i + 1])));
            for (int c = c0; c <= c1; ++c) mask.at2(row, c) = 1;
        }
    }
    return mask;
}

inline double polygon_area(const std::vector<Point>& poly) {
    double acc = 0;
    const auto n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    return std::abs(acc) / 2.0;
}

struct MaskedBackground {
    Tensor<float> pixels;           // [3,H,W]
    Tensor<std::uint8_t> face_mask;  // [H,W]
};

/// Fraction of the jaw bounding-box height by which the silhouette closure
/// line sits above the jaw endpoints, keeping the forehead visible.
inline constexpr double kForeheadRaiseFraction = 0.15;
inline constexpr float kMaskFillValue = 0.0f;

/// Face region polygon: the jaw line closed across an eyebrow-level line
/// through raised copies of its endpoints.
inline std::vector<Point> face_region_polygon(const LandmarkSet& subset) {
    using namespace landmark_ranges;
    require(static_cast<int>(subset.points.size()) == kPointCount, "invalid-landmarks",
            "expected 68 landmarks");
    std::vector<Point> jaw(subset.points.begin() + kJawBegin,
                           subset.points.begin() + kJawEnd + 1);
    require(polygon_area(jaw) > 1e-9, "invalid-landmarks",
            "degenerate (zero-area) jaw silhouette");
    double y_min = jaw.front().y, y_max = jaw.front().y;
    for (const auto& p : jaw) {
        y_min = std::min(y_min, p.y);
        y_max = std::max(y_max, p.y);
    }
    const double raise = kForeheadRaiseFraction * (y_max - y_min);
    std::vector<Point> poly = jaw;  // 0..16 left ear -> chin -> right ear
    poly.push_back({jaw.back().x, jaw.back().y - raise});
    poly.push_back({jaw.front().x, jaw.front().y - raise});
    return poly;
}

/// Blanks the face region of `image` (which must be [3,H,W] in [0,1]);
/// pixels outside the mask are copied bit-exactly.
inline MaskedBackground build_masked_background(const Tensor<float>& image,
                                                const LandmarkSet& subset) {
    require(image.ndim() == 3 && image.dim(0) == 3, "shape-mismatch",
            "build_masked_background: expected [3,H,W] image");
    const int h = static_cast<int>(image.dim(1));
    const int w = static_cast<int>(image.dim(2));
    MaskedBackground out;
    out.face_mask = fill_polygon(face_region_polygon(subset), h, w);
    out.pixels = image;
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < h; ++r)
            for (int col = 0; col < w; ++col)
                if (out.face_mask.at2(r, col)) out.pixels.at3(c, r, col) = kMaskFillValue;
    return out;
}

}  // namespace faceanon
