#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "faceanon/core/rng.hpp"
#include "faceanon/core/tensor.hpp"
#include "faceanon/data/landmarks.hpp"

namespace faceanon {

/// Parametric cartoon-face corpus with exact 68-point annotations.
///
/// The identity signal is placed where the anonymization pipeline can act on
/// it: iris color, eye geometry, brows, nose-tip width, and lip color all sit
/// inside the face mask and off the conditioning subset. Skin tone,
/// background color, head pose, and expression are drawn per image,
/// independent of identity, so they carry no stable identity information.
struct SyntheticOptions {
    int n_identities = 20;
    int per_identity = 20;
    int resolution = 64;
    std::uint64_t seed = 1;
};

struct SyntheticSample {
    Tensor<float> image;  // [3,R,R] in [0,1]
    LandmarkSet landmarks;
    int identity = 0;
};

namespace synth_detail {

struct Rgb {
    float r, g, b;
};

inline Rgb hsv(double h, double s, double v) {
    const double c = v * s;
    const double hp = std::fmod(h, 1.0) * 6.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    if (hp < 1) { r = c; g = x; }
    else if (hp < 2) { r = x; g = c; }
    else if (hp < 3) { g = c; b = x; }
    else if (hp < 4) { g = x; b = c; }
    else if (hp < 5) { r = x; b = c; }
    else { r = c; b = x; }
    const double m = v - c;
    return {static_cast<float>(r + m), static_cast<float>(g + m), static_cast<float>(b + m)};
}

inline const std::array<Rgb, 6>& skin_palette() {
    static const std::array<Rgb, 6> p = {{{0.98f, 0.85f, 0.73f},
                                          {0.93f, 0.76f, 0.60f},
                                          {0.85f, 0.64f, 0.48f},
                                          {0.72f, 0.51f, 0.36f},
                                          {0.55f, 0.38f, 0.26f},
                                          {0.42f, 0.28f, 0.19f}}};
    return p;
}

inline const std::array<Rgb, 8>& background_palette() {
    static const std::array<Rgb, 8> p = {{{0.20f, 0.28f, 0.35f},
                                          {0.35f, 0.42f, 0.30f},
                                          {0.45f, 0.35f, 0.30f},
                                          {0.30f, 0.30f, 0.45f},
                                          {0.55f, 0.55f, 0.50f},
                                          {0.25f, 0.40f, 0.45f},
                                          {0.40f, 0.30f, 0.42f},
                                          {0.50f, 0.45f, 0.35f}}};
    return p;
}

/// Stable per-identity appearance parameters. Everything here is invisible
/// to the landmark conditioning (eyes, brows, and the nose tip are excluded
/// from the subset; colors are not geometry), so anonymization can actually
/// remove it.
struct IdentityTraits {
    double eye_spread;   // eye center offset as a fraction of face width
    double eye_ry;       // eye half-height fraction of face height
    double eye_aspect;   // rx/ry
    Rgb iris;
    double brow_raise;   // above the eye, fraction of face height
    double brow_thick;
    double brow_tilt;
    double nose_tip_w;   // fraction of face width
    Rgb lip;
};

inline IdentityTraits sample_identity(Rng& rng) {
    IdentityTraits t;
    t.eye_spread = rng.uniform(0.30, 0.55);
    t.eye_ry = rng.uniform(0.06, 0.12);
    t.eye_aspect = rng.uniform(1.2, 2.1);
    t.iris = hsv(rng.uniform(), rng.uniform(0.55, 0.95), rng.uniform(0.35, 0.75));
    t.brow_raise = rng.uniform(0.09, 0.18);
    t.brow_thick = rng.uniform(0.015, 0.05);
    t.brow_tilt = rng.uniform(-0.4, 0.4);
    t.nose_tip_w = rng.uniform(0.08, 0.30);
    t.lip = hsv(rng.uniform(-0.04, 0.08), rng.uniform(0.5, 0.9), rng.uniform(0.35, 0.7));
    return t;
}

/// Per-image nuisance draws. Mouth geometry and nose length live here, not
/// in the identity: they move the conditioning landmarks, and a cue the
/// conditioning carries would survive anonymization by construction.
struct Pose {
    double cx, cy;  // face center (pixels)
    double a, b;    // face half-axes (pixels)
    double open;    // mouth openness in [0,1]
    double mouth_w;     // fraction of face width
    double lip_thick;   // fraction of face height
    double nose_len;    // fraction of face height
    Rgb skin, bg;
};

inline void fill_ellipse(Tensor<float>& img, double cx, double cy, double rx, double ry,
                         const Rgb& color) {
    const auto h = img.dim(1), w = img.dim(2);
    const int r0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(cy - ry - 1));
    const int r1 = std::min<std::int64_t>(h - 1, static_cast<std::int64_t>(cy + ry + 1));
    const int c0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(cx - rx - 1));
    const int c1 = std::min<std::int64_t>(w - 1, static_cast<std::int64_t>(cx + rx + 1));
    for (int i = r0; i <= r1; ++i)
        for (int j = c0; j <= c1; ++j) {
            const double dx = (j - cx) / rx, dy = (i - cy) / ry;
            if (dx * dx + dy * dy <= 1.0) {
                img.at3(0, i, j) = color.r;
                img.at3(1, i, j) = color.g;
                img.at3(2, i, j) = color.b;
            }
        }
}

inline void fill_rot_rect(Tensor<float>& img, double cx, double cy, double half_len,
                          double half_thick, double tilt, const Rgb& color) {
    const auto h = img.dim(1), w = img.dim(2);
    const double ct = std::cos(tilt), st = std::sin(tilt);
    const double ext = half_len + half_thick + 1;
    const int r0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(cy - ext));
    const int r1 = std::min<std::int64_t>(h - 1, static_cast<std::int64_t>(cy + ext));
    const int c0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(cx - ext));
    const int c1 = std::min<std::int64_t>(w - 1, static_cast<std::int64_t>(cx + ext));
    for (int i = r0; i <= r1; ++i)
        for (int j = c0; j <= c1; ++j) {
            const double u = (j - cx) * ct + (i - cy) * st;
            const double v = -(j - cx) * st + (i - cy) * ct;
            if (std::abs(u) <= half_len && std::abs(v) <= half_thick) {
                img.at3(0, i, j) = color.r;
                img.at3(1, i, j) = color.g;
                img.at3(2, i, j) = color.b;
            }
        }
}

}  // namespace synth_detail

inline SyntheticSample make_synthetic_face(int identity, int image_index,
                                           const SyntheticOptions& opt) {
    using namespace synth_detail;
    const double R = opt.resolution;

    Rng id_rng = Rng::derive(opt.seed, 0x1d, static_cast<std::uint64_t>(identity));
    const IdentityTraits traits = sample_identity(id_rng);

    Rng img_rng = Rng::derive(opt.seed, 0x1000 + identity, static_cast<std::uint64_t>(image_index));
    Pose pose;
    pose.cx = R * (0.5 + img_rng.uniform(-0.05, 0.05));
    pose.cy = R * (0.52 + img_rng.uniform(-0.04, 0.04));
    pose.a = R * 0.30 * (1.0 + img_rng.uniform(-0.10, 0.12));
    pose.b = R * 0.38 * (1.0 + img_rng.uniform(-0.10, 0.10));
    pose.open = img_rng.uniform(0.0, 1.0);
    pose.mouth_w = img_rng.uniform(0.34, 0.52);
    pose.lip_thick = img_rng.uniform(0.035, 0.07);
    pose.nose_len = img_rng.uniform(0.28, 0.42);
    pose.skin = skin_palette()[img_rng.uniform_int(skin_palette().size())];
    pose.bg = background_palette()[img_rng.uniform_int(background_palette().size())];

    SyntheticSample sample;
    sample.identity = identity;
    sample.image = Tensor<float>({3, opt.resolution, opt.resolution});
    auto& img = sample.image;
    for (std::int64_t i = 0; i < opt.resolution; ++i)
        for (std::int64_t j = 0; j < opt.resolution; ++j) {
            img.at3(0, i, j) = pose.bg.r;
            img.at3(1, i, j) = pose.bg.g;
            img.at3(2, i, j) = pose.bg.b;
        }

    // face
    fill_ellipse(img, pose.cx, pose.cy, pose.a, pose.b, pose.skin);

    const double eye_y = pose.cy - 0.18 * pose.b;
    const double eye_off = traits.eye_spread * pose.a;
    const double eye_ry = traits.eye_ry * pose.b;
    const double eye_rx = eye_ry * traits.eye_aspect;
    const Rgb white{0.95f, 0.95f, 0.93f};
    const Rgb dark{0.08f, 0.08f, 0.10f};
    const Rgb brow_color{0.15f + 0.3f * pose.skin.r * 0.2f, 0.10f, 0.08f};

    for (int side : {-1, 1}) {
        const double ex = pose.cx + side * eye_off;
        fill_ellipse(img, ex, eye_y, eye_rx, eye_ry, white);
        fill_ellipse(img, ex, eye_y, eye_ry * 0.75, eye_ry * 0.75, traits.iris);
        fill_ellipse(img, ex, eye_y, eye_ry * 0.33, eye_ry * 0.33, dark);
        // brow
        fill_rot_rect(img, ex, eye_y - traits.brow_raise * pose.b, eye_rx * 1.25,
                      traits.brow_thick * pose.b, side * traits.brow_tilt, brow_color);
    }

    // nose: bridge stroke plus tip wedge in a darker skin shade
    const Rgb nose_shade{pose.skin.r * 0.78f, pose.skin.g * 0.74f, pose.skin.b * 0.72f};
    const double bridge_top = pose.cy - 0.10 * pose.b;
    const double nose_bottom = bridge_top + pose.nose_len * pose.b;
    fill_rot_rect(img, pose.cx, (bridge_top + nose_bottom) / 2,
                  (nose_bottom - bridge_top) / 2, std::max(0.8, R * 0.012),
                  std::numbers::pi / 2, nose_shade);
    const double tip_w = traits.nose_tip_w * pose.a;
    fill_ellipse(img, pose.cx, nose_bottom, tip_w, std::max(1.0, R * 0.03), nose_shade);

    // mouth
    const double mouth_y = pose.cy + 0.55 * pose.b;
    const double mouth_w = pose.mouth_w * pose.a;
    const double lip_h = pose.lip_thick * pose.b + pose.open * 0.06 * pose.b;
    fill_ellipse(img, pose.cx, mouth_y, mouth_w, lip_h, traits.lip);
    if (pose.open > 0.25)
        fill_ellipse(img, pose.cx, mouth_y, mouth_w * 0.66, lip_h * 0.5 * pose.open, dark);

    // ---------------------------------------------------------- landmarks
    auto& pts = sample.landmarks.points;
    pts.resize(landmark_ranges::kPointCount);
    // jaw 0-16: lower face ellipse arc, left ear over chin to right ear
    for (int i = 0; i <= 16; ++i) {
        const double theta = std::numbers::pi * (1.0 - i / 16.0);
        pts[i] = {pose.cx + pose.a * std::cos(theta), pose.cy + pose.b * std::sin(theta)};
    }
    // brows 17-26: five points over each brow
    for (int side : {-1, 1}) {
        const double ex = pose.cx + side * eye_off;
        const double by = eye_y - traits.brow_raise * pose.b;
        const int base = side < 0 ? 17 : 22;
        for (int i = 0; i < 5; ++i) {
            const double u = (i / 4.0 - 0.5) * 2 * eye_rx * 1.25;
            pts[base + i] = {ex + u, by + std::tan(side * traits.brow_tilt) * u};
        }
    }
    // nose bridge 27-30
    for (int i = 0; i < 4; ++i) {
        const double t = i / 3.0;
        pts[27 + i] = {pose.cx, bridge_top + t * (nose_bottom - bridge_top - R * 0.03)};
    }
    // lower nose 31-35 across the tip
    for (int i = 0; i < 5; ++i) {
        const double t = i / 4.0 - 0.5;
        pts[31 + i] = {pose.cx + 2 * tip_w * t, nose_bottom};
    }
    // eyes 36-47: six points around each eye ellipse
    for (int side : {-1, 1}) {
        const double ex = pose.cx + side * eye_off;
        const int base = side < 0 ? 36 : 42;
        const double angles[6] = {180, 135, 45, 0, 315, 225};
        for (int i = 0; i < 6; ++i) {
            const double th = angles[i] * std::numbers::pi / 180.0;
            pts[base + i] = {ex + eye_rx * std::cos(th), eye_y - eye_ry * std::sin(th)};
        }
    }
    // mouth outer ring 48-59 and inner ring 60-67
    for (int k = 0; k < 12; ++k) {
        const double th = (180.0 + 30.0 * k) * std::numbers::pi / 180.0;
        pts[48 + k] = {pose.cx + mouth_w * std::cos(th), mouth_y + lip_h * std::sin(th)};
    }
    for (int k = 0; k < 8; ++k) {
        const double th = (180.0 + 45.0 * k) * std::numbers::pi / 180.0;
        pts[60 + k] = {pose.cx + 0.66 * mouth_w * std::cos(th),
                       mouth_y + 0.5 * lip_h * std::sin(th)};
    }
    return sample;
}

inline std::vector<SyntheticSample> make_synthetic_corpus(const SyntheticOptions& opt) {
    std::vector<SyntheticSample> out;
    out.reserve(static_cast<std::size_t>(opt.n_identities) * opt.per_identity);
    for (int id = 0; id < opt.n_identities; ++id)
        for (int k = 0; k < opt.per_identity; ++k) out.push_back(make_synthetic_face(id, k, opt));
    return out;
}

}  // namespace faceanon
