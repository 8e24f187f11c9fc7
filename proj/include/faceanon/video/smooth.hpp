#pragma once

#include <Eigen/Dense>
#include <vector>

#include "faceanon/core/common.hpp"
#include "faceanon/data/landmarks.hpp"

namespace faceanon {

/// Landmark trajectories of one track: per-frame point lists with frame
/// numbers as timestamps. Point count is constant across frames.
struct LandmarkTrack {
    std::vector<std::int64_t> frames;           // strictly increasing
    std::vector<std::vector<Point>> points;     // frames.size() x point_count

    void validate() const {
        require(frames.size() == points.size(), "track", "frame/point count mismatch");
        for (std::size_t i = 1; i < frames.size(); ++i)
            require(frames[i] > frames[i - 1], "track", "timestamps must strictly increase");
        if (!points.empty()) {
            const auto n = points.front().size();
            for (const auto& p : points)
                require(p.size() == n, "track", "point count varies across frames");
        }
    }
};

struct SmoothResult {
    LandmarkTrack track;
    bool too_few_frames = false;  // pass-through warning
};

namespace smooth_detail {

/// Least-squares polynomial of degree k over the window, evaluated at t0.
/// Abscissae are centered on t0 for conditioning. This is a linear operator
/// in the ordinates: constants and (for k>=1) linear trajectories are
/// reproduced exactly.
inline double local_poly_eval(const std::vector<double>& ts, const std::vector<double>& ys,
                              double t0, int degree) {
    const int n = static_cast<int>(ts.size());
    const int k = std::min(degree, n - 1);
    Eigen::MatrixXd a(n, k + 1);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
        const double dt = ts[i] - t0;
        double pw = 1.0;
        for (int j = 0; j <= k; ++j) {
            a(i, j) = pw;
            pw *= dt;
        }
        b[i] = ys[i];
    }
    Eigen::VectorXd coef = (a.transpose() * a).ldlt().solve(a.transpose() * b);
    return coef[0];  // value at dt = 0
}

}  // namespace smooth_detail

/// Sliding-window smoothing spline: each coordinate series is replaced by a
/// degree-k least-squares polynomial fit over w neighboring frames evaluated
/// at the frame itself; endpoint windows are truncated.
inline SmoothResult smooth_track(const LandmarkTrack& in, int window = 9, int degree = 3) {
    require(window >= 1 && degree >= 0, "track", "bad smoothing parameters");
    in.validate();
    SmoothResult out;
    out.track = in;
    const auto n = static_cast<int>(in.frames.size());
    if (n < degree + 1) {
        out.too_few_frames = true;
        return out;
    }
    if (in.points.empty() || in.points.front().empty()) return out;

    const int np = static_cast<int>(in.points.front().size());
    const int half = window / 2;
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - half);
        const int hi = std::min(n - 1, i + half);
        std::vector<double> ts;
        for (int t = lo; t <= hi; ++t) ts.push_back(static_cast<double>(in.frames[t]));
        const double t0 = static_cast<double>(in.frames[i]);
        for (int p = 0; p < np; ++p) {
            std::vector<double> xs, ys;
            for (int t = lo; t <= hi; ++t) {
                xs.push_back(in.points[t][p].x);
                ys.push_back(in.points[t][p].y);
            }
            out.track.points[i][p].x = smooth_detail::local_poly_eval(ts, xs, t0, degree);
            out.track.points[i][p].y = smooth_detail::local_poly_eval(ts, ys, t0, degree);
        }
    }
    return out;
}

/// Splits a track wherever consecutive frames are more than max_gap apart;
/// smaller gaps are filled by evaluating the local fit at the missing frames.
inline std::vector<LandmarkTrack> split_and_interpolate(const LandmarkTrack& in, int window = 9,
                                                        int degree = 3, int max_gap = -1) {
    in.validate();
    if (max_gap < 0) max_gap = window / 2;
    std::vector<LandmarkTrack> segments;
    LandmarkTrack cur;
    for (std::size_t i = 0; i < in.frames.size(); ++i) {
        if (!cur.frames.empty() && in.frames[i] - cur.frames.back() > max_gap + 1) {
            segments.push_back(std::move(cur));
            cur = LandmarkTrack{};
        }
        cur.frames.push_back(in.frames[i]);
        cur.points.push_back(in.points[i]);
    }
    if (!cur.frames.empty()) segments.push_back(std::move(cur));

    // fill interior gaps of each segment by local polynomial evaluation
    for (auto& seg : segments) {
        if (seg.frames.size() < 2) continue;
        LandmarkTrack filled;
        const int np = static_cast<int>(seg.points.front().size());
        const int half = window / 2;
        for (std::size_t i = 0; i + 1 < seg.frames.size(); ++i) {
            filled.frames.push_back(seg.frames[i]);
            filled.points.push_back(seg.points[i]);
            for (auto missing = seg.frames[i] + 1; missing < seg.frames[i + 1]; ++missing) {
                const int lo = std::max<int>(0, static_cast<int>(i) - half);
                const int hi = std::min<int>(static_cast<int>(seg.frames.size()) - 1,
                                             static_cast<int>(i) + half);
                std::vector<double> ts;
                for (int t = lo; t <= hi; ++t)
                    ts.push_back(static_cast<double>(seg.frames[t]));
                std::vector<Point> pts(np);
                for (int p = 0; p < np; ++p) {
                    std::vector<double> xs, ys;
                    for (int t = lo; t <= hi; ++t) {
                        xs.push_back(seg.points[t][p].x);
                        ys.push_back(seg.points[t][p].y);
                    }
                    const auto t0 = static_cast<double>(missing);
                    pts[p].x = smooth_detail::local_poly_eval(ts, xs, t0, degree);
                    pts[p].y = smooth_detail::local_poly_eval(ts, ys, t0, degree);
                }
                filled.frames.push_back(missing);
                filled.points.push_back(std::move(pts));
            }
        }
        filled.frames.push_back(seg.frames.back());
        filled.points.push_back(seg.points.back());
        seg = std::move(filled);
    }
    return segments;
}

}  // namespace faceanon
