#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "faceanon/core/common.hpp"

namespace faceanon {

struct Point {
    double x = 0;  // column
    double y = 0;  // row
};

/// 68-point facial landmark set (standard ordering: jaw 0-16, brows 17-26,
/// nose bridge 27-30, lower nose 31-35, eyes 36-47, mouth 48-67). After
/// subset selection, subset_mask marks which indices survive.
struct LandmarkSet {
    std::vector<Point> points;
    std::vector<std::uint8_t> subset_mask;  // empty until selection; size 68 after

    bool has_subset() const { return !subset_mask.empty(); }

    std::size_t subset_size() const {
        std::size_t n = 0;
        for (auto m : subset_mask) n += m != 0;
        return n;
    }
};

namespace landmark_ranges {
// Index ranges of the conditioning subset: face silhouette, nose bridge,
// mouth. Eyes and brows are deliberately excluded from the conditioning.
inline constexpr int kJawBegin = 0, kJawEnd = 16;
inline constexpr int kNoseBridgeBegin = 27, kNoseBridgeEnd = 30;
inline constexpr int kMouthBegin = 48, kMouthEnd = 67;
// mouth sub-rings (outer lip / inner lip), each drawn closed
inline constexpr int kMouthOuterEnd = 59;
inline constexpr int kPointCount = 68;
}  // namespace landmark_ranges

/// Marks the jaw-line, nose-bridge, and mouth points; everything else is
/// excluded. 41 of the 68 points survive.
inline LandmarkSet select_landmark_subset(const LandmarkSet& in) {
    using namespace landmark_ranges;
    require(static_cast<int>(in.points.size()) == kPointCount, "invalid-landmarks",
            "expected 68 landmarks, got " + std::to_string(in.points.size()));
    LandmarkSet out;
    out.points = in.points;
    out.subset_mask.assign(kPointCount, 0);
    for (int i = kJawBegin; i <= kJawEnd; ++i) out.subset_mask[i] = 1;
    for (int i = kNoseBridgeBegin; i <= kNoseBridgeEnd; ++i) out.subset_mask[i] = 1;
    for (int i = kMouthBegin; i <= kMouthEnd; ++i) out.subset_mask[i] = 1;
    return out;
}

/// Polyline groups of a selected subset. Jaw and nose bridge are open
/// chains; the two mouth rings close on themselves.
struct PolyGroup {
    std::vector<Point> points;
    bool closed = false;
};

inline std::vector<PolyGroup> subset_poly_groups(const LandmarkSet& subset) {
    using namespace landmark_ranges;
    require(subset.has_subset(), "invalid-landmarks", "landmark subset not selected");
    require(static_cast<int>(subset.points.size()) == kPointCount, "invalid-landmarks",
            "expected 68 landmarks");
    auto take = [&](int b, int e, bool closed) {
        PolyGroup g;
        g.closed = closed;
        for (int i = b; i <= e; ++i)
            if (subset.subset_mask[i]) g.points.push_back(subset.points[i]);
        return g;
    };
    std::vector<PolyGroup> out;
    out.push_back(take(kJawBegin, kJawEnd, false));
    out.push_back(take(kNoseBridgeBegin, kNoseBridgeEnd, false));
    out.push_back(take(kMouthBegin, kMouthOuterEnd, true));
    out.push_back(take(kMouthOuterEnd + 1, kMouthEnd, true));
    return out;
}

}  // namespace faceanon
