#include <catch2/catch_amalgamated.hpp>
#include <filesystem>

#include "faceanon/data/dataset.hpp"
#include "faceanon/data/synthetic.hpp"
#include "faceanon/io/image.hpp"

using namespace faceanon;
namespace fs = std::filesystem;

namespace {

LandmarkSet grid_landmarks() {
    // 68 distinct in-frame points forming a plausible face on a 128x128 frame
    SyntheticOptions opt;
    opt.resolution = 128;
    return make_synthetic_face(0, 0, opt).landmarks;
}

/// Brute-force oracle: pixel set iff distance to any subset segment is
/// <= width/2, checked against every segment with no bounding-box culling.
Tensor<std::uint8_t> brute_force_raster(const LandmarkSet& subset, int h, int w, double width) {
    Tensor<std::uint8_t> img({h, w});
    std::vector<std::pair<Point, Point>> segs;
    auto add_chain = [&](int b, int e, bool closed) {
        std::vector<Point> pts;
        for (int i = b; i <= e; ++i)
            if (subset.subset_mask[i]) pts.push_back(subset.points[i]);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) segs.emplace_back(pts[i], pts[i + 1]);
        if (closed && pts.size() > 2) segs.emplace_back(pts.back(), pts.front());
    };
    add_chain(0, 16, false);
    add_chain(27, 30, false);
    add_chain(48, 59, true);
    add_chain(60, 67, true);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            for (const auto& [a, b] : segs) {
                const double vx = b.x - a.x, vy = b.y - a.y;
                const double len = vx * vx + vy * vy;
                double t = len > 0 ? ((c - a.x) * vx + (r - a.y) * vy) / len : 0.0;
                t = std::clamp(t, 0.0, 1.0);
                const double dx = c - (a.x + t * vx), dy = r - (a.y + t * vy);
                if (std::sqrt(dx * dx + dy * dy) <= width / 2) {
                    img.at2(r, c) = 1;
                    break;
                }
            }
        }
    return img;
}

double shoelace(const std::vector<Point>& poly) {
    double acc = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % poly.size()];
        acc += a.x * b.y - b.x * a.y;
    }
    return std::abs(acc) / 2;
}

}  // namespace

TEST_CASE("select_landmark_subset marks exactly the configured ranges") {
    auto lm = grid_landmarks();
    auto subset = select_landmark_subset(lm);
    CHECK(subset.subset_size() == 41);  // 17 jaw + 4 nose bridge + 20 mouth
    for (int i = 0; i < 68; ++i) {
        const bool expected =
            (i <= 16) || (i >= 27 && i <= 30) || (i >= 48 && i <= 67);
        CHECK(static_cast<bool>(subset.subset_mask[i]) == expected);
    }

    SECTION("wrong cardinality errors") {
        LandmarkSet bad;
        bad.points.resize(67);
        CHECK_THROWS_AS(select_landmark_subset(bad), Error);
        LandmarkSet empty;
        CHECK_THROWS_AS(select_landmark_subset(empty), Error);
    }
    SECTION("68 coincident points select 41 coincident points without error") {
        LandmarkSet same;
        same.points.assign(68, Point{64, 64});
        auto s = select_landmark_subset(same);
        CHECK(s.subset_size() == 41);
    }
}

TEST_CASE("render_landmark_image") {
    SECTION("axis-aligned two-point chain covers exactly row 64") {
        LandmarkSet lm;
        lm.points.assign(68, Point{-1000, -1000});
        lm.subset_mask.assign(68, 0);
        lm.points[27] = {0, 64};
        lm.points[28] = {127, 64};
        lm.subset_mask[27] = lm.subset_mask[28] = 1;
        auto res = render_landmark_image(lm, 128, 128, 1.0);
        for (int r = 0; r < 128; ++r)
            for (int c = 0; c < 128; ++c)
                CHECK(res.image.at2(r, c) == (r == 64 ? 1 : 0));
    }
    SECTION("empty subset renders all-zero") {
        LandmarkSet lm;
        lm.points.assign(68, Point{10, 10});
        lm.subset_mask.assign(68, 0);
        auto res = render_landmark_image(lm, 32, 32);
        CHECK(res.image.sum() == 0);
    }
    SECTION("all points out of frame warn and render all-zero") {
        auto lm = grid_landmarks();
        for (auto& p : lm.points) {
            p.x += 10000;
            p.y += 10000;
        }
        auto subset = select_landmark_subset(lm);
        auto res = render_landmark_image(subset, 128, 128);
        CHECK(res.out_of_frame_warning);
        CHECK(res.image.sum() == 0);
    }
    SECTION("full subset equals the brute-force oracle") {
        for (std::uint64_t seed : {0ull, 1ull, 2ull}) {
            SyntheticOptions opt;
            opt.resolution = 128;
            opt.seed = seed;
            auto sample = make_synthetic_face(static_cast<int>(seed), 3, opt);
            auto subset = select_landmark_subset(sample.landmarks);
            auto fast = render_landmark_image(subset, 128, 128, 1.0);
            auto slow = brute_force_raster(subset, 128, 128, 1.0);
            REQUIRE(max_abs_diff(fast.image.cast<float>(), slow.cast<float>()) == 0.0f);
        }
    }
    SECTION("raster is invariant to excluded landmark positions") {
        auto lm = grid_landmarks();
        auto s1 = select_landmark_subset(lm);
        auto r1 = render_landmark_image(s1, 128, 128);
        // move eyes and brows (excluded indices)
        for (int i = 17; i <= 26; ++i) lm.points[i].y -= 9;
        for (int i = 36; i <= 47; ++i) lm.points[i].x += 7;
        auto s2 = select_landmark_subset(lm);
        auto r2 = render_landmark_image(s2, 128, 128);
        CHECK(max_abs_diff(r1.image.cast<float>(), r2.image.cast<float>()) == 0.0f);
        CHECK(r1.image.storage() == r2.image.storage());  // identical bytes
    }
    SECTION("rendering is deterministic") {
        auto subset = select_landmark_subset(grid_landmarks());
        auto a = render_landmark_image(subset, 128, 128);
        auto b = render_landmark_image(subset, 128, 128);
        CHECK(a.image.storage() == b.image.storage());
    }
}

TEST_CASE("build_masked_background") {
    auto subset = select_landmark_subset(grid_landmarks());
    SECTION("partition: inside is the fill value, outside is bit-exact source") {
        Tensor<float> gray({3, 128, 128}, 0.5f);
        auto masked = build_masked_background(gray, subset);
        std::int64_t inside = 0, outside = 0;
        for (int c = 0; c < 3; ++c)
            for (int r = 0; r < 128; ++r)
                for (int col = 0; col < 128; ++col) {
                    if (masked.face_mask.at2(r, col)) {
                        CHECK(masked.pixels.at3(c, r, col) == 0.0f);
                        ++inside;
                    } else {
                        CHECK(masked.pixels.at3(c, r, col) == 0.5f);
                        ++outside;
                    }
                }
        CHECK(inside + outside == 3 * 128 * 128);
        CHECK(inside > 0);
    }
    SECTION("mask area fraction of a centered face is within (0.05, 0.6)") {
        const double area = shoelace(face_region_polygon(subset));
        const double frac = area / (128.0 * 128.0);
        CHECK(frac > 0.05);
        CHECK(frac < 0.6);
        // raster area agrees with the shoelace oracle to within the boundary
        auto masked = build_masked_background(Tensor<float>({3, 128, 128}), subset);
        double raster_area = 0;
        for (std::int64_t i = 0; i < masked.face_mask.numel(); ++i)
            raster_area += masked.face_mask[i];
        CHECK(std::abs(raster_area - area) / area < 0.15);
    }
    SECTION("forehead stays visible: pixels above the raised line are outside") {
        Tensor<float> gray({3, 128, 128}, 0.25f);
        auto masked = build_masked_background(gray, subset);
        double jaw_top = 1e9, jaw_h_min = 1e9, jaw_h_max = -1e9;
        for (int i = 0; i <= 16; ++i) {
            jaw_top = std::min(jaw_top, subset.points[i].y);
            jaw_h_min = std::min(jaw_h_min, subset.points[i].y);
            jaw_h_max = std::max(jaw_h_max, subset.points[i].y);
        }
        const int forehead_row =
            static_cast<int>(jaw_top - 0.15 * (jaw_h_max - jaw_h_min)) - 2;
        REQUIRE(forehead_row >= 0);
        for (int col = 0; col < 128; ++col) CHECK(masked.face_mask.at2(forehead_row, col) == 0);
    }
    SECTION("collinear jaw errors as degenerate") {
        LandmarkSet lm;
        lm.points.assign(68, Point{0, 0});
        for (int i = 0; i < 68; ++i) lm.points[i] = {static_cast<double>(i), 64.0};
        auto s = select_landmark_subset(lm);
        CHECK_THROWS_AS(build_masked_background(Tensor<float>({3, 128, 128}), s), Error);
    }
}

TEST_CASE("load_dataset walks identities, skips failures, caches round-trip") {
    auto tmp = fs::temp_directory_path() / "faceanon_ds_test";
    fs::remove_all(tmp);
    SyntheticOptions opt;
    opt.n_identities = 2;
    opt.per_identity = 3;
    opt.resolution = 64;

    // lay out <root>/<id>/<img>.png with landmark sidecars
    std::map<std::string, LandmarkSet> sidecars;
    for (int id = 0; id < opt.n_identities; ++id) {
        auto dir = tmp / "root" / ("person_" + std::to_string(id));
        fs::create_directories(dir);
        for (int k = 0; k < opt.per_identity; ++k) {
            auto sample = make_synthetic_face(id, k, opt);
            auto file = dir / ("img_" + std::to_string(k) + ".png");
            io::write_image(file, sample.image);
            sidecars[file.string()] = sample.landmarks;
        }
    }

    int provider_failures = 0;
    LandmarkProvider provider = [&](const fs::path& p) -> std::optional<LandmarkDetection> {
        auto it = sidecars.find(p.string());
        if (it == sidecars.end() || provider_failures-- > 0) return std::nullopt;
        LandmarkDetection det;
        det.landmarks = it->second;
        return det;
    };
    DatasetOptions dopt;
    dopt.resolution = 64;

    SECTION("all detectable: 6 records, N=2") {
        auto ds = load_dataset(tmp / "root", provider, io::read_image, dopt);
        CHECK(ds.records.size() == 6);
        CHECK(ds.n_identities() == 2);
        CHECK(ds.skipped == 0);
        CHECK(ds.identity_names == std::vector<std::string>{"person_0", "person_1"});
        for (const auto& r : ds.records) {
            CHECK(r.image.shape() == Shape{3, 64, 64});
            CHECK(r.landmark_image.shape() == Shape{64, 64});
            CHECK(r.image.min() >= 0.0f);
            CHECK(r.image.max() <= 1.0f);
        }

        SECTION("cache round-trip preserves bytes") {
            write_dataset_cache(ds, tmp / "cache");
            auto back = read_dataset_cache(tmp / "cache");
            REQUIRE(back.records.size() == ds.records.size());
            CHECK(back.n_identities() == 2);
            for (std::size_t i = 0; i < ds.records.size(); ++i) {
                CHECK(back.records[i].image.storage() == ds.records[i].image.storage());
                CHECK(back.records[i].landmark_image.storage() ==
                      ds.records[i].landmark_image.storage());
                CHECK(back.records[i].identity == ds.records[i].identity);
            }
        }
    }
    SECTION("one undetectable image is skipped and counted") {
        provider_failures = 1;
        auto ds = load_dataset(tmp / "root", provider, io::read_image, dopt);
        CHECK(ds.records.size() == 5);
        CHECK(ds.skipped == 1);
        CHECK(ds.n_identities() == 2);
    }
    SECTION("empty root errors") {
        fs::create_directories(tmp / "empty");
        CHECK_THROWS_WITH(load_dataset(tmp / "empty", provider, io::read_image, dopt),
                          Catch::Matchers::ContainsSubstring("no identities"));
    }
    SECTION("missing root errors") {
        CHECK_THROWS_AS(load_dataset(tmp / "nowhere", provider, io::read_image, dopt), Error);
    }
    fs::remove_all(tmp);
}

TEST_CASE("body mode: silhouette mask replaces the landmark image") {
    Tensor<float> img({3, 64, 64}, 0.8f);
    LandmarkDetection det;
    det.silhouette = std::vector<Point>{{16, 8}, {48, 8}, {48, 60}, {16, 60}};
    DatasetOptions opt;
    opt.resolution = 64;
    opt.body_mode = true;
    auto rec = make_record(img, det, 0, opt);
    CHECK(rec.landmark_image.shape() == Shape{64, 64});
    CHECK(rec.face_mask.storage() == rec.landmark_image.storage());
    // downstream shapes unchanged: conditioning still 6 channels
    std::vector<const AnnotatedFace*> one{&rec};
    auto cond = conditioning_batch(one);
    CHECK(cond.shape() == Shape{1, 6, 64, 64});
    // inside the silhouette the background is blanked
    CHECK(rec.masked_bg.at3(0, 30, 30) == 0.0f);
    CHECK(rec.masked_bg.at3(0, 2, 2) == 0.8f);

    SECTION("degenerate silhouette errors") {
        LandmarkDetection bad;
        bad.silhouette = std::vector<Point>{{5, 5}, {20, 5}, {35, 5}};
        CHECK_THROWS_AS(make_record(img, bad, 0, opt), Error);
    }
}

TEST_CASE("conditioning layout: background channels 0-2, pose channels 3-5") {
    SyntheticOptions opt;
    opt.resolution = 32;
    auto sample = make_synthetic_face(1, 1, opt);
    LandmarkDetection det;
    det.landmarks = sample.landmarks;
    DatasetOptions dopt;
    dopt.resolution = 32;
    auto rec = make_record(sample.image, det, 0, dopt);
    std::vector<const AnnotatedFace*> one{&rec};
    auto cond = conditioning_batch(one);
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j) {
            CHECK(cond.at4(0, 0, i, j) == rec.masked_bg.at3(0, i, j) * 2.0f - 1.0f);
            const float lm = rec.landmark_image.at2(i, j) ? 1.0f : -1.0f;
            CHECK(cond.at4(0, 3, i, j) == lm);
            CHECK(cond.at4(0, 4, i, j) == lm);
            CHECK(cond.at4(0, 5, i, j) == lm);
        }
}
