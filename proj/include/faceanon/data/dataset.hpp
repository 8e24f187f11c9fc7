#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "faceanon/core/archive.hpp"
#include "faceanon/core/tensor.hpp"
#include "faceanon/data/landmarks.hpp"
#include "faceanon/data/raster.hpp"

namespace faceanon {

/// One training record: aligned face image, conditioning pair, identity.
struct AnnotatedFace {
    Tensor<float> image;                // [3,R,R] in [0,1]
    Tensor<std::uint8_t> landmark_image;  // [R,R] binary
    Tensor<float> masked_bg;            // [3,R,R], face region zeroed
    Tensor<std::uint8_t> face_mask;     // [R,R] binary
    std::int64_t identity = -1;
};

/// Pluggable landmark source: 68 points in source-image pixel coordinates,
/// or nothing when detection fails. Body mode instead supplies a silhouette
/// polygon to be used as both the pose image and the mask.
struct LandmarkDetection {
    std::optional<LandmarkSet> landmarks;
    std::optional<std::vector<Point>> silhouette;  // body mode
};

using LandmarkProvider =
    std::function<std::optional<LandmarkDetection>(const std::filesystem::path&)>;

/// Decodes an image file to [3,H,W] float in [0,1] (io/image.hpp provides
/// the OpenCV-backed implementation; tests may substitute their own).
using ImageReader = std::function<std::optional<Tensor<float>>(const std::filesystem::path&)>;

struct DatasetOptions {
    int resolution = 128;
    double stroke_width = 1.0;
    std::uint64_t seed = 0;
    bool body_mode = false;
};

struct Dataset {
    std::vector<AnnotatedFace> records;
    std::vector<std::string> identity_names;
    std::int64_t skipped = 0;
    DatasetOptions options;

    std::int64_t n_identities() const {
        return static_cast<std::int64_t>(identity_names.size());
    }
};

namespace dataset_detail {

inline Tensor<float> resize_image_nn(const Tensor<float>& src, int out_h, int out_w) {
    const auto c = src.dim(0), h = src.dim(1), w = src.dim(2);
    Tensor<float> out({c, out_h, out_w});
    for (std::int64_t ch = 0; ch < c; ++ch)
        for (int i = 0; i < out_h; ++i)
            for (int j = 0; j < out_w; ++j) {
                const auto si = std::min<std::int64_t>(h - 1, i * h / out_h);
                const auto sj = std::min<std::int64_t>(w - 1, j * w / out_w);
                out.at3(ch, i, j) = src.at3(ch, si, sj);
            }
    return out;
}

}  // namespace dataset_detail

/// Builds one record from a decoded image and its detection, rescaling both
/// to the configured resolution.
inline AnnotatedFace make_record(const Tensor<float>& image, const LandmarkDetection& det,
                                 std::int64_t identity, const DatasetOptions& opt) {
    const auto src_h = image.dim(1), src_w = image.dim(2);
    const double sx = static_cast<double>(opt.resolution) / static_cast<double>(src_w);
    const double sy = static_cast<double>(opt.resolution) / static_cast<double>(src_h);

    AnnotatedFace rec;
    rec.identity = identity;
    rec.image = (src_h == opt.resolution && src_w == opt.resolution)
                    ? image
                    : dataset_detail::resize_image_nn(image, opt.resolution, opt.resolution);

    if (opt.body_mode) {
        require(det.silhouette.has_value(), "invalid-landmarks",
                "body mode requires a silhouette polygon");
        std::vector<Point> poly = *det.silhouette;
        for (auto& p : poly) {
            p.x *= sx;
            p.y *= sy;
        }
        require(polygon_area(poly) > 1e-9, "invalid-landmarks",
                "degenerate silhouette polygon");
        // the silhouette mask doubles as the pose image
        rec.face_mask = fill_polygon(poly, opt.resolution, opt.resolution);
        rec.landmark_image = rec.face_mask;
        rec.masked_bg = rec.image;
        for (std::int64_t c = 0; c < 3; ++c)
            for (int r = 0; r < opt.resolution; ++r)
                for (int col = 0; col < opt.resolution; ++col)
                    if (rec.face_mask.at2(r, col)) rec.masked_bg.at3(c, r, col) = kMaskFillValue;
        return rec;
    }

    require(det.landmarks.has_value(), "invalid-landmarks", "record without landmarks");
    LandmarkSet scaled = *det.landmarks;
    for (auto& p : scaled.points) {
        p.x *= sx;
        p.y *= sy;
    }
    auto subset = select_landmark_subset(scaled);
    rec.landmark_image =
        render_landmark_image(subset, opt.resolution, opt.resolution, opt.stroke_width).image;
    auto masked = build_masked_background(rec.image, subset);
    rec.masked_bg = std::move(masked.pixels);
    rec.face_mask = std::move(masked.face_mask);
    return rec;
}

/// Walks <root>/<identity>/<image>.{png,jpg,jpeg}, invoking the landmark
/// provider per image. Images with failed detection are skipped and counted.
/// Identities that end up with no usable image are dropped; the survivors
/// are indexed densely in lexicographic directory order, which makes the
/// record stream deterministic.
inline Dataset load_dataset(const std::filesystem::path& root, const LandmarkProvider& provider,
                            const ImageReader& reader, const DatasetOptions& opt) {
    namespace fs = std::filesystem;
    require(fs::is_directory(root), "empty-dataset",
            "dataset root is not a directory: " + root.string());

    std::vector<fs::path> id_dirs;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) id_dirs.push_back(e.path());
    std::sort(id_dirs.begin(), id_dirs.end());

    Dataset out;
    out.options = opt;
    for (const auto& dir : id_dirs) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(dir)) {
            if (!e.is_regular_file()) continue;
            auto ext = e.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(),
                           [](unsigned char ch) { return std::tolower(ch); });
            if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());

        std::vector<AnnotatedFace> records;
        for (const auto& f : files) {
            auto det = provider(f);
            if (!det.has_value()) {
                ++out.skipped;
                continue;
            }
            auto img = reader(f);
            require(img.has_value(), "io", "failed to read image: " + f.string());
            records.push_back(
                make_record(*img, *det, static_cast<std::int64_t>(out.identity_names.size()),
                            opt));
        }
        if (records.empty()) continue;  // identity contributed nothing usable
        out.identity_names.push_back(dir.filename().string());
        for (auto& r : records) out.records.push_back(std::move(r));
    }
    require(!out.identity_names.empty(), "empty-dataset",
            "no identities found under " + root.string());
    return out;
}

// ------------------------------------------------------------------ caching

/// Writes one archive per record plus a JSON manifest describing the
/// preprocessing parameters.
inline void write_dataset_cache(const Dataset& ds, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "records");
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const auto& r = ds.records[i];
        Archive ar;
        ar.put("image", r.image);
        ar.put("landmark_image", r.landmark_image);
        ar.put("masked_bg", r.masked_bg);
        ar.put("face_mask", r.face_mask);
        Tensor<std::int64_t> id({1});
        id[0] = r.identity;
        ar.put("identity_index", id);
        char name[32];
        std::snprintf(name, sizeof(name), "%06zu.fat", i);
        ar.save(dir / "records" / name);
    }
    nlohmann::json manifest;
    manifest["N"] = ds.n_identities();
    manifest["count"] = ds.records.size();
    manifest["skipped"] = ds.skipped;
    manifest["resolution"] = ds.options.resolution;
    manifest["seed"] = ds.options.seed;
    manifest["body_mode"] = ds.options.body_mode;
    manifest["identities"] = ds.identity_names;
    manifest["params"] = {
        {"stroke_width", ds.options.stroke_width},
        {"mask_fill", kMaskFillValue},
        {"forehead_raise", kForeheadRaiseFraction},
        {"jaw", {landmark_ranges::kJawBegin, landmark_ranges::kJawEnd}},
        {"nose_bridge", {landmark_ranges::kNoseBridgeBegin, landmark_ranges::kNoseBridgeEnd}},
        {"mouth", {landmark_ranges::kMouthBegin, landmark_ranges::kMouthEnd}},
    };
    std::ofstream os(dir / "manifest.json");
    os << manifest.dump(2) << "\n";
    require(os.good(), "io", "failed to write manifest");
}

inline Dataset read_dataset_cache(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::ifstream is(dir / "manifest.json");
    require(is.good(), "empty-dataset", "no manifest.json under " + dir.string());
    nlohmann::json manifest = nlohmann::json::parse(is);

    Dataset out;
    out.identity_names = manifest["identities"].get<std::vector<std::string>>();
    out.skipped = manifest["skipped"].get<std::int64_t>();
    out.options.resolution = manifest["resolution"].get<int>();
    out.options.seed = manifest["seed"].get<std::uint64_t>();
    out.options.body_mode = manifest.value("body_mode", false);
    out.options.stroke_width = manifest["params"]["stroke_width"].get<double>();

    const auto count = manifest["count"].get<std::size_t>();
    out.records.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%06zu.fat", i);
        auto ar = Archive::load(dir / "records" / name);
        AnnotatedFace r;
        r.image = ar.get<float>("image");
        r.landmark_image = ar.get<std::uint8_t>("landmark_image");
        r.masked_bg = ar.get<float>("masked_bg");
        r.face_mask = ar.get<std::uint8_t>("face_mask");
        r.identity = ar.get<std::int64_t>("identity_index")[0];
        out.records.push_back(std::move(r));
    }
    require(!out.identity_names.empty(), "empty-dataset", "cache has no identities");
    return out;
}

// ------------------------------------------------- model-boundary conversion

/// Stacks the conditioning pair into the 6-channel generator input, mapped
/// from [0,1] to [-1,1]: channels 0-2 masked background, channels 3-5 the
/// binary pose image replicated.
inline void fill_conditioning(const AnnotatedFace& rec, Tensor<float>& dst, std::int64_t sample) {
    const auto r = rec.masked_bg.dim(1), w = rec.masked_bg.dim(2);
    for (std::int64_t c = 0; c < 3; ++c)
        for (std::int64_t i = 0; i < r; ++i)
            for (std::int64_t j = 0; j < w; ++j)
                dst.at4(sample, c, i, j) = rec.masked_bg.at3(c, i, j) * 2.0f - 1.0f;
    for (std::int64_t c = 3; c < 6; ++c)
        for (std::int64_t i = 0; i < r; ++i)
            for (std::int64_t j = 0; j < w; ++j)
                dst.at4(sample, c, i, j) =
                    rec.landmark_image.at2(i, j) ? 1.0f : -1.0f;
}

inline Tensor<float> conditioning_batch(const std::vector<const AnnotatedFace*>& recs) {
    require(!recs.empty(), "empty-batch", "conditioning_batch: empty");
    const auto r = recs[0]->masked_bg.dim(1);
    Tensor<float> out({static_cast<std::int64_t>(recs.size()), 6, r, r});
    for (std::size_t i = 0; i < recs.size(); ++i) fill_conditioning(*recs[i], out, i);
    return out;
}

/// Real images mapped to the model's [-1,1] range.
inline Tensor<float> image_batch(const std::vector<const AnnotatedFace*>& recs) {
    require(!recs.empty(), "empty-batch", "image_batch: empty");
    const auto r = recs[0]->image.dim(1);
    Tensor<float> out({static_cast<std::int64_t>(recs.size()), 3, r, r});
    for (std::size_t s = 0; s < recs.size(); ++s)
        for (std::int64_t c = 0; c < 3; ++c)
            for (std::int64_t i = 0; i < r; ++i)
                for (std::int64_t j = 0; j < r; ++j)
                    out.at4(s, c, i, j) = recs[s]->image.at3(c, i, j) * 2.0f - 1.0f;
    return out;
}

inline Tensor<float> one_hot_batch(const std::vector<std::int64_t>& ids, std::int64_t n) {
    Tensor<float> out({static_cast<std::int64_t>(ids.size()), n});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        require(ids[i] >= 0 && ids[i] < n, "invalid-control", "identity index out of range");
        out.at2(i, ids[i]) = 1.0f;
    }
    return out;
}

}  // namespace faceanon
