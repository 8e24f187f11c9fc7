#pragma once

#include <filesystem>
#include <fstream>
#include <optional>

#include <json.hpp>

#include "faceanon/anonymize/pipeline.hpp"
#include "faceanon/data/dataset.hpp"

namespace faceanon::io {

/// Landmark sidecars live next to each image as <stem>.landmarks.json with
/// either {"points": [[x,y] x 68]} or, in body mode, {"silhouette":
/// [[x,y], ...]}. Multi-face sidecars carry {"faces": [{"person_id": ...,
/// "points": [...]}]}.
inline std::filesystem::path sidecar_path(const std::filesystem::path& image) {
    auto p = image;
    p.replace_extension();
    p += ".landmarks.json";
    return p;
}

inline std::optional<nlohmann::json> read_sidecar(const std::filesystem::path& image) {
    std::ifstream is(sidecar_path(image));
    if (!is.good()) return std::nullopt;
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error&) {
        return std::nullopt;
    }
}

inline std::optional<LandmarkSet> parse_points(const nlohmann::json& arr) {
    if (!arr.is_array() || arr.size() != landmark_ranges::kPointCount) return std::nullopt;
    LandmarkSet lm;
    for (const auto& p : arr) lm.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return lm;
}

/// The pluggable provider used by `prepare`: detection fails (nullopt) when
/// the sidecar is absent or malformed.
inline LandmarkProvider sidecar_provider(bool body_mode) {
    return [body_mode](const std::filesystem::path& image)
               -> std::optional<LandmarkDetection> {
        auto j = read_sidecar(image);
        if (!j) return std::nullopt;
        LandmarkDetection det;
        if (body_mode) {
            if (!j->contains("silhouette")) return std::nullopt;
            std::vector<Point> poly;
            for (const auto& p : (*j)["silhouette"])
                poly.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            if (poly.size() < 3) return std::nullopt;
            det.silhouette = std::move(poly);
            return det;
        }
        if (!j->contains("points")) return std::nullopt;
        auto lm = parse_points((*j)["points"]);
        if (!lm) return std::nullopt;
        det.landmarks = std::move(lm);
        return det;
    };
}

/// Faces of one image for the anonymization pipeline; single-face sidecars
/// get the image stem as their person id.
inline std::vector<DetectedFace> sidecar_faces(const std::filesystem::path& image) {
    auto j = read_sidecar(image);
    std::vector<DetectedFace> out;
    if (!j) return out;
    if (j->contains("faces")) {
        for (const auto& f : (*j)["faces"]) {
            auto lm = parse_points(f.at("points"));
            if (!lm) continue;
            DetectedFace face;
            face.landmarks = std::move(*lm);
            face.person_id = f.value("person_id", image.stem().string());
            out.push_back(std::move(face));
        }
        return out;
    }
    if (j->contains("points")) {
        if (auto lm = parse_points((*j)["points"])) {
            DetectedFace face;
            face.landmarks = std::move(*lm);
            face.person_id = image.stem().string();
            out.push_back(std::move(face));
        }
    }
    return out;
}

inline void write_sidecar(const std::filesystem::path& image, const LandmarkSet& lm) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : lm.points) pts.push_back({p.x, p.y});
    std::ofstream os(sidecar_path(image));
    os << nlohmann::json{{"points", pts}}.dump() << "\n";
    require(os.good(), "io", "failed to write sidecar for " + image.string());
}

}  // namespace faceanon::io
