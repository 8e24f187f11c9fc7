#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "faceanon/anonymize/pipeline.hpp"
#include "faceanon/video/smooth.hpp"

namespace faceanon {

/// Tracks file: {"tracks": {"<track_id>": [{"frame": n, "landmarks":
/// [[x,y] x 68]}, ...]}}.
inline std::map<std::string, LandmarkTrack> parse_tracks_json(const nlohmann::json& j) {
    std::map<std::string, LandmarkTrack> out;
    for (const auto& [id, arr] : j.at("tracks").items()) {
        LandmarkTrack t;
        for (const auto& entry : arr) {
            t.frames.push_back(entry.at("frame").get<std::int64_t>());
            std::vector<Point> pts;
            for (const auto& p : entry.at("landmarks"))
                pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            t.points.push_back(std::move(pts));
        }
        t.validate();
        out[id] = std::move(t);
    }
    return out;
}

struct VideoFrameResult {
    Tensor<float> image;
    std::vector<FaceBox> boxes;
};

/// Smooths every track, then anonymizes frame by frame with one stable
/// target identity per (camera, track). Gaps up to window/2 are filled by
/// the interpolating fit; larger gaps split the track (each split keeps the
/// same person id, and the mapping keeps the identity stable regardless).
inline std::vector<VideoFrameResult> anonymize_video(
    const ParamStore<float>& gen, const ModelConfig& cfg,
    const std::vector<Tensor<float>>& frames,
    const std::map<std::string, LandmarkTrack>& tracks, ControlMapping& mapping,
    const std::string& camera_id, int smooth_window = 9, int smooth_degree = 3,
    const AnonymizeOptions& opt = {}) {
    require(!frames.empty(), "video", "anonymize_video: no frames");
    const auto h = frames[0].dim(1), w = frames[0].dim(2);
    for (const auto& f : frames)
        require(f.dim(1) == h && f.dim(2) == w, "video", "inconsistent frame sizes");

    // per-frame face lists from smoothed tracks, in track-id order
    std::vector<std::vector<DetectedFace>> per_frame(frames.size());
    for (const auto& [track_id, raw] : tracks) {
        for (const auto& segment :
             split_and_interpolate(raw, smooth_window, smooth_degree)) {
            auto smoothed = smooth_track(segment, smooth_window, smooth_degree);
            for (std::size_t i = 0; i < smoothed.track.frames.size(); ++i) {
                const auto frame = smoothed.track.frames[i];
                if (frame < 0 || frame >= static_cast<std::int64_t>(frames.size())) continue;
                DetectedFace face;
                face.person_id = track_id;
                face.landmarks.points = smoothed.track.points[i];
                per_frame[frame].push_back(std::move(face));
            }
        }
    }

    std::vector<VideoFrameResult> out;
    out.reserve(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        auto composed =
            anonymize_image(gen, cfg, frames[i], per_frame[i], mapping, camera_id, opt);
        out.push_back({std::move(composed.image), std::move(composed.boxes)});
    }
    return out;
}

}  // namespace faceanon
