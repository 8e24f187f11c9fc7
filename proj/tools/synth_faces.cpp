// Generates the parametric cartoon-face corpus used for desk-scale studies
// and demos: <out>/<identity>/<image>.png plus landmark sidecars, and
// optionally a frame sequence with a tracks file for the video pipeline.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "faceanon/data/synthetic.hpp"
#include "faceanon/io/image.hpp"
#include "faceanon/io/sidecar.hpp"

namespace fs = std::filesystem;
using namespace faceanon;

namespace {

/// A short sequence of one face drifting across the frame with light jitter;
/// landmarks recorded per frame for the tracks file.
void write_video(const fs::path& out, int frames, int resolution, std::uint64_t seed) {
    fs::create_directories(out / "frames");
    SyntheticOptions opt;
    opt.resolution = resolution;
    opt.seed = seed;
    nlohmann::json track = nlohmann::json::array();
    Rng rng(seed);
    for (int f = 0; f < frames; ++f) {
        auto sample = make_synthetic_face(0, 0, opt);
        // drift + per-frame jitter applied to both pixels and landmarks via
        // whole-image shift
        const int dx = static_cast<int>(f * 1.5 + rng.uniform(-1.0, 1.0));
        Tensor<float> frame({3, resolution, resolution}, 0.3f);
        for (std::int64_t c = 0; c < 3; ++c)
            for (int i = 0; i < resolution; ++i)
                for (int j = 0; j < resolution; ++j) {
                    const int sj = j - dx;
                    if (sj >= 0 && sj < resolution)
                        frame.at3(c, i, j) = sample.image.at3(c, i, sj);
                }
        char name[32];
        std::snprintf(name, sizeof(name), "%06d.png", f);
        io::write_image(out / "frames" / name, frame);
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : sample.landmarks.points) pts.push_back({p.x + dx, p.y});
        track.push_back({{"frame", f}, {"landmarks", pts}});
    }
    std::ofstream os(out / "tracks.json");
    os << nlohmann::json{{"tracks", {{"person0", track}}}}.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic face corpus generator"};
    fs::path out = "synth";
    int n_ids = 20, per_id = 20, resolution = 64, video_frames = 0;
    std::uint64_t seed = 1;
    app.add_option("--out", out, "output directory")->capture_default_str();
    app.add_option("--identities", n_ids)->capture_default_str();
    app.add_option("--per-identity", per_id)->capture_default_str();
    app.add_option("--resolution", resolution)->capture_default_str();
    app.add_option("--seed", seed)->capture_default_str();
    app.add_option("--video-frames", video_frames,
                   "also emit a drifting-face frame sequence with tracks.json");
    CLI11_PARSE(app, argc, argv);

    try {
        SyntheticOptions opt;
        opt.n_identities = n_ids;
        opt.per_identity = per_id;
        opt.resolution = resolution;
        opt.seed = seed;
        for (int id = 0; id < n_ids; ++id) {
            char dname[32];
            std::snprintf(dname, sizeof(dname), "id_%03d", id);
            fs::create_directories(out / dname);
            for (int k = 0; k < per_id; ++k) {
                auto sample = make_synthetic_face(id, k, opt);
                char fname[32];
                std::snprintf(fname, sizeof(fname), "img_%03d.png", k);
                const auto path = out / dname / fname;
                io::write_image(path, sample.image);
                io::write_sidecar(path, sample.landmarks);
            }
        }
        if (video_frames > 0) write_video(out / "video", video_frames, resolution, seed);
        std::cout << "wrote " << n_ids << "x" << per_id << " images under " << out << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
