// End-to-end behavior of the installed binaries, driven through a shell.
// Paths come from the environment (set by ctest): FACEANON_CLI, FACEANON_SYNTH.

#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

RunResult run(const std::string& cmd) {
    const auto dir = fs::temp_directory_path() / "faceanon_cli_io";
    fs::create_directories(dir);
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const auto full = cmd + " > " + out.string() + " 2> " + err.string();
    const int status = std::system(full.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string cli() {
    const char* p = std::getenv("FACEANON_CLI");
    REQUIRE(p != nullptr);
    return p;
}

std::string synth() {
    const char* p = std::getenv("FACEANON_SYNTH");
    REQUIRE(p != nullptr);
    return p;
}

std::string file_bytes(const fs::path& p) { return slurp(p); }

}  // namespace

TEST_CASE("usage surfaces") {
    SECTION("--help exits 0 with usage text") {
        auto r = run(cli() + " --help");
        CHECK(r.exit_code == 0);
        CHECK(r.out.find("Usage") != std::string::npos);
        auto r2 = run(cli() + " evaluate --help");
        CHECK(r2.exit_code == 0);
    }
    SECTION("unknown flag exits 2 and names the flag") {
        auto r = run(cli() + " train --data /tmp/x --definitely-not-a-flag");
        CHECK(r.exit_code == 2);
        CHECK(r.err.find("--definitely-not-a-flag") != std::string::npos);
    }
    SECTION("unknown subcommand exits 2") {
        auto r = run(cli() + " frobnicate");
        CHECK(r.exit_code == 2);
    }
    SECTION("missing dataset propagates the module error with exit 1") {
        auto r = run(cli() + " train --data /tmp/no_such_cache_dir_512");
        CHECK(r.exit_code == 1);
        CHECK(r.err.find("empty-dataset") != std::string::npos);
    }
}

TEST_CASE("full pipeline smoke on a tiny synthetic corpus") {
    const auto root = fs::temp_directory_path() / "faceanon_cli_smoke";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string R = root.string();

    // corpus + video sequence
    REQUIRE(run(synth() + " --out " + R + "/raw --identities 3 --per-identity 4" +
                " --resolution 32 --seed 5 --video-frames 6")
                .exit_code == 0);

    // prepare
    auto prep = run(cli() + " prepare --input " + R + "/raw --output " + R +
                    "/cache --resolution 32");
    REQUIRE(prep.exit_code == 0);
    CHECK(fs::exists(root / "cache" / "manifest.json"));
    CHECK(fs::exists(root / "cache" / "run_manifest.json"));
    {
        auto manifest = nlohmann::json::parse(slurp(root / "cache" / "manifest.json"));
        CHECK(manifest["N"] == 3);
        CHECK(manifest["count"] == 12);
        CHECK(manifest["params"]["stroke_width"] == 1.0);
    }

    const std::string small_net =
        " --gen-base 8 --disc-base 8 --fc-width 64 --plain-blocks 1 --batch-size 6";

    // pretrain-id
    auto pre = run(cli() + " pretrain-id --data " + R + "/cache --out " + R +
                   "/idnet.fat --pretrain-epochs 2 --pretrain-lr 2e-4 --seed 3" + small_net);
    REQUIRE(pre.exit_code == 0);
    CHECK(fs::exists(root / "idnet.fat"));

    // train
    auto tr = run(cli() + " train --data " + R + "/cache --init " + R + "/idnet.fat --out " +
                  R + "/run --epochs 1 --lr 1e-4 --seed 3" + small_net);
    REQUIRE(tr.exit_code == 0);
    CHECK(fs::exists(root / "run" / "final.fat"));
    CHECK(fs::exists(root / "run" / "epoch_0000.fat"));
    CHECK(fs::exists(root / "run" / "run_manifest.json"));
    {
        std::ifstream log(root / "run" / "log.jsonl");
        std::string line;
        int lines = 0;
        while (std::getline(log, line)) {
            auto j = nlohmann::json::parse(line);
            CHECK(j.contains("d_loss"));
            CHECK(j.contains("g_adv"));
            CHECK(j.contains("g_id"));
            CHECK(j.contains("id_ft"));
            ++lines;
        }
        CHECK(lines == 2);  // 12 records / batch 6
    }

    // anonymize one identity directory, twice; outputs must be identical
    auto an1 = run(cli() + " anonymize --checkpoint " + R + "/run/final.fat --input " + R +
                   "/raw/id_000 --output " + R + "/anon1 --camera-id c1 --seed 9 --mapping " +
                   R + "/map.json");
    REQUIRE(an1.exit_code == 0);
    CHECK(fs::exists(root / "anon1" / "img_000.png"));
    CHECK(fs::exists(root / "anon1" / "boxes.jsonl"));
    CHECK(fs::exists(root / "map.json"));
    auto an2 = run(cli() + " anonymize --checkpoint " + R + "/run/final.fat --input " + R +
                   "/raw/id_000 --output " + R + "/anon2 --camera-id c1 --seed 9 --mapping " +
                   R + "/map.json");
    REQUIRE(an2.exit_code == 0);
    CHECK(file_bytes(root / "anon1" / "img_000.png") ==
          file_bytes(root / "anon2" / "img_000.png"));

    // anonymize-video
    auto av = run(cli() + " anonymize-video --checkpoint " + R + "/run/final.fat --frames " +
                  R + "/raw/video/frames --tracks " + R + "/raw/video/tracks.json --output " +
                  R + "/vout --camera-id c2 --seed 9");
    REQUIRE(av.exit_code == 0);
    int vout_frames = 0;
    for (const auto& e : fs::directory_iterator(root / "vout"))
        vout_frames += e.path().extension() == ".png";
    CHECK(vout_frames == 6);

    // baseline
    auto bl = run(cli() + " baseline --kind pixelize --param 8 --input " + R +
                  "/raw/id_000 --output " + R + "/pix");
    REQUIRE(bl.exit_code == 0);
    CHECK(fs::exists(root / "pix" / "img_000.png"));

    // evaluate: recall, detection, fid
    auto ev = run(cli() + " evaluate recall --checkpoint " + R + "/idnet.fat --data " + R +
                  "/cache --out " + R + "/recall.json");
    REQUIRE(ev.exit_code == 0);
    {
        auto rep = nlohmann::json::parse(slurp(root / "recall.json"));
        CHECK(rep["metric"] == "recall_at_1");
        CHECK(rep["value"].get<double>() >= 0.0);
        CHECK(rep["value"].get<double>() <= 100.0);
        CHECK(rep.contains("config_hash"));
    }
    auto evd = run(cli() + " evaluate detection --data " + R +
                   "/raw/id_000 --detector sidecar --out " + R + "/det.json --csv " + R +
                   "/table.csv --label ours");
    REQUIRE(evd.exit_code == 0);
    CHECK(nlohmann::json::parse(slurp(root / "det.json"))["value"] == 100.0);
    CHECK(slurp(root / "table.csv").find("ours") != std::string::npos);

    auto evf = run(cli() + " evaluate fid --checkpoint " + R + "/idnet.fat --real " + R +
                   "/raw/id_000 --generated " + R + "/anon1 --out " + R + "/fid.json");
    REQUIRE(evf.exit_code == 0);
    CHECK(nlohmann::json::parse(slurp(root / "fid.json"))["value"].get<double>() >= 0.0);

    // evaluate tar on a synthesized 10x600 protocol over the corpus images
    {
        std::vector<std::string> imgs;
        for (int k = 0; k < 4; ++k)
            imgs.push_back(R + "/raw/id_000/img_00" + std::to_string(k) + ".png");
        for (int k = 0; k < 4; ++k)
            imgs.push_back(R + "/raw/id_001/img_00" + std::to_string(k) + ".png");
        nlohmann::json folds = nlohmann::json::array();
        for (int f = 0; f < 10; ++f) {
            nlohmann::json fold = nlohmann::json::array();
            for (int i = 0; i < 600; ++i) {
                const bool same = i < 300;
                // same pairs: two images of id_000; diff pairs: id_000 vs id_001
                const auto& a = imgs[i % 4];
                const auto& b = same ? imgs[(i + 1) % 4] : imgs[4 + (i % 4)];
                fold.push_back({{"a", a}, {"b", b}, {"same", same}});
            }
            folds.push_back(fold);
        }
        std::ofstream os(root / "pairs.json");
        os << nlohmann::json{{"folds", folds}}.dump();
        os.close();
        auto evt = run(cli() + " evaluate tar --checkpoint " + R + "/idnet.fat --pairs " + R +
                       "/pairs.json --far 0.001 --out " + R + "/tar.json");
        REQUIRE(evt.exit_code == 0);
        auto rep = nlohmann::json::parse(slurp(root / "tar.json"));
        CHECK(rep["metric"] == "tar_at_far");
        CHECK(rep["ci"].contains("stddev"));
        CHECK(rep["ci"]["per_fold"].size() == 10);
    }

    fs::remove_all(root);
}
