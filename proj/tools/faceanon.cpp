// Unified command-line entry point. Stages communicate through the
// documented file formats only (dataset cache, checkpoints, mapping JSON,
// tracks JSON), so any stage can run on a different machine.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "faceanon/anonymize/pipeline.hpp"
#include "faceanon/baselines/baselines.hpp"
#include "faceanon/data/dataset.hpp"
#include "faceanon/eval/embed.hpp"
#include "faceanon/io/image.hpp"
#include "faceanon/io/manifest.hpp"
#include "faceanon/io/sidecar.hpp"
#include "faceanon/train/trainer.hpp"
#include "faceanon/video/pipeline.hpp"

namespace fs = std::filesystem;
using namespace faceanon;

namespace {

std::vector<fs::path> list_images(const fs::path& dir) {
    std::vector<fs::path> files;
    require(fs::is_directory(dir), "io", "not a directory: " + dir.string());
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        auto ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

nlohmann::json argv_json(int argc, char** argv) {
    nlohmann::json j = nlohmann::json::array();
    for (int i = 0; i < argc; ++i) j.push_back(argv[i]);
    return j;
}

struct CommonFlags {
    std::uint64_t seed = 0;
    bool json_logs = false;
};

void emit_log(const CommonFlags& flags, const std::string& plain, const nlohmann::json& js) {
    if (flags.json_logs)
        std::cout << js.dump() << "\n";
    else
        std::cout << plain << "\n";
}

ModelConfig model_from_flags(int resolution, int n, int gen_base, int disc_base, int fc_width,
                             int plain_blocks) {
    ModelConfig m;
    m.resolution = resolution;
    m.n_identities = n;
    m.gen_base = gen_base;
    m.gen_cap = std::min(256, gen_base * 8);
    m.disc_base = disc_base;
    m.disc_cap = std::min(512, disc_base * 16);
    m.fc_width = fc_width;
    m.plain_blocks = plain_blocks;
    return m;
}

Tensor<float> load_model_space_image(const fs::path& path, int resolution) {
    auto img = io::read_image(path);
    require(img.has_value(), "io", "failed to read image: " + path.string());
    auto sized = (img->dim(1) == resolution && img->dim(2) == resolution)
                     ? *img
                     : io::resize_bilinear(*img, resolution, resolution);
    Tensor<float> out({1, 3, resolution, resolution});
    for (std::int64_t i = 0; i < sized.numel(); ++i) out[i] = sized[i] * 2.0f - 1.0f;
    return out;
}

Tensor<double> embed_image_dir(const ParamStore<float>& idnet, const ModelConfig& cfg,
                               const std::vector<fs::path>& files) {
    require(!files.empty(), "empty-dataset", "no images to embed");
    Tensor<float> batch({static_cast<std::int64_t>(files.size()), 3, cfg.resolution,
                         cfg.resolution});
    const auto chw = 3ll * cfg.resolution * cfg.resolution;
    for (std::size_t i = 0; i < files.size(); ++i) {
        auto one = load_model_space_image(files[i], cfg.resolution);
        std::copy_n(one.data(), chw, batch.data() + static_cast<std::int64_t>(i) * chw);
    }
    return embed_images(idnet, cfg, batch);
}

// ------------------------------------------------------------- subcommands

int cmd_prepare(const fs::path& input, const fs::path& output, int resolution,
                double stroke_width, bool body_mode, const CommonFlags& flags,
                const nlohmann::json& argv) {
    io::RunManifest manifest;
    manifest.command = "prepare";
    manifest.argv = argv.get<std::vector<std::string>>();
    manifest.config = {{"resolution", resolution},
                       {"stroke_width", stroke_width},
                       {"body_mode", body_mode}};
    manifest.seed = flags.seed;
    manifest.inputs = {input.string()};
    manifest.outputs = {output.string()};
    manifest.write(output);

    DatasetOptions opt;
    opt.resolution = resolution;
    opt.stroke_width = stroke_width;
    opt.seed = flags.seed;
    opt.body_mode = body_mode;
    auto ds = load_dataset(input, io::sidecar_provider(body_mode), io::read_image, opt);
    write_dataset_cache(ds, output);
    emit_log(flags,
             "prepared " + std::to_string(ds.records.size()) + " records, N=" +
                 std::to_string(ds.n_identities()) + ", skipped " + std::to_string(ds.skipped),
             {{"event", "prepared"},
              {"records", ds.records.size()},
              {"n", ds.n_identities()},
              {"skipped", ds.skipped}});
    return 0;
}

int cmd_pretrain(const fs::path& data, const fs::path& out_ckpt, TrainConfig cfg,
                 ModelConfig model, const CommonFlags& flags, const nlohmann::json& argv) {
    auto ds = read_dataset_cache(data);
    model.resolution = ds.options.resolution;
    model.n_identities = static_cast<int>(ds.n_identities());
    cfg.resolution = ds.options.resolution;
    cfg.validate();
    model.validate();

    io::RunManifest manifest;
    manifest.command = "pretrain-id";
    manifest.argv = argv.get<std::vector<std::string>>();
    manifest.config = {{"train", cfg.to_json()}, {"model", model_config_to_json(model)}};
    manifest.seed = cfg.seed;
    manifest.inputs = {data.string()};
    manifest.outputs = {out_ckpt.string()};
    manifest.write(out_ckpt.parent_path().empty() ? "." : out_ckpt.parent_path());

    auto st = TrainState::create(model, cfg);
    pretrain_identity(st, ds, [&](int epoch, double loss) {
        emit_log(flags, "pretrain epoch " + std::to_string(epoch) + " loss " +
                             std::to_string(loss),
                 {{"event", "pretrain_epoch"}, {"epoch", epoch}, {"loss", loss}});
    });
    st.save(out_ckpt);
    emit_log(flags, "saved " + out_ckpt.string(), {{"event", "saved"}, {"path", out_ckpt}});
    return 0;
}

int cmd_train(const fs::path& data, const fs::path& out_dir, const std::string& init,
              const std::string& resume, TrainConfig cfg, ModelConfig model,
              const std::vector<std::string>& overridden, const CommonFlags& flags,
              const nlohmann::json& argv) {
    auto ds = read_dataset_cache(data);
    model.resolution = ds.options.resolution;
    model.n_identities = static_cast<int>(ds.n_identities());
    cfg.resolution = ds.options.resolution;

    io::RunManifest manifest;
    manifest.command = "train";
    manifest.argv = argv.get<std::vector<std::string>>();
    manifest.config = {{"train", cfg.to_json()},
                       {"model", model_config_to_json(model)},
                       {"init", init},
                       {"resume", resume}};
    manifest.seed = cfg.seed;
    manifest.inputs = {data.string()};
    manifest.outputs = {out_dir.string()};
    manifest.write(out_dir);

    TrainState st = [&] {
        if (!resume.empty()) {
            auto loaded = TrainState::load(resume);
            // allow extending a finished run
            for (const auto& field : overridden)
                if (field == "epochs") loaded.config.epochs = cfg.epochs;
            return loaded;
        }
        if (!init.empty()) {
            // model geometry comes from the checkpoint; only the training
            // schedule is taken from the flags
            auto loaded = TrainState::load(init);
            loaded.config = cfg;
            return loaded;
        }
        std::cerr << "note: training without a pretrained identity network\n";
        return TrainState::create(model, cfg);
    }();
    st.config.validate();

    fit(st, ds, out_dir, [&](const StepLosses& l) {
        if (flags.json_logs)
            std::cout << nlohmann::json{{"step", l.step},
                                        {"d_loss", l.d_loss},
                                        {"g_adv", l.g_adv},
                                        {"g_id", l.g_id},
                                        {"id_ft", l.id_ft}}
                             .dump()
                      << "\n";
        else if (l.step % 50 == 0)
            std::cout << "step " << l.step << " d=" << l.d_loss << " g_adv=" << l.g_adv
                      << " g_id=" << l.g_id << " id_ft=" << l.id_ft << "\n";
    });
    emit_log(flags, "training done: " + (out_dir / "final.fat").string(),
             {{"event", "done"}, {"final", (out_dir / "final.fat").string()}});
    return 0;
}

int cmd_anonymize(const fs::path& ckpt, const fs::path& input, const fs::path& output,
                  const std::string& camera_id, const std::string& mapping_file, bool feather,
                  const CommonFlags& flags, const nlohmann::json& argv) {
    auto st = TrainState::load(ckpt);

    io::RunManifest manifest;
    manifest.command = "anonymize";
    manifest.argv = argv.get<std::vector<std::string>>();
    manifest.config = {{"camera_id", camera_id},
                       {"feather", feather},
                       {"checkpoint", ckpt.string()},
                       {"arch_hash", st.model.arch_hash()}};
    manifest.seed = flags.seed;
    manifest.inputs = {input.string()};
    manifest.outputs = {output.string()};
    manifest.write(output);

    ControlMapping mapping = (!mapping_file.empty() && fs::exists(mapping_file))
                                 ? ControlMapping::load(mapping_file)
                                 : ControlMapping(flags.seed, st.model.n_identities);

    AnonymizeOptions opt;
    opt.feather = feather;

    auto files = list_images(input);
    require(!files.empty(), "empty-dataset", "no images under " + input.string());
    std::ofstream boxes_log(output / "boxes.jsonl");
    std::int64_t faces_total = 0;
    for (const auto& file : files) {
        auto img = io::read_image(file);
        require(img.has_value(), "io", "failed to read " + file.string());
        auto faces = io::sidecar_faces(file);
        auto result = anonymize_image(st.gen, st.model, *img, faces, mapping, camera_id, opt);
        io::write_image(output / file.filename(), result.image);
        nlohmann::json boxes = nlohmann::json::array();
        for (const auto& b : result.boxes) {
            boxes.push_back({{"box", {b.x0, b.y0, b.x1, b.y1}},
                             {"person_id", b.person_id},
                             {"identity", b.applied_identity}});
            ++faces_total;
        }
        boxes_log << nlohmann::json{{"image", file.filename().string()}, {"faces", boxes}}.dump()
                  << "\n";
    }
    if (!mapping_file.empty()) mapping.save(mapping_file);
    emit_log(flags,
             "anonymized " + std::to_string(files.size()) + " images (" +
                 std::to_string(faces_total) + " faces)",
             {{"event", "anonymized"}, {"images", files.size()}, {"faces", faces_total}});
    return 0;
}

int cmd_anonymize_video(const fs::path& ckpt, const fs::path& frames_dir,
                        const fs::path& tracks_file, const fs::path& output,
                        const std::string& camera_id, const std::string& mapping_file,
                        int window, int degree, bool feather, const CommonFlags& flags,
                        const nlohmann::json& argv) {
    auto st = TrainState::load(ckpt);

    io::RunManifest manifest;
    manifest.command = "anonymize-video";
    manifest.argv = argv.get<std::vector<std::string>>();
    manifest.config = {{"camera_id", camera_id},
                       {"window", window},
                       {"degree", degree},
                       {"feather", feather}};
    manifest.seed = flags.seed;
    manifest.inputs = {frames_dir.string(), tracks_file.string()};
    manifest.outputs = {output.string()};
    manifest.write(output);

    auto files = list_images(frames_dir);
    require(!files.empty(), "empty-dataset", "no frames under " + frames_dir.string());
    std::vector<Tensor<float>> frames;
    for (const auto& f : files) {
        auto img = io::read_image(f);
        require(img.has_value(), "io", "failed to read " + f.string());
        frames.push_back(std::move(*img));
    }
    std::ifstream is(tracks_file);
    require(is.good(), "io", "cannot open tracks file: " + tracks_file.string());
    auto tracks = parse_tracks_json(nlohmann::json::parse(is));

    ControlMapping mapping = (!mapping_file.empty() && fs::exists(mapping_file))
                                 ? ControlMapping::load(mapping_file)
                                 : ControlMapping(flags.seed, st.model.n_identities);
    AnonymizeOptions opt;
    opt.feather = feather;
    auto results = anonymize_video(st.gen, st.model, frames, tracks, mapping, camera_id,
                                   window, degree, opt);
    for (std::size_t i = 0; i < results.size(); ++i)
        io::write_image(output / files[i].filename(), results[i].image);
    if (!mapping_file.empty()) mapping.save(mapping_file);
    emit_log(flags, "anonymized " + std::to_string(results.size()) + " frames",
             {{"event", "anonymized_video"}, {"frames", results.size()}});
    return 0;
}

int cmd_baseline(const std::string& kind, double param, const fs::path& input,
                 const fs::path& output, bool full_frame, const CommonFlags& flags,
                 const nlohmann::json& argv) {
    io::RunManifest manifest;
    manifest.command = "baseline";
    manifest.argv = argv.get<std::vector<std::string>>();
    manifest.config = {{"kind", kind}, {"param", param}, {"full_frame", full_frame}};
    manifest.seed = flags.seed;
    manifest.inputs = {input.string()};
    manifest.outputs = {output.string()};
    manifest.write(output);

    BaselineKind bk;
    if (kind == "pixelize")
        bk = BaselineKind::pixelize;
    else if (kind == "blur")
        bk = BaselineKind::blur;
    else if (kind == "mask")
        bk = BaselineKind::mask;
    else
        fail("config", "unknown baseline kind: " + kind);

    auto files = list_images(input);
    require(!files.empty(), "empty-dataset", "no images under " + input.string());
    for (const auto& file : files) {
        auto img = io::read_image(file);
        require(img.has_value(), "io", "failed to read " + file.string());
        Tensor<float> out;
        if (full_frame) {
            switch (bk) {
                case BaselineKind::pixelize: out = pixelize(*img, static_cast<int>(param)); break;
                case BaselineKind::blur: out = blur(*img, static_cast<int>(param)); break;
                case BaselineKind::mask: {
                    Tensor<std::uint8_t> all({img->dim(1), img->dim(2)}, std::uint8_t{1});
                    out = mask_region(*img, all, static_cast<float>(param));
                    break;
                }
            }
        } else {
            out = *img;
            for (const auto& face : io::sidecar_faces(file)) {
                double x0 = 1e18, y0 = 1e18, x1 = -1e18, y1 = -1e18;
                for (const auto& p : face.landmarks.points) {
                    x0 = std::min(x0, p.x);
                    x1 = std::max(x1, p.x);
                    y0 = std::min(y0, p.y);
                    y1 = std::max(y1, p.y);
                }
                out = apply_baseline_in_box(out, bk, param, static_cast<int>(x0),
                                            static_cast<int>(y0),
                                            static_cast<int>(std::ceil(x1)) + 1,
                                            static_cast<int>(std::ceil(y1)) + 1);
            }
        }
        io::write_image(output / file.filename(), out);
    }
    emit_log(flags, "baseline " + kind + " applied to " + std::to_string(files.size()),
             {{"event", "baseline"}, {"kind", kind}, {"count", files.size()}});
    return 0;
}

int cmd_evaluate(const std::string& what, const fs::path& ckpt, const fs::path& data,
                 const fs::path& real_dir, const fs::path& gen_dir, const fs::path& pairs_file,
                 double far, const std::string& detector, const fs::path& out_report,
                 const fs::path& csv, const std::string& label, const CommonFlags& flags,
                 const nlohmann::json& argv) {
    io::RunManifest manifest;
    manifest.command = "evaluate " + what;
    manifest.argv = argv.get<std::vector<std::string>>();
    manifest.config = {{"what", what}, {"far", far}, {"detector", detector}};
    manifest.seed = flags.seed;
    if (!out_report.parent_path().empty()) manifest.write(out_report.parent_path());

    double value = 0;
    nlohmann::json ci;

    if (what == "recall") {
        auto st = TrainState::load(ckpt);
        auto ds = read_dataset_cache(data);
        std::vector<const AnnotatedFace*> recs;
        for (const auto& r : ds.records) recs.push_back(&r);
        value = recall_at_1(embedding_set_of(st.idnet, st.model, recs));
    } else if (what == "fid") {
        auto st = TrainState::load(ckpt);
        auto real_stats = feature_stats(embed_image_dir(st.idnet, st.model, list_images(real_dir)));
        auto gen_stats = feature_stats(embed_image_dir(st.idnet, st.model, list_images(gen_dir)));
        value = fid(real_stats, gen_stats);
    } else if (what == "detection") {
        auto files = list_images(data.empty() ? real_dir : data);
        std::function<bool(const fs::path&)> det;
        if (detector == "sidecar")
            det = [](const fs::path& p) { return !io::sidecar_faces(p).empty(); };
        else if (detector == "always")
            det = [](const fs::path&) { return true; };
        else if (detector == "never")
            det = [](const fs::path&) { return false; };
        else
            fail("config", "unknown detector: " + detector);
        value = detection_rate(files, det);
    } else if (what == "tar") {
        auto st = TrainState::load(ckpt);
        std::ifstream is(pairs_file);
        require(is.good(), "io", "cannot open pairs file: " + pairs_file.string());
        auto j = nlohmann::json::parse(is);
        PairProtocol proto;
        std::vector<fs::path> paths;
        std::map<std::string, std::int64_t> index;
        auto intern = [&](const std::string& p) {
            auto it = index.find(p);
            if (it != index.end()) return it->second;
            const auto id = static_cast<std::int64_t>(paths.size());
            paths.emplace_back(p);
            index[p] = id;
            return id;
        };
        for (const auto& fold_j : j.at("folds")) {
            std::vector<VerificationPair> fold;
            for (const auto& p : fold_j)
                fold.push_back({intern(p.at("a").get<std::string>()),
                                intern(p.at("b").get<std::string>()),
                                p.at("same").get<bool>()});
            proto.folds.push_back(std::move(fold));
        }
        proto.validate();
        auto emb = embed_image_dir(st.idnet, st.model, paths);
        std::vector<double> scores;
        const auto e = emb.dim(1);
        for (const auto& fold : proto.folds)
            for (const auto& p : fold) {
                double acc = 0;
                for (std::int64_t k = 0; k < e; ++k) {
                    const double d = emb.at2(p.a, k) - emb.at2(p.b, k);
                    acc += d * d;
                }
                scores.push_back(-std::sqrt(acc));
            }
        auto res = tar_at_far(scores, proto, far);
        value = res.mean;
        ci = {{"stddev", res.stddev}, {"per_fold", res.per_fold}};
    } else {
        fail("config", "unknown evaluate target: " + what);
    }

    const std::string metric = what == "recall" ? "recall_at_1"
                               : what == "tar"  ? "tar_at_far"
                                                : what;
    io::write_report(out_report, metric, value, ci, manifest.config);
    if (!csv.empty()) io::upsert_csv_row(csv, label.empty() ? "model" : label, metric, value);
    emit_log(flags, metric + " = " + std::to_string(value),
             {{"event", "evaluate"}, {"metric", metric}, {"value", value}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"landmark-conditioned face anonymization toolkit"};
    app.require_subcommand(1);
    const auto argv_j = argv_json(argc, argv);

    CommonFlags flags;
    app.add_option("--seed", flags.seed, "global RNG seed")->capture_default_str();
    app.add_flag("--json-logs", flags.json_logs, "emit line-delimited JSON logs");

    std::string config_file;
    app.add_option("--config", config_file, "JSON config file (flags override it)");

    // prepare
    auto* prepare = app.add_subcommand("prepare", "preprocess a raw image tree into a cache");
    fs::path prep_in, prep_out;
    int prep_res = 128;
    double prep_stroke = 1.0;
    bool prep_body = false;
    prepare->add_option("--input", prep_in, "root with <identity>/<image> layout")->required();
    prepare->add_option("--output", prep_out, "cache directory")
        ->default_val(std::getenv("FACEANON_CACHE_DIR") ? std::getenv("FACEANON_CACHE_DIR")
                                                        : "cache");
    prepare->add_option("--resolution", prep_res, "training resolution")->capture_default_str();
    prepare->add_option("--stroke-width", prep_stroke, "landmark raster stroke width")
        ->capture_default_str();
    prepare->add_flag("--body-mode", prep_body, "silhouette masks instead of landmarks");

    // shared train/model options
    TrainConfig tc;
    ModelConfig mc_flags;
    int flag_gen_base = 32, flag_disc_base = 32, flag_fc_width = 1024, flag_plain = 4;
    auto add_train_opts = [&](CLI::App* cmd) {
        cmd->add_option("--epochs", tc.epochs)->capture_default_str();
        cmd->add_option("--batch-size", tc.batch_size)->capture_default_str();
        cmd->add_option("--lr", tc.lr)->capture_default_str();
        cmd->add_option("--lambda-id", tc.lambda_id)->capture_default_str();
        cmd->add_option("--pretrain-epochs", tc.pretrain_epochs)->capture_default_str();
        cmd->add_option("--pretrain-lr", tc.pretrain_lr)->capture_default_str();
        cmd->add_option("--gen-base", flag_gen_base, "generator base channels")
            ->capture_default_str();
        cmd->add_option("--disc-base", flag_disc_base, "discriminator base channels")
            ->capture_default_str();
        cmd->add_option("--fc-width", flag_fc_width, "FC width / embedding dim")
            ->capture_default_str();
        cmd->add_option("--plain-blocks", flag_plain, "bottleneck residual blocks")
            ->capture_default_str();
    };

    auto* pretrain = app.add_subcommand("pretrain-id", "proxy-NCA identity pretraining");
    fs::path pre_data, pre_out = "idnet.fat";
    pretrain->add_option("--data", pre_data, "prepared cache directory")->required();
    pretrain->add_option("--out", pre_out, "output checkpoint")->capture_default_str();
    add_train_opts(pretrain);

    auto* train = app.add_subcommand("train", "adversarial training with identity guidance");
    fs::path train_data, train_out = "run";
    std::string train_init, train_resume;
    train->add_option("--data", train_data, "prepared cache directory")->required();
    train->add_option("--out", train_out, "run directory")->capture_default_str();
    train->add_option("--init", train_init, "initial checkpoint (pretrained identity)");
    train->add_option("--resume", train_resume, "resume checkpoint");
    add_train_opts(train);

    auto* anon = app.add_subcommand("anonymize", "anonymize a directory of images");
    fs::path anon_ckpt, anon_in, anon_out;
    std::string anon_cam = "cam0", anon_map;
    bool anon_feather = false;
    anon->add_option("--checkpoint", anon_ckpt)->required();
    anon->add_option("--input", anon_in)->required();
    anon->add_option("--output", anon_out)->required();
    anon->add_option("--camera-id", anon_cam)->capture_default_str();
    anon->add_option("--mapping", anon_map, "persistent mapping JSON");
    anon->add_flag("--feather", anon_feather, "2-pixel composite feathering");

    auto* anonv = app.add_subcommand("anonymize-video", "anonymize a frame sequence");
    fs::path av_ckpt, av_frames, av_tracks, av_out;
    std::string av_cam = "cam0", av_map;
    int av_window = 9, av_degree = 3;
    bool av_feather = false;
    anonv->add_option("--checkpoint", av_ckpt)->required();
    anonv->add_option("--frames", av_frames)->required();
    anonv->add_option("--tracks", av_tracks)->required();
    anonv->add_option("--output", av_out)->required();
    anonv->add_option("--camera-id", av_cam)->capture_default_str();
    anonv->add_option("--mapping", av_map);
    anonv->add_option("--window", av_window, "smoothing window (frames)")->capture_default_str();
    anonv->add_option("--degree", av_degree, "smoothing spline degree")->capture_default_str();
    anonv->add_flag("--feather", av_feather);

    auto* baseline = app.add_subcommand("baseline", "classical anonymization transforms");
    std::string base_kind;
    double base_param = 8;
    fs::path base_in, base_out;
    bool base_full = false;
    baseline->add_option("--kind", base_kind, "pixelize|blur|mask")->required();
    baseline->add_option("--param", base_param, "block size | kernel size | fill value")
        ->capture_default_str();
    baseline->add_option("--input", base_in)->required();
    baseline->add_option("--output", base_out)->required();
    baseline->add_flag("--full-frame", base_full, "apply to the whole frame, not the face box");

    auto* evaluate = app.add_subcommand("evaluate", "metrics: recall | fid | detection | tar");
    std::string eval_what, eval_detector = "sidecar", eval_label;
    fs::path eval_ckpt, eval_data, eval_real, eval_gen, eval_pairs, eval_report = "report.json",
                                                                    eval_csv;
    double eval_far = 0.001;
    evaluate->add_option("what", eval_what, "recall|fid|detection|tar")->required();
    evaluate->add_option("--checkpoint", eval_ckpt);
    evaluate->add_option("--data", eval_data, "prepared cache (recall) or image dir (detection)");
    evaluate->add_option("--real", eval_real, "real image dir (fid)");
    evaluate->add_option("--generated", eval_gen, "generated image dir (fid)");
    evaluate->add_option("--pairs", eval_pairs, "verification pairs JSON (tar)");
    evaluate->add_option("--far", eval_far)->capture_default_str();
    evaluate->add_option("--detector", eval_detector, "sidecar|always|never")
        ->capture_default_str();
    evaluate->add_option("--out", eval_report, "report JSON path")->capture_default_str();
    evaluate->add_option("--csv", eval_csv, "Table-style CSV to upsert");
    evaluate->add_option("--label", eval_label, "row label for the CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << nlohmann::json{{"error", "usage"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }

    try {
        // precedence: config file < explicit flags
        if (!config_file.empty()) {
            const auto file_cfg = TrainConfig::from_file(config_file);
            CLI::App* cmd = pretrain->parsed() ? pretrain : train->parsed() ? train : nullptr;
            auto keep = [&](const char* flag) { return cmd && cmd->count(flag) > 0; };
            TrainConfig merged = file_cfg;
            if (keep("--epochs")) merged.epochs = tc.epochs;
            if (keep("--batch-size")) merged.batch_size = tc.batch_size;
            if (keep("--lr")) merged.lr = tc.lr;
            if (keep("--lambda-id")) merged.lambda_id = tc.lambda_id;
            if (keep("--pretrain-epochs")) merged.pretrain_epochs = tc.pretrain_epochs;
            if (keep("--pretrain-lr")) merged.pretrain_lr = tc.pretrain_lr;
            tc = merged;
            if (app.count("--seed")) tc.seed = flags.seed;
        } else {
            tc.seed = flags.seed;
        }
        ModelConfig mc = model_from_flags(tc.resolution, 1, flag_gen_base, flag_disc_base,
                                          flag_fc_width, flag_plain);

        if (prepare->parsed())
            return cmd_prepare(prep_in, prep_out, prep_res, prep_stroke, prep_body, flags,
                               argv_j);
        if (pretrain->parsed()) return cmd_pretrain(pre_data, pre_out, tc, mc, flags, argv_j);
        if (train->parsed()) {
            std::vector<std::string> overridden;
            if (train->count("--epochs")) overridden.push_back("epochs");
            return cmd_train(train_data, train_out, train_init, train_resume, tc, mc,
                             overridden, flags, argv_j);
        }
        if (anon->parsed())
            return cmd_anonymize(anon_ckpt, anon_in, anon_out, anon_cam, anon_map, anon_feather,
                                 flags, argv_j);
        if (anonv->parsed())
            return cmd_anonymize_video(av_ckpt, av_frames, av_tracks, av_out, av_cam, av_map,
                                       av_window, av_degree, av_feather, flags, argv_j);
        if (baseline->parsed())
            return cmd_baseline(base_kind, base_param, base_in, base_out, base_full, flags,
                                argv_j);
        if (evaluate->parsed())
            return cmd_evaluate(eval_what, eval_ckpt, eval_data, eval_real, eval_gen,
                                eval_pairs, eval_far, eval_detector, eval_report, eval_csv,
                                eval_label, flags, argv_j);
        std::cerr << app.help();
        return 2;
    } catch (const Error& e) {
        std::cerr << nlohmann::json{{"error", e.code()}, {"message", e.what()}}.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }
}
