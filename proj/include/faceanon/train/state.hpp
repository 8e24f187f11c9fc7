#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "faceanon/models/networks.hpp"
#include "faceanon/nn/adam.hpp"
#include "faceanon/nn/params.hpp"
#include "faceanon/train/config.hpp"

namespace faceanon {

inline nlohmann::json model_config_to_json(const ModelConfig& m) {
    return {{"resolution", m.resolution},     {"n_identities", m.n_identities},
            {"gen_base", m.gen_base},         {"gen_cap", m.gen_cap},
            {"disc_base", m.disc_base},       {"disc_cap", m.disc_cap},
            {"fc_width", m.fc_width},         {"plain_blocks", m.plain_blocks},
            {"embed_fc_layers", m.embed_fc_layers}, {"leaky_slope", m.leaky_slope}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig m;
    m.resolution = j.at("resolution").get<int>();
    m.n_identities = j.at("n_identities").get<int>();
    m.gen_base = j.at("gen_base").get<int>();
    m.gen_cap = j.at("gen_cap").get<int>();
    m.disc_base = j.at("disc_base").get<int>();
    m.disc_cap = j.at("disc_cap").get<int>();
    m.fc_width = j.at("fc_width").get<int>();
    m.plain_blocks = j.at("plain_blocks").get<int>();
    m.embed_fc_layers = j.at("embed_fc_layers").get<int>();
    m.leaky_slope = j.at("leaky_slope").get<double>();
    return m;
}

/// Everything a training run owns: the three parameter sets, their optimizer
/// moments, the frozen proxy bank, and the position counters. A state saved
/// and reloaded continues bit-exactly: all randomness downstream is a pure
/// function of (seed, epoch, step).
struct TrainState {
    ModelConfig model;
    TrainConfig config;

    ParamStore<float> gen, disc, idnet;
    Adam<float> adam_g, adam_d, adam_id;
    Tensor<float> proxies;  // [N,E]; trained during pretraining, frozen after

    std::int64_t epoch = 0;
    std::int64_t step = 0;
    std::int64_t cursor = 0;  // record offset within the current epoch

    // non-serialized epoch permutation cache; rebuilt deterministically
    std::vector<std::int64_t> perm_cache;
    std::int64_t perm_epoch = -1;

    std::filesystem::path diagnostics_dir;  // optional non-finite abort dumps

    static TrainState create(const ModelConfig& model_cfg, const TrainConfig& train_cfg) {
        model_cfg.validate();
        train_cfg.validate();
        TrainState st{model_cfg,
                      train_cfg,
                      {},
                      {},
                      {},
                      Adam<float>(static_cast<float>(train_cfg.lr),
                                  static_cast<float>(train_cfg.beta1),
                                  static_cast<float>(train_cfg.beta2),
                                  static_cast<float>(train_cfg.adam_eps)),
                      Adam<float>(static_cast<float>(train_cfg.lr),
                                  static_cast<float>(train_cfg.beta1),
                                  static_cast<float>(train_cfg.beta2),
                                  static_cast<float>(train_cfg.adam_eps)),
                      Adam<float>(static_cast<float>(train_cfg.lr),
                                  static_cast<float>(train_cfg.beta1),
                                  static_cast<float>(train_cfg.beta2),
                                  static_cast<float>(train_cfg.adam_eps)),
                      Tensor<float>()};
        Rng rng_g = Rng::derive(train_cfg.seed, 0x6001);
        Rng rng_d = Rng::derive(train_cfg.seed, 0x6002);
        Rng rng_i = Rng::derive(train_cfg.seed, 0x6003);
        models::build_generator(st.gen, model_cfg, rng_g);
        models::build_discriminator(st.disc, model_cfg, rng_d);
        models::build_identity_net(st.idnet, model_cfg, rng_i);
        Rng rng_p = Rng::derive(train_cfg.seed, 0x6004);
        st.proxies = Tensor<float>({model_cfg.n_identities, model_cfg.embedding_dim()});
        for (std::int64_t i = 0; i < st.proxies.numel(); ++i)
            st.proxies[i] = static_cast<float>(rng_p.normal() * 0.05);
        return st;
    }

    void save(const std::filesystem::path& path) const {
        Archive ar;
        gen.save_to(ar, "gen/");
        disc.save_to(ar, "disc/");
        idnet.save_to(ar, "id/");
        adam_g.save_to(ar, "adam_g/");
        adam_d.save_to(ar, "adam_d/");
        adam_id.save_to(ar, "adam_id/");
        ar.put("proxies", proxies);
        nlohmann::json meta;
        meta["arch_hash"] = model.arch_hash();
        meta["model"] = model_config_to_json(model);
        meta["train"] = config.to_json();
        meta["epoch"] = epoch;
        meta["step"] = step;
        meta["cursor"] = cursor;
        meta["n"] = model.n_identities;
        meta["e"] = model.embedding_dim();
        ar.set_meta(meta.dump());
        ar.save(path);
    }

    static TrainState load(const std::filesystem::path& path) {
        auto ar = Archive::load(path);
        auto meta = nlohmann::json::parse(ar.meta());
        const auto model_cfg = model_config_from_json(meta.at("model"));
        require(meta.at("arch_hash").get<std::string>() == model_cfg.arch_hash(), "checkpoint",
                "architecture hash mismatch in " + path.string());
        auto train_cfg = TrainConfig::from_json(meta.at("train"));
        TrainState st = create(model_cfg, train_cfg);
        st.gen.load_from(ar, "gen/");
        st.disc.load_from(ar, "disc/");
        st.idnet.load_from(ar, "id/");
        st.adam_g.load_from(ar, "adam_g/", st.gen);
        st.adam_d.load_from(ar, "adam_d/", st.disc);
        st.adam_id.load_from(ar, "adam_id/", st.idnet);
        st.proxies = ar.get<float>("proxies");
        st.epoch = meta.at("epoch").get<std::int64_t>();
        st.step = meta.at("step").get<std::int64_t>();
        st.cursor = meta.at("cursor").get<std::int64_t>();
        return st;
    }
};

}  // namespace faceanon
