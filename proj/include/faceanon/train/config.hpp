#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "faceanon/core/common.hpp"
#include "faceanon/losses/losses.hpp"

namespace faceanon {

/// Training hyperparameters. Defaults follow the reference setup: ADAM with
/// lr 1e-5, betas 0.5/0.9, 60 epochs at 128x128.
struct TrainConfig {
    double lr = 1e-5;
    double beta1 = 0.5;
    double beta2 = 0.9;
    double adam_eps = 1e-8;
    int epochs = 60;
    int batch_size = 32;
    std::uint64_t seed = 0;
    double lambda_id = 1.0;  // weight of the identity-guidance term
    double contrastive_margin = 1.0;
    int resolution = 128;
    GanLabels labels;  // a=0 fake, b=1 real

    // identity pretraining
    int pretrain_epochs = 30;
    double pretrain_lr = 1e-4;

    // 0 keeps every per-epoch checkpoint; otherwise older ones are pruned
    int keep_checkpoints = 0;

    void validate() const {
        require(lr > 0, "config", "lr must be > 0");
        require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, "config",
                "betas must be in [0,1)");
        require(epochs >= 1, "config", "epochs must be >= 1");
        require(batch_size >= 1, "config", "batch_size must be >= 1");
        require(labels.fake != labels.real, "config", "GAN labels a and b must differ");
        require(pretrain_epochs >= 1 && pretrain_lr > 0, "config", "bad pretrain settings");
    }

    nlohmann::json to_json() const {
        return {{"lr", lr},
                {"beta1", beta1},
                {"beta2", beta2},
                {"adam_eps", adam_eps},
                {"epochs", epochs},
                {"batch_size", batch_size},
                {"seed", seed},
                {"lambda_id", lambda_id},
                {"contrastive_margin", contrastive_margin},
                {"resolution", resolution},
                {"label_fake", labels.fake},
                {"label_real", labels.real},
                {"pretrain_epochs", pretrain_epochs},
                {"pretrain_lr", pretrain_lr},
                {"keep_checkpoints", keep_checkpoints}};
    }

    static TrainConfig from_json(const nlohmann::json& j) {
        TrainConfig c;
        c.lr = j.value("lr", c.lr);
        c.beta1 = j.value("beta1", c.beta1);
        c.beta2 = j.value("beta2", c.beta2);
        c.adam_eps = j.value("adam_eps", c.adam_eps);
        c.epochs = j.value("epochs", c.epochs);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.seed = j.value("seed", c.seed);
        c.lambda_id = j.value("lambda_id", c.lambda_id);
        c.contrastive_margin = j.value("contrastive_margin", c.contrastive_margin);
        c.resolution = j.value("resolution", c.resolution);
        c.labels.fake = j.value("label_fake", c.labels.fake);
        c.labels.real = j.value("label_real", c.labels.real);
        c.pretrain_epochs = j.value("pretrain_epochs", c.pretrain_epochs);
        c.pretrain_lr = j.value("pretrain_lr", c.pretrain_lr);
        c.keep_checkpoints = j.value("keep_checkpoints", c.keep_checkpoints);
        return c;
    }

    static TrainConfig from_file(const std::string& path) {
        std::ifstream is(path);
        require(is.good(), "config", "cannot open config file: " + path);
        return from_json(nlohmann::json::parse(is));
    }
};

}  // namespace faceanon
