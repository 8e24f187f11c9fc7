#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <vector>

#include "faceanon/data/dataset.hpp"
#include "faceanon/train/state.hpp"

namespace faceanon {

namespace train_detail {

inline std::vector<std::vector<std::int64_t>> records_by_identity(const Dataset& ds) {
    std::vector<std::vector<std::int64_t>> by_id(ds.n_identities());
    for (std::size_t i = 0; i < ds.records.size(); ++i)
        by_id[ds.records[i].identity].push_back(static_cast<std::int64_t>(i));
    return by_id;
}

inline const std::vector<std::int64_t>& epoch_permutation(TrainState& st, std::int64_t count) {
    if (st.perm_epoch != st.epoch ||
        st.perm_cache.size() != static_cast<std::size_t>(count)) {
        st.perm_cache.resize(count);
        for (std::int64_t i = 0; i < count; ++i) st.perm_cache[i] = i;
        Rng rng = Rng::derive(st.config.seed, 0xE90C, static_cast<std::uint64_t>(st.epoch));
        rng.shuffle(st.perm_cache.begin(), st.perm_cache.end());
        st.perm_epoch = st.epoch;
    }
    return st.perm_cache;
}

/// Face-mask batch replicated over the three channels.
inline Tensor<float> mask_batch(const std::vector<const AnnotatedFace*>& recs) {
    const auto r = recs[0]->face_mask.dim(0);
    Tensor<float> out({static_cast<std::int64_t>(recs.size()), 3, r, r});
    for (std::size_t s = 0; s < recs.size(); ++s)
        for (std::int64_t c = 0; c < 3; ++c)
            for (std::int64_t i = 0; i < r; ++i)
                for (std::int64_t j = 0; j < r; ++j)
                    out.at4(s, c, i, j) = recs[s]->face_mask.at2(i, j) ? 1.0f : 0.0f;
    return out;
}

}  // namespace train_detail

struct StepLosses {
    double d_loss = 0, g_adv = 0, g_id = 0, id_ft = 0;
    std::int64_t step = 0;

    bool finite() const {
        return std::isfinite(d_loss) && std::isfinite(g_adv) && std::isfinite(g_id) &&
               std::isfinite(id_ft);
    }
};

/// Composite in model space: generated pixels inside the face mask, source
/// pixels outside. `mask3` is {0,1} replicated over channels.
template <typename T>
ad::Value<T> composite_graph(const ad::Value<T>& generated, const Tensor<T>& mask3,
                             const Tensor<T>& source) {
    Tensor<T> outside = source;
    for (std::int64_t i = 0; i < outside.numel(); ++i) outside[i] *= (T(1) - mask3[i]);
    return ad::add_const(ad::mul_const(generated, mask3), outside);
}

namespace train_detail {

/// One full optimization step over the next batch of the current epoch:
/// discriminator (LSGAN), then generator (LSGAN + identity guidance), then
/// the identity network's contrastive finetune. All batch randomness is a
/// pure function of (seed, step), so a replayed step draws the same targets.
/// Requires cursor < record count; epoch rollover is the caller's.
inline StepLosses step_batch(TrainState& st, const Dataset& ds) {
    const auto count = static_cast<std::int64_t>(ds.records.size());
    require(count > 0, "empty-dataset", "train step: no records");
    require(st.cursor < count, "train", "step_batch called at an epoch boundary");
    const auto n = ds.n_identities();
    require(n >= 2, "empty-dataset", "training requires at least 2 identities");

    const auto& perm = train_detail::epoch_permutation(st, count);
    const auto take = std::min<std::int64_t>(st.config.batch_size, count - st.cursor);
    std::vector<const AnnotatedFace*> recs;
    for (std::int64_t i = 0; i < take; ++i)
        recs.push_back(&ds.records[perm[st.cursor + i]]);
    st.cursor += take;

    // per-step draws: target identity, its real exemplar, and a negative
    // exemplar of a different identity
    const auto by_id = train_detail::records_by_identity(ds);
    Rng draw = Rng::derive(st.config.seed, 0x7417, static_cast<std::uint64_t>(st.step));
    std::vector<std::int64_t> targets(recs.size());
    std::vector<const AnnotatedFace*> exemplars(recs.size());
    std::vector<const AnnotatedFace*> negatives(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        targets[i] = static_cast<std::int64_t>(draw.uniform_int(n));
        const auto& pool = by_id[targets[i]];
        exemplars[i] = &ds.records[pool[draw.uniform_int(pool.size())]];
        auto neg_id = static_cast<std::int64_t>(draw.uniform_int(n - 1));
        if (neg_id >= targets[i]) ++neg_id;
        const auto& neg_pool = by_id[neg_id];
        negatives[i] = &ds.records[neg_pool[draw.uniform_int(neg_pool.size())]];
    }

    const auto cond = conditioning_batch(recs);
    const auto real = image_batch(recs);
    const auto mask3 = train_detail::mask_batch(recs);
    const auto control = one_hot_batch(targets, n);
    const auto exemplar_imgs = image_batch(exemplars);
    const auto negative_imgs = image_batch(negatives);
    const GanLabels& labels = st.config.labels;

    StepLosses out;
    out.step = st.step;

    // ---- discriminator step (generator detached)
    Tensor<float> fake_comp_value;
    {
        ad::NoGradGuard ng;
        auto fake = models::generator_forward(st.gen, st.model, ad::constant(cond),
                                              ad::constant(control));
        auto comp = composite_graph(fake, mask3, real);
        fake_comp_value = comp->value;
    }
    st.disc.zero_grad();
    {
        auto d_real = models::discriminator_forward(st.disc, st.model, ad::constant(real));
        auto d_fake =
            models::discriminator_forward(st.disc, st.model, ad::constant(fake_comp_value));
        auto loss = ad_losses::lsgan_d(d_real, d_fake, labels);
        out.d_loss = loss->value[0];
        ad::backward(loss);
        st.adam_d.step(st.disc);
    }

    // ---- generator step (through frozen discriminator and identity net)
    st.disc.set_requires_grad(false);
    st.idnet.set_requires_grad(false);
    st.gen.zero_grad();
    {
        auto fake = models::generator_forward(st.gen, st.model, ad::constant(cond),
                                              ad::constant(control));
        auto comp = composite_graph(fake, mask3, real);
        auto g_adv = ad_losses::lsgan_g(
            models::discriminator_forward(st.disc, st.model, comp), labels);
        auto e_fake = ad::l2_normalize_rows(
            models::identity_forward(st.idnet, st.model, comp));
        Tensor<float> e_ref_value;
        {
            ad::NoGradGuard ng;
            e_ref_value = ad::l2_normalize_rows(models::identity_forward(
                              st.idnet, st.model, ad::constant(exemplar_imgs)))
                              ->value;
        }
        std::vector<std::uint8_t> all_same(recs.size(), 1);
        auto g_id = ad_losses::contrastive(e_fake, ad::constant(e_ref_value), all_same,
                                           static_cast<float>(st.config.contrastive_margin));
        auto loss = ad::add(g_adv, ad::mul_scalar(g_id, static_cast<float>(st.config.lambda_id)));
        out.g_adv = g_adv->value[0];
        out.g_id = g_id->value[0];
        ad::backward(loss);
        st.adam_g.step(st.gen);
    }
    st.disc.set_requires_grad(true);
    st.idnet.set_requires_grad(true);

    // ---- identity-net finetune: pull the fake toward real images of its
    // target identity, keep other identities apart
    st.idnet.zero_grad();
    {
        const auto b = static_cast<std::int64_t>(recs.size());
        const auto r = st.model.resolution;
        Tensor<float> lhs({2 * b, 3, r, r}), rhs({2 * b, 3, r, r});
        std::copy_n(fake_comp_value.data(), fake_comp_value.numel(), lhs.data());
        std::copy_n(fake_comp_value.data(), fake_comp_value.numel(),
                    lhs.data() + fake_comp_value.numel());
        std::copy_n(exemplar_imgs.data(), exemplar_imgs.numel(), rhs.data());
        std::copy_n(negative_imgs.data(), negative_imgs.numel(),
                    rhs.data() + exemplar_imgs.numel());
        std::vector<std::uint8_t> flags(2 * b, 0);
        std::fill(flags.begin(), flags.begin() + b, 1);

        auto e_lhs = ad::l2_normalize_rows(
            models::identity_forward(st.idnet, st.model, ad::constant(lhs)));
        auto e_rhs = ad::l2_normalize_rows(
            models::identity_forward(st.idnet, st.model, ad::constant(rhs)));
        auto loss = ad_losses::contrastive(e_lhs, e_rhs, flags,
                                           static_cast<float>(st.config.contrastive_margin));
        out.id_ft = loss->value[0];
        ad::backward(loss);
        st.adam_id.step(st.idnet);
    }

    ++st.step;

    if (!out.finite()) {
        if (!st.diagnostics_dir.empty()) {
            std::filesystem::create_directories(st.diagnostics_dir);
            st.save(st.diagnostics_dir / ("abort_step_" + std::to_string(st.step) + ".fat"));
        }
        fail("non-finite", "non-finite loss at step " + std::to_string(st.step));
    }
    return out;
}

}  // namespace train_detail

/// Steps the trainer once, rolling into the next epoch when the current one
/// is exhausted.
inline StepLosses train_one_step(TrainState& st, const Dataset& ds) {
    if (st.cursor >= static_cast<std::int64_t>(ds.records.size())) {
        ++st.epoch;
        st.cursor = 0;
    }
    return train_detail::step_batch(st, ds);
}

inline std::vector<StepLosses> run_steps(TrainState& st, const Dataset& ds, std::int64_t n) {
    std::vector<StepLosses> out;
    out.reserve(n);
    for (std::int64_t i = 0; i < n; ++i) out.push_back(train_one_step(st, ds));
    return out;
}

/// Proxy-NCA pretraining of the identity network; proxies train jointly with
/// the trunk. Returns the final epoch's mean loss.
inline double pretrain_identity(TrainState& st, const Dataset& ds,
                                const std::function<void(int, double)>& on_epoch = {}) {
    const auto count = static_cast<std::int64_t>(ds.records.size());
    require(count > 0, "empty-dataset", "pretrain_identity: no records");
    require(ds.n_identities() >= 2, "empty-dataset",
            "pretraining requires at least 2 identities");

    // wrap the proxy bank as a store entry so Adam can drive it
    ParamStore<float> proxy_store;
    auto proxies = proxy_store.create_zeros("proxies", st.proxies.shape());
    proxies->value = st.proxies;
    Adam<float> opt_id(static_cast<float>(st.config.pretrain_lr),
                       static_cast<float>(st.config.beta1),
                       static_cast<float>(st.config.beta2),
                       static_cast<float>(st.config.adam_eps));
    Adam<float> opt_proxy(static_cast<float>(st.config.pretrain_lr),
                          static_cast<float>(st.config.beta1),
                          static_cast<float>(st.config.beta2),
                          static_cast<float>(st.config.adam_eps));

    double epoch_mean = 0;
    for (int epoch = 0; epoch < st.config.pretrain_epochs; ++epoch) {
        std::vector<std::int64_t> perm(count);
        for (std::int64_t i = 0; i < count; ++i) perm[i] = i;
        Rng rng = Rng::derive(st.config.seed, 0x9CA0, static_cast<std::uint64_t>(epoch));
        rng.shuffle(perm.begin(), perm.end());

        double loss_sum = 0;
        std::int64_t batches = 0;
        for (std::int64_t at = 0; at < count; at += st.config.batch_size) {
            const auto take = std::min<std::int64_t>(st.config.batch_size, count - at);
            std::vector<const AnnotatedFace*> recs;
            std::vector<std::int64_t> labels;
            for (std::int64_t i = 0; i < take; ++i) {
                recs.push_back(&ds.records[perm[at + i]]);
                labels.push_back(recs.back()->identity);
            }
            auto imgs = image_batch(recs);
            st.idnet.zero_grad();
            proxy_store.zero_grad();
            auto emb = models::identity_forward(st.idnet, st.model, ad::constant(imgs));
            auto loss = ad_losses::proxy_nca(emb, proxies, labels);
            loss_sum += loss->value[0];
            ++batches;
            require(std::isfinite(loss->value[0]), "non-finite",
                    "non-finite pretraining loss");
            ad::backward(loss);
            opt_id.step(st.idnet);
            opt_proxy.step(proxy_store);
        }
        epoch_mean = loss_sum / static_cast<double>(batches);
        if (on_epoch) on_epoch(epoch, epoch_mean);
    }
    st.proxies = proxies->value;
    return epoch_mean;
}

/// Full adversarial fit: per-epoch checkpoints and line-delimited JSON logs.
/// Resumes transparently from a checkpoint saved mid-run.
inline void fit(TrainState& st, const Dataset& ds, const std::filesystem::path& out_dir,
                const std::function<void(const StepLosses&)>& on_step = {}) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    st.diagnostics_dir = out_dir / "diagnostics";
    const auto count = static_cast<std::int64_t>(ds.records.size());
    require(count > 0, "empty-dataset", "fit: no records");

    std::ofstream log(out_dir / "log.jsonl", std::ios::app);
    require(log.good(), "io", "cannot open training log");

    if (st.cursor >= count) {  // state saved exactly at an epoch boundary
        ++st.epoch;
        st.cursor = 0;
    }
    while (st.epoch < st.config.epochs) {
        while (st.cursor < count) {
            auto losses = train_detail::step_batch(st, ds);
            nlohmann::json line = {{"step", losses.step},
                                   {"epoch", st.epoch},
                                   {"d_loss", losses.d_loss},
                                   {"g_adv", losses.g_adv},
                                   {"g_id", losses.g_id},
                                   {"id_ft", losses.id_ft}};
            log << line.dump() << "\n";
            if (on_step) on_step(losses);
        }
        char name[32];
        std::snprintf(name, sizeof(name), "epoch_%04lld.fat",
                      static_cast<long long>(st.epoch));
        st.save(out_dir / name);
        if (st.config.keep_checkpoints > 0) {
            const auto stale = st.epoch - st.config.keep_checkpoints;
            if (stale >= 0) {
                char old_name[32];
                std::snprintf(old_name, sizeof(old_name), "epoch_%04lld.fat",
                              static_cast<long long>(stale));
                fs::remove(out_dir / old_name);
            }
        }
        ++st.epoch;
        st.cursor = 0;
    }
    st.save(out_dir / "final.fat");
}

}  // namespace faceanon
