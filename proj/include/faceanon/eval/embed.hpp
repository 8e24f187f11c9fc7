#pragma once

#include <vector>

#include "faceanon/data/dataset.hpp"
#include "faceanon/eval/metrics.hpp"
#include "faceanon/models/networks.hpp"

namespace faceanon {

/// Runs the identity network over records in fixed-size batches and returns
/// [M,E] embeddings. Also the default feature function for FID: the
/// embedding layer is the shared architecture's penultimate width, so
/// internal FID numbers are comparable to each other (not to scores from
/// external feature extractors).
inline Tensor<double> embed_records(const ParamStore<float>& idnet, const ModelConfig& cfg,
                                    const std::vector<const AnnotatedFace*>& recs,
                                    int batch_size = 32) {
    require(!recs.empty(), "empty-dataset", "embed_records: no records");
    ad::NoGradGuard ng;
    const auto e = cfg.embedding_dim();
    Tensor<double> out({static_cast<std::int64_t>(recs.size()), e});
    for (std::size_t at = 0; at < recs.size(); at += batch_size) {
        const auto take = std::min<std::size_t>(batch_size, recs.size() - at);
        std::vector<const AnnotatedFace*> batch(recs.begin() + at, recs.begin() + at + take);
        auto emb = models::identity_forward(idnet, cfg, ad::constant(image_batch(batch)));
        for (std::size_t i = 0; i < take; ++i)
            for (std::int64_t k = 0; k < e; ++k)
                out.at2(static_cast<std::int64_t>(at + i), k) = emb->value.at2(i, k);
    }
    return out;
}

/// Embeds raw [-1,1] model-space image tensors ([M,3,R,R]).
inline Tensor<double> embed_images(const ParamStore<float>& idnet, const ModelConfig& cfg,
                                   const Tensor<float>& images, int batch_size = 32) {
    const auto m = images.dim(0);
    const auto e = cfg.embedding_dim();
    const auto chw = images.dim(1) * images.dim(2) * images.dim(3);
    ad::NoGradGuard ng;
    Tensor<double> out({m, e});
    for (std::int64_t at = 0; at < m; at += batch_size) {
        const auto take = std::min<std::int64_t>(batch_size, m - at);
        Tensor<float> batch({take, images.dim(1), images.dim(2), images.dim(3)});
        std::copy_n(images.data() + at * chw, take * chw, batch.data());
        auto emb = models::identity_forward(idnet, cfg, ad::constant(std::move(batch)));
        for (std::int64_t i = 0; i < take; ++i)
            for (std::int64_t k = 0; k < e; ++k) out.at2(at + i, k) = emb->value.at2(i, k);
    }
    return out;
}

inline EmbeddingSet embedding_set_of(const ParamStore<float>& idnet, const ModelConfig& cfg,
                                     const std::vector<const AnnotatedFace*>& recs,
                                     int batch_size = 32) {
    EmbeddingSet set;
    set.vectors = embed_records(idnet, cfg, recs, batch_size);
    for (const auto* r : recs) set.labels.push_back(r->identity);
    return set;
}

}  // namespace faceanon
