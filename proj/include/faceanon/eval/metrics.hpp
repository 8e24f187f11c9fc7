#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "faceanon/core/common.hpp"
#include "faceanon/core/tensor.hpp"

namespace faceanon {

/// Embeddings with identity labels, the substrate of Recall@1.
struct EmbeddingSet {
    Tensor<double> vectors;            // [M,E]
    std::vector<std::int64_t> labels;  // M

    std::int64_t size() const { return vectors.ndim() ? vectors.dim(0) : 0; }
};

/// Percentage of samples whose Euclidean nearest neighbor (excluding the
/// sample itself) shares their label. Ties break toward the lowest index.
inline double recall_at_1(const EmbeddingSet& set) {
    const auto m = set.size();
    require(m >= 2, "recall", "recall_at_1 requires at least 2 samples");
    require(static_cast<std::int64_t>(set.labels.size()) == m, "shape-mismatch",
            "recall_at_1: label count mismatch");
    const auto e = set.vectors.dim(1);
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < m; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::int64_t best_j = -1;
        for (std::int64_t j = 0; j < m; ++j) {
            if (j == i) continue;
            double acc = 0;
            for (std::int64_t k = 0; k < e; ++k) {
                const double d = set.vectors.at2(i, k) - set.vectors.at2(j, k);
                acc += d * d;
            }
            if (acc < best) {
                best = acc;
                best_j = j;
            }
        }
        if (set.labels[best_j] == set.labels[i]) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(m);
}

// ----------------------------------------------------------------------- FID

struct GaussianStats {
    Tensor<double> mu;     // [E]
    Tensor<double> sigma;  // [E,E]
};

/// Sample mean and covariance (denominator M-1) of row-major features [M,E].
inline GaussianStats feature_stats(const Tensor<double>& features) {
    require(features.ndim() == 2 && features.dim(0) >= 1, "shape-mismatch",
            "feature_stats: expected non-empty [M,E]");
    const auto m = features.dim(0), e = features.dim(1);
    GaussianStats out;
    out.mu = Tensor<double>({e});
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t k = 0; k < e; ++k) out.mu[k] += features.at2(i, k);
    for (std::int64_t k = 0; k < e; ++k) out.mu[k] /= static_cast<double>(m);
    out.sigma = Tensor<double>({e, e});
    if (m < 2) return out;  // single sample: zero covariance
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t a = 0; a < e; ++a) {
            const double da = features.at2(i, a) - out.mu[a];
            for (std::int64_t b = 0; b < e; ++b)
                out.sigma.at2(a, b) += da * (features.at2(i, b) - out.mu[b]);
        }
    for (std::int64_t i = 0; i < e * e; ++i) out.sigma[i] /= static_cast<double>(m - 1);
    return out;
}

namespace fid_detail {

inline constexpr double kEigClipTol = 1e-8;

using EMat = Eigen::MatrixXd;

inline EMat to_eigen(const Tensor<double>& t) {
    EMat out(t.dim(0), t.dim(1));
    for (std::int64_t i = 0; i < t.dim(0); ++i)
        for (std::int64_t j = 0; j < t.dim(1); ++j) out(i, j) = t.at2(i, j);
    return out;
}

/// Eigendecomposition of the symmetrized matrix; negative eigenvalues below
/// -tol*scale are a contract violation, smaller ones are clipped to zero.
inline void psd_eigs(const EMat& m, Eigen::VectorXd& evals, EMat& evecs, const char* what) {
    EMat sym = (m + m.transpose()) / 2.0;
    Eigen::SelfAdjointEigenSolver<EMat> solver(sym);
    require(solver.info() == Eigen::Success, "not-psd",
            std::string("eigendecomposition failed for ") + what);
    evals = solver.eigenvalues();
    evecs = solver.eigenvectors();
    const double scale = std::max(1.0, std::abs(evals.maxCoeff()));
    require(evals.minCoeff() >= -kEigClipTol * scale, "not-psd",
            std::string(what) + " is not positive semidefinite beyond tolerance");
    for (Eigen::Index i = 0; i < evals.size(); ++i) evals[i] = std::max(evals[i], 0.0);
}

}  // namespace fid_detail

/// Frechet distance between two Gaussians:
///   ||mu_x - mu_g||^2 + Tr(S_x + S_g - 2 (S_x S_g)^{1/2}).
/// The square-root trace is computed from the symmetric product
/// sqrt(S_x) S_g sqrt(S_x). Identical stats short-circuit to exactly 0.
inline double fid(const GaussianStats& x, const GaussianStats& g) {
    require(x.mu.numel() == g.mu.numel(), "shape-mismatch", "fid: dimension mismatch");
    require(x.sigma.dim(0) == x.mu.numel() && g.sigma.dim(0) == g.mu.numel(), "shape-mismatch",
            "fid: covariance shape mismatch");

    bool identical = true;
    for (std::int64_t i = 0; identical && i < x.mu.numel(); ++i)
        identical = x.mu[i] == g.mu[i];
    for (std::int64_t i = 0; identical && i < x.sigma.numel(); ++i)
        identical = x.sigma[i] == g.sigma[i];
    if (identical) return 0.0;

    using fid_detail::EMat;
    EMat sx = fid_detail::to_eigen(x.sigma);
    EMat sg = fid_detail::to_eigen(g.sigma);

    Eigen::VectorXd ex, es;
    EMat vx, vs;
    fid_detail::psd_eigs(sx, ex, vx, "sigma_x");
    {
        // validate sigma_g's spectrum too
        Eigen::VectorXd eg;
        EMat vg;
        fid_detail::psd_eigs(sg, eg, vg, "sigma_g");
    }

    EMat sqrt_sx = vx * ex.cwiseSqrt().asDiagonal() * vx.transpose();
    EMat inner = sqrt_sx * sg * sqrt_sx;
    fid_detail::psd_eigs(inner, es, vs, "product");
    const double trace_sqrt = es.cwiseSqrt().sum();

    double mean_sq = 0;
    for (std::int64_t i = 0; i < x.mu.numel(); ++i) {
        const double d = x.mu[i] - g.mu[i];
        mean_sq += d * d;
    }
    const double val = mean_sq + sx.trace() + sg.trace() - 2.0 * trace_sqrt;
    return std::max(val, 0.0);
}

// ----------------------------------------------------------- detection rate

/// detections / total * 100 with a pluggable per-item detector.
template <typename Item>
double detection_rate(const std::vector<Item>& items,
                      const std::function<bool(const Item&)>& detector) {
    require(!items.empty(), "empty-dataset", "detection_rate: no items");
    std::int64_t hits = 0;
    for (const auto& it : items) hits += detector(it) ? 1 : 0;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(items.size());
}

// ----------------------------------------------------------- TAR at FAR

struct VerificationPair {
    std::int64_t a = 0, b = 0;  // item indices; b is the anonymized element
    bool same = false;
};

/// Fold structure of the verification protocol: 10 folds of 600 pairs, the
/// first 300 of each fold positive.
struct PairProtocol {
    std::vector<std::vector<VerificationPair>> folds;

    void validate() const {
        require(folds.size() == 10, "protocol", "expected 10 folds");
        for (const auto& f : folds) {
            require(f.size() == 600, "protocol", "expected 600 pairs per fold");
            for (std::size_t i = 0; i < f.size(); ++i)
                require(f[i].same == (i < 300), "protocol",
                        "first 300 pairs of each fold must be positive");
        }
    }

    std::size_t total_pairs() const {
        std::size_t n = 0;
        for (const auto& f : folds) n += f.size();
        return n;
    }
};

/// True-acceptance rate of one fold at a false-positive ceiling: the
/// threshold admits at most floor(far*negatives) negatives strictly above
/// it; TAR is the fraction of positives strictly above.
inline double tar_single_fold(const std::vector<double>& positives,
                              const std::vector<double>& negatives, double far) {
    require(!negatives.empty(), "protocol", "tar: no negative pairs");
    const auto allowed = static_cast<std::size_t>(
        std::floor(far * static_cast<double>(negatives.size())));
    std::vector<double> neg_sorted = negatives;
    std::sort(neg_sorted.begin(), neg_sorted.end(), std::greater<>());
    const double threshold = neg_sorted[std::min(allowed, neg_sorted.size() - 1)];
    if (positives.empty()) return 0.0;
    std::int64_t accepted = 0;
    for (double s : positives) accepted += s > threshold ? 1 : 0;
    return static_cast<double>(accepted) / static_cast<double>(positives.size());
}

struct TarResult {
    double mean = 0, stddev = 0;
    std::vector<double> per_fold;
};

/// scores are aligned with folds flattened in order.
inline TarResult tar_at_far(const std::vector<double>& scores, const PairProtocol& protocol,
                            double far) {
    require(scores.size() == protocol.total_pairs(), "shape-mismatch",
            "tar_at_far: score count does not match protocol");
    TarResult out;
    std::size_t at = 0;
    for (const auto& fold : protocol.folds) {
        std::vector<double> pos, neg;
        for (const auto& p : fold) {
            (p.same ? pos : neg).push_back(scores[at]);
            ++at;
        }
        out.per_fold.push_back(tar_single_fold(pos, neg, far));
    }
    for (double v : out.per_fold) out.mean += v;
    out.mean /= static_cast<double>(out.per_fold.size());
    for (double v : out.per_fold) out.stddev += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(out.stddev / static_cast<double>(out.per_fold.size()));
    return out;
}

/// Pair similarity used throughout: negative Euclidean distance.
inline double embedding_similarity(const Tensor<double>& a, const Tensor<double>& b) {
    require(a.numel() == b.numel(), "shape-mismatch", "similarity: dimension mismatch");
    double acc = 0;
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return -std::sqrt(acc);
}

}  // namespace faceanon
