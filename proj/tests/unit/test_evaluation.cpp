#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "faceanon/core/rng.hpp"
#include "faceanon/eval/metrics.hpp"

using namespace faceanon;

namespace {

/// Exhaustive O(M^2) oracle with the same tie rule (lowest index wins).
double oracle_recall_at_1(const EmbeddingSet& s) {
    const auto m = s.size(), e = s.vectors.dim(1);
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < m; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::int64_t arg = -1;
        for (std::int64_t j = 0; j < m; ++j) {
            if (i == j) continue;
            double d = 0;
            for (std::int64_t k = 0; k < e; ++k)
                d += (s.vectors.at2(i, k) - s.vectors.at2(j, k)) *
                     (s.vectors.at2(i, k) - s.vectors.at2(j, k));
            if (d < best) {
                best = d;
                arg = j;
            }
        }
        hits += s.labels[arg] == s.labels[i];
    }
    return 100.0 * hits / static_cast<double>(m);
}

EmbeddingSet random_set(Rng& rng, std::int64_t m, std::int64_t e, std::int64_t classes) {
    EmbeddingSet s;
    s.vectors = Tensor<double>({m, e});
    for (std::int64_t i = 0; i < m * e; ++i) s.vectors[i] = rng.normal();
    for (std::int64_t i = 0; i < m; ++i)
        s.labels.push_back(static_cast<std::int64_t>(rng.uniform_int(classes)));
    return s;
}

}  // namespace

TEST_CASE("recall_at_1") {
    SECTION("two well-separated clusters score 100") {
        EmbeddingSet s;
        s.vectors = Tensor<double>({4, 2});
        s.vectors.at2(0, 0) = 0.0;
        s.vectors.at2(1, 0) = 0.1;
        s.vectors.at2(2, 0) = 10.0;
        s.vectors.at2(3, 0) = 10.1;
        s.labels = {0, 0, 1, 1};
        CHECK(recall_at_1(s) == 100.0);
    }
    SECTION("matches the exhaustive oracle on random sets") {
        Rng rng(3);
        for (int t = 0; t < 40; ++t) {
            const auto m = 2 + static_cast<std::int64_t>(rng.uniform_int(20));
            auto s = random_set(rng, m, 3, 1 + rng.uniform_int(4));
            CHECK(recall_at_1(s) == oracle_recall_at_1(s));
        }
    }
    SECTION("shuffled labels approach 100/C") {
        Rng rng(7);
        for (std::int64_t c : {2, 4}) {
            auto s = random_set(rng, 1500, 4, c);
            const double r = recall_at_1(s);
            CHECK(std::abs(r - 100.0 / static_cast<double>(c)) < 3.0);
        }
    }
    SECTION("invariant under rotation and translation") {
        Rng rng(11);
        auto s = random_set(rng, 30, 2, 3);
        const double base = recall_at_1(s);
        // rotate by a fixed angle and translate
        const double a = 0.7;
        EmbeddingSet t = s;
        for (std::int64_t i = 0; i < s.size(); ++i) {
            const double x = s.vectors.at2(i, 0), y = s.vectors.at2(i, 1);
            t.vectors.at2(i, 0) = std::cos(a) * x - std::sin(a) * y + 5.0;
            t.vectors.at2(i, 1) = std::sin(a) * x + std::cos(a) * y - 3.0;
        }
        CHECK(recall_at_1(t) == base);
    }
    SECTION("fewer than two samples errors") {
        EmbeddingSet s;
        s.vectors = Tensor<double>({1, 2});
        s.labels = {0};
        CHECK_THROWS_AS(recall_at_1(s), Error);
    }
}

TEST_CASE("feature_stats") {
    SECTION("hand variance: {0,2} in 1-D") {
        Tensor<double> f({2, 1});
        f.at2(0, 0) = 0.0;
        f.at2(1, 0) = 2.0;
        auto s = feature_stats(f);
        CHECK(s.mu[0] == 1.0);
        CHECK(s.sigma.at2(0, 0) == 2.0);  // denominator M-1
    }
    SECTION("repeated sample has zero covariance") {
        Tensor<double> f({5, 3});
        for (std::int64_t i = 0; i < 5; ++i)
            for (std::int64_t k = 0; k < 3; ++k) f.at2(i, k) = 1.5 + k;
        auto s = feature_stats(f);
        for (std::int64_t i = 0; i < 9; ++i) CHECK(s.sigma[i] == 0.0);
    }
    SECTION("order invariance") {
        Rng rng(13);
        Tensor<double> f({6, 2}), g({6, 2});
        for (std::int64_t i = 0; i < 12; ++i) f[i] = rng.normal();
        // reversed order
        for (std::int64_t i = 0; i < 6; ++i)
            for (std::int64_t k = 0; k < 2; ++k) g.at2(i, k) = f.at2(5 - i, k);
        auto sf = feature_stats(f);
        auto sg = feature_stats(g);
        CHECK(max_abs_diff(sf.mu, sg.mu) < 1e-12);
        CHECK(max_abs_diff(sf.sigma, sg.sigma) < 1e-12);
    }
}

TEST_CASE("fid") {
    SECTION("identical stats give exactly zero") {
        GaussianStats s;
        s.mu = Tensor<double>({3}, 0.5);
        s.sigma = Tensor<double>({3, 3});
        for (int i = 0; i < 3; ++i) s.sigma.at2(i, i) = 2.0;
        CHECK(fid(s, s) == 0.0);
    }
    SECTION("1-D closed form") {
        GaussianStats x, g;
        x.mu = Tensor<double>({1}, 0.0);
        g.mu = Tensor<double>({1}, 1.0);
        x.sigma = Tensor<double>({1, 1}, 1.0);
        g.sigma = Tensor<double>({1, 1}, 1.0);
        CHECK(fid(x, g) == Catch::Approx(1.0).epsilon(1e-10));
    }
    SECTION("diagonal closed form on random cases") {
        Rng rng(17);
        for (int t = 0; t < 30; ++t) {
            const std::int64_t e = 1 + rng.uniform_int(6);
            GaussianStats x, g;
            x.mu = Tensor<double>({e});
            g.mu = Tensor<double>({e});
            x.sigma = Tensor<double>({e, e});
            g.sigma = Tensor<double>({e, e});
            double expected = 0;
            for (std::int64_t i = 0; i < e; ++i) {
                x.mu[i] = rng.normal();
                g.mu[i] = rng.normal();
                const double sx = rng.uniform(0.1, 3.0), sg = rng.uniform(0.1, 3.0);
                x.sigma.at2(i, i) = sx;
                g.sigma.at2(i, i) = sg;
                expected += (x.mu[i] - g.mu[i]) * (x.mu[i] - g.mu[i]) +
                            (std::sqrt(sx) - std::sqrt(sg)) * (std::sqrt(sx) - std::sqrt(sg));
            }
            CHECK(fid(x, g) == Catch::Approx(expected).epsilon(1e-8));
        }
    }
    SECTION("symmetric within 1e-8 on random PSD pairs") {
        Rng rng(19);
        for (int t = 0; t < 10; ++t) {
            const std::int64_t e = 4;
            auto make = [&] {
                GaussianStats s;
                s.mu = Tensor<double>({e});
                for (std::int64_t i = 0; i < e; ++i) s.mu[i] = rng.normal();
                Tensor<double> a({e, e});
                for (std::int64_t i = 0; i < e * e; ++i) a[i] = rng.normal();
                s.sigma = Tensor<double>({e, e});
                for (std::int64_t i = 0; i < e; ++i)
                    for (std::int64_t j = 0; j < e; ++j) {
                        double acc = 0;
                        for (std::int64_t k = 0; k < e; ++k)
                            acc += a.at2(i, k) * a.at2(j, k);
                        s.sigma.at2(i, j) = acc;
                    }
                return s;
            };
            auto x = make(), g = make();
            CHECK(std::abs(fid(x, g) - fid(g, x)) < 1e-8);
        }
    }
    SECTION("non-PSD beyond tolerance errors") {
        GaussianStats x, g;
        x.mu = Tensor<double>({2});
        g.mu = Tensor<double>({2});
        x.sigma = Tensor<double>({2, 2});
        x.sigma.at2(0, 0) = 1.0;
        x.sigma.at2(1, 1) = -0.5;  // clearly negative eigenvalue
        g.sigma = Tensor<double>({2, 2});
        g.sigma.at2(0, 0) = 1.0;
        g.sigma.at2(1, 1) = 1.0;
        CHECK_THROWS_AS(fid(x, g), Error);
    }
    SECTION("dimension mismatch errors") {
        GaussianStats x, g;
        x.mu = Tensor<double>({2});
        x.sigma = Tensor<double>({2, 2});
        g.mu = Tensor<double>({3});
        g.sigma = Tensor<double>({3, 3});
        CHECK_THROWS_AS(fid(x, g), Error);
    }
}

TEST_CASE("detection_rate counts pluggable detections") {
    std::vector<int> images{1, 2, 3, 4};
    std::function<bool(const int&)> always = [](const int&) { return true; };
    std::function<bool(const int&)> never = [](const int&) { return false; };
    std::function<bool(const int&)> three_of_four = [](const int& v) { return v != 2; };
    CHECK(detection_rate(images, always) == 100.0);
    CHECK(detection_rate(images, never) == 0.0);
    CHECK(detection_rate(images, three_of_four) == 75.0);
    std::vector<int> empty;
    CHECK_THROWS_AS(detection_rate(empty, always), Error);
}

TEST_CASE("tar_at_far") {
    SECTION("separable scores reach TAR 1.0") {
        std::vector<double> pos(300, 1.0), neg(300, 0.0);
        CHECK(tar_single_fold(pos, neg, 0.001) == 1.0);
    }
    SECTION("identical scores force TAR 0 at FAR 0.001 with 300 negatives") {
        std::vector<double> pos(300, 0.7), neg(300, 0.7);
        CHECK(tar_single_fold(pos, neg, 0.001) == 0.0);
    }
    SECTION("threshold-search oracle on random scores") {
        Rng rng(23);
        for (int t = 0; t < 20; ++t) {
            std::vector<double> pos(50), neg(200);
            for (auto& v : pos) v = rng.normal();
            for (auto& v : neg) v = rng.normal() - 0.5;
            const double far = 0.01;
            // oracle: try every candidate threshold (negative scores), pick
            // the best TAR with FPR <= far
            double best_tar = 0.0;
            for (double cand : neg) {
                std::int64_t fp = 0;
                for (double v : neg) fp += v > cand;
                if (static_cast<double>(fp) / neg.size() > far) continue;
                std::int64_t tp = 0;
                for (double v : pos) tp += v > cand;
                best_tar = std::max(best_tar, static_cast<double>(tp) / pos.size());
            }
            CHECK(tar_single_fold(pos, neg, far) == Catch::Approx(best_tar).margin(1e-12));
        }
    }
    SECTION("monotone nonincreasing as FAR decreases") {
        Rng rng(29);
        std::vector<double> pos(100), neg(300);
        for (auto& v : pos) v = rng.normal() + 0.3;
        for (auto& v : neg) v = rng.normal();
        double prev = 1.0;
        for (double far : {0.1, 0.05, 0.01, 0.003, 0.001}) {
            const double tar = tar_single_fold(pos, neg, far);
            CHECK(tar <= prev + 1e-12);
            prev = tar;
        }
    }
    SECTION("protocol validation and per-fold aggregation") {
        PairProtocol proto;
        proto.folds.resize(10);
        for (auto& fold : proto.folds) {
            for (int i = 0; i < 600; ++i) {
                VerificationPair p;
                p.same = i < 300;
                fold.push_back(p);
            }
        }
        proto.validate();

        // positives high, negatives low in every fold
        std::vector<double> scores;
        for (int f = 0; f < 10; ++f)
            for (int i = 0; i < 600; ++i) scores.push_back(i < 300 ? 1.0 : 0.0);
        auto res = tar_at_far(scores, proto, 0.001);
        CHECK(res.mean == 1.0);
        CHECK(res.stddev == 0.0);
        REQUIRE(res.per_fold.size() == 10);

        SECTION("malformed protocols are rejected") {
            proto.folds[0][5].same = false;
            CHECK_THROWS_AS(proto.validate(), Error);
        }
        SECTION("no negatives errors") {
            std::vector<double> pos(5, 1.0), none;
            CHECK_THROWS_AS(tar_single_fold(pos, none, 0.001), Error);
        }
    }
    SECTION("random scores: TAR stays near the random-guess expectation") {
        // with 300 negatives and far=0.001 the threshold is the maximum
        // negative; by exchangeability each positive beats it with
        // probability 1/301
        Rng rng(31);
        double total = 0;
        const int trials = 200;
        for (int t = 0; t < trials; ++t) {
            std::vector<double> pos(300), neg(300);
            for (auto& v : pos) v = rng.normal();
            for (auto& v : neg) v = rng.normal();
            total += tar_single_fold(pos, neg, 0.001);
        }
        const double mean = total / trials;
        CHECK(mean > 0.0);
        CHECK(mean < 0.02);
        CHECK(std::abs(mean - 1.0 / 301.0) < 0.004);
    }
}

TEST_CASE("embedding similarity is negative Euclidean distance") {
    Tensor<double> a({2});
    a[0] = 3.0;
    a[1] = 0.0;
    Tensor<double> b({2});
    b[0] = 0.0;
    b[1] = 4.0;
    CHECK(embedding_similarity(a, b) == Catch::Approx(-5.0));
    CHECK(embedding_similarity(a, a) == 0.0);
}
