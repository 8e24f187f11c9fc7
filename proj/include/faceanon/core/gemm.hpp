#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "faceanon/core/parallel.hpp"

namespace faceanon {

namespace detail {

template <typename T>
using ConstMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using MutMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

constexpr std::int64_t kGemmBlock = 64;

}  // namespace detail

/// C = op(A)*op(B) (+ C when accumulate), all row-major contiguous.
/// op(A) is M x K, op(B) is K x N. The output is partitioned into fixed-size
/// row or column blocks (a function of the problem shape only) and each block
/// is a single-threaded Eigen product, so every output element is accumulated
/// in one fixed order: results are bit-identical for any thread count.
template <typename T>
void matmul(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n,
            bool trans_a = false, bool trans_b = false, bool accumulate = false) {
    using detail::ConstMap;
    using detail::MutMap;

    MutMap<T> cm(c, m, n);
    auto run_block = [&](std::int64_t r0, std::int64_t rows, std::int64_t c0, std::int64_t cols) {
        ConstMap<T> am(a, trans_a ? k : m, trans_a ? m : k);
        ConstMap<T> bm(b, trans_b ? n : k, trans_b ? k : n);
        auto dst = cm.block(r0, c0, rows, cols);
        if (!trans_a && !trans_b) {
            if (accumulate)
                dst.noalias() += am.middleRows(r0, rows) * bm.middleCols(c0, cols);
            else
                dst.noalias() = am.middleRows(r0, rows) * bm.middleCols(c0, cols);
        } else if (trans_a && !trans_b) {
            if (accumulate)
                dst.noalias() += am.middleCols(r0, rows).transpose() * bm.middleCols(c0, cols);
            else
                dst.noalias() = am.middleCols(r0, rows).transpose() * bm.middleCols(c0, cols);
        } else if (!trans_a && trans_b) {
            if (accumulate)
                dst.noalias() += am.middleRows(r0, rows) * bm.middleRows(c0, cols).transpose();
            else
                dst.noalias() = am.middleRows(r0, rows) * bm.middleRows(c0, cols).transpose();
        } else {
            if (accumulate)
                dst.noalias() +=
                    am.middleCols(r0, rows).transpose() * bm.middleRows(c0, cols).transpose();
            else
                dst.noalias() =
                    am.middleCols(r0, rows).transpose() * bm.middleRows(c0, cols).transpose();
        }
    };

    const bool split_rows = m >= n;
    const std::int64_t extent = split_rows ? m : n;
    const std::int64_t nblocks = (extent + detail::kGemmBlock - 1) / detail::kGemmBlock;
    if (nblocks <= 1) {
        run_block(0, m, 0, n);
        return;
    }
    parallel_for(nblocks, [&](std::int64_t i) {
        const std::int64_t lo = i * detail::kGemmBlock;
        const std::int64_t len = std::min(detail::kGemmBlock, extent - lo);
        if (split_rows)
            run_block(lo, len, 0, n);
        else
            run_block(0, m, lo, len);
    });
}

}  // namespace faceanon
