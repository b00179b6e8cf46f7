#include "levelseq/kernels.hpp"

#include <algorithm>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace levelseq::kernels {

namespace {

constexpr std::size_t kParallelThreshold = 16384;
constexpr std::size_t kColumnBlock = 64;

// Four lanes of partial sums, combined as (s0 + s1) + (s2 + s3). Written with
// vector types so the lane order is explicit rather than left to the
// vectorizer; -ffp-contract=off keeps every multiply and add separate.
typedef double v4 __attribute__((vector_size(32)));

inline v4 load4(const double* p) {
  v4 r;
  std::memcpy(&r, p, sizeof r);
  return r;
}

inline double finish(v4 s, const double* a, const double* b, std::size_t i, std::size_t n) {
  double r = (s[0] + s[1]) + (s[2] + s[3]);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

inline double dot(const double* a, const double* b, std::size_t n) {
  v4 s = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) s += load4(a + i) * load4(b + i);
  return finish(s, a, b, i, n);
}

// dot() of four rows against one vector, sharing the vector loads.
inline void dot4(const double* a0, const double* a1, const double* a2, const double* a3,
                 const double* b, std::size_t n, double* out) {
  v4 s0 = {0.0, 0.0, 0.0, 0.0}, s1 = s0, s2 = s0, s3 = s0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const v4 bv = load4(b + i);
    s0 += load4(a0 + i) * bv;
    s1 += load4(a1 + i) * bv;
    s2 += load4(a2 + i) * bv;
    s3 += load4(a3 + i) * bv;
  }
  out[0] += finish(s0, a0, b, i, n);
  out[1] += finish(s1, a1, b, i, n);
  out[2] += finish(s2, a2, b, i, n);
  out[3] += finish(s3, a3, b, i, n);
}

// y[c] += x[r] * W[r, c] for rows r0.. in ascending order. Four rows are
// folded per pass so y is loaded and stored once per four products; the
// additions per element happen in the same order as one row at a time.
inline void accumulate_block(MatrixView w, const double* x, double* __restrict y, std::size_t c0,
                             std::size_t c1) {
  std::size_t r = 0;
  for (; r + 4 <= w.rows; r += 4) {
    const double x0 = x[r], x1 = x[r + 1], x2 = x[r + 2], x3 = x[r + 3];
    const double* __restrict w0 = w.row(r);
    const double* __restrict w1 = w.row(r + 1);
    const double* __restrict w2 = w.row(r + 2);
    const double* __restrict w3 = w.row(r + 3);
    for (std::size_t c = c0; c < c1; ++c) {
      double acc = y[c];
      acc += x0 * w0[c];
      acc += x1 * w1[c];
      acc += x2 * w2[c];
      acc += x3 * w3[c];
      y[c] = acc;
    }
  }
  for (; r < w.rows; ++r) {
    const double xr = x[r];
    const double* __restrict wr = w.row(r);
    for (std::size_t c = c0; c < c1; ++c) y[c] += xr * wr[c];
  }
}

inline void dot_block(MatrixView w, const double* v, double* out, std::size_t r0, std::size_t r1) {
  std::size_t r = r0;
  for (; r + 4 <= r1; r += 4) dot4(w.row(r), w.row(r + 1), w.row(r + 2), w.row(r + 3), v, w.cols, out + r);
  for (; r < r1; ++r) out[r] += dot(w.row(r), v, w.cols);
}

inline void outer_row(MutableMatrixView w, std::span<const double> x,
                      std::span<const double> v, std::size_t r) {
  const double xr = x[r];
  double* __restrict row = w.row(r);
  const double* __restrict vp = v.data();
  for (std::size_t c = 0; c < w.cols; ++c) row[c] += xr * vp[c];
}

// Tiles for the batched kernels: a block of Y or W rows stays in L1 while the
// other operand streams past it.
constexpr std::size_t kBatchRows = 16;
constexpr std::size_t kWeightRows = 4;

inline void accumulate_tile(MatrixView w, MatrixView x, MutableMatrixView y, std::size_t t0,
                            std::size_t t1, std::size_t c0, std::size_t c1) {
  for (std::size_t t = t0; t < t1; ++t) accumulate_block(w, x.row(t), y.row(t), c0, c1);
}

inline void dot_tile(MatrixView w, MatrixView v, MutableMatrixView out, std::size_t r0, std::size_t r1) {
  for (std::size_t t = 0; t < v.rows; ++t) dot_block(w, v.row(t), out.row(t), r0, r1);
}

// W[r, c] += X[t, r] * V[t, c] with t descending, four steps per pass.
inline void outer_tile(MutableMatrixView w, MatrixView x, MatrixView v, std::size_t r0, std::size_t r1) {
  std::size_t t = x.rows;
  for (; t >= 4; t -= 4) {
    const double* __restrict v0 = v.row(t - 1);
    const double* __restrict v1 = v.row(t - 2);
    const double* __restrict v2 = v.row(t - 3);
    const double* __restrict v3 = v.row(t - 4);
    for (std::size_t r = r0; r < r1; ++r) {
      const double x0 = x.row(t - 1)[r], x1 = x.row(t - 2)[r], x2 = x.row(t - 3)[r], x3 = x.row(t - 4)[r];
      double* __restrict wr = w.row(r);
      for (std::size_t c = 0; c < w.cols; ++c) {
        double acc = wr[c];
        acc += x0 * v0[c];
        acc += x1 * v1[c];
        acc += x2 * v2[c];
        acc += x3 * v3[c];
        wr[c] = acc;
      }
    }
  }
  for (; t-- > 0;) {
    const double* __restrict vt = v.row(t);
    for (std::size_t r = r0; r < r1; ++r) {
      const double xr = x.row(t)[r];
      double* __restrict wr = w.row(r);
      for (std::size_t c = 0; c < w.cols; ++c) wr[c] += xr * vt[c];
    }
  }
}

std::size_t blocks(std::size_t n, std::size_t size) { return (n + size - 1) / size; }

bool worth_parallel(std::size_t rows, std::size_t cols) {
  return max_threads() > 1 && rows * cols >= kParallelThreshold;
}

}  // namespace

namespace serial {

void accumulate_rows(MatrixView w, std::span<const double> x, std::span<double> y) {
  accumulate_block(w, x.data(), y.data(), 0, w.cols);
}

void dot_rows(MatrixView w, std::span<const double> v, std::span<double> out) {
  dot_block(w, v.data(), out.data(), 0, w.rows);
}

void outer_accumulate(MutableMatrixView w, std::span<const double> x,
                      std::span<const double> v) {
  for (std::size_t r = 0; r < w.rows; ++r) outer_row(w, x, v, r);
}

void accumulate_rows_batch(MatrixView w, MatrixView x, MutableMatrixView y) {
  for (std::size_t t0 = 0; t0 < x.rows; t0 += kBatchRows) {
    for (std::size_t c0 = 0; c0 < w.cols; c0 += kColumnBlock) {
      accumulate_tile(w, x, y, t0, std::min(x.rows, t0 + kBatchRows), c0, std::min(w.cols, c0 + kColumnBlock));
    }
  }
}

void dot_rows_batch(MatrixView w, MatrixView v, MutableMatrixView out) {
  for (std::size_t r0 = 0; r0 < w.rows; r0 += kWeightRows) dot_tile(w, v, out, r0, std::min(w.rows, r0 + kWeightRows));
}

void outer_accumulate_batch(MutableMatrixView w, MatrixView x, MatrixView v) {
  for (std::size_t r0 = 0; r0 < w.rows; r0 += kWeightRows) outer_tile(w, x, v, r0, std::min(w.rows, r0 + kWeightRows));
}

}  // namespace serial

namespace parallel {

void accumulate_rows(MatrixView w, std::span<const double> x, std::span<double> y) {
  const auto blocks = static_cast<std::ptrdiff_t>((w.cols + kColumnBlock - 1) / kColumnBlock);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const std::size_t c0 = static_cast<std::size_t>(b) * kColumnBlock;
    accumulate_block(w, x.data(), y.data(), c0, std::min(w.cols, c0 + kColumnBlock));
  }
}

void dot_rows(MatrixView w, std::span<const double> v, std::span<double> out) {
  const auto rows = static_cast<std::ptrdiff_t>(w.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    out[static_cast<std::size_t>(r)] += dot(w.row(static_cast<std::size_t>(r)), v.data(), w.cols);
  }
}

void outer_accumulate(MutableMatrixView w, std::span<const double> x,
                      std::span<const double> v) {
  const auto rows = static_cast<std::ptrdiff_t>(w.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) outer_row(w, x, v, static_cast<std::size_t>(r));
}

void accumulate_rows_batch(MatrixView w, MatrixView x, MutableMatrixView y) {
  const std::size_t tb = blocks(x.rows, kBatchRows);
  const std::size_t cb = blocks(w.cols, kColumnBlock);
  const auto tiles = static_cast<std::ptrdiff_t>(tb * cb);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < tiles; ++k) {
    const std::size_t t0 = static_cast<std::size_t>(k) / cb * kBatchRows;
    const std::size_t c0 = static_cast<std::size_t>(k) % cb * kColumnBlock;
    accumulate_tile(w, x, y, t0, std::min(x.rows, t0 + kBatchRows), c0, std::min(w.cols, c0 + kColumnBlock));
  }
}

void dot_rows_batch(MatrixView w, MatrixView v, MutableMatrixView out) {
  const auto n = static_cast<std::ptrdiff_t>(blocks(w.rows, kWeightRows));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < n; ++b) {
    const std::size_t r0 = static_cast<std::size_t>(b) * kWeightRows;
    dot_tile(w, v, out, r0, std::min(w.rows, r0 + kWeightRows));
  }
}

void outer_accumulate_batch(MutableMatrixView w, MatrixView x, MatrixView v) {
  const auto n = static_cast<std::ptrdiff_t>(blocks(w.rows, kWeightRows));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < n; ++b) {
    const std::size_t r0 = static_cast<std::size_t>(b) * kWeightRows;
    outer_tile(w, x, v, r0, std::min(w.rows, r0 + kWeightRows));
  }
}

}  // namespace parallel

void accumulate_rows(MatrixView w, std::span<const double> x, std::span<double> y) {
  if (worth_parallel(w.rows, w.cols)) {
    parallel::accumulate_rows(w, x, y);
  } else {
    serial::accumulate_rows(w, x, y);
  }
}

void dot_rows(MatrixView w, std::span<const double> v, std::span<double> out) {
  if (worth_parallel(w.rows, w.cols)) {
    parallel::dot_rows(w, v, out);
  } else {
    serial::dot_rows(w, v, out);
  }
}

void outer_accumulate(MutableMatrixView w, std::span<const double> x,
                      std::span<const double> v) {
  if (worth_parallel(w.rows, w.cols)) {
    parallel::outer_accumulate(w, x, v);
  } else {
    serial::outer_accumulate(w, x, v);
  }
}

void accumulate_rows_batch(MatrixView w, MatrixView x, MutableMatrixView y) {
  if (worth_parallel(x.rows * w.rows, w.cols)) {
    parallel::accumulate_rows_batch(w, x, y);
  } else {
    serial::accumulate_rows_batch(w, x, y);
  }
}

void dot_rows_batch(MatrixView w, MatrixView v, MutableMatrixView out) {
  if (worth_parallel(v.rows * w.rows, w.cols)) {
    parallel::dot_rows_batch(w, v, out);
  } else {
    serial::dot_rows_batch(w, v, out);
  }
}

void outer_accumulate_batch(MutableMatrixView w, MatrixView x, MatrixView v) {
  if (worth_parallel(x.rows * w.rows, w.cols)) {
    parallel::outer_accumulate_batch(w, x, v);
  } else {
    serial::outer_accumulate_batch(w, x, v);
  }
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace levelseq::kernels
