#pragma once

#include <cstddef>
#include <span>

// Dense kernels behind the LSTM. Matrices are row-major with one row per
// input feature, so every kernel touches each output element in a fixed
// order. The OpenMP variants split work across output elements only and are
// bitwise identical to the serial reference.
namespace levelseq::kernels {

struct MatrixView {
  const double* data;
  std::size_t rows;
  std::size_t cols;

  const double* row(std::size_t r) const { return data + r * cols; }
};

struct MutableMatrixView {
  double* data;
  std::size_t rows;
  std::size_t cols;

  double* row(std::size_t r) const { return data + r * cols; }
};

namespace serial {
// y[c] += sum_r x[r] * W[r, c]
void accumulate_rows(MatrixView w, std::span<const double> x, std::span<double> y);
// out[r] += sum_c W[r, c] * v[c]
void dot_rows(MatrixView w, std::span<const double> v, std::span<double> out);
// W[r, c] += x[r] * v[c]
void outer_accumulate(MutableMatrixView w, std::span<const double> x, std::span<const double> v);

// Batched forms over the rows t of X/V. Each output element sees exactly the
// additions the single-vector kernel would make, in the same order, so a
// batched call equals a loop of single calls bit for bit.
// Y[t, c] += sum_r X[t, r] * W[r, c]
void accumulate_rows_batch(MatrixView w, MatrixView x, MutableMatrixView y);
// Out[t, r] += sum_c W[r, c] * V[t, c]
void dot_rows_batch(MatrixView w, MatrixView v, MutableMatrixView out);
// W[r, c] += X[t, r] * V[t, c], for t from the last row down to the first
void outer_accumulate_batch(MutableMatrixView w, MatrixView x, MatrixView v);
}  // namespace serial

namespace parallel {
void accumulate_rows(MatrixView w, std::span<const double> x, std::span<double> y);
void dot_rows(MatrixView w, std::span<const double> v, std::span<double> out);
void outer_accumulate(MutableMatrixView w, std::span<const double> x, std::span<const double> v);
void accumulate_rows_batch(MatrixView w, MatrixView x, MutableMatrixView y);
void dot_rows_batch(MatrixView w, MatrixView v, MutableMatrixView out);
void outer_accumulate_batch(MutableMatrixView w, MatrixView x, MatrixView v);
}  // namespace parallel

// Dispatch: the parallel path when more than one thread is available and the
// matrix is large enough to amortize the fork.
void accumulate_rows(MatrixView w, std::span<const double> x, std::span<double> y);
void dot_rows(MatrixView w, std::span<const double> v, std::span<double> out);
void outer_accumulate(MutableMatrixView w, std::span<const double> x, std::span<const double> v);
void accumulate_rows_batch(MatrixView w, MatrixView x, MutableMatrixView y);
void dot_rows_batch(MatrixView w, MatrixView v, MutableMatrixView out);
void outer_accumulate_batch(MutableMatrixView w, MatrixView x, MatrixView v);

int max_threads();
void set_threads(int n);

}  // namespace levelseq::kernels
