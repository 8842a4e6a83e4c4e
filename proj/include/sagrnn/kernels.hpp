// Copyright 2026 The SAGRNN Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Dense numeric kernels. Every kernel is written so that each output
// element is produced by exactly one invocation with a fixed internal
// summation order; the OpenMP path partitions output ranges across
// threads and is therefore bit-identical to the serial path for any
// thread count. kern::ref holds naive reference implementations kept
// for tests and the kernel benchmark.

#ifndef SAGRNN_KERNELS_HPP_
#define SAGRNN_KERNELS_HPP_

#include <cstdint>

namespace sagrnn {
namespace kern {

// Worker thread cap. 1 (the default) runs everything on the calling
// thread. Values > 1 enable OpenMP partitioning for large outputs.
void set_threads(int n);
int threads();

// Work sizes below this many flops stay serial even when threads() > 1.
inline constexpr int64_t kParallelFlopCutoff = 32768;

// C[m x n] = op(A) * op(B), op controlled by trans_a/trans_b.
// A is [m x k] (or [k x m] when transposed), B is [k x n] (or [n x k]).
// accumulate adds into C instead of overwriting.
void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          const double* a, const double* b, double* c, bool accumulate);

// Batched gemm over g independent [m x k] x [k x n] products.
void bgemm(bool trans_a, bool trans_b, int64_t batch, int64_t m, int64_t n,
           int64_t k, const double* a, const double* b, double* c,
           bool accumulate);

// y[n, l] = sum_p k[n, p] * x[l * stride + p], l in [0, L).
void conv1d(const double* x, int64_t t, const double* kernels, int64_t n,
            int64_t p, int64_t stride, double* y, int64_t l);
// dx[t] = sum over (n, l, p) with l * stride + p == t (gather form).
void conv1d_grad_x(const double* dy, const double* kernels, int64_t n,
                   int64_t p, int64_t stride, int64_t l, double* dx,
                   int64_t t);
// dk[n, p] += sum_l dy[n, l] * x[l * stride + p].
void conv1d_grad_k(const double* dy, const double* x, int64_t n, int64_t p,
                   int64_t stride, int64_t l, double* dk);

// Softmax over contiguous rows of length `cols` with max subtraction.
void softmax_rows(const double* x, double* y, int64_t rows, int64_t cols);

// out[r] += sum_c x[r, c]  (fixed order over c).
void row_sums(const double* x, int64_t rows, int64_t cols, double* out,
              bool accumulate);
// out[c] += sum_r x[r, c]  (fixed order over r).
void col_sums(const double* x, int64_t rows, int64_t cols, double* out,
              bool accumulate);

// Deterministic full reduction: fixed 4096-element blocks combined in
// index order, so the result does not depend on the thread count.
double sum_all(const double* x, int64_t n);

namespace ref {
// Naive fixed-order implementations, kept as oracles for the fast paths.
void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          const double* a, const double* b, double* c, bool accumulate);
void conv1d(const double* x, int64_t t, const double* kernels, int64_t n,
            int64_t p, int64_t stride, double* y, int64_t l);
double sum_all(const double* x, int64_t n);
}  // namespace ref

}  // namespace kern
}  // namespace sagrnn

#endif  // SAGRNN_KERNELS_HPP_
