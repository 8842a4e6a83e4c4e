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

#include "sagrnn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sagrnn {
namespace kern {

namespace {

int g_threads = 1;

// Runs fn(begin, end) over a partition of [0, count). Each index is
// handled exactly once, so results are thread-count independent.
template <typename Fn>
void parallel_ranges(int64_t count, int64_t flops_per_item, const Fn& fn) {
#ifdef _OPENMP
  if (g_threads > 1 && count > 1 &&
      count * std::max<int64_t>(flops_per_item, 1) >= kParallelFlopCutoff) {
#pragma omp parallel for schedule(static) num_threads(g_threads)
    for (int64_t i = 0; i < count; ++i) {
      fn(i, i + 1);
    }
    return;
  }
#else
  (void)flops_per_item;
#endif
  fn(0, count);
}

inline double dot_strided(const double* a, int64_t stride_a, const double* b,
                          int64_t stride_b, int64_t k) {
  double acc = 0.0;
  for (int64_t i = 0; i < k; ++i) {
    acc += a[i * stride_a] * b[i * stride_b];
  }
  return acc;
}

inline double dot_contig(const double* a, const double* b, int64_t k) {
  double acc = 0.0;
  for (int64_t i = 0; i < k; ++i) acc += a[i] * b[i];
  return acc;
}

// Single-row-range gemm worker shared by the serial and OpenMP paths.
// Each transpose case uses a contiguous inner loop; the per-element
// summation order (ascending k) is identical across all of them.
void gemm_rows(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
               const double* a, const double* b, double* c, bool accumulate,
               int64_t row_begin, int64_t row_end) {
  if (!trans_a && trans_b) {
    // C[i,j] = <A row i, B row j>: contiguous dots.
    for (int64_t i = row_begin; i < row_end; ++i) {
      const double* ai = a + i * k;
      double* ci = c + i * n;
      for (int64_t j = 0; j < n; ++j) {
        const double v = dot_contig(ai, b + j * k, k);
        if (accumulate) {
          ci[j] += v;
        } else {
          ci[j] = v;
        }
      }
    }
    return;
  }
  if (!trans_a && !trans_b) {
    // C[i,:] = sum_q A[i,q] * B[q,:]: axpy rows of B.
    for (int64_t i = row_begin; i < row_end; ++i) {
      const double* ai = a + i * k;
      double* ci = c + i * n;
      if (!accumulate) std::fill(ci, ci + n, 0.0);
      for (int64_t q = 0; q < k; ++q) {
        const double av = ai[q];
        const double* bq = b + q * n;
        for (int64_t j = 0; j < n; ++j) ci[j] += av * bq[j];
      }
    }
    return;
  }
  if (trans_a && !trans_b) {
    // C[i,:] = sum_q A[q,i] * B[q,:].
    for (int64_t i = row_begin; i < row_end; ++i) {
      double* ci = c + i * n;
      if (!accumulate) std::fill(ci, ci + n, 0.0);
      for (int64_t q = 0; q < k; ++q) {
        const double av = a[q * m + i];
        const double* bq = b + q * n;
        for (int64_t j = 0; j < n; ++j) ci[j] += av * bq[j];
      }
    }
    return;
  }
  // Doubly transposed: strided dots (cold path).
  for (int64_t i = row_begin; i < row_end; ++i) {
    double* ci = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
      const double v = dot_strided(a + i, m, b + j * k, 1, k);
      if (accumulate) {
        ci[j] += v;
      } else {
        ci[j] = v;
      }
    }
  }
}

}  // namespace

void set_threads(int n) { g_threads = std::max(1, n); }
int threads() { return g_threads; }

void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          const double* a, const double* b, double* c, bool accumulate) {
  parallel_ranges(m, n * k * 2, [&](int64_t begin, int64_t end) {
    gemm_rows(trans_a, trans_b, m, n, k, a, b, c, accumulate, begin, end);
  });
}

void bgemm(bool trans_a, bool trans_b, int64_t batch, int64_t m, int64_t n,
           int64_t k, const double* a, const double* b, double* c,
           bool accumulate) {
  parallel_ranges(batch, m * n * k * 2, [&](int64_t begin, int64_t end) {
    for (int64_t g = begin; g < end; ++g) {
      gemm_rows(trans_a, trans_b, m, n, k, a + g * m * k, b + g * k * n,
                c + g * m * n, accumulate, 0, m);
    }
  });
}

void conv1d(const double* x, int64_t t, const double* kernels, int64_t n,
            int64_t p, int64_t stride, double* y, int64_t l) {
  (void)t;
  parallel_ranges(n, l * p * 2, [&](int64_t begin, int64_t end) {
    for (int64_t i = begin; i < end; ++i) {
      const double* ki = kernels + i * p;
      double* yi = y + i * l;
      for (int64_t j = 0; j < l; ++j) {
        yi[j] = dot_strided(ki, 1, x + j * stride, 1, p);
      }
    }
  });
}

void conv1d_grad_x(const double* dy, const double* kernels, int64_t n,
                   int64_t p, int64_t stride, int64_t l, double* dx,
                   int64_t t) {
  parallel_ranges(t, n * 4, [&](int64_t begin, int64_t end) {
    for (int64_t pos = begin; pos < end; ++pos) {
      // Frames j with j*stride <= pos < j*stride + p contribute.
      const int64_t j_hi = std::min(pos / stride, l - 1);
      const int64_t lo_num = pos - p + 1;
      const int64_t j_lo =
          lo_num > 0 ? (lo_num + stride - 1) / stride : 0;
      double acc = 0.0;
      for (int64_t j = j_lo; j <= j_hi; ++j) {
        const int64_t off = pos - j * stride;
        for (int64_t i = 0; i < n; ++i) {
          acc += dy[i * l + j] * kernels[i * p + off];
        }
      }
      dx[pos] += acc;
    }
  });
}

void conv1d_grad_k(const double* dy, const double* x, int64_t n, int64_t p,
                   int64_t stride, int64_t l, double* dk) {
  parallel_ranges(n, p * l * 2, [&](int64_t begin, int64_t end) {
    for (int64_t i = begin; i < end; ++i) {
      for (int64_t q = 0; q < p; ++q) {
        double acc = 0.0;
        for (int64_t j = 0; j < l; ++j) {
          acc += dy[i * l + j] * x[j * stride + q];
        }
        dk[i * p + q] += acc;
      }
    }
  });
}

void softmax_rows(const double* x, double* y, int64_t rows, int64_t cols) {
  parallel_ranges(rows, cols * 8, [&](int64_t begin, int64_t end) {
    for (int64_t r = begin; r < end; ++r) {
      const double* xr = x + r * cols;
      double* yr = y + r * cols;
      double mx = xr[0];
      for (int64_t c = 1; c < cols; ++c) mx = std::max(mx, xr[c]);
      double denom = 0.0;
      for (int64_t c = 0; c < cols; ++c) {
        yr[c] = std::exp(xr[c] - mx);
        denom += yr[c];
      }
      const double inv = 1.0 / denom;
      for (int64_t c = 0; c < cols; ++c) yr[c] *= inv;
    }
  });
}

void row_sums(const double* x, int64_t rows, int64_t cols, double* out,
              bool accumulate) {
  parallel_ranges(rows, cols, [&](int64_t begin, int64_t end) {
    for (int64_t r = begin; r < end; ++r) {
      double acc = 0.0;
      const double* xr = x + r * cols;
      for (int64_t c = 0; c < cols; ++c) acc += xr[c];
      if (accumulate) {
        out[r] += acc;
      } else {
        out[r] = acc;
      }
    }
  });
}

void col_sums(const double* x, int64_t rows, int64_t cols, double* out,
              bool accumulate) {
  parallel_ranges(cols, rows, [&](int64_t begin, int64_t end) {
    for (int64_t c = begin; c < end; ++c) {
      double acc = 0.0;
      for (int64_t r = 0; r < rows; ++r) acc += x[r * cols + c];
      if (accumulate) {
        out[c] += acc;
      } else {
        out[c] = acc;
      }
    }
  });
}

double sum_all(const double* x, int64_t n) {
  constexpr int64_t kBlock = 4096;
  const int64_t blocks = (n + kBlock - 1) / kBlock;
  if (blocks <= 1) {
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) acc += x[i];
    return acc;
  }
  std::vector<double> partial(static_cast<size_t>(blocks), 0.0);
  parallel_ranges(blocks, kBlock, [&](int64_t begin, int64_t end) {
    for (int64_t b = begin; b < end; ++b) {
      const int64_t lo = b * kBlock;
      const int64_t hi = std::min(n, lo + kBlock);
      double acc = 0.0;
      for (int64_t i = lo; i < hi; ++i) acc += x[i];
      partial[static_cast<size_t>(b)] = acc;
    }
  });
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

namespace ref {

void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          const double* a, const double* b, double* c, bool accumulate) {
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int64_t q = 0; q < k; ++q) {
        const double av = trans_a ? a[q * m + i] : a[i * k + q];
        const double bv = trans_b ? b[j * k + q] : b[q * n + j];
        acc += av * bv;
      }
      if (accumulate) {
        c[i * n + j] += acc;
      } else {
        c[i * n + j] = acc;
      }
    }
  }
}

void conv1d(const double* x, int64_t t, const double* kernels, int64_t n,
            int64_t p, int64_t stride, double* y, int64_t l) {
  (void)t;
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < l; ++j) {
      double acc = 0.0;
      for (int64_t q = 0; q < p; ++q) {
        acc += kernels[i * p + q] * x[j * stride + q];
      }
      y[i * l + j] = acc;
    }
  }
}

double sum_all(const double* x, int64_t n) {
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

}  // namespace ref

}  // namespace kern
}  // namespace sagrnn
