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
// The OpenMP kernel paths must be bit-identical to the single-thread
// paths (each output element is computed by exactly one worker in a
// fixed order), and both must agree with the naive references.

#include <cmath>
#include <vector>

#include "doctest.h"
#include "sagrnn/kernels.hpp"
#include "sagrnn/rng.hpp"
#include "sagrnn/tensor.hpp"

using namespace sagrnn;

namespace {

struct ThreadsGuard {
  explicit ThreadsGuard(int n) { kern::set_threads(n); }
  ~ThreadsGuard() { kern::set_threads(1); }
};

std::vector<double> random_vec(size_t n, Rng& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("gemm: parallel path is bit-identical to serial path") {
  Rng rng(101);
  for (bool ta : {false, true}) {
    for (bool tb : {false, true}) {
      const int64_t m = 61, n = 47, k = 129;
      auto a = random_vec(m * k, rng);
      auto b = random_vec(k * n, rng);
      std::vector<double> c_serial(m * n, 0.5), c_omp(m * n, 0.5);
      kern::set_threads(1);
      kern::gemm(ta, tb, m, n, k, a.data(), b.data(), c_serial.data(), true);
      {
        ThreadsGuard guard(4);
        kern::gemm(ta, tb, m, n, k, a.data(), b.data(), c_omp.data(), true);
      }
      for (size_t i = 0; i < c_serial.size(); ++i) {
        CHECK(c_serial[i] == c_omp[i]);
      }
    }
  }
}

TEST_CASE("gemm agrees with the naive reference") {
  Rng rng(103);
  for (bool ta : {false, true}) {
    for (bool tb : {false, true}) {
      const int64_t m = 9, n = 11, k = 13;
      auto a = random_vec(m * k, rng);
      auto b = random_vec(k * n, rng);
      std::vector<double> c_fast(m * n), c_ref(m * n);
      kern::gemm(ta, tb, m, n, k, a.data(), b.data(), c_fast.data(), false);
      kern::ref::gemm(ta, tb, m, n, k, a.data(), b.data(), c_ref.data(),
                      false);
      for (size_t i = 0; i < c_fast.size(); ++i) {
        CHECK(c_fast[i] == doctest::Approx(c_ref[i]).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("conv1d kernel matches reference and is thread-invariant") {
  Rng rng(107);
  const int64_t t = 1024, n = 8, p = 16, stride = 4;
  const int64_t l = (t - p) / stride + 1;
  auto x = random_vec(t, rng);
  auto k = random_vec(n * p, rng);
  std::vector<double> y1(n * l), y2(n * l), yref(n * l);
  kern::set_threads(1);
  kern::conv1d(x.data(), t, k.data(), n, p, stride, y1.data(), l);
  {
    ThreadsGuard guard(3);
    kern::conv1d(x.data(), t, k.data(), n, p, stride, y2.data(), l);
  }
  kern::ref::conv1d(x.data(), t, k.data(), n, p, stride, yref.data(), l);
  for (size_t i = 0; i < y1.size(); ++i) {
    CHECK(y1[i] == y2[i]);
    CHECK(y1[i] == doctest::Approx(yref[i]).epsilon(1e-13));
  }
}

TEST_CASE("bgemm thread invariance") {
  Rng rng(109);
  const int64_t g = 24, m = 10, n = 6, k = 8;
  auto a = random_vec(g * m * k, rng);
  auto b = random_vec(g * k * n, rng);
  std::vector<double> c1(g * m * n), c2(g * m * n);
  kern::set_threads(1);
  kern::bgemm(false, false, g, m, n, k, a.data(), b.data(), c1.data(), false);
  {
    ThreadsGuard guard(4);
    kern::bgemm(false, false, g, m, n, k, a.data(), b.data(), c2.data(),
                false);
  }
  for (size_t i = 0; i < c1.size(); ++i) CHECK(c1[i] == c2[i]);
}

TEST_CASE("sum_all is deterministic across thread counts") {
  Rng rng(113);
  auto x = random_vec(100000, rng);
  kern::set_threads(1);
  const double s1 = kern::sum_all(x.data(), x.size());
  double s4;
  {
    ThreadsGuard guard(4);
    s4 = kern::sum_all(x.data(), x.size());
  }
  CHECK(s1 == s4);
  // Blocked summation may legitimately differ from naive order in the
  // last bits, but must stay within strict floating tolerance.
  CHECK(s1 == doctest::Approx(kern::ref::sum_all(x.data(), x.size()))
                  .epsilon(1e-12));
}

TEST_CASE("softmax_rows thread invariance") {
  Rng rng(127);
  const int64_t rows = 300, cols = 40;
  auto x = random_vec(rows * cols, rng);
  std::vector<double> y1(rows * cols), y2(rows * cols);
  kern::set_threads(1);
  kern::softmax_rows(x.data(), y1.data(), rows, cols);
  {
    ThreadsGuard guard(2);
    kern::softmax_rows(x.data(), y2.data(), rows, cols);
  }
  for (size_t i = 0; i < y1.size(); ++i) CHECK(y1[i] == y2[i]);
}
