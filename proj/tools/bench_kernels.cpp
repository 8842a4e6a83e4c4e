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
// Times the OpenMP kernel paths against the single-thread paths and the
// naive references. Usage: sagrnn_bench [threads]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "sagrnn/kernels.hpp"
#include "sagrnn/rng.hpp"

using namespace sagrnn;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() /
         reps;
}

std::vector<double> random_vec(size_t n, Rng& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

void report(const char* name, double ref_ms, double serial_ms,
            double omp_ms) {
  std::printf("%-24s %10.3f %10.3f %10.3f %8.2fx\n", name, ref_ms, serial_ms,
              omp_ms, omp_ms > 0 ? serial_ms / omp_ms : 0.0);
}

}  // namespace

int main(int argc, char** argv) {
  int nthreads = 4;
  if (argc > 1) nthreads = std::atoi(argv[1]);
  Rng rng(12345);

  std::printf("%-24s %10s %10s %10s %8s\n", "kernel", "naive(ms)",
              "serial(ms)", "omp(ms)", "speedup");

  {
    const int64_t m = 256, n = 256, k = 256;
    auto a = random_vec(m * k, rng);
    auto b = random_vec(k * n, rng);
    std::vector<double> c(m * n);
    double ref = time_ms(
        [&] {
          kern::ref::gemm(false, false, m, n, k, a.data(), b.data(), c.data(),
                          false);
        },
        3);
    kern::set_threads(1);
    double serial = time_ms(
        [&] {
          kern::gemm(false, false, m, n, k, a.data(), b.data(), c.data(),
                     false);
        },
        5);
    kern::set_threads(nthreads);
    double omp = time_ms(
        [&] {
          kern::gemm(false, false, m, n, k, a.data(), b.data(), c.data(),
                     false);
        },
        5);
    report("gemm 256^3", ref, serial, omp);
  }

  {
    const int64_t t = 64000, n = 64, p = 16, stride = 4;
    const int64_t l = (t - p) / stride + 1;
    auto x = random_vec(t, rng);
    auto k = random_vec(n * p, rng);
    std::vector<double> y(n * l);
    double ref = time_ms(
        [&] {
          kern::ref::conv1d(x.data(), t, k.data(), n, p, stride, y.data(), l);
        },
        3);
    kern::set_threads(1);
    double serial = time_ms(
        [&] { kern::conv1d(x.data(), t, k.data(), n, p, stride, y.data(), l); },
        5);
    kern::set_threads(nthreads);
    double omp = time_ms(
        [&] { kern::conv1d(x.data(), t, k.data(), n, p, stride, y.data(), l); },
        5);
    report("conv1d 64k x 64", ref, serial, omp);
  }

  {
    const int64_t g = 142, m = 14, n = 14, k = 64;
    auto a = random_vec(g * m * k, rng);
    auto b = random_vec(g * k * n, rng);
    std::vector<double> c(g * m * n);
    kern::set_threads(1);
    double serial = time_ms(
        [&] {
          kern::bgemm(false, false, g, m, n, k, a.data(), b.data(), c.data(),
                      false);
        },
        10);
    kern::set_threads(nthreads);
    double omp = time_ms(
        [&] {
          kern::bgemm(false, false, g, m, n, k, a.data(), b.data(), c.data(),
                      false);
        },
        10);
    report("bgemm attention-ish", serial, serial, omp);
  }

  {
    const int64_t rows = 2000, cols = 126;
    auto x = random_vec(rows * cols, rng);
    std::vector<double> y(rows * cols);
    kern::set_threads(1);
    double serial = time_ms(
        [&] { kern::softmax_rows(x.data(), y.data(), rows, cols); }, 10);
    kern::set_threads(nthreads);
    double omp = time_ms(
        [&] { kern::softmax_rows(x.data(), y.data(), rows, cols); }, 10);
    report("softmax 2000x126", serial, serial, omp);
  }

  kern::set_threads(1);
  return 0;
}
