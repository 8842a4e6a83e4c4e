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

#include "sagrnn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sagrnn {

namespace {

constexpr double kDbScale = 10.0 / 2.302585092994046;  // 10 / ln 10

void check_equal_length(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": est/ref shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

double energy(const Tensor& t) {
  double acc = 0.0;
  for (int64_t i = 0; i < t.numel(); ++i) acc += t[i] * t[i];
  return acc;
}

}  // namespace

std::string to_string(Objective o) {
  return o == Objective::kSnr ? "snr" : "si_snr";
}

std::string to_string(PitScope s) {
  return s == PitScope::kJointEars ? "joint_ears" : "per_ear";
}

Objective objective_from_string(const std::string& s) {
  if (s == "snr") return Objective::kSnr;
  if (s == "si_snr") return Objective::kSiSnr;
  throw ConfigError("unknown objective: " + s);
}

PitScope pit_scope_from_string(const std::string& s) {
  if (s == "joint_ears") return PitScope::kJointEars;
  if (s == "per_ear") return PitScope::kPerEar;
  throw ConfigError("unknown pit scope: " + s);
}

Var snr_db(const Var& est, const Var& ref, double epsilon) {
  check_equal_length("snr_db", est->value, ref->value);
  Var err = sub(ref, est);
  Var num = add_const(sum(mul(ref, ref)), epsilon);
  Var den = add_const(sum(mul(err, err)), epsilon);
  return mul_const(log_op(vdiv(num, den)), kDbScale);
}

double snr_db(const Tensor& est, const Tensor& ref, double epsilon) {
  check_equal_length("snr_db", est, ref);
  double err = 0.0;
  for (int64_t i = 0; i < est.numel(); ++i) {
    const double d = ref[i] - est[i];
    err += d * d;
  }
  return 10.0 * std::log10((energy(ref) + epsilon) / (err + epsilon));
}

// The regularizer is epsilon times the (zero-mean) estimate energy, so
// the score is exactly invariant under est -> alpha * est while staying
// finite for perfect and orthogonal estimates.
Var si_snr_db(const Var& est, const Var& ref, double epsilon) {
  check_equal_length("si_snr_db", est->value, ref->value);
  const double inv_n = 1.0 / static_cast<double>(est->value.numel());
  Var est0 = sub(est, mul_const(sum(est), inv_n));
  Var ref0 = sub(ref, mul_const(sum(ref), inv_n));
  Var scale = vdiv(sum(mul(est0, ref0)), sum(mul(ref0, ref0)));
  Var target = mul(ref0, scale);
  Var noise = sub(est0, target);
  Var reg = mul_const(sum(mul(est0, est0)), epsilon);
  Var num = add(sum(mul(target, target)), reg);
  Var den = add(sum(mul(noise, noise)), reg);
  return mul_const(log_op(vdiv(num, den)), kDbScale);
}

double si_snr_db(const Tensor& est, const Tensor& ref, double epsilon) {
  check_equal_length("si_snr_db", est, ref);
  const int64_t n = est.numel();
  double mean_e = 0.0, mean_r = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    mean_e += est[i];
    mean_r += ref[i];
  }
  mean_e /= n;
  mean_r /= n;
  double dot = 0.0, ref_energy = 0.0, est_energy = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    dot += (est[i] - mean_e) * (ref[i] - mean_r);
    ref_energy += (ref[i] - mean_r) * (ref[i] - mean_r);
    est_energy += (est[i] - mean_e) * (est[i] - mean_e);
  }
  const double scale = dot / ref_energy;
  double target = 0.0, noise = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double t = scale * (ref[i] - mean_r);
    const double d = (est[i] - mean_e) - t;
    target += t * t;
    noise += d * d;
  }
  const double reg = epsilon * est_energy;
  return 10.0 * std::log10((target + reg) / (noise + reg));
}

// ---------------------------------------------------------------------------
// PIT

namespace {

// Pairwise mean-over-ears objective table. entry(ce, cr) scores estimate
// speaker ce against reference speaker cr.
struct PairwiseTable {
  int64_t speakers = 0;
  int64_t ears = 0;
  std::vector<Var> vars;      // joint: [C x C]; per-ear tables per e
  std::vector<double> values;

  Var& at(int64_t ce, int64_t cr, int64_t e = 0) {
    return vars[(e * speakers + ce) * speakers + cr];
  }
  double value(int64_t ce, int64_t cr, int64_t e = 0) const {
    return values[(e * speakers + ce) * speakers + cr];
  }
};

Var objective_of(Objective obj, const Var& est, const Var& ref, double eps) {
  return obj == Objective::kSnr ? snr_db(est, ref, eps)
                                : si_snr_db(est, ref, eps);
}

// Enumerates permutations of 0..c-1 in lexicographic order.
std::vector<std::vector<int64_t>> all_permutations(int64_t c) {
  std::vector<int64_t> idx(c);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::vector<int64_t>> out;
  do {
    out.push_back(idx);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return out;
}

}  // namespace

PitResult pit_assign(const Var& est, const Var& ref, const LossConfig& cfg) {
  check_equal_length("pit_assign", est->value, ref->value);
  Var est3 = est, ref3 = ref;
  if (est->value.rank() == 2) {
    const int64_t c = est->value.extent(0), t = est->value.extent(1);
    est3 = reshape(est, {c, 1, t});
    ref3 = reshape(ref, {c, 1, t});
  } else if (est->value.rank() != 3) {
    throw DimensionError("pit_assign: expects [C x T] or [C x E x T]");
  }
  const int64_t c = est3->value.extent(0);
  const int64_t e = est3->value.extent(1);
  if (c > 6) {
    throw UsageError("pit_assign: C > 6 rejected (factorial blowup)");
  }

  // Per-(speaker pair, ear) objective scalars.
  std::vector<Var> est_slices(c * e), ref_slices(c * e);
  for (int64_t i = 0; i < c; ++i) {
    Var ei = select(est3, 0, i);
    Var ri = select(ref3, 0, i);
    for (int64_t j = 0; j < e; ++j) {
      est_slices[i * e + j] = select(ei, 0, j);
      ref_slices[i * e + j] = select(ri, 0, j);
    }
  }
  std::vector<Var> table(c * c * e);
  std::vector<double> table_val(c * c * e);
  for (int64_t ce = 0; ce < c; ++ce) {
    for (int64_t cr = 0; cr < c; ++cr) {
      for (int64_t j = 0; j < e; ++j) {
        Var v = objective_of(cfg.objective, est_slices[ce * e + j],
                             ref_slices[cr * e + j], cfg.epsilon);
        table[(ce * c + cr) * e + j] = v;
        table_val[(ce * c + cr) * e + j] = v->value.item();
      }
    }
  }

  const auto perms = all_permutations(c);
  PitResult result;

  auto perm_score = [&](const std::vector<int64_t>& perm, int64_t ear_lo,
                        int64_t ear_hi) {
    double acc = 0.0;
    for (int64_t j = 0; j < c; ++j) {
      for (int64_t ear = ear_lo; ear < ear_hi; ++ear) {
        acc += table_val[(perm[j] * c + j) * e + ear];
      }
    }
    return acc;
  };
  auto perm_loss_var = [&](const std::vector<int64_t>& perm, int64_t ear_lo,
                           int64_t ear_hi) {
    Var acc;
    for (int64_t j = 0; j < c; ++j) {
      for (int64_t ear = ear_lo; ear < ear_hi; ++ear) {
        Var v = table[(perm[j] * c + j) * e + ear];
        acc = acc ? add(acc, v) : v;
      }
    }
    const double denom = static_cast<double>(c * (ear_hi - ear_lo));
    return mul_const(acc, -1.0 / denom);
  };

  if (cfg.pit_scope == PitScope::kJointEars) {
    size_t best = 0;
    double best_score = perm_score(perms[0], 0, e);
    for (size_t pi = 1; pi < perms.size(); ++pi) {
      const double s = perm_score(perms[pi], 0, e);
      if (s > best_score) {
        best_score = s;
        best = pi;
      }
    }
    result.perms.push_back(perms[best]);
    result.loss = perm_loss_var(perms[best], 0, e);
  } else {
    Var total;
    for (int64_t ear = 0; ear < e; ++ear) {
      size_t best = 0;
      double best_score = perm_score(perms[0], ear, ear + 1);
      for (size_t pi = 1; pi < perms.size(); ++pi) {
        const double s = perm_score(perms[pi], ear, ear + 1);
        if (s > best_score) {
          best_score = s;
          best = pi;
        }
      }
      result.perms.push_back(perms[best]);
      Var ear_loss = perm_loss_var(perms[best], ear, ear + 1);
      total = total ? add(total, ear_loss) : ear_loss;
    }
    result.loss = mul_const(total, 1.0 / static_cast<double>(e));
  }
  return result;
}

std::vector<int64_t> multiscale_blocks(MultiScale mode, int64_t num_blocks) {
  int64_t first = 0;
  switch (mode) {
    case MultiScale::kAll: first = 0; break;
    case MultiScale::kLast3: first = std::max<int64_t>(0, num_blocks - 3); break;
    case MultiScale::kLast: first = num_blocks - 1; break;
  }
  std::vector<int64_t> out;
  for (int64_t b = first; b < num_blocks; ++b) out.push_back(b);
  return out;
}

Var multi_scale_loss(const std::vector<Var>& block_estimates, const Var& ref,
                     const LossConfig& cfg) {
  if (block_estimates.empty()) {
    throw UsageError("multi_scale_loss: no block estimates");
  }
  const auto blocks = multiscale_blocks(
      cfg.multiscale, static_cast<int64_t>(block_estimates.size()));
  Var acc;
  for (int64_t b : blocks) {
    Var loss = pit_assign(block_estimates[b], ref, cfg).loss;
    acc = acc ? add(acc, loss) : loss;
  }
  return mul_const(acc, 1.0 / static_cast<double>(blocks.size()));
}

}  // namespace sagrnn
