// Copyright 2026 The clipce Authors. All Rights Reserved.
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

// Reference formulas written independently of the library, in long double
// and in the textbook form (no max-shift, no shared helpers).

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

inline long double dot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return s;
}

inline double two_way(long double pos, long double neg) {
  const long double en = std::exp(neg);
  const long double ep = std::exp(pos);
  return static_cast<double>(en / (en + ep));
}

inline double ame(double sim_pos, double sim_neg) { return two_way(sim_pos, sim_neg); }

inline double sigmoid(double x) { return static_cast<double>(1.0L / (1.0L + std::exp(-static_cast<long double>(x)))); }

inline double focal_weight(double p, double gamma) {
  return static_cast<double>(std::pow(1.0L - static_cast<long double>(p), static_cast<long double>(gamma)));
}

inline double offset(const std::vector<double>& adapted, const std::vector<double>& tp, const std::vector<double>& tn) {
  return two_way(dot(adapted, tp), dot(adapted, tn));
}

inline int soft_label(double p, double theta) { return p > theta ? 0 : 1; }

inline double bce(int u, double w) {
  const long double eps = 1e-7L;
  long double c = w;
  if (c < eps) c = eps;
  if (c > 1 - eps) c = 1 - eps;
  return static_cast<double>(-(u * std::log(c) + (1 - u) * std::log(1 - c)));
}

inline double fame(double a, double o) { return (a + o) / 2.0; }

inline long double nll(double p) {
  const long double eps = 1e-7L;
  return -std::log(p < eps ? eps : static_cast<long double>(p));
}

inline double ce(double p) { return static_cast<double>(nll(p)); }

inline double focal(double p, double gamma) {
  const long double pc = p < 1e-7 ? 1e-7L : static_cast<long double>(p);
  return static_cast<double>(std::pow(1.0L - pc, static_cast<long double>(gamma)) * nll(p));
}

inline double clipce(double p, double w_ame, double w_fame, int epoch, double a1, double a2, int ep_i) {
  const long double m = epoch <= ep_i ? std::exp(static_cast<long double>(a1) * w_ame)
                                      : std::exp(static_cast<long double>(a2) * w_fame);
  return static_cast<double>(m * nll(p));
}

// All-point interpolated AP from a TP/FP sequence (already score-sorted).
inline double ap_from_hits(const std::vector<bool>& hits, std::size_t n_gt) {
  std::vector<double> prec, rec;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    tp += hits[i] ? 1 : 0;
    prec.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
    rec.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
  }
  double area = 0, prev = 0;
  for (std::size_t i = 0; i < prec.size(); ++i) {
    double best = 0;
    for (std::size_t j = i; j < prec.size(); ++j) best = prec[j] > best ? prec[j] : best;
    area += (rec[i] - prev) * best;
    prev = rec[i];
  }
  return area;
}

}  // namespace oracle
