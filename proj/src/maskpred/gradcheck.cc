// maskpred/gradcheck.cc

// Copyright 2026  The maskpred authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "maskpred/gradcheck.h"

#include <algorithm>
#include <cmath>

namespace maskpred {

double gradient_check(const ParamLossFn& loss_fn, const Parameters& params,
                      double eps, int num_coords, uint64_t seed) {
  Parameters work = params;
  Parameters analytic = zeros_like(params);
  loss_fn(work, &analytic);

  std::vector<Mat*> tensors;
  std::vector<Mat*> grad_tensors;
  work.for_each([&](const std::string&, Mat& m) { tensors.push_back(&m); });
  analytic.for_each(
      [&](const std::string&, Mat& m) { grad_tensors.push_back(&m); });

  size_t total = work.num_scalars();
  if (total == 0) return 0.0;

  Rng rng(seed);
  double max_rel = 0.0;
  int checks = std::min<int>(num_coords, static_cast<int>(total));
  for (int c = 0; c < checks; ++c) {
    size_t flat = rng.uniform_int(total);
    size_t ti = 0;
    while (flat >= static_cast<size_t>(tensors[ti]->size())) {
      flat -= tensors[ti]->size();
      ++ti;
    }
    double* slot = tensors[ti]->data() + flat;
    double saved = *slot;
    *slot = saved + eps;
    double up = loss_fn(work, nullptr);
    *slot = saved - eps;
    double down = loss_fn(work, nullptr);
    *slot = saved;

    double numeric = (up - down) / (2.0 * eps);
    double a = grad_tensors[ti]->data()[flat];
    double rel = std::abs(a - numeric) /
                 std::max(std::abs(a) + std::abs(numeric), 1e-3);
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace maskpred
