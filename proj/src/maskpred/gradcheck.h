// maskpred/gradcheck.h

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

#ifndef MASKPRED_GRADCHECK_H_
#define MASKPRED_GRADCHECK_H_

#include <functional>

#include "maskpred/nn.h"

namespace maskpred {

// Loss functional over parameters. When `grads` is non-null the callee must
// accumulate (+=) analytic parameter gradients into it.
using ParamLossFn = std::function<double(const Parameters&, Parameters* grads)>;

// Compares analytic gradients against central finite differences on
// `num_coords` randomly chosen parameter coordinates. Relative error is
// |analytic - numeric| / max(|analytic| + |numeric|, 1e-3); returns the max
// over checked coordinates. All arithmetic is 64-bit.
double gradient_check(const ParamLossFn& loss_fn, const Parameters& params,
                      double eps, int num_coords, uint64_t seed);

}  // namespace maskpred

#endif  // MASKPRED_GRADCHECK_H_
