// maskpred/ctc.h

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

#ifndef MASKPRED_CTC_H_
#define MASKPRED_CTC_H_

#include <cstdint>
#include <vector>

#include "maskpred/nn.h"

namespace maskpred {

// CTC conventions: log_probs is T x (V+1) with blank at column 0 and labels
// occupying columns 1..V; target labels are in [1, V].

constexpr uint16_t kCtcBlank = 0;

// Minimum number of frames needed to emit `target`: its length plus one
// mandatory blank between each adjacent repeated pair.
int ctc_min_frames(const std::vector<uint16_t>& target);

// Label trellis over the blank-augmented target. alpha/beta both include the
// emission at their own frame, so for every t
//   logsumexp_u(alpha[t][u] + beta[t][u] - emit[t][u]) == log_likelihood.
struct CtcTrellis {
  std::vector<uint16_t> expanded;  // 2L+1 states, blanks interleaved
  Mat alpha;                       // T x (2L+1), log domain
  Mat beta;
  double log_likelihood = 0.0;
};

CtcTrellis ctc_build_trellis(const Mat& log_probs,
                             const std::vector<uint16_t>& target);

struct CtcLossResult {
  double loss = 0.0;  // -log P(target | log_probs)
  Mat dlogprobs;      // gradient treating log_probs entries as free inputs
};

// Forward-backward loss summed over all valid blank-augmented alignments.
// Throws InfeasibleTarget when the target cannot fit in T frames.
CtcLossResult ctc_forward_backward(const Mat& log_probs,
                                   const std::vector<uint16_t>& target);

// Per-frame argmax (ties toward the lowest index), collapse consecutive
// repeats, drop blanks.
std::vector<uint16_t> ctc_greedy_decode(const Mat& log_probs);

// Max-probability valid path constrained to `target`. Frame labels are in
// {blank} + labels. Exact ties prefer remaining in the current state over
// advancing; at the final frame the label state is preferred over the
// trailing blank.
std::vector<uint16_t> ctc_forced_align(const Mat& log_probs,
                                       const std::vector<uint16_t>& target);

// Log-probability of one explicit expanded-state path; test/debug helper.
double ctc_path_score(const Mat& log_probs,
                      const std::vector<uint16_t>& frame_labels);

}  // namespace maskpred

#endif  // MASKPRED_CTC_H_
