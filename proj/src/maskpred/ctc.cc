// maskpred/ctc.cc

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

#include "maskpred/ctc.h"

#include <algorithm>
#include <cmath>

namespace maskpred {

namespace {

std::vector<uint16_t> expand_target(const std::vector<uint16_t>& target,
                                    Eigen::Index num_labels_with_blank) {
  std::vector<uint16_t> expanded;
  expanded.reserve(2 * target.size() + 1);
  expanded.push_back(kCtcBlank);
  for (uint16_t label : target) {
    if (label == kCtcBlank || label >= num_labels_with_blank)
      throw ShapeMismatch("ctc: target label out of range: " +
                          std::to_string(label));
    expanded.push_back(label);
    expanded.push_back(kCtcBlank);
  }
  return expanded;
}

void check_feasible(Eigen::Index num_frames,
                    const std::vector<uint16_t>& target) {
  int need = ctc_min_frames(target);
  if (num_frames < need)
    throw InfeasibleTarget("ctc: target needs " + std::to_string(need) +
                           " frames, got " + std::to_string(num_frames));
}

// Whether a skip transition u-2 -> u is allowed.
bool can_skip(const std::vector<uint16_t>& expanded, size_t u) {
  return u >= 2 && expanded[u] != kCtcBlank && expanded[u] != expanded[u - 2];
}

}  // namespace

int ctc_min_frames(const std::vector<uint16_t>& target) {
  int repeats = 0;
  for (size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++repeats;
  return static_cast<int>(target.size()) + repeats;
}

CtcTrellis ctc_build_trellis(const Mat& log_probs,
                             const std::vector<uint16_t>& target) {
  const Eigen::Index T = log_probs.rows();
  if (T < 1 || log_probs.cols() < 2)
    throw ShapeMismatch("ctc: log_probs must be T x (V+1) with V >= 1");
  check_feasible(T, target);

  CtcTrellis trellis;
  trellis.expanded = expand_target(target, log_probs.cols());
  const size_t S = trellis.expanded.size();
  const auto& expanded = trellis.expanded;

  auto emit = [&](Eigen::Index t, size_t u) {
    return log_probs(t, expanded[u]);
  };

  trellis.alpha = Mat::Constant(T, static_cast<Eigen::Index>(S), kLogZero);
  trellis.beta = Mat::Constant(T, static_cast<Eigen::Index>(S), kLogZero);
  Mat& alpha = trellis.alpha;
  Mat& beta = trellis.beta;

  alpha(0, 0) = emit(0, 0);
  if (S > 1) alpha(0, 1) = emit(0, 1);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (size_t u = 0; u < S; ++u) {
      double acc = alpha(t - 1, u);
      if (u >= 1) acc = log_add(acc, alpha(t - 1, u - 1));
      if (can_skip(expanded, u)) acc = log_add(acc, alpha(t - 1, u - 2));
      if (acc != kLogZero) alpha(t, u) = acc + emit(t, u);
    }
  }

  beta(T - 1, S - 1) = emit(T - 1, S - 1);
  if (S > 1) beta(T - 1, S - 2) = emit(T - 1, S - 2);
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    for (size_t u = 0; u < S; ++u) {
      double acc = beta(t + 1, u);
      if (u + 1 < S) acc = log_add(acc, beta(t + 1, u + 1));
      if (u + 2 < S && can_skip(expanded, u + 2))
        acc = log_add(acc, beta(t + 1, u + 2));
      if (acc != kLogZero) beta(t, u) = acc + emit(t, u);
    }
  }

  double ll = alpha(T - 1, S - 1);
  if (S > 1) ll = log_add(ll, alpha(T - 1, S - 2));
  trellis.log_likelihood = ll;
  return trellis;
}

CtcLossResult ctc_forward_backward(const Mat& log_probs,
                                   const std::vector<uint16_t>& target) {
  CtcTrellis trellis = ctc_build_trellis(log_probs, target);
  const Eigen::Index T = log_probs.rows();
  const size_t S = trellis.expanded.size();

  CtcLossResult result;
  result.loss = -trellis.log_likelihood;
  result.dlogprobs = Mat::Zero(T, log_probs.cols());
  for (Eigen::Index t = 0; t < T; ++t) {
    for (size_t u = 0; u < S; ++u) {
      double a = trellis.alpha(t, u);
      double b = trellis.beta(t, u);
      if (a == kLogZero || b == kLogZero) continue;
      uint16_t label = trellis.expanded[u];
      double gamma =
          a + b - log_probs(t, label) - trellis.log_likelihood;
      result.dlogprobs(t, label) -= std::exp(gamma);
    }
  }
  return result;
}

std::vector<uint16_t> ctc_greedy_decode(const Mat& log_probs) {
  std::vector<uint16_t> decoded;
  uint16_t prev = kCtcBlank;
  for (Eigen::Index t = 0; t < log_probs.rows(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < log_probs.cols(); ++k)
      if (log_probs(t, k) > log_probs(t, best)) best = k;
    uint16_t label = static_cast<uint16_t>(best);
    if (label != kCtcBlank && label != prev) decoded.push_back(label);
    prev = label;
  }
  return decoded;
}

std::vector<uint16_t> ctc_forced_align(const Mat& log_probs,
                                       const std::vector<uint16_t>& target) {
  const Eigen::Index T = log_probs.rows();
  if (T < 1 || log_probs.cols() < 2)
    throw ShapeMismatch("ctc: log_probs must be T x (V+1) with V >= 1");
  check_feasible(T, target);

  std::vector<uint16_t> expanded = expand_target(target, log_probs.cols());
  const size_t S = expanded.size();

  Mat score = Mat::Constant(T, static_cast<Eigen::Index>(S), kLogZero);
  // back(t, u): 0 = stayed in u, 1 = came from u-1, 2 = came from u-2.
  Eigen::MatrixXi back = Eigen::MatrixXi::Zero(T, static_cast<Eigen::Index>(S));

  score(0, 0) = log_probs(0, expanded[0]);
  if (S > 1) score(0, 1) = log_probs(0, expanded[1]);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (size_t u = 0; u < S; ++u) {
      // Candidates in preference order on exact ties: stay, advance, skip.
      double best = score(t - 1, u);
      int from = 0;
      if (u >= 1 && score(t - 1, u - 1) > best) {
        best = score(t - 1, u - 1);
        from = 1;
      }
      if (can_skip(expanded, u) && score(t - 1, u - 2) > best) {
        best = score(t - 1, u - 2);
        from = 2;
      }
      if (best != kLogZero) {
        score(t, u) = best + log_probs(t, expanded[u]);
        back(t, static_cast<Eigen::Index>(u)) = from;
      }
    }
  }

  // Final state: on a tie prefer the last label state over the trailing
  // blank (the path that did not advance).
  size_t state = S - 1;
  if (S > 1 && score(T - 1, S - 2) >= score(T - 1, S - 1)) state = S - 2;
  if (score(T - 1, state) == kLogZero)
    throw InfeasibleTarget("ctc_forced_align: no valid path");

  std::vector<uint16_t> frame_labels(T);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    frame_labels[t] = expanded[state];
    if (t > 0) state -= back(t, static_cast<Eigen::Index>(state));
  }
  return frame_labels;
}

double ctc_path_score(const Mat& log_probs,
                      const std::vector<uint16_t>& frame_labels) {
  if (static_cast<Eigen::Index>(frame_labels.size()) != log_probs.rows())
    throw ShapeMismatch("ctc_path_score: length mismatch");
  double score = 0.0;
  for (Eigen::Index t = 0; t < log_probs.rows(); ++t)
    score += log_probs(t, frame_labels[t]);
  return score;
}

}  // namespace maskpred
