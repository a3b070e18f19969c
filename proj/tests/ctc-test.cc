// tests/ctc-test.cc

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

#include "doctest.h"

using namespace maskpred;

namespace {

// CTC's collapse map B: merge consecutive repeats, then drop blanks.
std::vector<uint16_t> collapse(const std::vector<uint16_t>& frames) {
  std::vector<uint16_t> out;
  uint16_t prev = kCtcBlank;
  for (uint16_t f : frames) {
    if (f != kCtcBlank && f != prev) out.push_back(f);
    prev = f;
  }
  return out;
}

// Exhaustive oracle: enumerate every frame labeling over {0..V} and sum the
// probability of those that collapse to the target. Independent of the
// trellis recursions entirely.
struct BruteForce {
  double log_prob_sum = kLogZero;  // log sum over matching labelings
  double best_score = kLogZero;    // max over matching labelings
  std::vector<uint16_t> best_path;
};

BruteForce brute_force(const Mat& log_probs,
                       const std::vector<uint16_t>& target) {
  const int T = static_cast<int>(log_probs.rows());
  const int labels = static_cast<int>(log_probs.cols());
  BruteForce result;
  std::vector<uint16_t> frames(T, 0);
  long total = 1;
  for (int t = 0; t < T; ++t) total *= labels;
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (int t = 0; t < T; ++t) {
      frames[t] = static_cast<uint16_t>(c % labels);
      c /= labels;
    }
    if (collapse(frames) != target) continue;
    double score = 0.0;
    for (int t = 0; t < T; ++t) score += log_probs(t, frames[t]);
    result.log_prob_sum = log_add(result.log_prob_sum, score);
    if (score > result.best_score) {
      result.best_score = score;
      result.best_path = frames;
    }
  }
  return result;
}

Mat random_log_probs(int T, int labels, uint64_t seed, double sharpness = 1.0) {
  Rng rng(seed);
  Mat logits(T, labels);
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < labels; ++k) logits(t, k) = sharpness * rng.normal();
  return log_softmax_rows(logits);
}

}  // namespace

TEST_CASE("ctc_min_frames counts mandatory blanks") {
  CHECK(ctc_min_frames({}) == 0);
  CHECK(ctc_min_frames({1}) == 1);
  CHECK(ctc_min_frames({1, 2}) == 2);
  CHECK(ctc_min_frames({1, 1}) == 3);
  CHECK(ctc_min_frames({1, 1, 1}) == 5);
  CHECK(ctc_min_frames({1, 2, 2, 1}) == 5);
}

TEST_CASE("ctc_forward_backward: single frame uniform rows give ln 3") {
  Mat log_probs = log_softmax_rows(Mat::Zero(1, 3));  // {blank, a, b}
  CtcLossResult res = ctc_forward_backward(log_probs, {1});
  CHECK(res.loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("ctc_forward_backward: repeated label needs a separating blank") {
  Mat log_probs = log_softmax_rows(Mat::Zero(2, 3));
  CHECK_THROWS_AS(ctc_forward_backward(log_probs, {1, 1}), InfeasibleTarget);
  // Three frames suffice: a blank a.
  Mat three = log_softmax_rows(Mat::Zero(3, 3));
  CHECK_NOTHROW(ctc_forward_backward(three, {1, 1}));
  // Labels must be in [1, V].
  CHECK_THROWS_AS(ctc_forward_backward(three, {0}), ShapeMismatch);
  CHECK_THROWS_AS(ctc_forward_backward(three, {3}), ShapeMismatch);
}

TEST_CASE("ctc_forward_backward: loss equals exhaustive path enumeration") {
  int checked = 0;
  for (uint64_t seed = 0; checked < 200; ++seed) {
    Rng rng(seed * 977 + 13);
    int T = 1 + static_cast<int>(rng.uniform_int(6));
    int V = 1 + static_cast<int>(rng.uniform_int(3));
    int L = static_cast<int>(rng.uniform_int(4));
    std::vector<uint16_t> target;
    for (int i = 0; i < L; ++i)
      target.push_back(static_cast<uint16_t>(1 + rng.uniform_int(V)));
    Mat log_probs = random_log_probs(T, V + 1, seed + 5000);

    if (T < ctc_min_frames(target)) {
      CHECK_THROWS_AS(ctc_forward_backward(log_probs, target),
                      InfeasibleTarget);
      continue;
    }
    BruteForce oracle = brute_force(log_probs, target);
    CtcLossResult res = ctc_forward_backward(log_probs, target);
    CHECK(res.loss == doctest::Approx(-oracle.log_prob_sum).epsilon(1e-10));
    CHECK(res.loss >= 0.0);
    ++checked;
  }
}

TEST_CASE("ctc trellis: forward and backward recursions agree at every t") {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed + 31);
    int T = 2 + static_cast<int>(rng.uniform_int(5));
    int V = 2 + static_cast<int>(rng.uniform_int(2));
    std::vector<uint16_t> target;
    int L = 1 + static_cast<int>(rng.uniform_int(3));
    for (int i = 0; i < L; ++i)
      target.push_back(static_cast<uint16_t>(1 + rng.uniform_int(V)));
    if (T < ctc_min_frames(target)) continue;
    Mat log_probs = random_log_probs(T, V + 1, seed + 900);

    CtcTrellis trellis = ctc_build_trellis(log_probs, target);
    for (int t = 0; t < T; ++t) {
      double total = kLogZero;
      for (size_t u = 0; u < trellis.expanded.size(); ++u) {
        double a = trellis.alpha(t, u), b = trellis.beta(t, u);
        if (a == kLogZero || b == kLogZero) continue;
        total = log_add(total, a + b - log_probs(t, trellis.expanded[u]));
      }
      CHECK(total == doctest::Approx(trellis.log_likelihood).epsilon(1e-8));
    }
  }
}

TEST_CASE("ctc_forward_backward: gradient matches finite differences") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Mat log_probs = random_log_probs(5, 4, seed + 333);
    std::vector<uint16_t> target = {1, 2, 3};
    CtcLossResult res = ctc_forward_backward(log_probs, target);

    const double eps = 1e-6;
    for (int t = 0; t < 5; ++t)
      for (int k = 0; k < 4; ++k) {
        Mat up = log_probs, down = log_probs;
        up(t, k) += eps;
        down(t, k) -= eps;
        double numeric = (ctc_forward_backward(up, target).loss -
                          ctc_forward_backward(down, target).loss) /
                         (2 * eps);
        double rel = std::abs(res.dlogprobs(t, k) - numeric) /
                     std::max(std::abs(res.dlogprobs(t, k)) +
                                  std::abs(numeric),
                              1e-3);
        CHECK(rel < 1e-4);
      }
  }
}

TEST_CASE("ctc_forward_backward: padding with uniform rows keeps feasibility") {
  std::vector<uint16_t> target = {1, 1, 2};
  Mat short_probs = log_softmax_rows(Mat::Zero(3, 3));
  CHECK_THROWS_AS(ctc_forward_backward(short_probs, target), InfeasibleTarget);
  for (int T = ctc_min_frames(target); T <= 8; ++T) {
    Mat padded = log_softmax_rows(Mat::Zero(T, 3));
    CHECK_NOTHROW(ctc_forward_backward(padded, target));
  }
}

TEST_CASE("ctc_greedy_decode: collapse rules") {
  auto one_hot = [](std::vector<uint16_t> labels, int V1) {
    Mat m = Mat::Constant(static_cast<int>(labels.size()), V1, -20.0);
    for (size_t t = 0; t < labels.size(); ++t) m(t, labels[t]) = 0.0;
    return m;
  };
  // [a, a, blank, b] -> [a, b]
  CHECK(ctc_greedy_decode(one_hot({1, 1, 0, 2}, 3)) ==
        std::vector<uint16_t>{1, 2});
  // all blanks -> empty
  CHECK(ctc_greedy_decode(one_hot({0, 0, 0}, 3)).empty());
  // repeats separated by blank stay distinct
  CHECK(ctc_greedy_decode(one_hot({1, 0, 1}, 3)) ==
        std::vector<uint16_t>{1, 1});
  // ties break toward the lowest index: uniform rows decode to all-blank
  CHECK(ctc_greedy_decode(Mat::Zero(4, 3)).empty());
}

TEST_CASE("ctc_greedy_decode: equals an independent argmax-collapse oracle") {
  for (uint64_t seed = 0; seed < 100; ++seed) {
    Mat log_probs = random_log_probs(8, 4, seed + 777, 2.0);
    // Independent recoding of the same rule.
    std::vector<uint16_t> argmaxes;
    for (int t = 0; t < 8; ++t) {
      int best = 0;
      for (int k = 1; k < 4; ++k)
        if (log_probs(t, k) > log_probs(t, best)) best = k;
      argmaxes.push_back(static_cast<uint16_t>(best));
    }
    CHECK(ctc_greedy_decode(log_probs) == collapse(argmaxes));
  }
}

TEST_CASE("ctc_forced_align: peaked inputs recover the intended path") {
  // T=3, target [a,b]; probabilities sharply peaked as a, b, b.
  Mat logits = Mat::Constant(3, 3, -30.0);
  logits(0, 1) = 0.0;
  logits(1, 2) = 0.0;
  logits(2, 2) = 0.0;
  Mat log_probs = log_softmax_rows(logits);
  std::vector<uint16_t> target = {1, 2};
  std::vector<uint16_t> path = ctc_forced_align(log_probs, target);
  CHECK(path == std::vector<uint16_t>{1, 2, 2});

  BruteForce oracle = brute_force(log_probs, target);
  CHECK(ctc_path_score(log_probs, path) ==
        doctest::Approx(oracle.best_score).epsilon(1e-12));
}

TEST_CASE("ctc_forced_align: exact ties prefer staying") {
  // Uniform rows make every valid path equally likely; the stay-preferring
  // path enters the label immediately and never advances.
  Mat log_probs = log_softmax_rows(Mat::Zero(3, 3));
  std::vector<uint16_t> path = ctc_forced_align(log_probs, {1});
  CHECK(path == std::vector<uint16_t>{1, 1, 1});
}

TEST_CASE("ctc_forced_align: score equals brute-force max, path collapses") {
  int checked = 0;
  for (uint64_t seed = 0; checked < 150; ++seed) {
    Rng rng(seed * 31 + 7);
    int T = 1 + static_cast<int>(rng.uniform_int(6));
    int V = 1 + static_cast<int>(rng.uniform_int(3));
    int L = static_cast<int>(rng.uniform_int(4));
    std::vector<uint16_t> target;
    for (int i = 0; i < L; ++i)
      target.push_back(static_cast<uint16_t>(1 + rng.uniform_int(V)));
    Mat log_probs = random_log_probs(T, V + 1, seed + 4141, 1.5);

    if (T < ctc_min_frames(target)) {
      CHECK_THROWS_AS(ctc_forced_align(log_probs, target), InfeasibleTarget);
      continue;
    }
    std::vector<uint16_t> path = ctc_forced_align(log_probs, target);
    CHECK(collapse(path) == target);
    BruteForce oracle = brute_force(log_probs, target);
    CHECK(ctc_path_score(log_probs, path) ==
          doctest::Approx(oracle.best_score).epsilon(1e-10));
    ++checked;
  }
}

TEST_CASE("ctc_forward_backward: empty target sums only blank paths") {
  Mat log_probs = random_log_probs(4, 3, 55);
  CtcLossResult res = ctc_forward_backward(log_probs, {});
  double expect = 0.0;
  for (int t = 0; t < 4; ++t) expect += log_probs(t, 0);
  CHECK(res.loss == doctest::Approx(-expect).epsilon(1e-12));
}
