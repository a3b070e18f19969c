// tests/metrics-test.cc

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

#include "maskpred/metrics.h"

#include <cmath>
#include <map>

#include "doctest.h"

using namespace maskpred;

namespace {

// Memoized recursion over (i, j); independent of the DP table code.
long lev_recursive(const LabelSeq& a, const LabelSeq& b, size_t i, size_t j,
                   std::map<std::pair<size_t, size_t>, long>* memo) {
  if (i == a.size()) return static_cast<long>(b.size() - j);
  if (j == b.size()) return static_cast<long>(a.size() - i);
  auto key = std::make_pair(i, j);
  auto it = memo->find(key);
  if (it != memo->end()) return it->second;
  long best = lev_recursive(a, b, i + 1, j + 1, memo) +
              (a[i] == b[j] ? 0 : 1);
  best = std::min(best, lev_recursive(a, b, i + 1, j, memo) + 1);
  best = std::min(best, lev_recursive(a, b, i, j + 1, memo) + 1);
  (*memo)[key] = best;
  return best;
}

long lev_oracle(const LabelSeq& a, const LabelSeq& b) {
  std::map<std::pair<size_t, size_t>, long> memo;
  return lev_recursive(a, b, 0, 0, &memo);
}

LabelSeq random_seq(Rng* rng, int max_len, int vocab) {
  LabelSeq seq(rng->uniform_int(max_len + 1));
  for (auto& v : seq) v = static_cast<uint16_t>(rng->uniform_int(vocab));
  return seq;
}

}  // namespace

TEST_CASE("edit_distance: identity and degenerate cases") {
  LabelSeq seq = {1, 2, 3, 2};
  ErrorRateBreakdown same = edit_distance(seq, seq);
  CHECK(same.errors() == 0);
  CHECK(same.rate() == 0.0);
  CHECK(same.reference_length == 4);

  ErrorRateBreakdown ins = edit_distance({}, {5, 6, 7});
  CHECK(ins.insertions == 3);
  CHECK(ins.substitutions == 0);
  CHECK(ins.deletions == 0);
  CHECK(ins.reference_length == 0);
  CHECK(std::isinf(ins.rate()));

  ErrorRateBreakdown none = edit_distance({}, {});
  CHECK(none.errors() == 0);
  CHECK(none.rate() == 0.0);

  ErrorRateBreakdown del = edit_distance({5, 6, 7}, {});
  CHECK(del.deletions == 3);
  CHECK(del.rate() == doctest::Approx(1.0));
}

TEST_CASE("edit_distance: substitutions beat insert+delete pairs") {
  ErrorRateBreakdown sub = edit_distance({1}, {2});
  CHECK(sub.substitutions == 1);
  CHECK(sub.insertions == 0);
  CHECK(sub.deletions == 0);

  ErrorRateBreakdown swapped = edit_distance({1, 2}, {2, 1});
  CHECK(swapped.errors() == 2);
  CHECK(swapped.substitutions == 2);
}

TEST_CASE("edit_distance: distance equals the memoized recursion oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    LabelSeq a = random_seq(&rng, 8, 4);
    LabelSeq b = random_seq(&rng, 8, 4);
    ErrorRateBreakdown out = edit_distance(a, b);
    CHECK(out.errors() == lev_oracle(a, b));
  }
}

TEST_CASE("edit_distance: metric properties") {
  Rng rng(5150);
  for (int trial = 0; trial < 200; ++trial) {
    LabelSeq a = random_seq(&rng, 7, 3);
    LabelSeq b = random_seq(&rng, 7, 3);
    LabelSeq c = random_seq(&rng, 7, 3);
    ErrorRateBreakdown ab = edit_distance(a, b);
    ErrorRateBreakdown ba = edit_distance(b, a);
    // Symmetry with insertions and deletions swapped.
    CHECK(ab.errors() == ba.errors());
    CHECK(ab.substitutions == ba.substitutions);
    CHECK(ab.insertions == ba.deletions);
    CHECK(ab.deletions == ba.insertions);
    // Triangle inequality.
    CHECK(edit_distance(a, c).errors() <=
          ab.errors() + edit_distance(b, c).errors());
    // Identity of indiscernibles.
    CHECK((ab.errors() == 0) == (a == b));
  }
}

TEST_CASE("frame_accuracy: direct and mapped") {
  std::vector<LabelSeq> truth = {{0, 0, 1, 2}, {2, 1, 1, 0}};
  CHECK(frame_accuracy(truth, truth, false) == 1.0);

  // A permutation relabeling scores 1.0 after the majority map.
  std::vector<LabelSeq> permuted = {{5, 5, 3, 7}, {7, 3, 3, 5}};
  CHECK(frame_accuracy(permuted, truth, true) == 1.0);
  CHECK(frame_accuracy(permuted, truth, false) == 0.0);

  std::vector<LabelSeq> off = {{0, 0, 1, 1}, {2, 1, 1, 0}};
  CHECK(frame_accuracy(off, truth, false) == doctest::Approx(7.0 / 8.0));

  std::vector<LabelSeq> bad = {{0, 0}, {1}};
  CHECK_THROWS_AS(frame_accuracy(bad, truth, false), LengthMismatch);
}

TEST_CASE("frame_accuracy: random labels score near chance (Monte Carlo)") {
  const int frames = 10000, V = 12;
  Rng rng(31337);
  LabelSeq truth(frames), random(frames);
  for (int i = 0; i < frames; ++i) {
    truth[i] = static_cast<uint16_t>(rng.uniform_int(V));
    random[i] = static_cast<uint16_t>(rng.uniform_int(V));
  }
  double acc = frame_accuracy({random}, {truth}, false);
  double p = 1.0 / V;
  double se = std::sqrt(p * (1 - p) / frames);
  CHECK(std::abs(acc - p) < 3 * se);
}

TEST_CASE("cluster_metrics: trivial cases") {
  LabelSeq truth = {0, 0, 1, 1, 2, 2};
  ClusterMetrics same = cluster_metrics(truth, truth);
  CHECK(same.purity == doctest::Approx(1.0));
  CHECK(same.nmi == doctest::Approx(1.0));

  LabelSeq single(6, 0);
  ClusterMetrics collapsed = cluster_metrics(single, truth);
  CHECK(collapsed.nmi == doctest::Approx(0.0));
  CHECK(collapsed.purity == doctest::Approx(2.0 / 6.0));
}

TEST_CASE("cluster_metrics: hand-computed contingency tables") {
  // labels 0011 vs truth 0101: every joint cell 1/4, MI = 0, purity 1/2.
  ClusterMetrics indep = cluster_metrics(LabelSeq{0, 0, 1, 1},
                                         LabelSeq{0, 1, 0, 1});
  CHECK(indep.nmi == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(indep.purity == doctest::Approx(0.5));

  // labels 0001 vs truth 0011:
  //   joint (0,0)=2/4, (0,1)=1/4, (1,1)=1/4
  //   MI = .5 ln(4/3) + .25 ln(2/3) + .25 ln 2        = 0.21576155...
  //   H(labels) = .75 ln(4/3) + .25 ln 4              = 0.56233514...
  //   H(truth)  = ln 2                                = 0.69314718...
  //   NMI = MI / ((H(labels)+H(truth))/2)             = 0.34371215...
  ClusterMetrics mixed = cluster_metrics(LabelSeq{0, 0, 0, 1},
                                         LabelSeq{0, 0, 1, 1});
  double mi = 0.5 * std::log(4.0 / 3.0) + 0.25 * std::log(2.0 / 3.0) +
              0.25 * std::log(2.0);
  double hl = 0.75 * std::log(4.0 / 3.0) + 0.25 * std::log(4.0);
  double ht = std::log(2.0);
  CHECK(mixed.nmi == doctest::Approx(mi / (0.5 * (hl + ht))).epsilon(1e-12));
  CHECK(mixed.purity == doctest::Approx(0.75));
}

TEST_CASE("cluster_metrics: invariant under relabeling either side") {
  Rng rng(777);
  LabelSeq labels(500), truth(500);
  for (int i = 0; i < 500; ++i) {
    labels[i] = static_cast<uint16_t>(rng.uniform_int(5));
    truth[i] = static_cast<uint16_t>(rng.uniform_int(4));
  }
  ClusterMetrics base = cluster_metrics(labels, truth);

  // Permute label ids 0..4 -> 3,4,0,2,1 and truth ids 0..3 -> 2,0,3,1.
  const uint16_t lperm[5] = {3, 4, 0, 2, 1};
  const uint16_t tperm[4] = {2, 0, 3, 1};
  LabelSeq labels2(500), truth2(500);
  for (int i = 0; i < 500; ++i) {
    labels2[i] = lperm[labels[i]];
    truth2[i] = tperm[truth[i]];
  }
  ClusterMetrics permuted = cluster_metrics(labels2, truth2);
  CHECK(permuted.purity == doctest::Approx(base.purity).epsilon(1e-12));
  CHECK(permuted.nmi == doctest::Approx(base.nmi).epsilon(1e-12));

  LabelSeq short_seq(10, 0);
  CHECK_THROWS_AS(cluster_metrics(short_seq, truth), LengthMismatch);
}
