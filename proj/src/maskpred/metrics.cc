// maskpred/metrics.cc

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

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace maskpred {

double ErrorRateBreakdown::rate() const {
  if (reference_length == 0)
    return errors() == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  return static_cast<double>(errors()) / static_cast<double>(reference_length);
}

ErrorRateBreakdown& ErrorRateBreakdown::operator+=(
    const ErrorRateBreakdown& other) {
  substitutions += other.substitutions;
  insertions += other.insertions;
  deletions += other.deletions;
  reference_length += other.reference_length;
  return *this;
}

ErrorRateBreakdown edit_distance(const LabelSeq& ref, const LabelSeq& hyp) {
  const size_t n = ref.size(), m = hyp.size();
  struct Cell {
    long cost = 0;
    long subs = 0, ins = 0, dels = 0;
  };
  std::vector<Cell> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = {static_cast<long>(j), 0,
                                             static_cast<long>(j), 0};
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = {static_cast<long>(i), 0, 0, static_cast<long>(i)};
    for (size_t j = 1; j <= m; ++j) {
      bool match = ref[i - 1] == hyp[j - 1];
      Cell diag = prev[j - 1];
      diag.cost += match ? 0 : 1;
      if (!match) diag.subs += 1;
      Cell del = prev[j];
      del.cost += 1;
      del.dels += 1;
      Cell ins = cur[j - 1];
      ins.cost += 1;
      ins.ins += 1;
      // Minimal cost; on ties prefer the diagonal (keeps substitutions over
      // insert+delete pairs), then deletion.
      Cell best = diag;
      if (del.cost < best.cost) best = del;
      if (ins.cost < best.cost) best = ins;
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  ErrorRateBreakdown out;
  out.substitutions = prev[m].subs;
  out.insertions = prev[m].ins;
  out.deletions = prev[m].dels;
  out.reference_length = static_cast<long>(n);
  return out;
}

namespace {

// cluster id -> most frequent co-occurring truth label.
std::map<uint16_t, uint16_t> majority_map(const std::vector<LabelSeq>& targets,
                                          const std::vector<LabelSeq>& truth) {
  std::map<uint16_t, std::map<uint16_t, long>> counts;
  for (size_t u = 0; u < targets.size(); ++u)
    for (size_t t = 0; t < targets[u].size(); ++t)
      counts[targets[u][t]][truth[u][t]]++;
  std::map<uint16_t, uint16_t> mapping;
  for (const auto& [cluster, hist] : counts) {
    uint16_t best = 0;
    long best_count = -1;
    for (const auto& [label, count] : hist)
      if (count > best_count) {
        best = label;
        best_count = count;
      }
    mapping[cluster] = best;
  }
  return mapping;
}

}  // namespace

double frame_accuracy(const std::vector<LabelSeq>& targets,
                      const std::vector<LabelSeq>& truth, bool map_labels) {
  if (targets.size() != truth.size())
    throw LengthMismatch("frame_accuracy: utterance count mismatch");
  for (size_t u = 0; u < targets.size(); ++u)
    if (targets[u].size() != truth[u].size())
      throw LengthMismatch("frame_accuracy: length mismatch at utterance " +
                           std::to_string(u));

  std::map<uint16_t, uint16_t> mapping;
  if (map_labels) mapping = majority_map(targets, truth);

  long total = 0, correct = 0;
  for (size_t u = 0; u < targets.size(); ++u)
    for (size_t t = 0; t < targets[u].size(); ++t) {
      uint16_t label = targets[u][t];
      if (map_labels) label = mapping.at(label);
      if (label == truth[u][t]) ++correct;
      ++total;
    }
  if (total == 0) return 0.0;
  return static_cast<double>(correct) / static_cast<double>(total);
}

ClusterMetrics cluster_metrics(const LabelSeq& labels, const LabelSeq& truth) {
  return cluster_metrics(std::vector<LabelSeq>{labels},
                         std::vector<LabelSeq>{truth});
}

ClusterMetrics cluster_metrics(const std::vector<LabelSeq>& labels,
                               const std::vector<LabelSeq>& truth) {
  if (labels.size() != truth.size())
    throw LengthMismatch("cluster_metrics: utterance count mismatch");
  std::map<std::pair<uint16_t, uint16_t>, long> joint;
  std::map<uint16_t, long> label_counts, truth_counts;
  long n = 0;
  for (size_t u = 0; u < labels.size(); ++u) {
    if (labels[u].size() != truth[u].size())
      throw LengthMismatch("cluster_metrics: length mismatch at utterance " +
                           std::to_string(u));
    for (size_t t = 0; t < labels[u].size(); ++t) {
      joint[{labels[u][t], truth[u][t]}]++;
      label_counts[labels[u][t]]++;
      truth_counts[truth[u][t]]++;
      ++n;
    }
  }
  ClusterMetrics out;
  if (n == 0) return out;
  const double dn = static_cast<double>(n);

  // Purity: each cluster votes for its plurality truth class.
  std::map<uint16_t, long> cluster_max;
  for (const auto& [pair, count] : joint) {
    long& mx = cluster_max[pair.first];
    mx = std::max(mx, count);
  }
  long agree = 0;
  for (const auto& [cluster, mx] : cluster_max) agree += mx;
  out.purity = static_cast<double>(agree) / dn;

  // NMI with arithmetic-mean normalization; 0 log 0 = 0 throughout.
  double h_labels = 0.0, h_truth = 0.0, mi = 0.0;
  for (const auto& [label, count] : label_counts) {
    double p = count / dn;
    h_labels -= p * std::log(p);
  }
  for (const auto& [label, count] : truth_counts) {
    double p = count / dn;
    h_truth -= p * std::log(p);
  }
  for (const auto& [pair, count] : joint) {
    double pxy = count / dn;
    double px = label_counts.at(pair.first) / dn;
    double py = truth_counts.at(pair.second) / dn;
    mi += pxy * std::log(pxy / (px * py));
  }
  double denom = 0.5 * (h_labels + h_truth);
  out.nmi = denom == 0.0 ? 1.0 : mi / denom;
  return out;
}

}  // namespace maskpred
