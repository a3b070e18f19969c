// maskpred/metrics.h

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

#ifndef MASKPRED_METRICS_H_
#define MASKPRED_METRICS_H_

#include <cstdint>
#include <vector>

#include "maskpred/common.h"

namespace maskpred {

using LabelSeq = std::vector<uint16_t>;

struct ErrorRateBreakdown {
  long substitutions = 0;
  long insertions = 0;
  long deletions = 0;
  long reference_length = 0;

  long errors() const { return substitutions + insertions + deletions; }
  // (S+I+D)/N; for an empty reference this is 0 when error-free and +inf
  // otherwise (check reference_length before reporting).
  double rate() const;

  ErrorRateBreakdown& operator+=(const ErrorRateBreakdown& other);
};

// Unit-cost Levenshtein alignment. Among minimal alignments, substitutions
// are preferred over insert+delete pairs.
ErrorRateBreakdown edit_distance(const LabelSeq& ref, const LabelSeq& hyp);

// Fraction of frames whose labels match the truth. With map_labels, each
// target label is first mapped to its majority co-occurring truth label
// (computed on this data); use it when the target vocabulary is not the
// phoneme inventory.
double frame_accuracy(const std::vector<LabelSeq>& targets,
                      const std::vector<LabelSeq>& truth, bool map_labels);

struct ClusterMetrics {
  double purity = 0.0;
  double nmi = 0.0;  // mutual information over the arithmetic mean entropy
};

ClusterMetrics cluster_metrics(const LabelSeq& labels, const LabelSeq& truth);

// Pooled variant over per-utterance sequences.
ClusterMetrics cluster_metrics(const std::vector<LabelSeq>& labels,
                               const std::vector<LabelSeq>& truth);

}  // namespace maskpred

#endif  // MASKPRED_METRICS_H_
