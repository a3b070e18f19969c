// maskpred/targets.h

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

#ifndef MASKPRED_TARGETS_H_
#define MASKPRED_TARGETS_H_

#include <filesystem>
#include <string>
#include <vector>

#include "maskpred/checkpoint.h"
#include "maskpred/corpus.h"

namespace maskpred {

enum class TargetProvenance {
  kRawKmeans,
  kCtcKmeans,
  kLatentKmeans,
  kPhonemeAlign,
  kModelPredict,
  kGroundTruth,
};

std::string to_string(TargetProvenance p);
TargetProvenance target_provenance_from_string(const std::string& s);

// Frame-level discrete labels at encoder frame rate, in manifest order.
// Utterances whose targets could not be produced (infeasible alignments)
// are absent.
struct TargetSet {
  int vocab_size = 0;
  TargetProvenance provenance = TargetProvenance::kGroundTruth;
  std::vector<std::string> ids;
  std::vector<std::vector<uint16_t>> labels;

  void validate() const;
  bool operator==(const TargetSet& other) const;
  // Index of id, or -1.
  int find(const std::string& id) const;
};

// targets.tsv (header line, then id/length/provenance rows) + targets.bin
// (concatenated little-endian uint16 labels in manifest order).
void save_targets(const TargetSet& targets, const std::filesystem::path& dir);
TargetSet load_targets(const std::filesystem::path& dir);
std::string describe_targets_dir(const std::filesystem::path& dir);

// How CTC blank frames acquire a phoneme identity.
enum class BlankPolicy { kNearestLabel, kSilenceLabel };

std::string to_string(BlankPolicy policy);
BlankPolicy blank_policy_from_string(const std::string& s);

enum class TargetMode { kAlign, kPredict };

struct TargetGenStats {
  size_t utterances_done = 0;
  size_t infeasible_skipped = 0;
};

// Frame targets from a model:
//  - kAlign: Viterbi forced alignment of each utterance's transcript against
//    the model's CTC log-probs; requires transcripts and a CTC head. Blank
//    frames are re-labeled per `policy`; output labels are phoneme ids.
//  - kPredict: per-frame argmax of the unmasked forward logits; with a CTC
//    head blanks are re-labeled per `policy` and labels shift to phoneme
//    ids, with a label head the argmax is the target directly.
TargetSet frame_targets_from_model(const EncoderModel& model,
                                   const Corpus& corpus, TargetMode mode,
                                   BlankPolicy policy, int workers = 1,
                                   TargetGenStats* stats = nullptr);

// Truth alignments downsampled to encoder rate by majority label per window
// (ties to the lowest phoneme id).
TargetSet ground_truth_targets(const Corpus& corpus, int downsample);

// Resolves blanks in a CTC frame labeling: each blank inherits the nearest
// preceding non-blank label (initial blanks inherit the following one), or
// the silence label under kSilenceLabel. `frame_labels` is in CTC space;
// the result is in phoneme space (label - 1, silence = kSilencePhoneme).
std::vector<uint16_t> resolve_blanks(const std::vector<uint16_t>& frame_labels,
                                     BlankPolicy policy);

}  // namespace maskpred

#endif  // MASKPRED_TARGETS_H_
