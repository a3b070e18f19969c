// maskpred/trainer.h

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

#ifndef MASKPRED_TRAINER_H_
#define MASKPRED_TRAINER_H_

#include <vector>

#include "maskpred/checkpoint.h"
#include "maskpred/corpus.h"
#include "maskpred/metrics.h"
#include "maskpred/optim.h"
#include "maskpred/targets.h"

namespace maskpred {

struct TrainExample {
  std::string id;
  Mat features;                         // T x D, double
  std::vector<uint16_t> ctc_labels;     // CTC label space (phoneme + 1)
  std::vector<uint16_t> frame_targets;  // length T/downsample
};

// Transcribed utterances as CTC training examples. Utterances without a
// transcript or shorter than one encoder frame are skipped.
std::vector<TrainExample> make_ctc_dataset(const Corpus& corpus,
                                           int downsample);

// Joins corpus features with frame targets by utterance id. Utterances
// without targets are skipped; a stored length that does not match the
// corpus throws LengthMismatch.
std::vector<TrainExample> make_masked_dataset(const Corpus& corpus,
                                              const TargetSet& targets,
                                              int downsample);

struct TrainSettings {
  long steps = 0;
  int batch_size = 8;
  double peak_lr = 5e-4;
  double warmup_fraction = 0.08;
  double hold_fraction = 0.0;
  ScheduleKind schedule = ScheduleKind::kLinearWarmupDecay;
  AdamConfig adam;
  uint64_t seed = 0;
  int crop_frames = 512;    // masked pre-training only
  double mask_prob = 0.08;  // masked pre-training only
  int mask_span = 10;
  bool freeze_frontend = false;
  int workers = 1;
};

struct TrainLog {
  std::vector<double> losses;  // per-step batch loss

  double first_loss() const { return losses.empty() ? 0.0 : losses.front(); }
  // Mean of the last `window` recorded losses.
  double final_loss(size_t window = 50) const;
};

// Supervised CTC training (seed model and fine-tuning). Loss per utterance
// is normalized by its encoder frame count.
TrainLog train_ctc(EncoderModel* model, const std::vector<TrainExample>& data,
                   const TrainSettings& settings);

// Masked-prediction pre-training on frame targets. Examples are cropped to
// settings.crop_frames input frames at a seeded offset; items whose sampled
// mask is empty sit out that step.
TrainLog train_masked(EncoderModel* model,
                      const std::vector<TrainExample>& data,
                      const TrainSettings& settings);

// Greedy CTC transcript in phoneme space.
PhonemeSeq greedy_transcript(const EncoderModel& model,
                             const FeatureMatrix& features);

// Aggregated phoneme error rate of greedy decoding against the corpus
// transcripts.
ErrorRateBreakdown corpus_per(const EncoderModel& model, const Corpus& corpus,
                              int workers = 1);

// Argmax accuracy on masked positions under freshly sampled masks.
double masked_eval_accuracy(const EncoderModel& model,
                            const std::vector<TrainExample>& data,
                            double mask_prob, int mask_span, uint64_t seed,
                            int workers = 1);

// Copy of `corpus` whose transcripts are replaced by the teacher's greedy
// decodes (every utterance gets one; no filtering).
Corpus with_pseudo_transcripts(const EncoderModel& teacher,
                               const Corpus& corpus, int workers = 1);

}  // namespace maskpred

#endif  // MASKPRED_TRAINER_H_
