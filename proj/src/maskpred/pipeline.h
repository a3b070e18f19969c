// maskpred/pipeline.h

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

#ifndef MASKPRED_PIPELINE_H_
#define MASKPRED_PIPELINE_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maskpred/options.h"
#include "maskpred/quantize.h"
#include "maskpred/trainer.h"

namespace maskpred {

struct StageReport {
  std::string name;
  double wall_seconds = 0.0;
  std::map<std::string, double> metrics;
  std::map<std::string, std::string> artifacts;        // label -> path
  std::map<std::string, std::string> artifact_hashes;  // label -> hash
};

struct PipelineReport {
  std::string config_text;  // echo of the resolved options
  std::vector<StageReport> stages;

  const StageReport* stage(const std::string& name) const;
  double metric(const std::string& stage_name, const std::string& key) const;

  // report.json content; wall-clock fields are the only non-deterministic
  // part and are omitted from the canonical form.
  std::string to_json(bool canonical) const;
  std::string to_text() const;
  // Hash of the canonical json; identical across reruns of one config.
  std::string canonical_hash() const;
};

// Derived quantities shared by stages and the CLI.
CorpusSpec corpus_spec_from_options(const PipelineOptions& options);
EncoderConfig model_config_from_options(const PipelineOptions& options,
                                        int vocab_size, HeadKind head_kind);
TrainSettings seedtrain_settings(const PipelineOptions& options);
TrainSettings pretrain_settings(const PipelineOptions& options);
TrainSettings finetune_settings(const PipelineOptions& options);
// Clustering layer: explicit targets.layer, or the scaled analog of
// "layer 7 of 12" when negative.
int clustering_layer(const PipelineOptions& options);

// Algorithm stages. Each is pure given its inputs and options.

// Supervised CTC model on the labeled split.
EncoderModel train_seed_model(const Corpus& labeled,
                              const PipelineOptions& options,
                              TrainLog* log = nullptr);

struct TargetBuildResult {
  TargetSet targets;  // over labeled + unlabeled utterances
  std::optional<Codebook> codebook;
  TargetGenStats stats;
  // Error rate of the unlabeled pseudo-transcripts against `truth_reference`
  // (phoneme-align only; negative when not applicable).
  double pseudo_transcript_per = -1.0;
};

// `model` may be null for raw-kmeans / ground-truth. `truth_reference`
// supplies alignments and transcripts for evaluation and for the
// ground-truth method; it is never shown to a training stage.
TargetBuildResult build_targets(const EncoderModel* model,
                                const Corpus& labeled, const Corpus& unlabeled,
                                const std::string& method,
                                const PipelineOptions& options,
                                const Corpus* truth_reference = nullptr);

// Masked pre-training over the union of both corpora's features.
EncoderModel pretrain(const TargetSet& targets, const Corpus& labeled,
                      const Corpus& unlabeled, const PipelineOptions& options,
                      uint64_t seed, TrainLog* log = nullptr);

// CTC fine-tuning from a pre-trained encoder; the prediction head is
// re-initialized for the CTC vocabulary and the frontend stays fixed
// (per options).
EncoderModel finetune(const EncoderModel& pretrained, const Corpus& labeled,
                      const PipelineOptions& options, uint64_t seed,
                      TrainLog* log = nullptr);

// One self-training round: pseudo-label `unlabeled` with `teacher`, mix with
// the labeled corpus (no filtering), fine-tune again from `pretrained`.
EncoderModel self_train_round(const EncoderModel& teacher,
                              const EncoderModel& pretrained,
                              const Corpus& labeled, const Corpus& unlabeled,
                              const PipelineOptions& options, uint64_t seed);

// Full pipeline; persists every artifact under out_dir and returns the
// report (also written as report.json / report.txt).
PipelineReport run_pipeline(const PipelineOptions& options,
                            const std::filesystem::path& out_dir, bool force);

}  // namespace maskpred

#endif  // MASKPRED_PIPELINE_H_
