// maskpred/options.h

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

#ifndef MASKPRED_OPTIONS_H_
#define MASKPRED_OPTIONS_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "maskpred/common.h"

namespace maskpred {

// Every knob of the pipeline, with reference-benchmark defaults. Config
// files are flat `key = value` lines; all keys are listed by
// option_descriptors() and unknown keys are rejected.
struct PipelineOptions {
  // Synthetic corpus.
  uint64_t corpus_seed = 1;
  int corpus_num_utterances = 2000;
  int corpus_num_phonemes = 12;
  int corpus_feature_dim = 8;
  int corpus_min_phones = 3;
  int corpus_max_phones = 8;
  double corpus_emission_separation = 1.5;
  double corpus_noise_scale = 1.0;

  // Labeled/unlabeled split.
  double split_labeled_fraction = 0.1;
  uint64_t split_seed = 2;

  // Evaluation corpora (same emission model; fresh utterances).
  int eval_num_utterances = 250;
  uint64_t eval_seed = 901;
  double eval_noise_scale_noisy = 2.0;

  // Encoder architecture.
  int model_layers = 2;
  int model_hidden_dim = 32;
  int model_heads = 4;
  int model_ffn_dim = 64;
  int model_downsample = 2;
  int model_num_buckets = 32;
  int model_max_distance = 128;
  double model_dropout = 0.0;

  // Supervised seed model (CTC on the labeled split).
  long seedtrain_steps = 1000;
  int seedtrain_batch = 8;
  double seedtrain_peak_lr = 3e-3;
  double seedtrain_warmup = 0.1;
  uint64_t seedtrain_seed = 3;

  // Target generation.
  std::string targets_method = "phoneme-align";
  int targets_kmeans_k = 32;
  int targets_layer = -1;  // -1: scaled analog of layer 7 of 12
  std::string targets_blank_policy = "nearest-label";
  int targets_subsample = 2;
  int targets_kmeans_iters = 50;
  double targets_kmeans_tol = 1e-4;
  uint64_t targets_seed = 4;

  // Masked pre-training.
  long pretrain_steps = 1500;
  int pretrain_batch = 8;
  double pretrain_peak_lr = 3e-3;
  double pretrain_warmup = 0.08;
  double pretrain_mask_prob = 0.12;
  int pretrain_mask_span = 4;
  int pretrain_crop_frames = 512;
  int pretrain_iterations = 1;
  uint64_t pretrain_seed = 5;

  // Fine-tuning (CTC, tri-stage, frozen frontend).
  long finetune_steps = 800;
  int finetune_batch = 8;
  double finetune_peak_lr = 1.5e-3;
  double finetune_warmup = 0.1;
  double finetune_hold = 0.4;
  bool finetune_freeze_frontend = true;
  uint64_t finetune_seed = 6;

  // Self-training.
  int selftrain_rounds = 0;
  bool selftrain_fresh_student = false;
  uint64_t selftrain_seed = 7;

  // Optimizer.
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_eps = 1e-8;
  double adam_weight_decay = 0.01;

  int workers = 1;

  void validate() const;  // throws UsageError
};

struct OptionDescriptor {
  std::string key;
  std::string doc;
  std::string default_value;
};

std::vector<OptionDescriptor> option_descriptors();

// Sets one option; throws UsageError naming the key when it is unknown or
// the value does not parse.
void apply_option(PipelineOptions* options, const std::string& key,
                  const std::string& value);

// `key = value` lines, '#' comments. Unknown keys are rejected.
PipelineOptions load_options_file(const std::filesystem::path& path);
void apply_options_text(PipelineOptions* options, const std::string& text,
                        const std::string& origin);

// "key=value" command-line override.
void apply_override(PipelineOptions* options, const std::string& assignment);

// Re-derives every per-stage seed from one master seed.
void apply_master_seed(PipelineOptions* options, uint64_t master_seed);

// Current values, one per line; with_docs adds a comment line per key.
std::string dump_options(const PipelineOptions& options, bool with_docs);

}  // namespace maskpred

#endif  // MASKPRED_OPTIONS_H_
