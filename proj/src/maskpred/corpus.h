// maskpred/corpus.h

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

#ifndef MASKPRED_CORPUS_H_
#define MASKPRED_CORPUS_H_

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "maskpred/common.h"

namespace maskpred {

// Frame features are stored as float32 so that the in-memory value and the
// on-disk value are the same bit pattern.
using FeatureMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using PhonemeSeq = std::vector<uint16_t>;

// Phoneme id 0 is silence by convention; it occurs at utterance boundaries
// and is a regular inventory member.
constexpr uint16_t kSilencePhoneme = 0;

// Per-phoneme duration model: frame counts are drawn as
// min + Poisson(mean - min), clamped to [min, max].
struct DurationModel {
  double mean_frames = 5.0;
  int min_frames = 2;
  int max_frames = 20;
};

// Per-phoneme diagonal Gaussian in feature space.
struct EmissionModel {
  Eigen::VectorXd mean;      // D
  Eigen::VectorXd variance;  // D, all > 0
};

struct CorpusSpec {
  uint64_t seed = 0;
  int num_utterances = 0;
  int phoneme_inventory_size = 0;  // includes silence (id 0)
  int feature_dim = 0;
  // Number of non-silence phonemes per utterance, drawn uniformly.
  int min_phones_per_utt = 3;
  int max_phones_per_utt = 8;
  std::vector<DurationModel> durations;  // one per phoneme
  std::vector<EmissionModel> emissions;  // one per phoneme
  double noise_scale = 0.0;  // stddev of additive isotropic observation noise

  void validate() const;  // throws InvalidSpec
  // Stable hash over every field; identifies the generating process.
  std::string hash() const;
};

// Builds a spec with procedurally chosen emission means: silence at the
// origin, other phonemes drawn from N(0, separation^2 I) under `seed`.
CorpusSpec make_corpus_spec(uint64_t seed, int num_utterances,
                            int phoneme_inventory_size, int feature_dim,
                            double emission_separation, double noise_scale);

struct Utterance {
  std::string id;
  FeatureMatrix features;                  // T x D
  std::optional<PhonemeSeq> transcript;    // run-length collapsed alignment
  std::optional<PhonemeSeq> truth_alignment;  // length T; synthetic only

  int num_frames() const { return static_cast<int>(features.rows()); }
  bool operator==(const Utterance& other) const;
};

enum class CorpusRole { kLabeled, kUnlabeled };

std::string to_string(CorpusRole role);
CorpusRole corpus_role_from_string(const std::string& s);

struct Corpus {
  CorpusRole role = CorpusRole::kUnlabeled;
  std::string spec_hash;
  int feature_dim = 0;
  int phoneme_inventory_size = 0;
  std::vector<Utterance> utterances;

  bool operator==(const Corpus& other) const;
};

// Collapses consecutive repeats: [a,a,b,b,b,a] -> [a,b,a].
PhonemeSeq run_length_collapse(const PhonemeSeq& alignment);

// Samples a corpus from the generative model: phoneme sequence bracketed by
// silence, per-phoneme durations, Gaussian frames plus observation noise.
// Deterministic given spec.seed.
Corpus generate_corpus(const CorpusSpec& spec);

// Disjoint, exhaustive partition. The labeled part keeps transcripts and
// alignments; the unlabeled part has both stripped. Callers that need the
// stripped fields for evaluation must retain the input corpus.
std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus,
                                       double labeled_fraction, uint64_t seed);

}  // namespace maskpred

#endif  // MASKPRED_CORPUS_H_
