// maskpred/corpus.cc

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

#include "maskpred/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace maskpred {

void CorpusSpec::validate() const {
  if (num_utterances < 0) throw InvalidSpec("num_utterances must be >= 0");
  if (phoneme_inventory_size < 2)
    throw InvalidSpec("phoneme_inventory_size must be >= 2");
  if (feature_dim < 1) throw InvalidSpec("feature_dim must be >= 1");
  if (min_phones_per_utt < 1 || max_phones_per_utt < min_phones_per_utt)
    throw InvalidSpec("phones-per-utterance range invalid");
  if (static_cast<int>(durations.size()) != phoneme_inventory_size ||
      static_cast<int>(emissions.size()) != phoneme_inventory_size)
    throw InvalidSpec("duration/emission models must cover the inventory");
  for (const DurationModel& d : durations) {
    if (d.min_frames < 1) throw InvalidSpec("min frames per phoneme must be >= 1");
    if (d.max_frames < d.min_frames)
      throw InvalidSpec("max frames must be >= min frames");
    if (d.mean_frames < d.min_frames || d.mean_frames > d.max_frames)
      throw InvalidSpec("mean frames must lie within [min, max]");
  }
  for (const EmissionModel& e : emissions) {
    if (e.mean.size() != feature_dim || e.variance.size() != feature_dim)
      throw InvalidSpec("emission model dimension mismatch");
    if ((e.variance.array() <= 0.0).any())
      throw InvalidSpec("emission variances must be > 0");
  }
  if (noise_scale < 0.0) throw InvalidSpec("noise_scale must be >= 0");
}

std::string CorpusSpec::hash() const {
  std::ostringstream os;
  os.precision(17);
  os << seed << '|' << num_utterances << '|' << phoneme_inventory_size << '|'
     << feature_dim << '|' << min_phones_per_utt << '|' << max_phones_per_utt
     << '|' << noise_scale;
  for (const DurationModel& d : durations)
    os << '|' << d.mean_frames << ',' << d.min_frames << ',' << d.max_frames;
  for (const EmissionModel& e : emissions) {
    os << '|';
    for (int i = 0; i < e.mean.size(); ++i) os << e.mean[i] << ',';
    for (int i = 0; i < e.variance.size(); ++i) os << e.variance[i] << ',';
  }
  return hash_hex(fnv1a64(os.str()));
}

CorpusSpec make_corpus_spec(uint64_t seed, int num_utterances,
                            int phoneme_inventory_size, int feature_dim,
                            double emission_separation, double noise_scale) {
  CorpusSpec spec;
  spec.seed = seed;
  spec.num_utterances = num_utterances;
  spec.phoneme_inventory_size = phoneme_inventory_size;
  spec.feature_dim = feature_dim;
  spec.noise_scale = noise_scale;

  spec.durations.resize(phoneme_inventory_size);
  spec.durations[kSilencePhoneme] = DurationModel{3.0, 1, 12};

  // Emission means are a fixed function of the spec seed, not of the
  // per-utterance sampling stream, so two specs differing only in
  // num_utterances or noise_scale share phoneme identities.
  Rng rng(mix_seed(seed, fnv1a64(std::string("emission-means"))));
  spec.emissions.resize(phoneme_inventory_size);
  for (int p = 0; p < phoneme_inventory_size; ++p) {
    EmissionModel& e = spec.emissions[p];
    e.mean = Eigen::VectorXd::Zero(feature_dim);
    e.variance = Eigen::VectorXd::Ones(feature_dim);
    if (p != kSilencePhoneme) {
      for (int d = 0; d < feature_dim; ++d)
        e.mean[d] = emission_separation * rng.normal();
    }
  }
  return spec;
}

bool Utterance::operator==(const Utterance& other) const {
  if (id != other.id) return false;
  if (features.rows() != other.features.rows() ||
      features.cols() != other.features.cols())
    return false;
  if (features.size() > 0 &&
      std::memcmp(features.data(), other.features.data(),
                  sizeof(float) * features.size()) != 0)
    return false;
  return transcript == other.transcript &&
         truth_alignment == other.truth_alignment;
}

bool Corpus::operator==(const Corpus& other) const {
  return role == other.role && spec_hash == other.spec_hash &&
         feature_dim == other.feature_dim &&
         phoneme_inventory_size == other.phoneme_inventory_size &&
         utterances == other.utterances;
}

std::string to_string(CorpusRole role) {
  return role == CorpusRole::kLabeled ? "labeled" : "unlabeled";
}

CorpusRole corpus_role_from_string(const std::string& s) {
  if (s == "labeled") return CorpusRole::kLabeled;
  if (s == "unlabeled") return CorpusRole::kUnlabeled;
  throw FormatError("unknown corpus role: " + s);
}

PhonemeSeq run_length_collapse(const PhonemeSeq& alignment) {
  PhonemeSeq out;
  for (uint16_t p : alignment)
    if (out.empty() || out.back() != p) out.push_back(p);
  return out;
}

namespace {

int sample_duration(const DurationModel& d, Rng& rng) {
  int frames = d.min_frames + rng.poisson(d.mean_frames - d.min_frames);
  return std::min(frames, d.max_frames);
}

PhonemeSeq sample_transcript(const CorpusSpec& spec, Rng& rng) {
  // Silence brackets a sequence of non-silence phonemes with no immediate
  // repeats, so the alignment collapses back to exactly this transcript.
  int num_non_silence = spec.phoneme_inventory_size - 1;
  int n = spec.min_phones_per_utt +
          static_cast<int>(rng.uniform_int(
              spec.max_phones_per_utt - spec.min_phones_per_utt + 1));
  if (num_non_silence < 2) n = std::min(n, 1);
  PhonemeSeq transcript;
  transcript.push_back(kSilencePhoneme);
  uint16_t prev = kSilencePhoneme;
  for (int i = 0; i < n; ++i) {
    uint16_t p;
    do {
      p = static_cast<uint16_t>(1 + rng.uniform_int(num_non_silence));
    } while (p == prev);
    transcript.push_back(p);
    prev = p;
  }
  transcript.push_back(kSilencePhoneme);
  return transcript;
}

}  // namespace

Corpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  Corpus corpus;
  corpus.role = CorpusRole::kUnlabeled;  // assigned properly by split
  corpus.spec_hash = spec.hash();
  corpus.feature_dim = spec.feature_dim;
  corpus.phoneme_inventory_size = spec.phoneme_inventory_size;
  corpus.utterances.reserve(spec.num_utterances);

  for (int u = 0; u < spec.num_utterances; ++u) {
    // One independent stream per utterance; insertion order never matters.
    Rng rng(mix_seed(spec.seed, static_cast<uint64_t>(u)));
    Utterance utt;
    {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "utt%06d", u);
      utt.id = buf;
    }
    PhonemeSeq transcript = sample_transcript(spec, rng);

    PhonemeSeq alignment;
    for (uint16_t p : transcript) {
      int dur = sample_duration(spec.durations[p], rng);
      alignment.insert(alignment.end(), dur, p);
    }
    int T = static_cast<int>(alignment.size());
    utt.features.resize(T, spec.feature_dim);
    for (int t = 0; t < T; ++t) {
      const EmissionModel& e = spec.emissions[alignment[t]];
      for (int d = 0; d < spec.feature_dim; ++d) {
        double x = e.mean[d] + std::sqrt(e.variance[d]) * rng.normal() +
                   spec.noise_scale * rng.normal();
        utt.features(t, d) = static_cast<float>(x);
      }
    }
    utt.transcript = std::move(transcript);
    utt.truth_alignment = std::move(alignment);
    corpus.utterances.push_back(std::move(utt));
  }
  return corpus;
}

std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus,
                                       double labeled_fraction,
                                       uint64_t seed) {
  if (corpus.utterances.empty())
    throw InvalidFraction("cannot split an empty corpus");
  size_t n = corpus.utterances.size();
  size_t num_labeled =
      static_cast<size_t>(std::llround(labeled_fraction * static_cast<double>(n)));
  if (!(labeled_fraction > 0.0 && labeled_fraction < 1.0) ||
      num_labeled == 0 || num_labeled >= n)
    throw InvalidFraction("labeled_fraction must leave both parts non-empty");

  Rng rng(mix_seed(seed, fnv1a64(std::string("split"))));
  std::vector<size_t> order = rng.permutation(n);
  std::vector<bool> is_labeled(n, false);
  for (size_t i = 0; i < num_labeled; ++i) is_labeled[order[i]] = true;

  Corpus labeled, unlabeled;
  labeled.role = CorpusRole::kLabeled;
  unlabeled.role = CorpusRole::kUnlabeled;
  for (Corpus* part : {&labeled, &unlabeled}) {
    part->spec_hash = corpus.spec_hash;
    part->feature_dim = corpus.feature_dim;
    part->phoneme_inventory_size = corpus.phoneme_inventory_size;
  }
  // Manifest order is preserved within each part.
  for (size_t i = 0; i < n; ++i) {
    const Utterance& utt = corpus.utterances[i];
    if (is_labeled[i]) {
      if (!utt.transcript)
        throw InvalidSpec("labeled split requires transcripts: " + utt.id);
      labeled.utterances.push_back(utt);
    } else {
      Utterance stripped;
      stripped.id = utt.id;
      stripped.features = utt.features;
      unlabeled.utterances.push_back(std::move(stripped));
    }
  }
  return {std::move(labeled), std::move(unlabeled)};
}

}  // namespace maskpred
