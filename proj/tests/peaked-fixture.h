// tests/peaked-fixture.h
//
// Shared test fixture: a corpus whose features one-hot encode the true
// phoneme, plus a hand-wired zero-layer model whose logits are sharply
// peaked on that phoneme's CTC label. Predictions, alignments, and greedy
// decodes from this model recover the truth, which makes it a constructed
// oracle for target generation and self-training tests.

#ifndef MASKPRED_TESTS_PEAKED_FIXTURE_H_
#define MASKPRED_TESTS_PEAKED_FIXTURE_H_

#include "maskpred/checkpoint.h"
#include "maskpred/corpus.h"

namespace maskpred_tests {

struct PeakedSetup {
  maskpred::Corpus corpus;
  maskpred::EncoderModel model;
};

inline PeakedSetup make_peaked_setup(int num_phonemes, int num_utts,
                                     uint64_t seed) {
  using namespace maskpred;
  PeakedSetup setup;
  setup.corpus.role = CorpusRole::kLabeled;
  setup.corpus.spec_hash = "peaked";
  setup.corpus.feature_dim = num_phonemes;
  setup.corpus.phoneme_inventory_size = num_phonemes;

  Rng rng(seed);
  for (int u = 0; u < num_utts; ++u) {
    Utterance utt;
    utt.id = "peaked" + std::to_string(u);
    PhonemeSeq transcript;
    transcript.push_back(kSilencePhoneme);
    uint16_t prev = kSilencePhoneme;
    int len = 2 + static_cast<int>(rng.uniform_int(4));
    for (int i = 0; i < len; ++i) {
      uint16_t p;
      do {
        p = static_cast<uint16_t>(1 + rng.uniform_int(num_phonemes - 1));
      } while (p == prev);
      transcript.push_back(p);
      prev = p;
    }
    transcript.push_back(kSilencePhoneme);
    PhonemeSeq alignment;
    for (uint16_t p : transcript) {
      int dur = 2 + static_cast<int>(rng.uniform_int(3));
      alignment.insert(alignment.end(), dur, p);
    }
    utt.features =
        FeatureMatrix::Zero(static_cast<int>(alignment.size()), num_phonemes);
    for (size_t t = 0; t < alignment.size(); ++t)
      utt.features(static_cast<int>(t), alignment[t]) = 3.0f;
    utt.transcript = transcript;
    utt.truth_alignment = alignment;
    setup.corpus.utterances.push_back(std::move(utt));
  }

  EncoderConfig config;
  config.num_layers = 0;
  config.input_dim = num_phonemes;
  config.hidden_dim = num_phonemes;
  config.num_heads = 1;
  config.ffn_dim = 4;
  config.downsample = 1;
  config.vocab_size = num_phonemes + 1;
  config.head_kind = HeadKind::kCtc;
  setup.model.config = config;
  Parameters p = init_parameters(config, 0);
  p.conv1_w = Mat::Identity(num_phonemes, num_phonemes);
  p.conv1_b.setZero();
  p.conv2_w = Mat::Identity(num_phonemes, num_phonemes);
  p.conv2_b.setZero();
  p.head_w = Mat::Zero(num_phonemes, num_phonemes + 1);
  for (int d = 0; d < num_phonemes; ++d) p.head_w(d, d + 1) = 20.0;
  p.head_b.setZero();
  setup.model.params = std::move(p);
  return setup;
}

}  // namespace maskpred_tests

#endif  // MASKPRED_TESTS_PEAKED_FIXTURE_H_
