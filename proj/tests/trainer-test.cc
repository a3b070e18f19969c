// tests/trainer-test.cc

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

#include "maskpred/trainer.h"

#include <filesystem>

#include "doctest.h"
#include "maskpred/corpus-io.h"
#include "peaked-fixture.h"

using namespace maskpred;
using maskpred_tests::make_peaked_setup;
namespace fs = std::filesystem;

namespace {

EncoderConfig small_ctc_config(int num_phonemes, int input_dim) {
  EncoderConfig config;
  config.num_layers = 1;
  config.input_dim = input_dim;
  config.hidden_dim = 16;
  config.num_heads = 2;
  config.ffn_dim = 32;
  config.downsample = 2;
  config.num_buckets = 16;
  config.max_distance = 32;
  config.vocab_size = num_phonemes + 1;
  config.head_kind = HeadKind::kCtc;
  return config;
}

bool params_equal(const Parameters& a, const Parameters& b) {
  std::vector<const Mat*> ta, tb;
  a.for_each([&ta](const std::string&, const Mat& m) { ta.push_back(&m); });
  b.for_each([&tb](const std::string&, const Mat& m) { tb.push_back(&m); });
  for (size_t i = 0; i < ta.size(); ++i)
    if (ta[i]->rows() != tb[i]->rows() || ta[i]->cols() != tb[i]->cols() ||
        !(ta[i]->array() == tb[i]->array()).all())
      return false;
  return true;
}

}  // namespace

TEST_CASE("checkpoint: save/load round trip") {
  EncoderConfig config = small_ctc_config(4, 3);
  EncoderModel model = make_model(config, 77);

  fs::path path = fs::temp_directory_path() / "maskpred-ckpt-test.bin";
  save_checkpoint(model, path);
  EncoderModel loaded = load_checkpoint(path);
  CHECK(loaded.config.num_layers == config.num_layers);
  CHECK(loaded.config.vocab_size == config.vocab_size);
  CHECK(loaded.config.head_kind == HeadKind::kCtc);

  // Values are float32 on disk; a second save is byte-identical.
  fs::path path2 = fs::temp_directory_path() / "maskpred-ckpt-test2.bin";
  save_checkpoint(loaded, path2);
  CHECK(read_file_bytes(path) == read_file_bytes(path2));
  EncoderModel reloaded = load_checkpoint(path2);
  CHECK(params_equal(loaded.params, reloaded.params));
  CHECK(frontend_hash(loaded) == frontend_hash(reloaded));

  auto bytes = read_file_bytes(path);
  bytes[2] = 'X';
  write_file_bytes(path, bytes.data(), bytes.size());
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);

  bytes = read_file_bytes(path2);
  write_file_bytes(path, bytes.data(), bytes.size() - 5);
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);

  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("checkpoint: config text block round trips") {
  EncoderConfig config = small_ctc_config(6, 8);
  config.dropout = 0.1;
  EncoderConfig back = encoder_config_from_text(encoder_config_to_text(config));
  CHECK(back.num_layers == config.num_layers);
  CHECK(back.input_dim == config.input_dim);
  CHECK(back.hidden_dim == config.hidden_dim);
  CHECK(back.dropout == config.dropout);
  CHECK(back.head_kind == config.head_kind);
  CHECK_THROWS_AS(encoder_config_from_text("nonsense=1\n"), FormatError);
}

TEST_CASE("train_ctc: zero steps is a no-op") {
  CorpusSpec spec = make_corpus_spec(21, 10, 4, 3, 2.0, 0.3);
  Corpus corpus = generate_corpus(spec);
  EncoderModel model = make_model(small_ctc_config(4, 3), 5);
  Parameters before = model.params;

  TrainSettings settings;
  settings.steps = 0;
  TrainLog log = train_ctc(&model, make_ctc_dataset(corpus, 2), settings);
  CHECK(log.losses.empty());
  CHECK(params_equal(model.params, before));
}

TEST_CASE("train_ctc: tiny corpus loss halves within budget") {
  // 20 utterances, 4 phonemes: the training loss must drop by more than 50%
  // from its step-0 value within 2000 steps.
  CorpusSpec spec = make_corpus_spec(33, 20, 4, 3, 2.0, 0.3);
  Corpus corpus = generate_corpus(spec);
  EncoderModel model = make_model(small_ctc_config(4, 3), 9);

  TrainSettings settings;
  settings.steps = 2000;
  settings.batch_size = 4;
  settings.peak_lr = 3e-3;
  settings.warmup_fraction = 0.1;
  settings.seed = 11;
  TrainLog log = train_ctc(&model, make_ctc_dataset(corpus, 2), settings);
  REQUIRE(log.losses.size() == 2000);
  CHECK(log.final_loss() < 0.5 * log.first_loss());
}

TEST_CASE("train_ctc: deterministic, including under worker parallelism") {
  CorpusSpec spec = make_corpus_spec(41, 12, 4, 3, 2.0, 0.3);
  Corpus corpus = generate_corpus(spec);

  auto run = [&](int workers) {
    EncoderModel model = make_model(small_ctc_config(4, 3), 13);
    TrainSettings settings;
    settings.steps = 40;
    settings.batch_size = 4;
    settings.peak_lr = 1e-3;
    settings.seed = 17;
    settings.workers = workers;
    train_ctc(&model, make_ctc_dataset(corpus, 2), settings);
    return model;
  };
  EncoderModel a = run(1);
  EncoderModel b = run(1);
  EncoderModel c = run(2);
  CHECK(params_equal(a.params, b.params));
  CHECK(params_equal(a.params, c.params));

  fs::path pa = fs::temp_directory_path() / "maskpred-det-a.ckpt";
  fs::path pc = fs::temp_directory_path() / "maskpred-det-c.ckpt";
  save_checkpoint(a, pa);
  save_checkpoint(c, pc);
  CHECK(hash_file(pa) == hash_file(pc));
  fs::remove(pa);
  fs::remove(pc);
}

TEST_CASE("train_ctc: diverges loudly at an absurd learning rate") {
  CorpusSpec spec = make_corpus_spec(51, 8, 4, 3, 2.0, 0.3);
  Corpus corpus = generate_corpus(spec);
  EncoderModel model = make_model(small_ctc_config(4, 3), 3);
  TrainSettings settings;
  settings.steps = 200;
  settings.batch_size = 4;
  settings.peak_lr = 1e10;
  settings.warmup_fraction = 0.0;
  CHECK_THROWS_AS(train_ctc(&model, make_ctc_dataset(corpus, 2), settings),
                  DivergedTraining);
}

TEST_CASE("train_masked: step-0 loss with a zeroed head equals ln V") {
  CorpusSpec spec = make_corpus_spec(61, 16, 5, 4, 2.0, 0.3);
  Corpus corpus = generate_corpus(spec);
  TargetSet targets = ground_truth_targets(corpus, 2);

  EncoderConfig config = small_ctc_config(4, 4);
  config.vocab_size = 5;
  config.head_kind = HeadKind::kLabel;
  EncoderModel model = make_model(config, 7);
  model.params.head_w.setZero();
  model.params.head_b.setZero();

  TrainSettings settings;
  settings.steps = 1;
  settings.batch_size = 16;
  settings.peak_lr = 0.0;
  settings.warmup_fraction = 0.0;
  settings.mask_prob = 0.2;
  settings.mask_span = 3;
  TrainLog log =
      train_masked(&model, make_masked_dataset(corpus, targets, 2), settings);
  REQUIRE(log.losses.size() == 1);
  CHECK(log.losses[0] == doctest::Approx(std::log(5.0)).epsilon(1e-9));
}

TEST_CASE("train_masked: beats chance on held-out masked frames") {
  CorpusSpec spec = make_corpus_spec(71, 60, 5, 4, 2.0, 0.4);
  Corpus corpus = generate_corpus(spec);
  TargetSet targets = ground_truth_targets(corpus, 2);

  EncoderConfig config = small_ctc_config(4, 4);
  config.vocab_size = 5;
  config.head_kind = HeadKind::kLabel;
  EncoderModel model = make_model(config, 15);

  std::vector<TrainExample> data = make_masked_dataset(corpus, targets, 2);
  TrainSettings settings;
  settings.steps = 300;
  settings.batch_size = 8;
  settings.peak_lr = 2e-3;
  settings.seed = 23;
  settings.mask_prob = 0.15;
  settings.mask_span = 3;
  train_masked(&model, data, settings);

  double accuracy = masked_eval_accuracy(model, data, 0.15, 3, 999);
  CHECK(accuracy > 1.0 / 5.0);
}

TEST_CASE("make_masked_dataset: stale target lengths are rejected") {
  CorpusSpec spec = make_corpus_spec(81, 4, 4, 3, 2.0, 0.2);
  Corpus corpus = generate_corpus(spec);
  TargetSet targets = ground_truth_targets(corpus, 2);
  targets.labels[0].push_back(0);
  CHECK_THROWS_AS(make_masked_dataset(corpus, targets, 2), LengthMismatch);

  // Utterances without targets are skipped silently.
  TargetSet partial = ground_truth_targets(corpus, 2);
  partial.ids.erase(partial.ids.begin());
  partial.labels.erase(partial.labels.begin());
  CHECK(make_masked_dataset(corpus, partial, 2).size() ==
        corpus.utterances.size() - 1);
}

TEST_CASE("greedy_transcript and corpus_per: peaked model scores zero error") {
  auto setup = make_peaked_setup(5, 8, 3);
  for (const Utterance& utt : setup.corpus.utterances)
    CHECK(greedy_transcript(setup.model, utt.features) == *utt.transcript);
  ErrorRateBreakdown per = corpus_per(setup.model, setup.corpus);
  CHECK(per.errors() == 0);
  CHECK(per.rate() == 0.0);
  CHECK(per.reference_length > 0);
}

TEST_CASE("with_pseudo_transcripts: full coverage, teacher quality carries") {
  auto setup = make_peaked_setup(5, 6, 8);
  Corpus stripped = setup.corpus;
  for (Utterance& utt : stripped.utterances) {
    utt.transcript.reset();
    utt.truth_alignment.reset();
  }
  Corpus pseudo = with_pseudo_transcripts(setup.model, stripped);
  REQUIRE(pseudo.utterances.size() == setup.corpus.utterances.size());
  for (size_t i = 0; i < pseudo.utterances.size(); ++i) {
    REQUIRE(pseudo.utterances[i].transcript.has_value());
    CHECK(*pseudo.utterances[i].transcript ==
          *setup.corpus.utterances[i].transcript);
  }
}
