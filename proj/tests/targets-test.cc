// tests/targets-test.cc

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

#include "maskpred/targets.h"

#include <filesystem>

#include "doctest.h"
#include "peaked-fixture.h"

using namespace maskpred;
using maskpred_tests::PeakedSetup;
using maskpred_tests::make_peaked_setup;
namespace fs = std::filesystem;

TEST_CASE("resolve_blanks: both policies") {
  // CTC labels: blank=0, phoneme p has label p+1.
  std::vector<uint16_t> frames = {0, 2, 0, 3, 0};
  CHECK(resolve_blanks(frames, BlankPolicy::kNearestLabel) ==
        std::vector<uint16_t>{1, 1, 1, 2, 2});
  CHECK(resolve_blanks(frames, BlankPolicy::kSilenceLabel) ==
        std::vector<uint16_t>{0, 1, 0, 2, 0});

  // All-blank degenerates to silence.
  std::vector<uint16_t> blanks(4, 0);
  CHECK(resolve_blanks(blanks, BlankPolicy::kNearestLabel) ==
        std::vector<uint16_t>(4, kSilencePhoneme));
}

TEST_CASE("ground_truth_targets: majority per window, ties to lowest id") {
  Corpus corpus;
  corpus.feature_dim = 2;
  corpus.phoneme_inventory_size = 4;
  Utterance utt;
  utt.id = "u0";
  utt.features = FeatureMatrix::Zero(6, 2);
  utt.truth_alignment = PhonemeSeq{3, 3, 1, 2, 2, 1};
  utt.transcript = run_length_collapse(*utt.truth_alignment);
  corpus.utterances.push_back(utt);

  TargetSet targets = ground_truth_targets(corpus, 2);
  REQUIRE(targets.ids.size() == 1);
  // Windows: {3,3}->3, {1,2} tie -> 1, {2,1} tie -> 1.
  CHECK(targets.labels[0] == std::vector<uint16_t>{3, 1, 1});
  CHECK(targets.vocab_size == 4);
  CHECK(targets.provenance == TargetProvenance::kGroundTruth);

  Corpus no_alignment = corpus;
  no_alignment.utterances[0].truth_alignment.reset();
  CHECK_THROWS_AS(ground_truth_targets(no_alignment, 2), InvalidSpec);
}

TEST_CASE("frame_targets_from_model: constant logits predict the lowest label") {
  PeakedSetup setup = make_peaked_setup(4, 3, 5);
  EncoderModel constant = setup.model;
  constant.config.head_kind = HeadKind::kLabel;
  constant.config.vocab_size = 4;
  constant.params.head_w = Mat::Zero(4, 4);
  constant.params.head_b = Mat::Zero(1, 4);

  TargetSet targets =
      frame_targets_from_model(constant, setup.corpus, TargetMode::kPredict,
                               BlankPolicy::kNearestLabel);
  CHECK(targets.vocab_size == 4);
  for (const auto& seq : targets.labels)
    for (uint16_t v : seq) CHECK(v == 0);
}

TEST_CASE("frame_targets_from_model: peaked model recovers truth") {
  PeakedSetup setup = make_peaked_setup(5, 10, 42);

  TargetGenStats stats;
  TargetSet predict =
      frame_targets_from_model(setup.model, setup.corpus, TargetMode::kPredict,
                               BlankPolicy::kNearestLabel, 1, &stats);
  CHECK(stats.utterances_done == 10);
  CHECK(predict.provenance == TargetProvenance::kModelPredict);
  CHECK(predict.vocab_size == 5);

  TargetSet align =
      frame_targets_from_model(setup.model, setup.corpus, TargetMode::kAlign,
                               BlankPolicy::kNearestLabel);
  CHECK(align.provenance == TargetProvenance::kPhonemeAlign);

  long total = 0, predict_match = 0, align_match = 0;
  for (size_t i = 0; i < setup.corpus.utterances.size(); ++i) {
    const PhonemeSeq& truth = *setup.corpus.utterances[i].truth_alignment;
    for (size_t t = 0; t < truth.size(); ++t) {
      ++total;
      if (predict.labels[i][t] == truth[t]) ++predict_match;
      if (align.labels[i][t] == truth[t]) ++align_match;
    }
  }
  CHECK(static_cast<double>(predict_match) / total > 0.99);
  CHECK(static_cast<double>(align_match) / total > 0.99);
}

TEST_CASE("frame_targets_from_model: infeasible utterances are skipped") {
  PeakedSetup setup = make_peaked_setup(4, 2, 9);
  // Shrink one utterance below its transcript's minimum CTC length.
  Utterance& utt = setup.corpus.utterances[0];
  utt.features.conservativeResize(2, utt.features.cols());
  utt.truth_alignment.reset();

  TargetGenStats stats;
  TargetSet targets =
      frame_targets_from_model(setup.model, setup.corpus, TargetMode::kAlign,
                               BlankPolicy::kNearestLabel, 1, &stats);
  CHECK(stats.infeasible_skipped == 1);
  CHECK(stats.utterances_done == 1);
  CHECK(targets.ids.size() == 1);
  CHECK(targets.ids[0] == setup.corpus.utterances[1].id);

  // Align mode demands a CTC head.
  EncoderModel label_head = setup.model;
  label_head.config.head_kind = HeadKind::kLabel;
  CHECK_THROWS_AS(
      frame_targets_from_model(label_head, setup.corpus, TargetMode::kAlign,
                               BlankPolicy::kNearestLabel),
      InvalidSpec);
}

TEST_CASE("targets io: round trip, header checks, length checks") {
  TargetSet targets;
  targets.vocab_size = 7;
  targets.provenance = TargetProvenance::kCtcKmeans;
  targets.ids = {"a", "b", "c"};
  targets.labels = {{1, 2, 3}, {}, {6, 0}};

  fs::path dir = fs::temp_directory_path() / "maskpred-targets-test";
  fs::remove_all(dir);
  save_targets(targets, dir);
  TargetSet loaded = load_targets(dir);
  CHECK(loaded == targets);

  SUBCASE("bad magic") {
    std::string tsv = read_file_text(dir / "targets.tsv");
    write_file_text(dir / "targets.tsv", "#wrong" + tsv.substr(6));
    CHECK_THROWS_AS(load_targets(dir), FormatError);
  }
  SUBCASE("bin size mismatch") {
    auto bin = read_file_bytes(dir / "targets.bin");
    write_file_bytes(dir / "targets.bin", bin.data(), bin.size() - 2);
    CHECK_THROWS_AS(load_targets(dir), FormatError);
  }
  SUBCASE("label out of declared vocab") {
    TargetSet bad = targets;
    bad.vocab_size = 3;
    CHECK_THROWS_AS(save_targets(bad, dir), LengthMismatch);
  }
  fs::remove_all(dir);
}
