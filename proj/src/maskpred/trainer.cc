// maskpred/trainer.cc

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

#include <algorithm>
#include <cmath>

#include "maskpred/ctc.h"

namespace maskpred {

namespace {

// Per-item work result; reduced in index order for bit determinism.
struct ItemResult {
  bool contributed = false;
  double loss = 0.0;
  Parameters grads;
};

uint64_t order_seed(uint64_t train_seed, uint64_t epoch) {
  return mix_seed(mix_seed(train_seed, 0xD47Aull), epoch);
}

using ItemFn = std::function<void(const EncoderModel&, const TrainExample&,
                                  uint64_t item_seed, ItemResult*)>;

TrainLog train_loop(EncoderModel* model,
                    const std::vector<TrainExample>& data,
                    const TrainSettings& settings, const ItemFn& item_fn) {
  TrainLog log;
  if (settings.steps == 0) return log;
  if (data.empty()) throw InvalidSpec("training requires a non-empty dataset");

  Schedule schedule;
  schedule.kind = settings.schedule;
  schedule.total_steps = settings.steps;
  schedule.warmup_fraction = settings.warmup_fraction;
  schedule.hold_fraction = settings.hold_fraction;
  schedule.peak_lr = settings.peak_lr;
  schedule.validate();

  AdamW optimizer(model->params, settings.adam);

  std::vector<size_t> order;
  size_t cursor = 0;
  uint64_t epoch = 0;

  for (long step = 0; step < settings.steps; ++step) {
    std::vector<size_t> batch;
    batch.reserve(settings.batch_size);
    for (int b = 0; b < settings.batch_size; ++b) {
      if (cursor >= order.size()) {
        order = Rng(order_seed(settings.seed, epoch++)).permutation(data.size());
        cursor = 0;
      }
      batch.push_back(order[cursor++]);
    }

    uint64_t step_seed = mix_seed(settings.seed, static_cast<uint64_t>(step));
    std::vector<ItemResult> results(batch.size());
    try {
      parallel_for(batch.size(), settings.workers, [&](size_t b) {
        results[b].grads = zeros_like(model->params);
        item_fn(*model, data[batch[b]],
                mix_seed(step_seed, static_cast<uint64_t>(b)), &results[b]);
      });
    } catch (const NonFiniteGradient& e) {
      throw DivergedTraining("step " + std::to_string(step) + ": " + e.what());
    }

    Parameters grads = zeros_like(model->params);
    double loss_sum = 0.0;
    int contributed = 0;
    for (size_t b = 0; b < results.size(); ++b) {
      if (!results[b].contributed) continue;
      ++contributed;
      loss_sum += results[b].loss;
      std::vector<Mat*> dst, src;
      grads.for_each([&dst](const std::string&, Mat& m) { dst.push_back(&m); });
      results[b].grads.for_each(
          [&src](const std::string&, Mat& m) { src.push_back(&m); });
      for (size_t i = 0; i < dst.size(); ++i) *dst[i] += *src[i];
    }

    if (contributed == 0) {
      log.losses.push_back(log.losses.empty() ? 0.0 : log.losses.back());
      continue;
    }
    double inv = 1.0 / contributed;
    grads.for_each([inv](const std::string&, Mat& m) { m *= inv; });

    double batch_loss = loss_sum * inv;
    if (!std::isfinite(batch_loss))
      throw DivergedTraining("non-finite training loss at step " +
                             std::to_string(step));
    try {
      optimizer_step(&model->params, grads, schedule, step, &optimizer,
                     settings.freeze_frontend);
    } catch (const NonFiniteGradient& e) {
      throw DivergedTraining("step " + std::to_string(step) + ": " + e.what());
    }
    log.losses.push_back(batch_loss);
  }
  if (!model->params.all_finite())
    throw DivergedTraining("non-finite parameters after training");
  return log;
}

}  // namespace

double TrainLog::final_loss(size_t window) const {
  if (losses.empty()) return 0.0;
  size_t n = std::min(window, losses.size());
  double sum = 0.0;
  for (size_t i = losses.size() - n; i < losses.size(); ++i) sum += losses[i];
  return sum / static_cast<double>(n);
}

std::vector<TrainExample> make_ctc_dataset(const Corpus& corpus,
                                           int downsample) {
  std::vector<TrainExample> data;
  for (const Utterance& utt : corpus.utterances) {
    if (!utt.transcript || utt.num_frames() < downsample) continue;
    TrainExample ex;
    ex.id = utt.id;
    ex.features = utt.features.cast<double>();
    ex.ctc_labels.reserve(utt.transcript->size());
    for (uint16_t p : *utt.transcript)
      ex.ctc_labels.push_back(static_cast<uint16_t>(p + 1));
    data.push_back(std::move(ex));
  }
  return data;
}

std::vector<TrainExample> make_masked_dataset(const Corpus& corpus,
                                              const TargetSet& targets,
                                              int downsample) {
  std::vector<TrainExample> data;
  for (const Utterance& utt : corpus.utterances) {
    int idx = targets.find(utt.id);
    if (idx < 0) continue;
    int Tp = utt.num_frames() / downsample;
    if (Tp < 1) continue;
    if (static_cast<int>(targets.labels[idx].size()) != Tp)
      throw LengthMismatch("targets for " + utt.id + " have length " +
                           std::to_string(targets.labels[idx].size()) +
                           ", expected " + std::to_string(Tp));
    TrainExample ex;
    ex.id = utt.id;
    ex.features = utt.features.cast<double>();
    ex.frame_targets = targets.labels[idx];
    data.push_back(std::move(ex));
  }
  return data;
}

TrainLog train_ctc(EncoderModel* model, const std::vector<TrainExample>& data,
                   const TrainSettings& settings) {
  if (model->config.head_kind != HeadKind::kCtc)
    throw InvalidSpec("train_ctc requires a CTC head");
  ItemFn item = [](const EncoderModel& m, const TrainExample& ex,
                   uint64_t item_seed, ItemResult* out) {
    CacheHandle cache;
    ForwardResult fwd =
        encoder_forward(m.config, m.params, ex.features, nullptr, cache.get(),
                        m.config.dropout > 0.0 ? &item_seed : nullptr);
    Mat logp = log_softmax_rows(fwd.logits);
    CtcLossResult ctc;
    try {
      ctc = ctc_forward_backward(logp, ex.ctc_labels);
    } catch (const InfeasibleTarget&) {
      return;  // too short for its transcript; sits this step out
    }
    double inv_frames = 1.0 / static_cast<double>(fwd.logits.rows());
    out->loss = ctc.loss * inv_frames;
    Mat dlogits =
        dlogits_from_dlogprobs(fwd.logits, (ctc.dlogprobs * inv_frames).eval());
    encoder_backward(m.config, m.params, *cache.get(), dlogits, &out->grads);
    out->contributed = true;
  };
  return train_loop(model, data, settings, item);
}

TrainLog train_masked(EncoderModel* model,
                      const std::vector<TrainExample>& data,
                      const TrainSettings& settings) {
  const int s = model->config.downsample;
  int crop = std::max(s, settings.crop_frames - settings.crop_frames % s);
  ItemFn item = [&settings, s, crop](const EncoderModel& m,
                                     const TrainExample& ex,
                                     uint64_t item_seed, ItemResult* out) {
    const int T = static_cast<int>(ex.features.rows());
    Rng rng(item_seed);
    int crop_T = std::min(T - T % s, crop);
    int offset = 0;
    if (T > crop_T)
      offset = s * static_cast<int>(rng.uniform_int((T - crop_T) / s + 1));
    Mat features = ex.features.middleRows(offset, crop_T);
    int Tp = crop_T / s;
    std::vector<uint16_t> targets(
        ex.frame_targets.begin() + offset / s,
        ex.frame_targets.begin() + offset / s + Tp);

    MaskSpec mask = sample_mask(Tp, settings.mask_prob, settings.mask_span,
                                mix_seed(item_seed, 0x3A5Cull));
    if (mask.masked.empty()) return;

    CacheHandle cache;
    uint64_t drop_seed = mix_seed(item_seed, 0xD0D0ull);
    ForwardResult fwd =
        encoder_forward(m.config, m.params, features, &mask, cache.get(),
                        m.config.dropout > 0.0 ? &drop_seed : nullptr);
    LossResult loss = masked_prediction_loss(fwd.logits, targets, mask);
    out->loss = loss.loss;
    encoder_backward(m.config, m.params, *cache.get(), loss.dlogits,
                     &out->grads);
    out->contributed = true;
  };
  return train_loop(model, data, settings, item);
}

PhonemeSeq greedy_transcript(const EncoderModel& model,
                             const FeatureMatrix& features) {
  if (model.config.head_kind != HeadKind::kCtc)
    throw InvalidSpec("greedy_transcript requires a CTC head");
  Mat feats = features.cast<double>();
  ForwardResult fwd =
      encoder_forward(model.config, model.params, feats, nullptr);
  std::vector<uint16_t> decoded = ctc_greedy_decode(fwd.logits);
  PhonemeSeq transcript;
  transcript.reserve(decoded.size());
  for (uint16_t label : decoded)
    transcript.push_back(static_cast<uint16_t>(label - 1));
  return transcript;
}

ErrorRateBreakdown corpus_per(const EncoderModel& model, const Corpus& corpus,
                              int workers) {
  const size_t n = corpus.utterances.size();
  std::vector<ErrorRateBreakdown> partial(n);
  parallel_for(n, workers, [&](size_t i) {
    const Utterance& utt = corpus.utterances[i];
    if (!utt.transcript || utt.num_frames() < model.config.downsample) return;
    PhonemeSeq hyp = greedy_transcript(model, utt.features);
    partial[i] = edit_distance(*utt.transcript, hyp);
  });
  ErrorRateBreakdown total;
  for (const ErrorRateBreakdown& p : partial) total += p;
  return total;
}

double masked_eval_accuracy(const EncoderModel& model,
                            const std::vector<TrainExample>& data,
                            double mask_prob, int mask_span, uint64_t seed,
                            int workers) {
  const size_t n = data.size();
  std::vector<long> correct(n, 0), total(n, 0);
  parallel_for(n, workers, [&](size_t i) {
    const TrainExample& ex = data[i];
    int Tp = static_cast<int>(ex.features.rows()) / model.config.downsample;
    if (Tp < 1) return;
    MaskSpec mask = sample_mask(Tp, mask_prob, mask_span,
                                mix_seed(seed, static_cast<uint64_t>(i)));
    if (mask.masked.empty()) return;
    ForwardResult fwd =
        encoder_forward(model.config, model.params, ex.features, &mask);
    for (int t : mask.masked) {
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < fwd.logits.cols(); ++k)
        if (fwd.logits(t, k) > fwd.logits(t, best)) best = k;
      if (static_cast<uint16_t>(best) == ex.frame_targets[t]) ++correct[i];
      ++total[i];
    }
  });
  long c = 0, t = 0;
  for (size_t i = 0; i < n; ++i) {
    c += correct[i];
    t += total[i];
  }
  return t == 0 ? 0.0 : static_cast<double>(c) / static_cast<double>(t);
}

Corpus with_pseudo_transcripts(const EncoderModel& teacher,
                               const Corpus& corpus, int workers) {
  Corpus out = corpus;
  parallel_for(out.utterances.size(), workers, [&](size_t i) {
    Utterance& utt = out.utterances[i];
    if (utt.num_frames() < teacher.config.downsample) {
      utt.transcript = PhonemeSeq{};
      return;
    }
    utt.transcript = greedy_transcript(teacher, utt.features);
  });
  return out;
}

}  // namespace maskpred
