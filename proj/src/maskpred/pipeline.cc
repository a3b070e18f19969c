// maskpred/pipeline.cc

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

#include "maskpred/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "maskpred/corpus-io.h"
#include "maskpred/ctc.h"

namespace maskpred {

namespace fs = std::filesystem;

namespace {

// Stable hash of a directory artifact: file names and contents in sorted
// order.
std::string hash_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const fs::path& f : files) {
    std::string name = f.filename().string();
    h ^= fnv1a64(name);
    h *= 0x100000001b3ULL;
    std::vector<char> bytes = read_file_bytes(f);
    h ^= fnv1a64(bytes.data(), bytes.size());
    h *= 0x100000001b3ULL;
  }
  return hash_hex(h);
}

std::string hash_artifact(const fs::path& path) {
  return fs::is_directory(path) ? hash_dir(path) : hash_file(path);
}

// Records produced artifacts and re-verifies them before a later stage
// consumes them.
class ArtifactLedger {
 public:
  std::string record(const fs::path& path) {
    std::string h = hash_artifact(path);
    hashes_[path.string()] = h;
    return h;
  }
  void verify(const fs::path& path) const {
    auto it = hashes_.find(path.string());
    if (it == hashes_.end())
      throw Error("artifact was never recorded: " + path.string());
    if (hash_artifact(path) != it->second)
      throw Error("artifact changed on disk: " + path.string());
  }

 private:
  std::map<std::string, std::string> hashes_;
};

class StageTimer {
 public:
  explicit StageTimer(StageReport* report) : report_(report) {
    start_ = std::chrono::steady_clock::now();
  }
  ~StageTimer() {
    report_->wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
  }

 private:
  StageReport* report_;
  std::chrono::steady_clock::time_point start_;
};

bool needs_seed_model(const std::string& method) {
  return method == "phoneme-align" || method == "ctc-kmeans" ||
         method == "latent-kmeans";
}

// Direct label comparison is only meaningful when targets live in phoneme
// space; cluster ids go through the majority map.
bool targets_in_phoneme_space(const TargetSet& targets, int inventory) {
  if (targets.provenance == TargetProvenance::kPhonemeAlign ||
      targets.provenance == TargetProvenance::kGroundTruth)
    return true;
  return targets.provenance == TargetProvenance::kModelPredict &&
         targets.vocab_size == inventory;
}

struct TargetQuality {
  double frame_accuracy = 0.0;
  double purity = 0.0;
  double nmi = 0.0;
  long frames = 0;
};

TargetQuality target_quality(const TargetSet& targets, const Corpus& truth,
                             int downsample, int inventory) {
  TargetSet gt = ground_truth_targets(truth, downsample);
  std::vector<LabelSeq> hyp, ref;
  for (size_t i = 0; i < targets.ids.size(); ++i) {
    int j = gt.find(targets.ids[i]);
    if (j < 0) continue;
    hyp.push_back(targets.labels[i]);
    ref.push_back(gt.labels[j]);
  }
  TargetQuality q;
  bool direct = targets_in_phoneme_space(targets, inventory);
  q.frame_accuracy = frame_accuracy(hyp, ref, /*map_labels=*/!direct);
  ClusterMetrics cm = cluster_metrics(hyp, ref);
  q.purity = cm.purity;
  q.nmi = cm.nmi;
  for (const LabelSeq& seq : ref) q.frames += static_cast<long>(seq.size());
  return q;
}

ErrorRateBreakdown transcript_per(const Corpus& hyp_corpus,
                                  const Corpus& ref_corpus) {
  ErrorRateBreakdown total;
  for (size_t i = 0; i < hyp_corpus.utterances.size(); ++i) {
    const Utterance& hyp = hyp_corpus.utterances[i];
    const Utterance& ref = ref_corpus.utterances[i];
    if (!hyp.transcript || !ref.transcript) continue;
    total += edit_distance(*ref.transcript, *hyp.transcript);
  }
  return total;
}

Corpus concat_corpora(const Corpus& a, const Corpus& b, CorpusRole role) {
  Corpus out = a;
  out.role = role;
  out.utterances.insert(out.utterances.end(), b.utterances.begin(),
                        b.utterances.end());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Option-derived settings.
// ---------------------------------------------------------------------------

CorpusSpec corpus_spec_from_options(const PipelineOptions& options) {
  CorpusSpec spec = make_corpus_spec(
      options.corpus_seed, options.corpus_num_utterances,
      options.corpus_num_phonemes, options.corpus_feature_dim,
      options.corpus_emission_separation, options.corpus_noise_scale);
  spec.min_phones_per_utt = options.corpus_min_phones;
  spec.max_phones_per_utt = options.corpus_max_phones;
  return spec;
}

EncoderConfig model_config_from_options(const PipelineOptions& options,
                                        int vocab_size, HeadKind head_kind) {
  EncoderConfig config;
  config.num_layers = options.model_layers;
  config.input_dim = options.corpus_feature_dim;
  config.hidden_dim = options.model_hidden_dim;
  config.num_heads = options.model_heads;
  config.ffn_dim = options.model_ffn_dim;
  config.downsample = options.model_downsample;
  config.num_buckets = options.model_num_buckets;
  config.max_distance = options.model_max_distance;
  config.dropout = options.model_dropout;
  config.vocab_size = vocab_size;
  config.head_kind = head_kind;
  config.validate();
  return config;
}

namespace {

AdamConfig adam_from_options(const PipelineOptions& options) {
  AdamConfig adam;
  adam.beta1 = options.adam_beta1;
  adam.beta2 = options.adam_beta2;
  adam.eps = options.adam_eps;
  adam.weight_decay = options.adam_weight_decay;
  return adam;
}

}  // namespace

TrainSettings seedtrain_settings(const PipelineOptions& options) {
  TrainSettings s;
  s.steps = options.seedtrain_steps;
  s.batch_size = options.seedtrain_batch;
  s.peak_lr = options.seedtrain_peak_lr;
  s.warmup_fraction = options.seedtrain_warmup;
  s.schedule = ScheduleKind::kLinearWarmupDecay;
  s.adam = adam_from_options(options);
  s.seed = options.seedtrain_seed;
  s.workers = options.workers;
  return s;
}

TrainSettings pretrain_settings(const PipelineOptions& options) {
  TrainSettings s;
  s.steps = options.pretrain_steps;
  s.batch_size = options.pretrain_batch;
  s.peak_lr = options.pretrain_peak_lr;
  s.warmup_fraction = options.pretrain_warmup;
  s.schedule = ScheduleKind::kLinearWarmupDecay;
  s.adam = adam_from_options(options);
  s.seed = options.pretrain_seed;
  s.crop_frames = options.pretrain_crop_frames;
  s.mask_prob = options.pretrain_mask_prob;
  s.mask_span = options.pretrain_mask_span;
  s.workers = options.workers;
  return s;
}

TrainSettings finetune_settings(const PipelineOptions& options) {
  TrainSettings s;
  s.steps = options.finetune_steps;
  s.batch_size = options.finetune_batch;
  s.peak_lr = options.finetune_peak_lr;
  s.warmup_fraction = options.finetune_warmup;
  s.hold_fraction = options.finetune_hold;
  s.schedule = ScheduleKind::kTriStage;
  s.adam = adam_from_options(options);
  s.seed = options.finetune_seed;
  s.freeze_frontend = options.finetune_freeze_frontend;
  s.workers = options.workers;
  return s;
}

int clustering_layer(const PipelineOptions& options) {
  if (options.targets_layer >= 0) return options.targets_layer;
  // Paper scale puts clustering at layer 7 of 12.
  int layer = static_cast<int>(std::lround(options.model_layers * 7.0 / 12.0));
  return std::max(1, std::min(layer, options.model_layers));
}

// ---------------------------------------------------------------------------
// Stages.
// ---------------------------------------------------------------------------

EncoderModel train_seed_model(const Corpus& labeled,
                              const PipelineOptions& options, TrainLog* log) {
  EncoderConfig config = model_config_from_options(
      options, options.corpus_num_phonemes + 1, HeadKind::kCtc);
  EncoderModel model = make_model(config, mix_seed(options.seedtrain_seed,
                                                   fnv1a64(std::string("init"))));
  std::vector<TrainExample> data = make_ctc_dataset(labeled, config.downsample);
  TrainLog local =
      train_ctc(&model, data, seedtrain_settings(options));
  if (log != nullptr) *log = std::move(local);
  return model;
}

TargetBuildResult build_targets(const EncoderModel* model,
                                const Corpus& labeled, const Corpus& unlabeled,
                                const std::string& method,
                                const PipelineOptions& options,
                                const Corpus* truth_reference) {
  TargetBuildResult result;
  BlankPolicy policy = blank_policy_from_string(options.targets_blank_policy);
  const int s = options.model_downsample;

  if (method == "ground-truth") {
    if (truth_reference == nullptr)
      throw InvalidSpec("ground-truth targets require the truth reference");
    result.targets = ground_truth_targets(*truth_reference, s);
    return result;
  }

  if (method == "phoneme-align") {
    if (model == nullptr)
      throw InvalidSpec("phoneme-align requires the seed model");
    Corpus pseudo = with_pseudo_transcripts(*model, unlabeled, options.workers);
    if (truth_reference != nullptr) {
      // Pseudo-transcript quality; the truth transcripts are only read here,
      // for reporting.
      Corpus ref_unlabeled;
      ref_unlabeled.role = CorpusRole::kUnlabeled;
      for (const Utterance& utt : truth_reference->utterances) {
        bool in_unlabeled = false;
        for (const Utterance& u : unlabeled.utterances)
          if (u.id == utt.id) {
            in_unlabeled = true;
            break;
          }
        if (in_unlabeled) ref_unlabeled.utterances.push_back(utt);
      }
      result.pseudo_transcript_per =
          transcript_per(pseudo, ref_unlabeled).rate();
    }
    Corpus combined = concat_corpora(labeled, pseudo, CorpusRole::kLabeled);
    result.targets = frame_targets_from_model(*model, combined,
                                              TargetMode::kAlign, policy,
                                              options.workers, &result.stats);
    return result;
  }

  if (method == "raw-kmeans" || method == "ctc-kmeans" ||
      method == "latent-kmeans") {
    bool raw = method == "raw-kmeans";
    if (!raw && model == nullptr)
      throw InvalidSpec(method + " requires a model for feature extraction");
    Corpus combined = concat_corpora(labeled, unlabeled, labeled.role);
    const size_t n = combined.utterances.size();
    std::vector<Mat> feats(n);
    int layer = clustering_layer(options);
    parallel_for(n, options.workers, [&](size_t i) {
      const Utterance& utt = combined.utterances[i];
      if (utt.num_frames() < s) return;
      if (raw) {
        feats[i] = pool_raw_features(utt.features, s);
      } else {
        feats[i] = extract_layer_features(*model, utt.features.cast<double>(),
                                          layer);
      }
    });

    Mat stacked = stack_features(feats, options.targets_subsample);
    Codebook codebook =
        kmeans_fit(stacked, options.targets_kmeans_k, options.targets_seed,
                   options.targets_kmeans_iters, options.targets_kmeans_tol);
    std::ostringstream source;
    source << method << " layer=" << (raw ? -1 : layer)
           << " dim=" << codebook.dim();
    codebook.source = source.str();

    result.targets.vocab_size = codebook.k();
    result.targets.provenance = raw ? TargetProvenance::kRawKmeans
                                : method == "ctc-kmeans"
                                    ? TargetProvenance::kCtcKmeans
                                    : TargetProvenance::kLatentKmeans;
    for (size_t i = 0; i < n; ++i) {
      if (feats[i].rows() == 0) continue;
      result.targets.ids.push_back(combined.utterances[i].id);
      result.targets.labels.push_back(kmeans_assign(codebook, feats[i]));
      ++result.stats.utterances_done;
    }
    result.codebook = std::move(codebook);
    return result;
  }

  throw InvalidSpec("unknown codebook method: " + method);
}

EncoderModel pretrain(const TargetSet& targets, const Corpus& labeled,
                      const Corpus& unlabeled, const PipelineOptions& options,
                      uint64_t seed, TrainLog* log) {
  EncoderConfig config =
      model_config_from_options(options, targets.vocab_size, HeadKind::kLabel);
  EncoderModel model =
      make_model(config, mix_seed(seed, fnv1a64(std::string("init"))));
  Corpus combined = concat_corpora(labeled, unlabeled, CorpusRole::kUnlabeled);
  std::vector<TrainExample> data =
      make_masked_dataset(combined, targets, config.downsample);
  TrainSettings settings = pretrain_settings(options);
  settings.seed = seed;
  TrainLog local = train_masked(&model, data, settings);
  if (log != nullptr) *log = std::move(local);
  return model;
}

EncoderModel finetune(const EncoderModel& pretrained, const Corpus& labeled,
                      const PipelineOptions& options, uint64_t seed,
                      TrainLog* log) {
  EncoderModel model;
  model.config = pretrained.config;
  model.config.vocab_size = options.corpus_num_phonemes + 1;
  model.config.head_kind = HeadKind::kCtc;
  Parameters fresh = init_parameters(
      model.config, mix_seed(seed, fnv1a64(std::string("head"))));
  model.params = pretrained.params;
  model.params.head_w = fresh.head_w;
  model.params.head_b = fresh.head_b;

  std::vector<TrainExample> data =
      make_ctc_dataset(labeled, model.config.downsample);
  TrainSettings settings = finetune_settings(options);
  settings.seed = seed;

  std::string frontend_before = frontend_hash(model);
  TrainLog local = train_ctc(&model, data, settings);
  if (settings.freeze_frontend && frontend_hash(model) != frontend_before)
    throw Error("frontend changed during fine-tuning");
  if (log != nullptr) *log = std::move(local);
  return model;
}

EncoderModel self_train_round(const EncoderModel& teacher,
                              const EncoderModel& pretrained,
                              const Corpus& labeled, const Corpus& unlabeled,
                              const PipelineOptions& options, uint64_t seed) {
  Corpus pseudo = with_pseudo_transcripts(teacher, unlabeled, options.workers);
  Corpus mixed = concat_corpora(labeled, pseudo, CorpusRole::kLabeled);
  if (options.selftrain_fresh_student) {
    EncoderModel fresh = make_model(
        pretrained.config, mix_seed(seed, fnv1a64(std::string("student"))));
    return finetune(fresh, mixed, options, seed);
  }
  return finetune(pretrained, mixed, options, seed);
}

// ---------------------------------------------------------------------------
// Report.
// ---------------------------------------------------------------------------

const StageReport* PipelineReport::stage(const std::string& name) const {
  for (const StageReport& s : stages)
    if (s.name == name) return &s;
  return nullptr;
}

double PipelineReport::metric(const std::string& stage_name,
                              const std::string& key) const {
  const StageReport* s = stage(stage_name);
  if (s == nullptr) throw Error("no stage named " + stage_name);
  auto it = s->metrics.find(key);
  if (it == s->metrics.end())
    throw Error("stage " + stage_name + " has no metric " + key);
  return it->second;
}

std::string PipelineReport::to_json(bool canonical) const {
  nlohmann::ordered_json j;
  j["format"] = "maskpred-report";
  j["version"] = 1;
  j["config"] = config_text;
  j["stages"] = nlohmann::ordered_json::array();
  for (const StageReport& s : stages) {
    nlohmann::ordered_json js;
    js["name"] = s.name;
    if (!canonical) js["wall_seconds"] = s.wall_seconds;
    js["metrics"] = s.metrics;
    js["artifacts"] = s.artifacts;
    js["artifact_hashes"] = s.artifact_hashes;
    j["stages"].push_back(std::move(js));
  }
  return j.dump(2) + "\n";
}

std::string PipelineReport::canonical_hash() const {
  return hash_hex(fnv1a64(to_json(/*canonical=*/true)));
}

std::string PipelineReport::to_text() const {
  std::ostringstream os;
  os << "maskpred pipeline report\n";
  os << "report_hash: " << canonical_hash() << "\n\n";
  for (const StageReport& s : stages) {
    os << "stage " << s.name << "  (" << s.wall_seconds << " s)\n";
    for (const auto& [k, v] : s.metrics) os << "  " << k << " = " << v << "\n";
    for (const auto& [k, v] : s.artifacts) {
      os << "  " << k << ": " << v;
      auto h = s.artifact_hashes.find(k);
      if (h != s.artifact_hashes.end()) os << "  [" << h->second << "]";
      os << "\n";
    }
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Full pipeline.
// ---------------------------------------------------------------------------

PipelineReport run_pipeline(const PipelineOptions& options,
                            const fs::path& out_dir, bool force) {
  options.validate();
  prepare_output_dir(out_dir, force);

  PipelineReport report;
  report.config_text = dump_options(options, /*with_docs=*/false);
  write_file_text(out_dir / "config.echo", report.config_text);

  ArtifactLedger ledger;
  const int s = options.model_downsample;
  const int inventory = options.corpus_num_phonemes;

  auto relpath = [&out_dir](const fs::path& p) {
    return fs::relative(p, out_dir).string();
  };

  auto run_stage = [&report](const std::string& name, auto&& body) {
    StageReport stage;
    stage.name = name;
    {
      StageTimer timer(&stage);
      try {
        body(&stage);
      } catch (const StageFailed&) {
        throw;
      } catch (const std::exception& e) {
        throw StageFailed(name, e.what());
      }
    }
    report.stages.push_back(std::move(stage));
  };

  // Retained in memory across stages.
  Corpus full, labeled, unlabeled, eval_clean, eval_noisy;

  run_stage("corpus", [&](StageReport* stage) {
    CorpusSpec spec = corpus_spec_from_options(options);
    full = generate_corpus(spec);
    auto parts = split_corpus(full, options.split_labeled_fraction,
                              options.split_seed);

    CorpusSpec clean_spec = spec;
    clean_spec.seed = options.eval_seed;
    clean_spec.num_utterances = options.eval_num_utterances;
    eval_clean = generate_corpus(clean_spec);
    eval_clean.role = CorpusRole::kLabeled;

    CorpusSpec noisy_spec = clean_spec;
    noisy_spec.seed = mix_seed(options.eval_seed, fnv1a64(std::string("noisy")));
    noisy_spec.noise_scale = options.eval_noise_scale_noisy;
    eval_noisy = generate_corpus(noisy_spec);
    eval_noisy.role = CorpusRole::kLabeled;

    save_corpus(parts.first, out_dir / "labeled");
    save_corpus(parts.second, out_dir / "unlabeled");
    save_corpus(eval_clean, out_dir / "eval_clean");
    save_corpus(eval_noisy, out_dir / "eval_noisy");
    stage->artifacts = {{"labeled", "labeled"},
                        {"unlabeled", "unlabeled"},
                        {"eval_clean", "eval_clean"},
                        {"eval_noisy", "eval_noisy"}};
    for (const auto& [label, path] : stage->artifacts)
      stage->artifact_hashes[label] = ledger.record(out_dir / path);

    labeled = load_corpus(out_dir / "labeled");
    unlabeled = load_corpus(out_dir / "unlabeled");
    stage->metrics["num_labeled"] = static_cast<double>(labeled.utterances.size());
    stage->metrics["num_unlabeled"] =
        static_cast<double>(unlabeled.utterances.size());
    long frames = 0;
    for (const Utterance& u : full.utterances) frames += u.num_frames();
    stage->metrics["train_frames"] = static_cast<double>(frames);
  });

  EncoderModel seed_model;
  bool have_seed_model = needs_seed_model(options.targets_method);
  if (have_seed_model) {
    run_stage("seed_train", [&](StageReport* stage) {
      ledger.verify(out_dir / "labeled");
      TrainLog log;
      seed_model = train_seed_model(labeled, options, &log);
      fs::path ckpt = out_dir / "seed_model.ckpt";
      save_checkpoint(seed_model, ckpt);
      stage->artifacts["checkpoint"] = relpath(ckpt);
      stage->artifact_hashes["checkpoint"] = ledger.record(ckpt);
      seed_model = load_checkpoint(ckpt);

      stage->metrics["initial_loss"] = log.first_loss();
      stage->metrics["final_loss"] = log.final_loss();
      stage->metrics["per_clean"] = corpus_per(seed_model, eval_clean,
                                               options.workers).rate();
      stage->metrics["per_noisy"] = corpus_per(seed_model, eval_noisy,
                                               options.workers).rate();
    });
  }

  EncoderModel pretrained;
  bool have_pretrained = options.targets_method != "none";
  TargetSet current_targets;

  for (int iter = 1; iter <= options.pretrain_iterations; ++iter) {
    std::string iter_tag = "_iter" + std::to_string(iter);

    run_stage("targets" + iter_tag, [&](StageReport* stage) {
      TargetBuildResult built;
      if (iter == 1) {
        built = build_targets(have_seed_model ? &seed_model : nullptr, labeled,
                              unlabeled, options.targets_method, options,
                              &full);
      } else {
        // Later iterations regenerate targets from the previous pre-trained
        // model as a frame-level predictor (no masking, no re-clustering).
        Corpus combined = concat_corpora(labeled, unlabeled, labeled.role);
        built.targets = frame_targets_from_model(
            pretrained, combined, TargetMode::kPredict,
            blank_policy_from_string(options.targets_blank_policy),
            options.workers, &built.stats);
      }
      fs::path tdir = out_dir / ("targets" + iter_tag);
      save_targets(built.targets, tdir);
      stage->artifacts["targets"] = relpath(tdir);
      stage->artifact_hashes["targets"] = ledger.record(tdir);
      if (built.codebook) {
        fs::path cpath = out_dir / ("codebook" + iter_tag + ".bin");
        save_codebook(*built.codebook, cpath);
        stage->artifacts["codebook"] = relpath(cpath);
        stage->artifact_hashes["codebook"] = ledger.record(cpath);
        stage->metrics["kmeans_distortion"] =
            built.codebook->distortion_history.back();
        stage->metrics["kmeans_iterations"] =
            static_cast<double>(built.codebook->distortion_history.size());
      }
      current_targets = load_targets(tdir);

      TargetQuality quality =
          target_quality(current_targets, full, s, inventory);
      stage->metrics["frame_accuracy"] = quality.frame_accuracy;
      stage->metrics["purity"] = quality.purity;
      stage->metrics["nmi"] = quality.nmi;
      stage->metrics["utterances"] =
          static_cast<double>(current_targets.ids.size());
      stage->metrics["infeasible_skipped"] =
          static_cast<double>(built.stats.infeasible_skipped);
      if (built.pseudo_transcript_per >= 0.0)
        stage->metrics["pseudo_transcript_per"] = built.pseudo_transcript_per;
    });

    run_stage("pretrain" + iter_tag, [&](StageReport* stage) {
      ledger.verify(out_dir / ("targets" + iter_tag));
      TrainLog log;
      pretrained = pretrain(current_targets, labeled, unlabeled, options,
                            mix_seed(options.pretrain_seed,
                                     static_cast<uint64_t>(iter)),
                            &log);
      fs::path ckpt = out_dir / ("pretrained" + iter_tag + ".ckpt");
      save_checkpoint(pretrained, ckpt);
      stage->artifacts["checkpoint"] = relpath(ckpt);
      stage->artifact_hashes["checkpoint"] = ledger.record(ckpt);
      pretrained = load_checkpoint(ckpt);

      stage->metrics["step0_loss"] = log.first_loss();
      stage->metrics["final_loss"] = log.final_loss();
      stage->metrics["uniform_loss"] =
          std::log(static_cast<double>(current_targets.vocab_size));
      Corpus combined =
          concat_corpora(labeled, unlabeled, CorpusRole::kUnlabeled);
      std::vector<TrainExample> eval_data =
          make_masked_dataset(combined, current_targets, s);
      // Fresh mask seed: held-out positions.
      stage->metrics["masked_accuracy"] = masked_eval_accuracy(
          pretrained, eval_data, options.pretrain_mask_prob,
          options.pretrain_mask_span,
          mix_seed(options.pretrain_seed, fnv1a64(std::string("eval"))),
          options.workers);
      stage->metrics["chance_accuracy"] =
          1.0 / static_cast<double>(current_targets.vocab_size);
    });
  }

  EncoderModel finetuned;
  run_stage("finetune", [&](StageReport* stage) {
    ledger.verify(out_dir / "labeled");
    EncoderModel base;
    if (have_pretrained) {
      ledger.verify(out_dir / ("pretrained_iter" +
                               std::to_string(options.pretrain_iterations) +
                               ".ckpt"));
      base = pretrained;
    } else {
      // No pre-training: fine-tune an untrained encoder with the same
      // budget and procedure.
      EncoderConfig config =
          model_config_from_options(options, inventory, HeadKind::kLabel);
      base = make_model(config, mix_seed(options.finetune_seed,
                                         fnv1a64(std::string("random-init"))));
    }
    TrainLog log;
    std::string frontend_before = frontend_hash(base);
    finetuned = finetune(base, labeled, options, options.finetune_seed, &log);
    fs::path ckpt = out_dir / "finetuned.ckpt";
    save_checkpoint(finetuned, ckpt);
    stage->artifacts["checkpoint"] = relpath(ckpt);
    stage->artifact_hashes["checkpoint"] = ledger.record(ckpt);
    finetuned = load_checkpoint(ckpt);

    stage->metrics["final_loss"] = log.final_loss();
    stage->metrics["frontend_unchanged"] =
        options.finetune_freeze_frontend &&
                frontend_hash(finetuned) == frontend_before
            ? 1.0
            : 0.0;
    stage->metrics["per_clean"] =
        corpus_per(finetuned, eval_clean, options.workers).rate();
    stage->metrics["per_noisy"] =
        corpus_per(finetuned, eval_noisy, options.workers).rate();
  });

  EncoderModel teacher = finetuned;
  for (int round = 1; round <= options.selftrain_rounds; ++round) {
    run_stage("selftrain_round" + std::to_string(round),
              [&](StageReport* stage) {
      EncoderModel base_for_student;
      if (have_pretrained) {
        base_for_student = pretrained;
      } else {
        EncoderConfig config =
            model_config_from_options(options, inventory, HeadKind::kLabel);
        base_for_student =
            make_model(config, mix_seed(options.finetune_seed,
                                        fnv1a64(std::string("random-init"))));
      }
      EncoderModel student = self_train_round(
          teacher, base_for_student, labeled, unlabeled, options,
          mix_seed(options.selftrain_seed, static_cast<uint64_t>(round)));
      fs::path ckpt =
          out_dir / ("selftrain_round" + std::to_string(round) + ".ckpt");
      save_checkpoint(student, ckpt);
      stage->artifacts["checkpoint"] = relpath(ckpt);
      stage->artifact_hashes["checkpoint"] = ledger.record(ckpt);
      student = load_checkpoint(ckpt);

      stage->metrics["pseudo_coverage"] = 1.0;  // no filtering by design
      stage->metrics["per_clean"] =
          corpus_per(student, eval_clean, options.workers).rate();
      stage->metrics["per_noisy"] =
          corpus_per(student, eval_noisy, options.workers).rate();
      teacher = student;
    });
  }

  write_file_text(out_dir / "report.json", report.to_json(false));
  write_file_text(out_dir / "report.canonical.json", report.to_json(true));
  write_file_text(out_dir / "report.txt", report.to_text());
  return report;
}

}  // namespace maskpred
