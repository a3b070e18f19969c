// maskpred/options.cc

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

#include "maskpred/options.h"

#include <functional>
#include <set>
#include <sstream>

namespace maskpred {

namespace {

struct OptionBinding {
  std::string key;
  std::string doc;
  std::function<std::string(const PipelineOptions&)> get;
  std::function<void(PipelineOptions&, const std::string&)> set;
};

long parse_long(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("option " + key + ": expected integer, got '" + value +
                     "'");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("option " + key + ": expected unsigned integer, got '" +
                     value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("option " + key + ": expected number, got '" + value +
                     "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError("option " + key + ": expected true/false, got '" + value +
                   "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

#define OPT_LONG(KEY, FIELD, DOC)                                     \
  {KEY, DOC, [](const PipelineOptions& o) { return std::to_string(o.FIELD); }, \
   [](PipelineOptions& o, const std::string& v) {                     \
     o.FIELD = parse_long(KEY, v);                                    \
   }}
#define OPT_INT(KEY, FIELD, DOC)                                      \
  {KEY, DOC, [](const PipelineOptions& o) { return std::to_string(o.FIELD); }, \
   [](PipelineOptions& o, const std::string& v) {                     \
     o.FIELD = static_cast<int>(parse_long(KEY, v));                  \
   }}
#define OPT_U64(KEY, FIELD, DOC)                                      \
  {KEY, DOC, [](const PipelineOptions& o) { return std::to_string(o.FIELD); }, \
   [](PipelineOptions& o, const std::string& v) {                     \
     o.FIELD = parse_u64(KEY, v);                                     \
   }}
#define OPT_DOUBLE(KEY, FIELD, DOC)                                   \
  {KEY, DOC, [](const PipelineOptions& o) { return fmt(o.FIELD); },   \
   [](PipelineOptions& o, const std::string& v) {                     \
     o.FIELD = parse_double(KEY, v);                                  \
   }}
#define OPT_BOOL(KEY, FIELD, DOC)                                     \
  {KEY, DOC,                                                          \
   [](const PipelineOptions& o) {                                     \
     return std::string(o.FIELD ? "true" : "false");                  \
   },                                                                 \
   [](PipelineOptions& o, const std::string& v) {                     \
     o.FIELD = parse_bool(KEY, v);                                    \
   }}
#define OPT_STRING(KEY, FIELD, DOC)                                   \
  {KEY, DOC, [](const PipelineOptions& o) { return o.FIELD; },        \
   [](PipelineOptions& o, const std::string& v) { o.FIELD = v; }}

const std::vector<OptionBinding>& bindings() {
  static const std::vector<OptionBinding> kBindings = {
      OPT_U64("corpus.seed", corpus_seed, "corpus sampling seed"),
      OPT_INT("corpus.num_utterances", corpus_num_utterances,
              "utterances in the training corpus"),
      OPT_INT("corpus.num_phonemes", corpus_num_phonemes,
              "phoneme inventory size including silence"),
      OPT_INT("corpus.feature_dim", corpus_feature_dim,
              "feature dimension D"),
      OPT_INT("corpus.min_phones", corpus_min_phones,
              "min non-silence phonemes per utterance"),
      OPT_INT("corpus.max_phones", corpus_max_phones,
              "max non-silence phonemes per utterance"),
      OPT_DOUBLE("corpus.emission_separation", corpus_emission_separation,
                 "stddev of phoneme emission means"),
      OPT_DOUBLE("corpus.noise_scale", corpus_noise_scale,
                 "additive observation noise stddev"),
      OPT_DOUBLE("split.labeled_fraction", split_labeled_fraction,
                 "fraction of utterances kept labeled"),
      OPT_U64("split.seed", split_seed, "split permutation seed"),
      OPT_INT("eval.num_utterances", eval_num_utterances,
              "utterances per evaluation corpus"),
      OPT_U64("eval.seed", eval_seed, "evaluation corpus sampling seed"),
      OPT_DOUBLE("eval.noise_scale_noisy", eval_noise_scale_noisy,
                 "noise stddev of the noisy evaluation condition"),
      OPT_INT("model.layers", model_layers, "transformer layers"),
      OPT_INT("model.hidden_dim", model_hidden_dim, "hidden width H"),
      OPT_INT("model.heads", model_heads, "attention heads"),
      OPT_INT("model.ffn_dim", model_ffn_dim, "feed-forward width"),
      OPT_INT("model.downsample", model_downsample,
              "conv frontend cumulative stride"),
      OPT_INT("model.num_buckets", model_num_buckets,
              "relative position bias buckets"),
      OPT_INT("model.max_distance", model_max_distance,
              "relative offset saturation distance"),
      OPT_DOUBLE("model.dropout", model_dropout, "dropout probability"),
      OPT_LONG("seedtrain.steps", seedtrain_steps, "seed model CTC steps"),
      OPT_INT("seedtrain.batch", seedtrain_batch, "seed model batch size"),
      OPT_DOUBLE("seedtrain.peak_lr", seedtrain_peak_lr,
                 "seed model peak learning rate"),
      OPT_DOUBLE("seedtrain.warmup", seedtrain_warmup,
                 "seed model warmup fraction"),
      OPT_U64("seedtrain.seed", seedtrain_seed, "seed model training seed"),
      OPT_STRING("targets.method", targets_method,
                 "raw-kmeans | ctc-kmeans | latent-kmeans | phoneme-align | "
                 "ground-truth | none"),
      OPT_INT("targets.kmeans_k", targets_kmeans_k, "codebook size K"),
      OPT_INT("targets.layer", targets_layer,
              "latent layer for clustering (-1: scaled 7-of-12 analog)"),
      OPT_STRING("targets.blank_policy", targets_blank_policy,
                 "nearest-label | silence-label"),
      OPT_INT("targets.subsample", targets_subsample,
              "use every n-th frame when fitting k-means"),
      OPT_INT("targets.kmeans_iters", targets_kmeans_iters,
              "max Lloyd iterations"),
      OPT_DOUBLE("targets.kmeans_tol", targets_kmeans_tol,
                 "relative distortion improvement tolerance"),
      OPT_U64("targets.seed", targets_seed, "target generation seed"),
      OPT_LONG("pretrain.steps", pretrain_steps, "masked pre-training steps"),
      OPT_INT("pretrain.batch", pretrain_batch, "pre-training batch size"),
      OPT_DOUBLE("pretrain.peak_lr", pretrain_peak_lr,
                 "pre-training peak learning rate"),
      OPT_DOUBLE("pretrain.warmup", pretrain_warmup,
                 "pre-training warmup fraction"),
      OPT_DOUBLE("pretrain.mask_prob", pretrain_mask_prob,
                 "span start probability"),
      OPT_INT("pretrain.mask_span", pretrain_mask_span, "mask span length"),
      OPT_INT("pretrain.crop_frames", pretrain_crop_frames,
              "max input frames per example"),
      OPT_INT("pretrain.iterations", pretrain_iterations,
              "pre-training iterations (>=2 regenerate targets by "
              "model-predict)"),
      OPT_U64("pretrain.seed", pretrain_seed, "pre-training seed"),
      OPT_LONG("finetune.steps", finetune_steps, "fine-tuning CTC steps"),
      OPT_INT("finetune.batch", finetune_batch, "fine-tuning batch size"),
      OPT_DOUBLE("finetune.peak_lr", finetune_peak_lr,
                 "fine-tuning peak learning rate"),
      OPT_DOUBLE("finetune.warmup", finetune_warmup,
                 "tri-stage warmup fraction"),
      OPT_DOUBLE("finetune.hold", finetune_hold, "tri-stage hold fraction"),
      OPT_BOOL("finetune.freeze_frontend", finetune_freeze_frontend,
               "keep the conv frontend fixed"),
      OPT_U64("finetune.seed", finetune_seed, "fine-tuning seed"),
      OPT_INT("selftrain.rounds", selftrain_rounds, "self-training rounds"),
      OPT_BOOL("selftrain.fresh_student", selftrain_fresh_student,
               "train the student from random init instead of the "
               "pre-trained checkpoint"),
      OPT_U64("selftrain.seed", selftrain_seed, "self-training seed"),
      OPT_DOUBLE("adam.beta1", adam_beta1, "AdamW beta1"),
      OPT_DOUBLE("adam.beta2", adam_beta2, "AdamW beta2"),
      OPT_DOUBLE("adam.eps", adam_eps, "AdamW epsilon"),
      OPT_DOUBLE("adam.weight_decay", adam_weight_decay,
                 "decoupled weight decay"),
      OPT_INT("workers", workers, "intra-stage worker threads"),
  };
  return kBindings;
}

#undef OPT_LONG
#undef OPT_INT
#undef OPT_U64
#undef OPT_DOUBLE
#undef OPT_BOOL
#undef OPT_STRING

const OptionBinding* find_binding(const std::string& key) {
  for (const OptionBinding& b : bindings())
    if (b.key == key) return &b;
  return nullptr;
}

}  // namespace

void PipelineOptions::validate() const {
  static const std::set<std::string> kMethods = {
      "raw-kmeans", "ctc-kmeans", "latent-kmeans",
      "phoneme-align", "ground-truth", "none"};
  if (kMethods.count(targets_method) == 0)
    throw UsageError("targets.method: unknown method '" + targets_method + "'");
  if (targets_blank_policy != "nearest-label" &&
      targets_blank_policy != "silence-label")
    throw UsageError("targets.blank_policy: unknown policy '" +
                     targets_blank_policy + "'");
  if (targets_method == "none" && pretrain_iterations != 0)
    throw UsageError(
        "targets.method=none requires pretrain.iterations=0");
  if (targets_method != "none" && pretrain_iterations < 1)
    throw UsageError("pretrain.iterations must be >= 1 with a codebook method");
  if (seedtrain_steps < 0 || pretrain_steps < 0 || finetune_steps < 0)
    throw UsageError("step counts must be >= 0");
  if (selftrain_rounds < 0)
    throw UsageError("selftrain.rounds must be >= 0");
  if (workers < 1) throw UsageError("workers must be >= 1");
}

std::vector<OptionDescriptor> option_descriptors() {
  PipelineOptions defaults;
  std::vector<OptionDescriptor> out;
  for (const OptionBinding& b : bindings())
    out.push_back({b.key, b.doc, b.get(defaults)});
  return out;
}

void apply_option(PipelineOptions* options, const std::string& key,
                  const std::string& value) {
  const OptionBinding* binding = find_binding(key);
  if (binding == nullptr) throw UsageError("unknown config key: " + key);
  binding->set(*options, value);
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void apply_options_text(PipelineOptions* options, const std::string& text,
                        const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw UsageError(origin + ":" + std::to_string(lineno) +
                       ": expected key = value");
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    apply_option(options, key, value);
  }
}

PipelineOptions load_options_file(const std::filesystem::path& path) {
  PipelineOptions options;
  apply_options_text(&options, read_file_text(path), path.string());
  return options;
}

void apply_override(PipelineOptions* options, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw UsageError("override must be key=value: " + assignment);
  apply_option(options, trim(assignment.substr(0, eq)),
               trim(assignment.substr(eq + 1)));
}

void apply_master_seed(PipelineOptions* options, uint64_t master_seed) {
  auto derive = [master_seed](const char* stage) {
    return mix_seed(master_seed, fnv1a64(std::string(stage)));
  };
  options->corpus_seed = derive("corpus");
  options->split_seed = derive("split");
  options->eval_seed = derive("eval");
  options->seedtrain_seed = derive("seedtrain");
  options->targets_seed = derive("targets");
  options->pretrain_seed = derive("pretrain");
  options->finetune_seed = derive("finetune");
  options->selftrain_seed = derive("selftrain");
}

std::string dump_options(const PipelineOptions& options, bool with_docs) {
  std::ostringstream os;
  for (const OptionBinding& b : bindings()) {
    if (with_docs) os << "# " << b.doc << "\n";
    os << b.key << " = " << b.get(options) << "\n";
    if (with_docs) os << "\n";
  }
  return os.str();
}

}  // namespace maskpred
