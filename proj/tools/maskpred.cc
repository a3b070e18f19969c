// tools/maskpred.cc

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

#include <cstdlib>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "maskpred/corpus-io.h"
#include "maskpred/ctc.h"
#include "maskpred/pipeline.h"

namespace {

using namespace maskpred;
namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  uint64_t master_seed = 0;
  bool have_master_seed = false;
  std::string out;
  bool force = false;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonArgs* args, bool with_out = true) {
  cmd->add_option("--config", args->config_path, "config file (key = value)");
  cmd->add_option("--set", args->overrides, "override: key=value")
      ->take_all();
  cmd->add_option("--seed", args->master_seed,
                  "master seed; rederives every stage seed")
      ->each([args](const std::string&) { args->have_master_seed = true; });
  if (with_out) {
    cmd->add_option("--out", args->out, "output path");
    cmd->add_flag("--force", args->force, "overwrite existing outputs");
  }
  cmd->add_option("--workers", args->workers, "worker threads");
}

PipelineOptions resolve_options(const CommonArgs& args) {
  PipelineOptions options;
  if (!args.config_path.empty())
    options = load_options_file(args.config_path);
  for (const std::string& assignment : args.overrides)
    apply_override(&options, assignment);
  if (args.have_master_seed) apply_master_seed(&options, args.master_seed);
  if (args.workers > 0) options.workers = args.workers;
  options.validate();
  return options;
}

fs::path resolve_out(const CommonArgs& args, const std::string& default_name) {
  if (!args.out.empty()) return args.out;
  const char* root = std::getenv("MASKPRED_OUT");
  if (root != nullptr && *root != '\0') return fs::path(root) / default_name;
  throw UsageError("--out is required (or set MASKPRED_OUT)");
}

void ensure_file_writable(const fs::path& path, bool force) {
  if (fs::exists(path) && !force)
    throw UsageError("output exists (use --force): " + path.string());
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

// ---------------------------------------------------------------------------

int cmd_generate(const CommonArgs& args) {
  PipelineOptions options = resolve_options(args);
  fs::path out = resolve_out(args, "corpus");
  prepare_output_dir(out, args.force);
  Corpus corpus = generate_corpus(corpus_spec_from_options(options));
  save_corpus(corpus, out);
  std::cout << describe_corpus_dir(out);
  return 0;
}

int cmd_split(const CommonArgs& args, const std::string& in) {
  PipelineOptions options = resolve_options(args);
  fs::path out = resolve_out(args, "split");
  prepare_output_dir(out, args.force);
  Corpus corpus = load_corpus(in);
  auto parts =
      split_corpus(corpus, options.split_labeled_fraction, options.split_seed);
  save_corpus(parts.first, out / "labeled");
  save_corpus(parts.second, out / "unlabeled");
  std::cout << "labeled:   " << parts.first.utterances.size() << " utterances\n"
            << "unlabeled: " << parts.second.utterances.size()
            << " utterances\n";
  return 0;
}

int cmd_seed_train(const CommonArgs& args, const std::string& labeled_dir) {
  PipelineOptions options = resolve_options(args);
  fs::path out = resolve_out(args, "seed_model.ckpt");
  ensure_file_writable(out, args.force);
  Corpus labeled = load_corpus(labeled_dir);
  TrainLog log;
  EncoderModel model = train_seed_model(labeled, options, &log);
  save_checkpoint(model, out);
  std::cout << "initial_loss = " << log.first_loss() << "\n"
            << "final_loss   = " << log.final_loss() << "\n"
            << "checkpoint:    " << out.string() << " [" << hash_file(out)
            << "]\n";
  return 0;
}

int cmd_targets(const CommonArgs& args, const std::string& labeled_dir,
                const std::string& unlabeled_dir, const std::string& model_path,
                const std::string& truth_dir, const std::string& method_flag) {
  PipelineOptions options = resolve_options(args);
  if (!method_flag.empty()) options.targets_method = method_flag;
  options.validate();
  if (options.targets_method == "none")
    throw UsageError("targets: method 'none' produces nothing");
  fs::path out = resolve_out(args, "targets");
  prepare_output_dir(out, args.force);

  Corpus labeled = load_corpus(labeled_dir);
  Corpus unlabeled = load_corpus(unlabeled_dir);
  EncoderModel model;
  bool have_model = !model_path.empty();
  if (have_model) model = load_checkpoint(model_path);
  Corpus truth;
  bool have_truth = !truth_dir.empty();
  if (have_truth) truth = load_corpus(truth_dir);

  TargetBuildResult built = build_targets(
      have_model ? &model : nullptr, labeled, unlabeled,
      options.targets_method, options, have_truth ? &truth : nullptr);
  save_targets(built.targets, out);
  if (built.codebook)
    save_codebook(*built.codebook, out / "codebook.bin");
  std::cout << describe_targets_dir(out);
  if (built.stats.infeasible_skipped > 0)
    std::cout << "  infeasible_skipped: " << built.stats.infeasible_skipped
              << "\n";
  if (built.pseudo_transcript_per >= 0.0)
    std::cout << "  pseudo_transcript_per: " << built.pseudo_transcript_per
              << "\n";
  return 0;
}

int cmd_pretrain(const CommonArgs& args, const std::string& labeled_dir,
                 const std::string& unlabeled_dir,
                 const std::string& targets_dir) {
  PipelineOptions options = resolve_options(args);
  fs::path out = resolve_out(args, "pretrained.ckpt");
  ensure_file_writable(out, args.force);
  Corpus labeled = load_corpus(labeled_dir);
  Corpus unlabeled = load_corpus(unlabeled_dir);
  TargetSet targets = load_targets(targets_dir);
  TrainLog log;
  EncoderModel model = pretrain(targets, labeled, unlabeled, options,
                                options.pretrain_seed, &log);
  save_checkpoint(model, out);
  std::cout << "step0_loss = " << log.first_loss() << "\n"
            << "final_loss = " << log.final_loss() << "\n"
            << "checkpoint:  " << out.string() << " [" << hash_file(out)
            << "]\n";
  return 0;
}

int cmd_finetune(const CommonArgs& args, const std::string& model_path,
                 const std::string& labeled_dir,
                 const std::string& pseudo_dir) {
  PipelineOptions options = resolve_options(args);
  fs::path out = resolve_out(args, "finetuned.ckpt");
  ensure_file_writable(out, args.force);
  EncoderModel pretrained = load_checkpoint(model_path);
  Corpus train_corpus = load_corpus(labeled_dir);
  if (!pseudo_dir.empty()) {
    Corpus pseudo = load_corpus(pseudo_dir);
    train_corpus.utterances.insert(train_corpus.utterances.end(),
                                   pseudo.utterances.begin(),
                                   pseudo.utterances.end());
  }
  TrainLog log;
  EncoderModel model =
      finetune(pretrained, train_corpus, options, options.finetune_seed, &log);
  save_checkpoint(model, out);
  std::cout << "final_loss = " << log.final_loss() << "\n"
            << "checkpoint:  " << out.string() << " [" << hash_file(out)
            << "]\n";
  return 0;
}

int cmd_selftrain(const CommonArgs& args, const std::string& teacher_path,
                  const std::string& pretrained_path,
                  const std::string& labeled_dir,
                  const std::string& unlabeled_dir) {
  PipelineOptions options = resolve_options(args);
  fs::path out = resolve_out(args, "selftrained.ckpt");
  ensure_file_writable(out, args.force);
  EncoderModel teacher = load_checkpoint(teacher_path);
  EncoderModel pretrained = load_checkpoint(pretrained_path);
  Corpus labeled = load_corpus(labeled_dir);
  Corpus unlabeled = load_corpus(unlabeled_dir);
  EncoderModel student = self_train_round(teacher, pretrained, labeled,
                                          unlabeled, options,
                                          options.selftrain_seed);
  save_checkpoint(student, out);
  std::cout << "checkpoint: " << out.string() << " [" << hash_file(out)
            << "]\n";
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& model_path,
             const std::vector<std::string>& corpus_dirs) {
  PipelineOptions options = resolve_options(args);
  EncoderModel model = load_checkpoint(model_path);
  std::cout << std::left << std::setw(24) << "corpus" << std::right
            << std::setw(10) << "PER" << std::setw(8) << "sub" << std::setw(8)
            << "ins" << std::setw(8) << "del" << std::setw(10) << "ref_len"
            << "\n";
  for (const std::string& dir : corpus_dirs) {
    Corpus corpus = load_corpus(dir);
    ErrorRateBreakdown per = corpus_per(model, corpus, options.workers);
    std::cout << std::left << std::setw(24)
              << fs::path(dir).filename().string() << std::right
              << std::setw(10) << std::fixed << std::setprecision(4)
              << per.rate() << std::setw(8) << per.substitutions
              << std::setw(8) << per.insertions << std::setw(8)
              << per.deletions << std::setw(10) << per.reference_length
              << "\n";
  }
  return 0;
}

int cmd_pipeline(const CommonArgs& args) {
  PipelineOptions options = resolve_options(args);
  fs::path out = resolve_out(args, "pipeline");
  PipelineReport report = run_pipeline(options, out, args.force);
  std::cout << report.to_text();
  std::cout << "report: " << (out / "report.json").string() << "\n"
            << "report_hash: " << report.canonical_hash() << "\n";
  return 0;
}

int cmd_inspect(bool defaults, const std::vector<std::string>& paths) {
  if (defaults) {
    std::cout << dump_options(PipelineOptions{}, /*with_docs=*/true);
    return 0;
  }
  if (paths.empty()) throw UsageError("inspect: no paths given");
  for (const std::string& p : paths) {
    fs::path path(p);
    if (fs::is_directory(path)) {
      if (fs::exists(path / "meta.json"))
        std::cout << describe_corpus_dir(path);
      else if (fs::exists(path / "targets.tsv"))
        std::cout << describe_targets_dir(path);
      else
        throw UsageError("inspect: unrecognized directory: " + p);
      continue;
    }
    if (!fs::exists(path)) throw UsageError("inspect: no such path: " + p);
    std::vector<char> head = read_file_bytes(path);
    if (head.size() >= 8 && std::string(head.data(), 6) == "MPCKPT")
      std::cout << describe_checkpoint(path);
    else if (head.size() >= 17 &&
             std::string(head.data(), 17) == "maskpred-codebook")
      std::cout << describe_codebook(path);
    else
      throw UsageError("inspect: unrecognized file format: " + p);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"supervision-guided codebooks for masked-prediction speech "
               "pre-training, desk scale"};
  app.require_subcommand(1);

  CommonArgs generate_args;
  CLI::App* generate = app.add_subcommand("generate", "generate a corpus");
  add_common(generate, &generate_args);

  CommonArgs split_args;
  std::string split_in;
  CLI::App* split = app.add_subcommand("split", "split into labeled/unlabeled");
  split->add_option("--in", split_in, "input corpus dir")->required();
  add_common(split, &split_args);

  CommonArgs seed_args;
  std::string seed_labeled;
  CLI::App* seed_train =
      app.add_subcommand("seed-train", "train the supervised CTC seed model");
  seed_train->add_option("--labeled", seed_labeled, "labeled corpus dir")
      ->required();
  add_common(seed_train, &seed_args);

  CommonArgs targets_args;
  std::string targets_labeled, targets_unlabeled, targets_model, targets_truth,
      targets_method;
  CLI::App* targets =
      app.add_subcommand("targets", "build frame-level pre-training targets");
  targets->add_option("--labeled", targets_labeled, "labeled corpus dir")
      ->required();
  targets->add_option("--unlabeled", targets_unlabeled, "unlabeled corpus dir")
      ->required();
  targets->add_option("--model", targets_model, "model checkpoint");
  targets->add_option("--truth", targets_truth,
                      "corpus dir with truth alignments (ground-truth method, "
                      "pseudo-transcript scoring)");
  targets->add_option("--method", targets_method, "codebook method");
  add_common(targets, &targets_args);

  CommonArgs pretrain_args;
  std::string pre_labeled, pre_unlabeled, pre_targets;
  CLI::App* pretrain_cmd =
      app.add_subcommand("pretrain", "masked-prediction pre-training");
  pretrain_cmd->add_option("--labeled", pre_labeled, "labeled corpus dir")
      ->required();
  pretrain_cmd->add_option("--unlabeled", pre_unlabeled, "unlabeled corpus dir")
      ->required();
  pretrain_cmd->add_option("--targets", pre_targets, "targets dir")->required();
  add_common(pretrain_cmd, &pretrain_args);

  CommonArgs finetune_args;
  std::string ft_model, ft_labeled, ft_pseudo;
  CLI::App* finetune_cmd =
      app.add_subcommand("finetune", "CTC fine-tuning of a checkpoint");
  finetune_cmd->add_option("--model", ft_model, "pre-trained checkpoint")
      ->required();
  finetune_cmd->add_option("--labeled", ft_labeled, "labeled corpus dir")
      ->required();
  finetune_cmd->add_option("--pseudo", ft_pseudo,
                           "additional pseudo-labeled corpus dir");
  add_common(finetune_cmd, &finetune_args);

  CommonArgs selftrain_args;
  std::string st_teacher, st_pretrained, st_labeled, st_unlabeled;
  CLI::App* selftrain_cmd =
      app.add_subcommand("selftrain", "one self-training round");
  selftrain_cmd->add_option("--teacher", st_teacher, "teacher checkpoint")
      ->required();
  selftrain_cmd
      ->add_option("--pretrained", st_pretrained, "pre-trained checkpoint")
      ->required();
  selftrain_cmd->add_option("--labeled", st_labeled, "labeled corpus dir")
      ->required();
  selftrain_cmd->add_option("--unlabeled", st_unlabeled, "unlabeled corpus dir")
      ->required();
  add_common(selftrain_cmd, &selftrain_args);

  CommonArgs eval_args;
  std::string eval_model;
  std::vector<std::string> eval_corpora;
  CLI::App* eval_cmd = app.add_subcommand("eval", "greedy-decode PER tables");
  eval_cmd->add_option("--model", eval_model, "checkpoint")->required();
  eval_cmd->add_option("--corpus", eval_corpora, "corpus dir(s)")
      ->required()
      ->take_all();
  add_common(eval_cmd, &eval_args, /*with_out=*/false);

  CommonArgs pipeline_args;
  CLI::App* pipeline_cmd =
      app.add_subcommand("pipeline", "run the full pipeline");
  add_common(pipeline_cmd, &pipeline_args);

  bool inspect_defaults = false;
  std::vector<std::string> inspect_paths;
  CLI::App* inspect_cmd =
      app.add_subcommand("inspect", "print artifact headers");
  inspect_cmd->add_flag("--defaults", inspect_defaults,
                        "print all config keys with defaults and docs");
  inspect_cmd->add_option("paths", inspect_paths, "artifact paths");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(generate_args);
    if (split->parsed()) return cmd_split(split_args, split_in);
    if (seed_train->parsed()) return cmd_seed_train(seed_args, seed_labeled);
    if (targets->parsed())
      return cmd_targets(targets_args, targets_labeled, targets_unlabeled,
                         targets_model, targets_truth, targets_method);
    if (pretrain_cmd->parsed())
      return cmd_pretrain(pretrain_args, pre_labeled, pre_unlabeled,
                          pre_targets);
    if (finetune_cmd->parsed())
      return cmd_finetune(finetune_args, ft_model, ft_labeled, ft_pseudo);
    if (selftrain_cmd->parsed())
      return cmd_selftrain(selftrain_args, st_teacher, st_pretrained,
                           st_labeled, st_unlabeled);
    if (eval_cmd->parsed()) return cmd_eval(eval_args, eval_model, eval_corpora);
    if (pipeline_cmd->parsed()) return cmd_pipeline(pipeline_args);
    if (inspect_cmd->parsed())
      return cmd_inspect(inspect_defaults, inspect_paths);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const StageFailed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
