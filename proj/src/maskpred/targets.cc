// maskpred/targets.cc

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

#include <algorithm>
#include <cstring>
#include <map>
#include <sstream>

#include "maskpred/ctc.h"

namespace maskpred {

std::string to_string(TargetProvenance p) {
  switch (p) {
    case TargetProvenance::kRawKmeans: return "raw-kmeans";
    case TargetProvenance::kCtcKmeans: return "ctc-kmeans";
    case TargetProvenance::kLatentKmeans: return "latent-kmeans";
    case TargetProvenance::kPhonemeAlign: return "phoneme-align";
    case TargetProvenance::kModelPredict: return "model-predict";
    case TargetProvenance::kGroundTruth: return "ground-truth";
  }
  throw Error("unreachable");
}

TargetProvenance target_provenance_from_string(const std::string& s) {
  if (s == "raw-kmeans") return TargetProvenance::kRawKmeans;
  if (s == "ctc-kmeans") return TargetProvenance::kCtcKmeans;
  if (s == "latent-kmeans") return TargetProvenance::kLatentKmeans;
  if (s == "phoneme-align") return TargetProvenance::kPhonemeAlign;
  if (s == "model-predict") return TargetProvenance::kModelPredict;
  if (s == "ground-truth") return TargetProvenance::kGroundTruth;
  throw FormatError("unknown target provenance: " + s);
}

std::string to_string(BlankPolicy policy) {
  return policy == BlankPolicy::kNearestLabel ? "nearest-label"
                                              : "silence-label";
}

BlankPolicy blank_policy_from_string(const std::string& s) {
  if (s == "nearest-label") return BlankPolicy::kNearestLabel;
  if (s == "silence-label") return BlankPolicy::kSilenceLabel;
  throw FormatError("unknown blank policy: " + s);
}

void TargetSet::validate() const {
  if (ids.size() != labels.size())
    throw LengthMismatch("TargetSet: ids/labels size mismatch");
  for (const auto& seq : labels)
    for (uint16_t v : seq)
      if (v >= vocab_size)
        throw LengthMismatch("TargetSet: label out of vocab range");
}

bool TargetSet::operator==(const TargetSet& other) const {
  return vocab_size == other.vocab_size && provenance == other.provenance &&
         ids == other.ids && labels == other.labels;
}

int TargetSet::find(const std::string& id) const {
  for (size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return static_cast<int>(i);
  return -1;
}

void save_targets(const TargetSet& targets, const std::filesystem::path& dir) {
  targets.validate();
  std::filesystem::create_directories(dir);
  std::ostringstream tsv;
  tsv << "#maskpred-targets\tv1\tvocab=" << targets.vocab_size << '\n';
  std::string bin;
  for (size_t i = 0; i < targets.ids.size(); ++i) {
    tsv << targets.ids[i] << '\t' << targets.labels[i].size() << '\t'
        << to_string(targets.provenance) << '\n';
    size_t off = bin.size();
    bin.resize(off + 2 * targets.labels[i].size());
    std::memcpy(bin.data() + off, targets.labels[i].data(),
                2 * targets.labels[i].size());
  }
  write_file_text(dir / "targets.tsv", tsv.str());
  write_file_bytes(dir / "targets.bin", bin.data(), bin.size());
}

TargetSet load_targets(const std::filesystem::path& dir) {
  std::istringstream tsv(read_file_text(dir / "targets.tsv"));
  std::string header;
  if (!std::getline(tsv, header))
    throw FormatError("targets.tsv: missing header");
  std::istringstream hs(header);
  std::string magic, version, vocab_field;
  if (!std::getline(hs, magic, '\t') || magic != "#maskpred-targets")
    throw FormatError("targets.tsv: bad magic");
  if (!std::getline(hs, version, '\t') || version != "v1")
    throw FormatError("targets.tsv: unsupported version");
  if (!std::getline(hs, vocab_field) ||
      vocab_field.rfind("vocab=", 0) != 0)
    throw FormatError("targets.tsv: missing vocab field");

  TargetSet targets;
  try {
    targets.vocab_size = std::stoi(vocab_field.substr(6));
  } catch (const std::exception&) {
    throw FormatError("targets.tsv: bad vocab value");
  }

  std::vector<size_t> lengths;
  std::string line;
  bool have_provenance = false;
  while (std::getline(tsv, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id, len_field, prov_field;
    if (!std::getline(ls, id, '\t') || !std::getline(ls, len_field, '\t') ||
        !std::getline(ls, prov_field))
      throw FormatError("targets.tsv: bad row: " + line);
    TargetProvenance prov = target_provenance_from_string(prov_field);
    if (have_provenance && prov != targets.provenance)
      throw FormatError("targets.tsv: inconsistent provenance");
    targets.provenance = prov;
    have_provenance = true;
    targets.ids.push_back(std::move(id));
    try {
      lengths.push_back(std::stoul(len_field));
    } catch (const std::exception&) {
      throw FormatError("targets.tsv: bad length in row: " + line);
    }
  }

  std::vector<char> bin = read_file_bytes(dir / "targets.bin");
  size_t total = 0;
  for (size_t len : lengths) total += len;
  if (bin.size() != 2 * total)
    throw FormatError("targets.bin size does not match manifest lengths");
  size_t off = 0;
  for (size_t len : lengths) {
    std::vector<uint16_t> seq(len);
    std::memcpy(seq.data(), bin.data() + off, 2 * len);
    off += 2 * len;
    targets.labels.push_back(std::move(seq));
  }
  targets.validate();
  return targets;
}

std::string describe_targets_dir(const std::filesystem::path& dir) {
  std::istringstream tsv(read_file_text(dir / "targets.tsv"));
  std::string header;
  std::getline(tsv, header);
  size_t rows = 0, frames = 0;
  std::string line, provenance = "?";
  while (std::getline(tsv, line)) {
    if (line.empty()) continue;
    ++rows;
    std::istringstream ls(line);
    std::string id, len_field;
    std::getline(ls, id, '\t');
    std::getline(ls, len_field, '\t');
    std::getline(ls, provenance);
    frames += std::stoul(len_field);
  }
  std::ostringstream os;
  os << "targets " << dir.string() << "\n"
     << "  header:      " << header << "\n"
     << "  utterances:  " << rows << "\n"
     << "  frames:      " << frames << "\n"
     << "  provenance:  " << provenance << "\n";
  return os.str();
}

std::vector<uint16_t> resolve_blanks(const std::vector<uint16_t>& frame_labels,
                                     BlankPolicy policy) {
  std::vector<uint16_t> out(frame_labels.size());
  if (policy == BlankPolicy::kSilenceLabel) {
    for (size_t t = 0; t < frame_labels.size(); ++t)
      out[t] = frame_labels[t] == kCtcBlank
                   ? kSilencePhoneme
                   : static_cast<uint16_t>(frame_labels[t] - 1);
    return out;
  }
  // Nearest preceding non-blank; leading blanks inherit the first label.
  // An all-blank sequence degenerates to silence.
  uint16_t first_label = kSilencePhoneme;
  for (uint16_t v : frame_labels)
    if (v != kCtcBlank) {
      first_label = static_cast<uint16_t>(v - 1);
      break;
    }
  uint16_t current = first_label;
  for (size_t t = 0; t < frame_labels.size(); ++t) {
    if (frame_labels[t] != kCtcBlank)
      current = static_cast<uint16_t>(frame_labels[t] - 1);
    out[t] = current;
  }
  return out;
}

TargetSet frame_targets_from_model(const EncoderModel& model,
                                   const Corpus& corpus, TargetMode mode,
                                   BlankPolicy policy, int workers,
                                   TargetGenStats* stats) {
  if (mode == TargetMode::kAlign && model.config.head_kind != HeadKind::kCtc)
    throw InvalidSpec("align mode requires a CTC head");
  if (corpus.feature_dim != model.config.input_dim)
    throw DimMismatch("corpus feature dim does not match model input dim");

  const size_t n = corpus.utterances.size();
  std::vector<std::vector<uint16_t>> results(n);
  std::vector<char> ok(n, 0);

  parallel_for(n, workers, [&](size_t i) {
    const Utterance& utt = corpus.utterances[i];
    if (utt.num_frames() < model.config.downsample) return;
    Mat features = utt.features.cast<double>();
    ForwardResult fwd =
        encoder_forward(model.config, model.params, features, nullptr);
    if (mode == TargetMode::kAlign) {
      if (!utt.transcript) return;
      std::vector<uint16_t> ctc_target;
      ctc_target.reserve(utt.transcript->size());
      for (uint16_t p : *utt.transcript)
        ctc_target.push_back(static_cast<uint16_t>(p + 1));
      Mat logp = log_softmax_rows(fwd.logits);
      std::vector<uint16_t> path;
      try {
        path = ctc_forced_align(logp, ctc_target);
      } catch (const InfeasibleTarget&) {
        return;  // skipped; counted below
      }
      results[i] = resolve_blanks(path, policy);
    } else {
      std::vector<uint16_t> argmax(fwd.logits.rows());
      for (Eigen::Index t = 0; t < fwd.logits.rows(); ++t) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < fwd.logits.cols(); ++k)
          if (fwd.logits(t, k) > fwd.logits(t, best)) best = k;
        argmax[t] = static_cast<uint16_t>(best);
      }
      results[i] = model.config.head_kind == HeadKind::kCtc
                       ? resolve_blanks(argmax, policy)
                       : argmax;
    }
    ok[i] = 1;
  });

  TargetSet targets;
  targets.provenance = mode == TargetMode::kAlign
                           ? TargetProvenance::kPhonemeAlign
                           : TargetProvenance::kModelPredict;
  targets.vocab_size = model.config.head_kind == HeadKind::kCtc
                           ? model.config.vocab_size - 1
                           : model.config.vocab_size;
  TargetGenStats local;
  for (size_t i = 0; i < n; ++i) {
    if (!ok[i]) {
      ++local.infeasible_skipped;
      continue;
    }
    targets.ids.push_back(corpus.utterances[i].id);
    targets.labels.push_back(std::move(results[i]));
    ++local.utterances_done;
  }
  if (stats != nullptr) *stats = local;
  return targets;
}

TargetSet ground_truth_targets(const Corpus& corpus, int downsample) {
  if (downsample < 1) throw InvalidSpec("downsample must be >= 1");
  TargetSet targets;
  targets.provenance = TargetProvenance::kGroundTruth;
  targets.vocab_size = corpus.phoneme_inventory_size;
  for (const Utterance& utt : corpus.utterances) {
    if (!utt.truth_alignment)
      throw InvalidSpec("ground-truth targets require truth alignments");
    int Tp = utt.num_frames() / downsample;
    if (Tp < 1) continue;
    std::vector<uint16_t> seq(Tp);
    for (int t = 0; t < Tp; ++t) {
      std::map<uint16_t, int> counts;
      for (int w = 0; w < downsample; ++w)
        counts[(*utt.truth_alignment)[t * downsample + w]]++;
      uint16_t best = 0;
      int best_count = -1;
      for (const auto& [label, count] : counts)
        if (count > best_count) {  // map order gives lowest id on ties
          best = label;
          best_count = count;
        }
      seq[t] = best;
    }
    targets.ids.push_back(utt.id);
    targets.labels.push_back(std::move(seq));
  }
  return targets;
}

}  // namespace maskpred
