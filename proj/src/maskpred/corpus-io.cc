// maskpred/corpus-io.cc

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

#include "maskpred/corpus-io.h"

#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace maskpred {

namespace {

constexpr const char* kCorpusFormat = "maskpred-corpus";
constexpr int kCorpusVersion = 1;

struct ManifestRow {
  std::string id;
  int frames = 0;
  std::optional<PhonemeSeq> transcript;
};

std::string format_transcript(const std::optional<PhonemeSeq>& transcript) {
  if (!transcript) return "-";
  std::ostringstream os;
  for (size_t i = 0; i < transcript->size(); ++i) {
    if (i) os << ' ';
    os << (*transcript)[i];
  }
  return os.str();
}

std::vector<ManifestRow> parse_manifest(const std::string& text) {
  std::vector<ManifestRow> rows;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    ManifestRow row;
    std::string transcript_field;
    if (!std::getline(ls, row.id, '\t'))
      throw FormatError("manifest.tsv: bad row at line " +
                        std::to_string(lineno));
    std::string frames_field;
    if (!std::getline(ls, frames_field, '\t') ||
        !std::getline(ls, transcript_field))
      throw FormatError("manifest.tsv: expected 3 fields at line " +
                        std::to_string(lineno));
    try {
      row.frames = std::stoi(frames_field);
    } catch (const std::exception&) {
      throw FormatError("manifest.tsv: bad frame count at line " +
                        std::to_string(lineno));
    }
    if (row.frames < 0)
      throw FormatError("manifest.tsv: negative frame count at line " +
                        std::to_string(lineno));
    if (transcript_field != "-") {
      PhonemeSeq seq;
      std::istringstream ts(transcript_field);
      long v;
      while (ts >> v) {
        if (v < 0 || v > 0xffff)
          throw FormatError("manifest.tsv: phoneme id out of range");
        seq.push_back(static_cast<uint16_t>(v));
      }
      row.transcript = std::move(seq);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  size_t with_alignment = 0;
  for (const Utterance& u : corpus.utterances)
    if (u.truth_alignment) ++with_alignment;
  if (with_alignment != 0 && with_alignment != corpus.utterances.size())
    throw IoError("corpus has alignments for only some utterances");
  bool have_alignments = with_alignment == corpus.utterances.size() &&
                         !corpus.utterances.empty();

  nlohmann::json meta;
  meta["format"] = kCorpusFormat;
  meta["version"] = kCorpusVersion;
  meta["feature_dim"] = corpus.feature_dim;
  meta["inventory_size"] = corpus.phoneme_inventory_size;
  meta["spec_hash"] = corpus.spec_hash;
  meta["role"] = to_string(corpus.role);
  meta["num_utterances"] = corpus.utterances.size();
  meta["has_alignments"] = have_alignments;
  write_file_text(dir / "meta.json", meta.dump(2) + "\n");

  std::ostringstream manifest;
  for (const Utterance& u : corpus.utterances)
    manifest << u.id << '\t' << u.num_frames() << '\t'
             << format_transcript(u.transcript) << '\n';
  write_file_text(dir / "manifest.tsv", manifest.str());

  {
    std::ofstream out(dir / "features.bin", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write features.bin");
    for (const Utterance& u : corpus.utterances)
      out.write(reinterpret_cast<const char*>(u.features.data()),
                static_cast<std::streamsize>(sizeof(float) * u.features.size()));
    if (!out) throw IoError("write failed: features.bin");
  }

  if (have_alignments) {
    std::ofstream out(dir / "alignments.bin", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write alignments.bin");
    for (const Utterance& u : corpus.utterances)
      out.write(reinterpret_cast<const char*>(u.truth_alignment->data()),
                static_cast<std::streamsize>(sizeof(uint16_t) *
                                             u.truth_alignment->size()));
    if (!out) throw IoError("write failed: alignments.bin");
  } else {
    std::filesystem::remove(dir / "alignments.bin");
  }
}

Corpus load_corpus(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::exists(dir / "meta.json"))
    throw IoError("not a corpus directory (missing meta.json): " + dir.string());

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file_text(dir / "meta.json"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("meta.json: ") + e.what());
  }
  if (!meta.contains("format") || meta["format"] != kCorpusFormat)
    throw FormatError("meta.json: wrong format marker");
  if (!meta.contains("version") || meta["version"].get<int>() != kCorpusVersion)
    throw FormatError("meta.json: unsupported version");

  Corpus corpus;
  corpus.feature_dim = meta.at("feature_dim").get<int>();
  corpus.phoneme_inventory_size = meta.at("inventory_size").get<int>();
  corpus.spec_hash = meta.at("spec_hash").get<std::string>();
  corpus.role = corpus_role_from_string(meta.at("role").get<std::string>());
  size_t expect_count = meta.at("num_utterances").get<size_t>();
  bool have_alignments = meta.at("has_alignments").get<bool>();
  if (corpus.feature_dim < 1) throw FormatError("meta.json: bad feature_dim");

  std::vector<ManifestRow> rows =
      parse_manifest(read_file_text(dir / "manifest.tsv"));
  if (rows.size() != expect_count)
    throw FormatError("manifest.tsv: row count does not match meta.json");
  std::set<std::string> ids;
  size_t total_frames = 0;
  for (const ManifestRow& row : rows) {
    if (!ids.insert(row.id).second)
      throw FormatError("manifest.tsv: duplicate id " + row.id);
    total_frames += static_cast<size_t>(row.frames);
  }

  std::vector<char> feats = read_file_bytes(dir / "features.bin");
  if (feats.size() !=
      total_frames * static_cast<size_t>(corpus.feature_dim) * sizeof(float))
    throw FormatError(
        "features.bin size does not match manifest frame counts");

  std::vector<char> aligns;
  if (have_alignments) {
    aligns = read_file_bytes(dir / "alignments.bin");
    if (aligns.size() != total_frames * sizeof(uint16_t))
      throw FormatError(
          "alignments.bin size does not match manifest frame counts");
  }

  size_t feat_offset = 0, align_offset = 0;
  corpus.utterances.reserve(rows.size());
  for (ManifestRow& row : rows) {
    Utterance utt;
    utt.id = std::move(row.id);
    utt.features.resize(row.frames, corpus.feature_dim);
    size_t nbytes = sizeof(float) * static_cast<size_t>(utt.features.size());
    std::memcpy(utt.features.data(), feats.data() + feat_offset, nbytes);
    feat_offset += nbytes;
    utt.transcript = std::move(row.transcript);
    if (have_alignments) {
      PhonemeSeq alignment(row.frames);
      std::memcpy(alignment.data(), aligns.data() + align_offset,
                  sizeof(uint16_t) * alignment.size());
      align_offset += sizeof(uint16_t) * alignment.size();
      utt.truth_alignment = std::move(alignment);
    }
    corpus.utterances.push_back(std::move(utt));
  }
  if (corpus.role == CorpusRole::kLabeled)
    for (const Utterance& u : corpus.utterances)
      if (!u.transcript)
        throw FormatError("labeled corpus has utterance without transcript: " +
                          u.id);
  return corpus;
}

std::string describe_corpus_dir(const std::filesystem::path& dir) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file_text(dir / "meta.json"));
  } catch (const std::exception& e) {
    throw FormatError(std::string("meta.json: ") + e.what());
  }
  std::ostringstream os;
  os << "corpus " << dir.string() << "\n"
     << "  role:           " << meta.value("role", "?") << "\n"
     << "  utterances:     " << meta.value("num_utterances", size_t{0}) << "\n"
     << "  feature_dim:    " << meta.value("feature_dim", 0) << "\n"
     << "  inventory_size: " << meta.value("inventory_size", 0) << "\n"
     << "  spec_hash:      " << meta.value("spec_hash", std::string("?")) << "\n"
     << "  alignments:     " << (meta.value("has_alignments", false) ? "yes" : "no")
     << "\n";
  return os.str();
}

}  // namespace maskpred
