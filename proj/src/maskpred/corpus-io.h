// maskpred/corpus-io.h

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

#ifndef MASKPRED_CORPUS_IO_H_
#define MASKPRED_CORPUS_IO_H_

#include <filesystem>

#include "maskpred/corpus.h"

namespace maskpred {

// Corpus directory layout:
//   meta.json       format marker, version, feature_dim, inventory, spec_hash,
//                   role, utterance count
//   manifest.tsv    one row per utterance: id <tab> frames <tab> transcript
//                   (space-separated phoneme ids, or "-" when absent)
//   features.bin    concatenated T x D row-major little-endian float32 blocks
//   alignments.bin  optional; per utterance T little-endian uint16 phoneme ids
//
// Round trip is bit-exact: load_corpus(save_corpus(c)) == c.

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

// Header summary for `inspect`; reads meta.json and the manifest only.
std::string describe_corpus_dir(const std::filesystem::path& dir);

}  // namespace maskpred

#endif  // MASKPRED_CORPUS_IO_H_
