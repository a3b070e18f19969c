// maskpred/checkpoint.h

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

#ifndef MASKPRED_CHECKPOINT_H_
#define MASKPRED_CHECKPOINT_H_

#include <filesystem>
#include <string>

#include "maskpred/nn.h"

namespace maskpred {

struct EncoderModel {
  EncoderConfig config;
  Parameters params;
};

EncoderModel make_model(const EncoderConfig& config, uint64_t seed);

// Versioned binary checkpoint: magic + config text block + named tensors,
// each float32 little-endian. Values are stored in float32, so a model that
// has been through save/load once round-trips bit-exactly thereafter.
void save_checkpoint(const EncoderModel& model,
                     const std::filesystem::path& path);
EncoderModel load_checkpoint(const std::filesystem::path& path);

std::string encoder_config_to_text(const EncoderConfig& config);
EncoderConfig encoder_config_from_text(const std::string& text);

// Hash of the frontend conv tensors in checkpoint encoding; used to verify
// the frontend is untouched by fine-tuning.
std::string frontend_hash(const EncoderModel& model);

// Header summary for `inspect` (config block only, no tensor data).
std::string describe_checkpoint(const std::filesystem::path& path);

}  // namespace maskpred

#endif  // MASKPRED_CHECKPOINT_H_
