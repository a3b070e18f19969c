// maskpred/optim.h

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

#ifndef MASKPRED_OPTIM_H_
#define MASKPRED_OPTIM_H_

#include <string>

#include "maskpred/nn.h"

namespace maskpred {

enum class ScheduleKind { kLinearWarmupDecay, kTriStage };

std::string to_string(ScheduleKind kind);

// Learning-rate schedule. linear-warmup-decay ramps to peak_lr over the
// warmup fraction and decays linearly back to 0; tri-stage inserts a
// constant hold phase between warmup and decay.
struct Schedule {
  ScheduleKind kind = ScheduleKind::kLinearWarmupDecay;
  long total_steps = 0;
  double warmup_fraction = 0.08;
  double hold_fraction = 0.0;  // tri-stage only
  double peak_lr = 5e-4;

  void validate() const;
  long warmup_steps() const;
  long hold_steps() const;
  // lr applied at 0-based step; lr(0) = 0 when there is a warmup phase.
  double learning_rate(long step) const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// AdamW with decoupled weight decay. Deterministic; moments are stored per
// tensor in Parameters-shaped containers.
class AdamW {
 public:
  AdamW(const Parameters& like, const AdamConfig& config);

  // Applies one update. Throws NonFiniteGradient if grads contain NaN/inf.
  // freeze_frontend skips conv tensors entirely (no update, no decay).
  void step(Parameters* params, const Parameters& grads, double lr,
            bool freeze_frontend = false);

  long steps_taken() const { return t_; }

 private:
  AdamConfig config_;
  long t_ = 0;
  Parameters m_, v_;
};

// Convenience wrapper: lr from the schedule at `step` (0-based, must be
// < schedule.total_steps), then an AdamW update via `state`.
void optimizer_step(Parameters* params, const Parameters& grads,
                    const Schedule& schedule, long step, AdamW* state,
                    bool freeze_frontend = false);

}  // namespace maskpred

#endif  // MASKPRED_OPTIM_H_
