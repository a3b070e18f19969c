// maskpred/optim.cc

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

#include "maskpred/optim.h"

#include <cmath>

namespace maskpred {

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::kLinearWarmupDecay ? "linear-warmup-decay"
                                                  : "tri-stage";
}

void Schedule::validate() const {
  if (total_steps < 0) throw InvalidSpec("schedule: total_steps must be >= 0");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0) ||
      !(hold_fraction >= 0.0 && hold_fraction <= 1.0) ||
      warmup_fraction + hold_fraction > 1.0)
    throw InvalidSpec("schedule: fractions must be in [0,1], warmup+hold <= 1");
  if (peak_lr < 0.0) throw InvalidSpec("schedule: peak_lr must be >= 0");
}

long Schedule::warmup_steps() const {
  return std::lround(warmup_fraction * static_cast<double>(total_steps));
}

long Schedule::hold_steps() const {
  if (kind != ScheduleKind::kTriStage) return 0;
  return std::lround(hold_fraction * static_cast<double>(total_steps));
}

double Schedule::learning_rate(long step) const {
  validate();
  if (step < 0 || step >= total_steps)
    throw InvalidSpec("schedule: step out of range");
  long warmup = warmup_steps();
  long hold = hold_steps();
  if (step < warmup)
    return peak_lr * static_cast<double>(step) / static_cast<double>(warmup);
  if (step < warmup + hold) return peak_lr;
  long decay_steps = total_steps - warmup - hold;
  if (decay_steps <= 0) return peak_lr;
  return peak_lr * static_cast<double>(total_steps - step) /
         static_cast<double>(decay_steps);
}

AdamW::AdamW(const Parameters& like, const AdamConfig& config)
    : config_(config), m_(zeros_like(like)), v_(zeros_like(like)) {}

void AdamW::step(Parameters* params, const Parameters& grads, double lr,
                 bool freeze_frontend) {
  if (!grads.all_finite())
    throw NonFiniteGradient("optimizer step received non-finite gradients");
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));

  // Walk the three containers in lockstep; for_each order is fixed.
  std::vector<Mat*> pm, gm, mm, vm;
  std::vector<std::string> names;
  params->for_each([&](const std::string& name, Mat& t) {
    pm.push_back(&t);
    names.push_back(name);
  });
  const_cast<Parameters&>(grads).for_each(
      [&](const std::string&, Mat& t) { gm.push_back(&t); });
  m_.for_each([&](const std::string&, Mat& t) { mm.push_back(&t); });
  v_.for_each([&](const std::string&, Mat& t) { vm.push_back(&t); });

  for (size_t i = 0; i < pm.size(); ++i) {
    if (freeze_frontend && is_frontend_tensor(names[i])) continue;
    Mat& p = *pm[i];
    const Mat& g = *gm[i];
    Mat& m = *mm[i];
    Mat& v = *vm[i];
    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v = (config_.beta2 * v.array() +
         (1.0 - config_.beta2) * g.array().square())
            .matrix();
    // Decoupled weight decay: applied directly to the parameter.
    p = (p.array() -
         lr * ((m.array() / bc1) / ((v.array() / bc2).sqrt() + config_.eps) +
               config_.weight_decay * p.array()))
            .matrix();
  }
}

void optimizer_step(Parameters* params, const Parameters& grads,
                    const Schedule& schedule, long step, AdamW* state,
                    bool freeze_frontend) {
  double lr = schedule.learning_rate(step);
  state->step(params, grads, lr, freeze_frontend);
}

}  // namespace maskpred
