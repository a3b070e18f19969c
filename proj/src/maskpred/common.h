// maskpred/common.h

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

#ifndef MASKPRED_COMMON_H_
#define MASKPRED_COMMON_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace maskpred {

// ---------------------------------------------------------------------------
// Errors. One exception type per failure class so call sites and tests can
// catch exactly what they expect.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define MASKPRED_DEFINE_ERROR(NAME)                          \
  struct NAME : Error {                                      \
    explicit NAME(const std::string& msg) : Error(msg) {}    \
  }

MASKPRED_DEFINE_ERROR(InvalidSpec);
MASKPRED_DEFINE_ERROR(InvalidFraction);
MASKPRED_DEFINE_ERROR(IoError);
MASKPRED_DEFINE_ERROR(FormatError);
MASKPRED_DEFINE_ERROR(ShapeMismatch);
MASKPRED_DEFINE_ERROR(EmptyMask);
MASKPRED_DEFINE_ERROR(NonFiniteGradient);
MASKPRED_DEFINE_ERROR(InfeasibleTarget);
MASKPRED_DEFINE_ERROR(LayerOutOfRange);
MASKPRED_DEFINE_ERROR(TooFewPoints);
MASKPRED_DEFINE_ERROR(DimMismatch);
MASKPRED_DEFINE_ERROR(LengthMismatch);
MASKPRED_DEFINE_ERROR(DivergedTraining);
MASKPRED_DEFINE_ERROR(UsageError);

#undef MASKPRED_DEFINE_ERROR

// StageFailed wraps any error with the pipeline stage it occurred in.
struct StageFailed : Error {
  StageFailed(const std::string& stage, const std::string& cause)
      : Error("stage '" + stage + "' failed: " + cause), stage_name(stage) {}
  std::string stage_name;
};

// ---------------------------------------------------------------------------
// Deterministic random number generation. All sampling goes through Rng so
// results are bit-reproducible across runs and independent of the standard
// library's distribution implementations.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, n), n > 0. Rejection sampling, no modulo bias.
  uint64_t uniform_int(uint64_t n);

  // Uniform real in [0, 1) with 53 random bits.
  double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller.
  double normal();

  // Poisson with small mean (inversion by uniform products).
  int poisson(double mean);

  // Bernoulli with probability p.
  bool bernoulli(double p) { return uniform() < p; }

  // Fisher-Yates shuffle of indices [0, n).
  std::vector<size_t> permutation(size_t n);

 private:
  std::mt19937_64 engine_;
};

// splitmix64; used for deriving per-stage seeds from a master seed.
uint64_t mix_seed(uint64_t seed, uint64_t salt);

// FNV-1a 64-bit hash over bytes / strings; stable across platforms.
uint64_t fnv1a64(const void* data, size_t len);
uint64_t fnv1a64(const std::string& s);
std::string hash_hex(uint64_t h);

// Hash of an entire file's contents, as a hex string.
std::string hash_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Numerics helpers.
// ---------------------------------------------------------------------------

constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without overflow; handles -inf.
double log_add(double a, double b);

// ---------------------------------------------------------------------------
// Small file helpers.
// ---------------------------------------------------------------------------

std::vector<char> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const void* data,
                      size_t len);
std::string read_file_text(const std::filesystem::path& path);
void write_file_text(const std::filesystem::path& path,
                     const std::string& text);

// Creates dir (parents included). With force=false, refuses to reuse a
// directory that already contains files.
void prepare_output_dir(const std::filesystem::path& dir, bool force);

// ---------------------------------------------------------------------------
// parallel_for: runs fn(i) for i in [0, n) on `workers` threads. Work is
// pre-partitioned into contiguous chunks so any per-index output slots are
// written exactly once; callers needing determinism must reduce results in
// index order afterwards.
// ---------------------------------------------------------------------------

void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn);

}  // namespace maskpred

#endif  // MASKPRED_COMMON_H_
