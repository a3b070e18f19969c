// maskpred/nn.h

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

#ifndef MASKPRED_NN_H_
#define MASKPRED_NN_H_

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "maskpred/common.h"

namespace maskpred {

using Mat = Eigen::MatrixXd;

// What the output projection means. A CTC head reserves index 0 for the
// blank symbol (phoneme p maps to logit p+1); a label head predicts target
// labels 0..V-1 directly.
enum class HeadKind { kCtc, kLabel };

std::string to_string(HeadKind kind);
HeadKind head_kind_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// Configuration.
// ---------------------------------------------------------------------------

struct EncoderConfig {
  int num_layers = 2;
  int input_dim = 8;
  int hidden_dim = 32;
  int num_heads = 4;
  int ffn_dim = 64;
  int downsample = 2;  // cumulative stride of the conv frontend
  int num_buckets = 32;
  int max_distance = 128;
  int vocab_size = 13;
  double dropout = 0.0;
  HeadKind head_kind = HeadKind::kLabel;

  void validate() const;
  int head_dim() const { return hidden_dim / num_heads; }
  // Encoder positions for a T-frame input.
  int output_frames(int num_input_frames) const {
    return num_input_frames / downsample;
  }
};

// ---------------------------------------------------------------------------
// Bucketed relative position bias (key-query offset -> bucket index).
// Half the buckets cover each sign of the offset; small offsets get exact
// buckets, larger ones share logarithmically widening buckets, and every
// |offset| >= max_distance lands in the sign's last bucket.
// ---------------------------------------------------------------------------

int relative_bucket(long offset, int num_buckets, int max_distance);

// ---------------------------------------------------------------------------
// Span masking.
// ---------------------------------------------------------------------------

struct MaskSpec {
  std::vector<int> masked;       // sorted, unique frame indices
  std::vector<int> span_starts;  // selected start positions
  int span_length = 0;
  double start_prob = 0.0;
};

// Each frame is independently a span start with probability start_prob;
// spans cover [start, start + span_length) clipped to the sequence and are
// merged where they overlap. Deterministic given seed.
MaskSpec sample_mask(int num_frames, double start_prob, int span_length,
                     uint64_t seed);

// ---------------------------------------------------------------------------
// Parameters. All tensors are double matrices (vectors are 1 x N); the
// relative-bias table is a single tensor used by every layer.
// ---------------------------------------------------------------------------

struct LayerParams {
  Mat ln1_gamma, ln1_beta;
  Mat wq, bq, wk, bk, wv, bv, wo, bo;
  Mat ln2_gamma, ln2_beta;
  Mat ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

struct Parameters {
  Mat conv1_w, conv1_b;  // (s*D) x H, 1 x H
  Mat conv2_w, conv2_b;  // H x H, 1 x H
  Mat mask_embed;        // 1 x H
  Mat rel_bias;          // num_heads x num_buckets, shared across layers
  std::vector<LayerParams> layers;
  Mat head_w, head_b;  // H x V, 1 x V

  // Visits every tensor in a fixed order with a stable name.
  void for_each(const std::function<void(const std::string&, Mat&)>& fn);
  void for_each(const std::function<void(const std::string&, const Mat&)>& fn)
      const;

  size_t num_scalars() const;
  bool all_finite() const;
  void set_zero();
};

// Seeded random init matching `config` shapes.
Parameters init_parameters(const EncoderConfig& config, uint64_t seed);
// Zero tensors matching `like`'s shapes; gradient accumulator.
Parameters zeros_like(const Parameters& like);

// True for tensors belonging to the convolutional frontend (frozen during
// fine-tuning).
bool is_frontend_tensor(const std::string& name);

// ---------------------------------------------------------------------------
// Forward / backward.
// ---------------------------------------------------------------------------

struct ForwardCache;  // defined in nn.cc; opaque to callers

struct ForwardResult {
  // layer_hidden[0] is the frontend output (after mask substitution when a
  // mask is given); layer_hidden[l] is the output of transformer block l.
  std::vector<Mat> layer_hidden;
  Mat logits;  // T' x V
};

// Dropout is active only when `dropout_seed` is non-null and
// config.dropout > 0 (training); evaluation passes nullptr.
ForwardResult encoder_forward(const EncoderConfig& config,
                              const Parameters& params, const Mat& features,
                              const MaskSpec* mask,
                              ForwardCache* cache = nullptr,
                              const uint64_t* dropout_seed = nullptr);

// Accumulates parameter gradients (+=) for the forward pass recorded in
// `cache`, given the loss gradient with respect to the logits.
void encoder_backward(const EncoderConfig& config, const Parameters& params,
                      const ForwardCache& cache, const Mat& dlogits,
                      Parameters* grads);

ForwardCache* new_forward_cache();
void free_forward_cache(ForwardCache* cache);

// RAII wrapper for a ForwardCache.
class CacheHandle {
 public:
  CacheHandle() : cache_(new_forward_cache()) {}
  ~CacheHandle() { free_forward_cache(cache_); }
  CacheHandle(const CacheHandle&) = delete;
  CacheHandle& operator=(const CacheHandle&) = delete;
  ForwardCache* get() { return cache_; }

 private:
  ForwardCache* cache_;
};

// ---------------------------------------------------------------------------
// Losses and row-wise softmax helpers.
// ---------------------------------------------------------------------------

Mat softmax_rows(const Mat& logits);
Mat log_softmax_rows(const Mat& logits);

// Chain rule through row-wise log-softmax: given dL/dlogp, returns dL/dlogits.
Mat dlogits_from_dlogprobs(const Mat& logits, const Mat& dlogprobs);

struct LossResult {
  double loss = 0.0;
  Mat dlogits;  // same shape as logits
};

// Mean cross-entropy over masked positions only; gradient rows are exactly
// zero at unmasked positions.
LossResult masked_prediction_loss(const Mat& logits,
                                  const std::vector<uint16_t>& targets,
                                  const MaskSpec& mask);

}  // namespace maskpred

#endif  // MASKPRED_NN_H_
