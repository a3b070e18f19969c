// maskpred/quantize.h

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

#ifndef MASKPRED_QUANTIZE_H_
#define MASKPRED_QUANTIZE_H_

#include <filesystem>
#include <string>
#include <vector>

#include "maskpred/checkpoint.h"
#include "maskpred/corpus.h"

namespace maskpred {

struct Codebook {
  Mat centroids;  // K x F
  std::string source;
  uint64_t seed = 0;
  std::vector<double> distortion_history;  // non-increasing

  int k() const { return static_cast<int>(centroids.rows()); }
  int dim() const { return static_cast<int>(centroids.cols()); }
};

// k-means++ init then Lloyd iterations until the relative distortion
// improvement drops below rel_tol or max_iters is reached. Empty clusters are
// re-seeded to the point currently farthest from its assigned centroid.
// Deterministic given seed. Throws TooFewPoints when N < K.
Codebook kmeans_fit(const Mat& features, int k, uint64_t seed,
                    int max_iters = 50, double rel_tol = 1e-4);

// Argmin squared Euclidean distance; ties to the lowest centroid index.
std::vector<uint16_t> kmeans_assign(const Codebook& codebook,
                                    const Mat& features);

// Sum of squared distances of each row to its assigned centroid.
double kmeans_distortion(const Codebook& codebook, const Mat& features);

// Text header (K, F, source, seed) followed by float32 centroid rows.
void save_codebook(const Codebook& codebook,
                   const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);
std::string describe_codebook(const std::filesystem::path& path);

// Hidden states of one layer from an unmasked forward pass;
// layer_index 0 is the frontend output, num_layers is the final block.
Mat extract_layer_features(const EncoderModel& model, const Mat& features,
                           int layer_index);

// Raw features mean-pooled to the encoder frame rate; the feature space used
// for clustering without a model.
Mat pool_raw_features(const FeatureMatrix& features, int downsample);

// Stacks per-utterance feature matrices, keeping every `subsample`-th frame.
Mat stack_features(const std::vector<Mat>& per_utterance, int subsample);

}  // namespace maskpred

#endif  // MASKPRED_QUANTIZE_H_
