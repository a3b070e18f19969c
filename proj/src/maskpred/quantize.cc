// maskpred/quantize.cc

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

#include "maskpred/quantize.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace maskpred {

namespace {

double sq_dist(const Mat& a, Eigen::Index ra, const Mat& b, Eigen::Index rb) {
  return (a.row(ra) - b.row(rb)).squaredNorm();
}

// Nearest centroid, ties toward the lowest index.
int nearest(const Mat& centroids, const Mat& points, Eigen::Index row,
            double* dist_out = nullptr) {
  int best = 0;
  double best_dist = sq_dist(points, row, centroids, 0);
  for (Eigen::Index c = 1; c < centroids.rows(); ++c) {
    double d = sq_dist(points, row, centroids, c);
    if (d < best_dist) {
      best_dist = d;
      best = static_cast<int>(c);
    }
  }
  if (dist_out != nullptr) *dist_out = best_dist;
  return best;
}

Mat kmeans_pp_init(const Mat& points, int k, Rng* rng) {
  const Eigen::Index n = points.rows();
  Mat centroids(k, points.cols());
  centroids.row(0) = points.row(rng->uniform_int(n));
  Eigen::VectorXd dist2(n);
  for (Eigen::Index i = 0; i < n; ++i)
    dist2[i] = sq_dist(points, i, centroids, 0);
  for (int c = 1; c < k; ++c) {
    double total = dist2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double r = rng->uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    } else {
      // All remaining mass is zero (duplicate points); any choice works.
      pick = rng->uniform_int(n);
    }
    centroids.row(c) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i)
      dist2[i] = std::min(dist2[i], sq_dist(points, i, centroids, c));
  }
  return centroids;
}

}  // namespace

Codebook kmeans_fit(const Mat& features, int k, uint64_t seed, int max_iters,
                    double rel_tol) {
  const Eigen::Index n = features.rows();
  if (k < 1) throw TooFewPoints("kmeans_fit: K must be >= 1");
  if (n < k)
    throw TooFewPoints("kmeans_fit: need at least K points, got " +
                       std::to_string(n));

  Rng rng(seed);
  Codebook codebook;
  codebook.seed = seed;
  codebook.centroids = kmeans_pp_init(features, k, &rng);
  Mat& centroids = codebook.centroids;

  std::vector<int> assign(n, 0);
  std::vector<double> dist(n, 0.0);
  double prev = -1.0;
  for (int iter = 0; iter < max_iters; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i)
      assign[i] = nearest(centroids, features, i, &dist[i]);

    // Re-seed empty clusters from the worst-served point.
    std::vector<int> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) counts[assign[i]]++;
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      Eigen::Index worst = 0;
      for (Eigen::Index i = 1; i < n; ++i)
        if (dist[i] > dist[worst]) worst = i;
      centroids.row(c) = features.row(worst);
      counts[assign[worst]]--;
      assign[worst] = c;
      counts[c] = 1;
      dist[worst] = 0.0;
    }

    double distortion = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) distortion += dist[i];
    codebook.distortion_history.push_back(distortion);

    centroids.setZero();
    for (Eigen::Index i = 0; i < n; ++i) centroids.row(assign[i]) += features.row(i);
    for (int c = 0; c < k; ++c) centroids.row(c) /= static_cast<double>(counts[c]);

    if (prev >= 0.0) {
      double improvement = prev - distortion;
      if (distortion == 0.0 || improvement <= rel_tol * prev) break;
    }
    prev = distortion;
  }
  return codebook;
}

std::vector<uint16_t> kmeans_assign(const Codebook& codebook,
                                    const Mat& features) {
  if (features.cols() != codebook.centroids.cols())
    throw DimMismatch("kmeans_assign: feature dim " +
                      std::to_string(features.cols()) + " != codebook dim " +
                      std::to_string(codebook.centroids.cols()));
  std::vector<uint16_t> labels(features.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    labels[i] = static_cast<uint16_t>(nearest(codebook.centroids, features, i));
  return labels;
}

double kmeans_distortion(const Codebook& codebook, const Mat& features) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    double d;
    nearest(codebook.centroids, features, i, &d);
    total += d;
  }
  return total;
}

void save_codebook(const Codebook& codebook,
                   const std::filesystem::path& path) {
  std::ostringstream header;
  header << "maskpred-codebook v1\n"
         << "K=" << codebook.k() << "\n"
         << "F=" << codebook.dim() << "\n"
         << "source=" << codebook.source << "\n"
         << "seed=" << codebook.seed << "\n\n";
  std::string buf = header.str();
  for (Eigen::Index r = 0; r < codebook.centroids.rows(); ++r)
    for (Eigen::Index c = 0; c < codebook.centroids.cols(); ++c) {
      float f = static_cast<float>(codebook.centroids(r, c));
      char b[4];
      std::memcpy(b, &f, 4);
      buf.append(b, 4);
    }
  write_file_bytes(path, buf.data(), buf.size());
}

Codebook load_codebook(const std::filesystem::path& path) {
  std::vector<char> bytes = read_file_bytes(path);
  // Header is text up to the first blank line.
  std::string_view view(bytes.data(), bytes.size());
  size_t header_end = view.find("\n\n");
  if (header_end == std::string_view::npos)
    throw FormatError("codebook: missing header terminator");
  std::istringstream header(std::string(view.substr(0, header_end + 1)));
  std::string line;
  if (!std::getline(header, line) || line != "maskpred-codebook v1")
    throw FormatError("codebook: bad magic line");

  Codebook codebook;
  int k = -1, f = -1;
  while (std::getline(header, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("codebook: bad header line: " + line);
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    try {
      if (key == "K") k = std::stoi(value);
      else if (key == "F") f = std::stoi(value);
      else if (key == "source") codebook.source = value;
      else if (key == "seed") codebook.seed = std::stoull(value);
      else throw FormatError("codebook: unknown header key: " + key);
    } catch (const std::invalid_argument&) {
      throw FormatError("codebook: bad header value for " + key);
    }
  }
  if (k < 1 || f < 1) throw FormatError("codebook: missing K or F");

  size_t data_offset = header_end + 2;
  size_t expect = static_cast<size_t>(k) * f * sizeof(float);
  if (bytes.size() - data_offset != expect)
    throw FormatError("codebook: centroid data size mismatch");
  codebook.centroids.resize(k, f);
  size_t pos = data_offset;
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < f; ++c) {
      float v;
      std::memcpy(&v, bytes.data() + pos, 4);
      pos += 4;
      codebook.centroids(r, c) = static_cast<double>(v);
    }
  return codebook;
}

std::string describe_codebook(const std::filesystem::path& path) {
  Codebook codebook = load_codebook(path);
  std::ostringstream os;
  os << "codebook " << path.string() << "\n"
     << "  K:      " << codebook.k() << "\n"
     << "  F:      " << codebook.dim() << "\n"
     << "  source: " << codebook.source << "\n"
     << "  seed:   " << codebook.seed << "\n";
  return os.str();
}

Mat extract_layer_features(const EncoderModel& model, const Mat& features,
                           int layer_index) {
  if (layer_index < 0 || layer_index > model.config.num_layers)
    throw LayerOutOfRange("layer index " + std::to_string(layer_index) +
                          " not in [0, " +
                          std::to_string(model.config.num_layers) + "]");
  ForwardResult fwd =
      encoder_forward(model.config, model.params, features, nullptr);
  return fwd.layer_hidden[layer_index];
}

Mat pool_raw_features(const FeatureMatrix& features, int downsample) {
  if (downsample < 1) throw InvalidSpec("downsample must be >= 1");
  const int Tp = static_cast<int>(features.rows()) / downsample;
  const int D = static_cast<int>(features.cols());
  Mat pooled(Tp, D);
  for (int t = 0; t < Tp; ++t) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(D);
    for (int w = 0; w < downsample; ++w)
      acc += features.row(t * downsample + w).cast<double>();
    pooled.row(t) = acc / static_cast<double>(downsample);
  }
  return pooled;
}

Mat stack_features(const std::vector<Mat>& per_utterance, int subsample) {
  if (subsample < 1) throw InvalidSpec("subsample must be >= 1");
  Eigen::Index total = 0, dim = 0;
  for (const Mat& m : per_utterance) {
    total += (m.rows() + subsample - 1) / subsample;
    if (m.rows() > 0) dim = m.cols();
  }
  Mat out(total, dim);
  Eigen::Index row = 0;
  for (const Mat& m : per_utterance)
    for (Eigen::Index t = 0; t < m.rows(); t += subsample)
      out.row(row++) = m.row(t);
  return out;
}

}  // namespace maskpred
