// tests/kmeans-test.cc

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

#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"

using namespace maskpred;
namespace fs = std::filesystem;

namespace {

Mat random_points(int n, int dim, uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Mat m(n, dim);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < dim; ++c) m(r, c) = scale * rng.normal();
  return m;
}

// Exhaustive k-means optimum: every assignment of n points to k groups,
// centroids at the group means.
double exhaustive_optimum(const Mat& points, int k) {
  const int n = static_cast<int>(points.rows());
  long total = 1;
  for (int i = 0; i < n; ++i) total *= k;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> assign(n);
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (int i = 0; i < n; ++i) {
      assign[i] = static_cast<int>(c % k);
      c /= k;
    }
    Mat sums = Mat::Zero(k, points.cols());
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(assign[i]) += points.row(i);
      counts[assign[i]]++;
    }
    double distortion = 0.0;
    for (int i = 0; i < n; ++i) {
      if (counts[assign[i]] == 0) continue;
      Eigen::RowVectorXd mean =
          sums.row(assign[i]) / static_cast<double>(counts[assign[i]]);
      distortion += (points.row(i) - mean).squaredNorm();
    }
    best = std::min(best, distortion);
  }
  return best;
}

}  // namespace

TEST_CASE("kmeans_fit: K equal to distinct point count reaches distortion 0") {
  Mat points(5, 2);
  points << 0, 0, 1, 0, 0, 1, 3, 3, -2, 1;
  Codebook cb = kmeans_fit(points, 5, 7);
  CHECK(cb.distortion_history.back() == 0.0);
  std::vector<uint16_t> labels = kmeans_assign(cb, points);
  // All five points sit exactly on distinct centroids.
  std::set<uint16_t> seen(labels.begin(), labels.end());
  CHECK(seen.size() == 5);
}

TEST_CASE("kmeans_fit: K=1 closed form") {
  Mat points = random_points(40, 3, 11);
  Codebook cb = kmeans_fit(points, 1, 3);
  Eigen::RowVectorXd mean = points.colwise().mean();
  for (int c = 0; c < 3; ++c)
    CHECK(cb.centroids(0, c) == doctest::Approx(mean[c]).epsilon(1e-12));
  double variance = 0.0;
  for (int i = 0; i < points.rows(); ++i)
    variance += (points.row(i) - mean).squaredNorm();
  CHECK(kmeans_distortion(cb, points) ==
        doctest::Approx(variance).epsilon(1e-12));
}

TEST_CASE("kmeans_fit: Lloyd distortion vs exhaustive optimum, gap bounded") {
  // 12 planar points in three tight, well-separated groups; Lloyd's should
  // land on the global optimum from any of these seeds.
  Mat points(12, 2);
  points << 0.0, 0.1, 0.1, -0.1, -0.1, 0.0, 0.05, 0.05,  //
      10.0, 10.1, 10.1, 9.9, 9.9, 10.0, 10.05, 9.95,     //
      -10.0, 5.1, -10.1, 4.9, -9.9, 5.0, -10.05, 5.05;
  double optimum = exhaustive_optimum(points, 3);
  CHECK(optimum > 0.0);
  for (uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    Codebook cb = kmeans_fit(points, 3, seed);
    double distortion = cb.distortion_history.back();
    CHECK(distortion >= optimum - 1e-9);
    // Frozen per-seed gap bound: these seeds all reach the optimum.
    CHECK(distortion - optimum <= 1e-9);
  }
}

TEST_CASE("kmeans_fit: distortion history is non-increasing") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Mat points = random_points(60, 4, seed + 100);
    Codebook cb = kmeans_fit(points, 6, seed, 50, 0.0);
    REQUIRE(!cb.distortion_history.empty());
    for (size_t i = 1; i < cb.distortion_history.size(); ++i)
      CHECK(cb.distortion_history[i] <= cb.distortion_history[i - 1]);
  }
}

TEST_CASE("kmeans_fit: deterministic given seed, errors on bad input") {
  Mat points = random_points(30, 3, 5);
  Codebook a = kmeans_fit(points, 4, 99);
  Codebook b = kmeans_fit(points, 4, 99);
  CHECK((a.centroids.array() == b.centroids.array()).all());
  CHECK(a.distortion_history == b.distortion_history);

  CHECK_THROWS_AS(kmeans_fit(points, 31, 1), TooFewPoints);
  CHECK_THROWS_AS(kmeans_fit(points, 0, 1), TooFewPoints);
}

TEST_CASE("kmeans_fit: duplicate-heavy data still fills every cluster") {
  Mat points(8, 2);
  points << 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 5, 5, 9, 9;
  Codebook cb = kmeans_fit(points, 3, 17);
  std::vector<uint16_t> labels = kmeans_assign(cb, points);
  std::set<uint16_t> seen(labels.begin(), labels.end());
  CHECK(seen.size() == 3);
  CHECK(cb.distortion_history.back() == doctest::Approx(0.0));
}

TEST_CASE("kmeans_assign: argmin with lowest-index ties") {
  Codebook cb;
  cb.centroids = Mat::Zero(6, 2);
  cb.centroids << 9, 9, 8, 8, 0, 0, 7, 7, 6, 6, 2, 0;  // rows 2 and 5
  Mat point(1, 2);
  point << 1.0, 0.0;  // exactly between centroids 2 and 5
  CHECK(kmeans_assign(cb, point)[0] == 2);

  // A point equal to a centroid takes that index.
  Mat exact(1, 2);
  exact << 7.0, 7.0;
  CHECK(kmeans_assign(cb, exact)[0] == 3);

  Mat wrong_dim(1, 3);
  wrong_dim << 1, 2, 3;
  CHECK_THROWS_AS(kmeans_assign(cb, wrong_dim), DimMismatch);
}

TEST_CASE("kmeans_assign: equals an independent linear scan") {
  Mat points = random_points(200, 5, 21);
  Codebook cb = kmeans_fit(points, 7, 4);
  std::vector<uint16_t> labels = kmeans_assign(cb, points);
  for (int i = 0; i < points.rows(); ++i) {
    int best = 0;
    double best_d = (points.row(i) - cb.centroids.row(0)).squaredNorm();
    for (int c = 1; c < 7; ++c) {
      double d = (points.row(i) - cb.centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    CHECK(labels[i] == best);
  }
}

TEST_CASE("codebook io: round trip and corruption") {
  Mat points = random_points(50, 4, 31);
  Codebook cb = kmeans_fit(points, 5, 77);
  cb.source = "test layer=1 dim=4";

  fs::path path = fs::temp_directory_path() / "maskpred-codebook-test.bin";
  save_codebook(cb, path);
  Codebook loaded = load_codebook(path);
  CHECK(loaded.k() == 5);
  CHECK(loaded.dim() == 4);
  CHECK(loaded.source == cb.source);
  CHECK(loaded.seed == 77);

  // Centroids quantize to float32 on write; a second round trip is
  // bit-exact, file included.
  fs::path path2 = fs::temp_directory_path() / "maskpred-codebook-test2.bin";
  save_codebook(loaded, path2);
  CHECK(read_file_bytes(path) == read_file_bytes(path2));
  Codebook again = load_codebook(path2);
  CHECK((again.centroids.array() == loaded.centroids.array()).all());

  auto bytes = read_file_bytes(path);
  bytes[0] = 'X';
  write_file_bytes(path, bytes.data(), bytes.size());
  CHECK_THROWS_AS(load_codebook(path), FormatError);

  // Truncated centroid data.
  save_codebook(cb, path);
  bytes = read_file_bytes(path);
  write_file_bytes(path, bytes.data(), bytes.size() - 3);
  CHECK_THROWS_AS(load_codebook(path), FormatError);

  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("pool_raw_features: mean over non-overlapping windows") {
  FeatureMatrix feats(5, 2);
  feats << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
  Mat pooled = pool_raw_features(feats, 2);
  REQUIRE(pooled.rows() == 2);
  CHECK(pooled(0, 0) == doctest::Approx(2.0));
  CHECK(pooled(0, 1) == doctest::Approx(3.0));
  CHECK(pooled(1, 0) == doctest::Approx(6.0));
  CHECK(pooled(1, 1) == doctest::Approx(7.0));
}

TEST_CASE("stack_features: subsampling keeps every n-th frame") {
  std::vector<Mat> per_utt = {random_points(5, 3, 1), random_points(4, 3, 2)};
  Mat stacked = stack_features(per_utt, 2);
  REQUIRE(stacked.rows() == 3 + 2);
  CHECK((stacked.row(0).array() == per_utt[0].row(0).array()).all());
  CHECK((stacked.row(1).array() == per_utt[0].row(2).array()).all());
  CHECK((stacked.row(2).array() == per_utt[0].row(4).array()).all());
  CHECK((stacked.row(3).array() == per_utt[1].row(0).array()).all());
  CHECK((stacked.row(4).array() == per_utt[1].row(2).array()).all());
}
