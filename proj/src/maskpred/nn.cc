// maskpred/nn.cc

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

#include "maskpred/nn.h"

#include <algorithm>
#include <cmath>

namespace maskpred {

namespace {

constexpr double kLayerNormEps = 1e-5;

using RowArray = Eigen::Array<double, 1, Eigen::Dynamic>;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

Mat gelu_mat(const Mat& x) {
  return x.unaryExpr([](double v) { return gelu(v); });
}

Mat gelu_grad_mat(const Mat& x) {
  return x.unaryExpr([](double v) { return gelu_grad(v); });
}

}  // namespace

std::string to_string(HeadKind kind) {
  return kind == HeadKind::kCtc ? "ctc" : "label";
}

HeadKind head_kind_from_string(const std::string& s) {
  if (s == "ctc") return HeadKind::kCtc;
  if (s == "label") return HeadKind::kLabel;
  throw FormatError("unknown head kind: " + s);
}

void EncoderConfig::validate() const {
  if (num_layers < 0) throw InvalidSpec("num_layers must be >= 0");
  if (input_dim < 1 || hidden_dim < 1 || ffn_dim < 1 || vocab_size < 1)
    throw InvalidSpec("encoder dimensions must be >= 1");
  if (num_heads < 1 || hidden_dim % num_heads != 0)
    throw InvalidSpec("hidden_dim must be divisible by num_heads");
  if (downsample < 1) throw InvalidSpec("downsample must be >= 1");
  if (num_buckets < 2) throw InvalidSpec("num_buckets must be >= 2");
  if (max_distance <= 0) throw InvalidSpec("max_distance must be > 0");
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw InvalidSpec("dropout must be in [0, 1)");
}

int relative_bucket(long offset, int num_buckets, int max_distance) {
  int half = num_buckets / 2;
  int bucket = 0;
  long pos = offset;
  if (pos > 0) {
    bucket += half;  // positive offsets take the upper half
  } else {
    pos = -pos;
  }
  int max_exact = std::max(1, half / 2);
  if (pos < max_exact) return bucket + static_cast<int>(pos);
  // Logarithmic spacing from max_exact to max_distance; every offset at or
  // beyond max_distance saturates in the sign's last bucket.
  double v = max_exact +
             std::log(static_cast<double>(pos) / max_exact) /
                 std::log(static_cast<double>(max_distance) / max_exact) *
                 (half - max_exact);
  int idx = std::min(static_cast<int>(v), half - 1);
  return bucket + idx;
}

MaskSpec sample_mask(int num_frames, double start_prob, int span_length,
                     uint64_t seed) {
  if (num_frames < 0) throw ShapeMismatch("sample_mask: negative frame count");
  if (span_length < 1)
    throw InvalidSpec("sample_mask: span_length must be >= 1");
  if (!(start_prob >= 0.0 && start_prob <= 1.0))
    throw InvalidSpec("sample_mask: start_prob must be in [0, 1]");
  MaskSpec spec;
  spec.span_length = span_length;
  spec.start_prob = start_prob;
  Rng rng(seed);
  std::vector<bool> is_masked(num_frames, false);
  for (int t = 0; t < num_frames; ++t) {
    if (rng.bernoulli(start_prob)) {
      spec.span_starts.push_back(t);
      for (int u = t; u < std::min(num_frames, t + span_length); ++u)
        is_masked[u] = true;
    }
  }
  for (int t = 0; t < num_frames; ++t)
    if (is_masked[t]) spec.masked.push_back(t);
  return spec;
}

// ---------------------------------------------------------------------------
// Parameters.
// ---------------------------------------------------------------------------

void Parameters::for_each(
    const std::function<void(const std::string&, Mat&)>& fn) {
  fn("conv1.w", conv1_w);
  fn("conv1.b", conv1_b);
  fn("conv2.w", conv2_w);
  fn("conv2.b", conv2_b);
  fn("mask_embed", mask_embed);
  fn("rel_bias", rel_bias);
  for (size_t i = 0; i < layers.size(); ++i) {
    std::string p = "layer" + std::to_string(i) + ".";
    LayerParams& l = layers[i];
    fn(p + "ln1.gamma", l.ln1_gamma);
    fn(p + "ln1.beta", l.ln1_beta);
    fn(p + "attn.wq", l.wq);
    fn(p + "attn.bq", l.bq);
    fn(p + "attn.wk", l.wk);
    fn(p + "attn.bk", l.bk);
    fn(p + "attn.wv", l.wv);
    fn(p + "attn.bv", l.bv);
    fn(p + "attn.wo", l.wo);
    fn(p + "attn.bo", l.bo);
    fn(p + "ln2.gamma", l.ln2_gamma);
    fn(p + "ln2.beta", l.ln2_beta);
    fn(p + "ffn.w1", l.ffn_w1);
    fn(p + "ffn.b1", l.ffn_b1);
    fn(p + "ffn.w2", l.ffn_w2);
    fn(p + "ffn.b2", l.ffn_b2);
  }
  fn("head.w", head_w);
  fn("head.b", head_b);
}

void Parameters::for_each(
    const std::function<void(const std::string&, const Mat&)>& fn) const {
  const_cast<Parameters*>(this)->for_each(
      [&fn](const std::string& name, Mat& m) { fn(name, m); });
}

size_t Parameters::num_scalars() const {
  size_t n = 0;
  for_each([&n](const std::string&, const Mat& m) { n += m.size(); });
  return n;
}

bool Parameters::all_finite() const {
  bool ok = true;
  for_each([&ok](const std::string&, const Mat& m) {
    if (!m.allFinite()) ok = false;
  });
  return ok;
}

void Parameters::set_zero() {
  for_each([](const std::string&, Mat& m) { m.setZero(); });
}

bool is_frontend_tensor(const std::string& name) {
  return name.rfind("conv", 0) == 0;
}

Parameters init_parameters(const EncoderConfig& config, uint64_t seed) {
  config.validate();
  const int H = config.hidden_dim;
  const int D = config.input_dim;
  const int F = config.ffn_dim;
  const int V = config.vocab_size;
  const int s = config.downsample;

  Rng rng(seed);
  auto randn = [&rng](int rows, int cols, double stddev) {
    Mat m(rows, cols);
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r) m(r, c) = stddev * rng.normal();
    return m;
  };

  Parameters p;
  p.conv1_w = randn(s * D, H, 1.0 / std::sqrt(static_cast<double>(s * D)));
  p.conv1_b = Mat::Zero(1, H);
  p.conv2_w = randn(H, H, 1.0 / std::sqrt(static_cast<double>(H)));
  p.conv2_b = Mat::Zero(1, H);
  p.mask_embed = randn(1, H, 0.1);
  p.rel_bias = Mat::Zero(config.num_heads, config.num_buckets);
  p.layers.resize(config.num_layers);
  double inv_sqrt_h = 1.0 / std::sqrt(static_cast<double>(H));
  for (LayerParams& l : p.layers) {
    l.ln1_gamma = Mat::Ones(1, H);
    l.ln1_beta = Mat::Zero(1, H);
    l.wq = randn(H, H, inv_sqrt_h);
    l.bq = Mat::Zero(1, H);
    l.wk = randn(H, H, inv_sqrt_h);
    l.bk = Mat::Zero(1, H);
    l.wv = randn(H, H, inv_sqrt_h);
    l.bv = Mat::Zero(1, H);
    l.wo = randn(H, H, inv_sqrt_h);
    l.bo = Mat::Zero(1, H);
    l.ln2_gamma = Mat::Ones(1, H);
    l.ln2_beta = Mat::Zero(1, H);
    l.ffn_w1 = randn(H, F, inv_sqrt_h);
    l.ffn_b1 = Mat::Zero(1, F);
    l.ffn_w2 = randn(F, H, 1.0 / std::sqrt(static_cast<double>(F)));
    l.ffn_b2 = Mat::Zero(1, H);
  }
  p.head_w = randn(H, V, inv_sqrt_h);
  p.head_b = Mat::Zero(1, V);
  return p;
}

Parameters zeros_like(const Parameters& like) {
  Parameters z = like;
  z.set_zero();
  return z;
}

// ---------------------------------------------------------------------------
// Forward / backward.
// ---------------------------------------------------------------------------

namespace {

struct LayerCache {
  Mat h_in;
  Mat xhat1;
  Eigen::VectorXd inv_std1;
  Mat a;  // ln1 output
  Mat q, k, v;
  std::vector<Mat> probs;  // per-head attention, T' x T'
  Mat ctx;
  Mat drop_attn;  // empty => no dropout
  Mat h_mid;
  Mat xhat2;
  Eigen::VectorXd inv_std2;
  Mat f;  // ln2 output
  Mat z1, g;
  Mat drop_ffn;
};

struct LayerNormOut {
  Mat y;
  Mat xhat;
  Eigen::VectorXd inv_std;
};

LayerNormOut layer_norm(const Mat& x, const Mat& gamma, const Mat& beta) {
  LayerNormOut out;
  const double n = static_cast<double>(x.cols());
  out.xhat.resize(x.rows(), x.cols());
  out.inv_std.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double mean = x.row(r).mean();
    double var = (x.row(r).array() - mean).square().sum() / n;
    double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
    out.inv_std[r] = inv_std;
    out.xhat.row(r) = ((x.row(r).array() - mean) * inv_std).matrix();
  }
  out.y.resize(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    out.y.row(r) = (out.xhat.row(r).array() * gamma.row(0).array() +
                    beta.row(0).array())
                       .matrix();
  return out;
}

// Returns dx; accumulates dgamma/dbeta.
Mat layer_norm_backward(const Mat& dy, const Mat& xhat,
                        const Eigen::VectorXd& inv_std, const Mat& gamma,
                        Mat* dgamma, Mat* dbeta) {
  const double n = static_cast<double>(xhat.cols());
  *dgamma += (dy.array() * xhat.array()).colwise().sum().matrix();
  *dbeta += dy.colwise().sum();
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    RowArray dxhat = dy.row(r).array() * gamma.row(0).array();
    double m1 = dxhat.sum() / n;
    double m2 = (dxhat * xhat.row(r).array()).sum() / n;
    dx.row(r) =
        ((dxhat - m1 - xhat.row(r).array() * m2) * inv_std[r]).matrix();
  }
  return dx;
}

Mat dropout_mask(int rows, int cols, double p, Rng* rng) {
  Mat m(rows, cols);
  double keep_scale = 1.0 / (1.0 - p);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng->bernoulli(p) ? 0.0 : keep_scale;
  return m;
}

Eigen::MatrixXi bucket_matrix(int T, int num_buckets, int max_distance) {
  Eigen::MatrixXi b(T, T);
  for (int i = 0; i < T; ++i)
    for (int j = 0; j < T; ++j)
      b(i, j) =
          relative_bucket(static_cast<long>(j) - i, num_buckets, max_distance);
  return b;
}

}  // namespace

struct ForwardCache {
  Mat patches;
  Mat z1f, a1, z2f;
  std::vector<int> masked;
  Eigen::MatrixXi buckets;
  std::vector<LayerCache> layers;
  Mat h_final;
};

ForwardCache* new_forward_cache() { return new ForwardCache(); }
void free_forward_cache(ForwardCache* cache) { delete cache; }

ForwardResult encoder_forward(const EncoderConfig& config,
                              const Parameters& params, const Mat& features,
                              const MaskSpec* mask, ForwardCache* cache,
                              const uint64_t* dropout_seed) {
  config.validate();
  if (features.cols() != config.input_dim)
    throw ShapeMismatch("encoder_forward: feature dim " +
                        std::to_string(features.cols()) + " != config " +
                        std::to_string(config.input_dim));
  const int s = config.downsample;
  const int T = static_cast<int>(features.rows());
  const int Tp = config.output_frames(T);
  if (Tp < 1)
    throw ShapeMismatch("encoder_forward: input too short for downsampling");
  if (mask != nullptr)
    for (int idx : mask->masked)
      if (idx < 0 || idx >= Tp)
        throw ShapeMismatch("encoder_forward: mask index out of range");

  const int H = config.hidden_dim;
  const int D = config.input_dim;
  const int heads = config.num_heads;
  const int dh = config.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ForwardCache local;
  ForwardCache& c = cache != nullptr ? *cache : local;
  c.layers.clear();

  // Frontend: non-overlapping strided windows keep each output position a
  // function of exactly its own s input frames.
  c.patches.resize(Tp, s * D);
  for (int t = 0; t < Tp; ++t)
    for (int w = 0; w < s; ++w)
      c.patches.block(t, w * D, 1, D) = features.row(t * s + w);
  c.z1f = (c.patches * params.conv1_w).rowwise() + params.conv1_b.row(0);
  c.a1 = gelu_mat(c.z1f);
  c.z2f = (c.a1 * params.conv2_w).rowwise() + params.conv2_b.row(0);
  Mat h = gelu_mat(c.z2f);

  c.masked.clear();
  if (mask != nullptr) {
    c.masked = mask->masked;
    for (int idx : c.masked) h.row(idx) = params.mask_embed.row(0);
  }

  ForwardResult result;
  result.layer_hidden.push_back(h);

  bool use_dropout = dropout_seed != nullptr && config.dropout > 0.0;
  c.buckets = bucket_matrix(Tp, config.num_buckets, config.max_distance);

  for (int li = 0; li < config.num_layers; ++li) {
    const LayerParams& l = params.layers[li];
    LayerCache lc;
    lc.h_in = h;

    LayerNormOut ln1 = layer_norm(h, l.ln1_gamma, l.ln1_beta);
    lc.xhat1 = std::move(ln1.xhat);
    lc.inv_std1 = std::move(ln1.inv_std);
    lc.a = std::move(ln1.y);

    lc.q = (lc.a * l.wq).rowwise() + l.bq.row(0);
    lc.k = (lc.a * l.wk).rowwise() + l.bk.row(0);
    lc.v = (lc.a * l.wv).rowwise() + l.bv.row(0);

    lc.ctx.resize(Tp, H);
    lc.probs.resize(heads);
    for (int hh = 0; hh < heads; ++hh) {
      Mat scores = scale * (lc.q.middleCols(hh * dh, dh) *
                            lc.k.middleCols(hh * dh, dh).transpose());
      for (int i = 0; i < Tp; ++i)
        for (int j = 0; j < Tp; ++j)
          scores(i, j) += params.rel_bias(hh, c.buckets(i, j));
      lc.probs[hh] = softmax_rows(scores);
      lc.ctx.middleCols(hh * dh, dh) =
          lc.probs[hh] * lc.v.middleCols(hh * dh, dh);
    }

    Mat attn = (lc.ctx * l.wo).rowwise() + l.bo.row(0);
    if (use_dropout) {
      Rng drng(mix_seed(*dropout_seed, 2 * static_cast<uint64_t>(li)));
      lc.drop_attn = dropout_mask(Tp, H, config.dropout, &drng);
      attn = (attn.array() * lc.drop_attn.array()).matrix();
    }
    lc.h_mid = lc.h_in + attn;

    LayerNormOut ln2 = layer_norm(lc.h_mid, l.ln2_gamma, l.ln2_beta);
    lc.xhat2 = std::move(ln2.xhat);
    lc.inv_std2 = std::move(ln2.inv_std);
    lc.f = std::move(ln2.y);

    lc.z1 = (lc.f * l.ffn_w1).rowwise() + l.ffn_b1.row(0);
    lc.g = gelu_mat(lc.z1);
    Mat ffn = (lc.g * l.ffn_w2).rowwise() + l.ffn_b2.row(0);
    if (use_dropout) {
      Rng drng(mix_seed(*dropout_seed, 2 * static_cast<uint64_t>(li) + 1));
      lc.drop_ffn = dropout_mask(Tp, H, config.dropout, &drng);
      ffn = (ffn.array() * lc.drop_ffn.array()).matrix();
    }
    h = lc.h_mid + ffn;

    result.layer_hidden.push_back(h);
    c.layers.push_back(std::move(lc));
  }

  c.h_final = h;
  result.logits = (h * params.head_w).rowwise() + params.head_b.row(0);
  if (!result.logits.allFinite())
    throw NonFiniteGradient("encoder_forward produced non-finite logits");
  return result;
}

void encoder_backward(const EncoderConfig& config, const Parameters& params,
                      const ForwardCache& cache, const Mat& dlogits,
                      Parameters* grads) {
  const int heads = config.num_heads;
  const int dh = config.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  if (dlogits.rows() != cache.h_final.rows() ||
      dlogits.cols() != config.vocab_size)
    throw ShapeMismatch("encoder_backward: dlogits shape mismatch");

  grads->head_w += cache.h_final.transpose() * dlogits;
  grads->head_b += dlogits.colwise().sum();
  Mat dh_out = dlogits * params.head_w.transpose();

  for (int li = config.num_layers - 1; li >= 0; --li) {
    const LayerParams& l = params.layers[li];
    const LayerCache& lc = cache.layers[li];
    LayerParams& gl = grads->layers[li];

    // FFN branch.
    Mat dffn = dh_out;
    if (lc.drop_ffn.size() > 0)
      dffn = (dffn.array() * lc.drop_ffn.array()).matrix();
    gl.ffn_w2 += lc.g.transpose() * dffn;
    gl.ffn_b2 += dffn.colwise().sum();
    Mat dg = dffn * l.ffn_w2.transpose();
    Mat dz1 = (dg.array() * gelu_grad_mat(lc.z1).array()).matrix();
    gl.ffn_w1 += lc.f.transpose() * dz1;
    gl.ffn_b1 += dz1.colwise().sum();
    Mat df = dz1 * l.ffn_w1.transpose();

    Mat dh_mid = dh_out;  // residual path
    dh_mid += layer_norm_backward(df, lc.xhat2, lc.inv_std2, l.ln2_gamma,
                                  &gl.ln2_gamma, &gl.ln2_beta);

    // Attention branch.
    Mat dattn = dh_mid;
    if (lc.drop_attn.size() > 0)
      dattn = (dattn.array() * lc.drop_attn.array()).matrix();
    gl.wo += lc.ctx.transpose() * dattn;
    gl.bo += dattn.colwise().sum();
    Mat dctx = dattn * l.wo.transpose();

    Mat dq = Mat::Zero(lc.q.rows(), lc.q.cols());
    Mat dk = Mat::Zero(lc.k.rows(), lc.k.cols());
    Mat dv = Mat::Zero(lc.v.rows(), lc.v.cols());
    for (int hh = 0; hh < heads; ++hh) {
      const Mat& P = lc.probs[hh];
      Mat dC = dctx.middleCols(hh * dh, dh);
      dv.middleCols(hh * dh, dh) = P.transpose() * dC;
      Mat dP = dC * lc.v.middleCols(hh * dh, dh).transpose();
      Eigen::VectorXd row_dot = (dP.array() * P.array()).rowwise().sum();
      Mat dS =
          (P.array() * (dP.colwise() - row_dot).array()).matrix();
      for (Eigen::Index i = 0; i < dS.rows(); ++i)
        for (Eigen::Index j = 0; j < dS.cols(); ++j)
          grads->rel_bias(hh, cache.buckets(i, j)) += dS(i, j);
      dq.middleCols(hh * dh, dh) = scale * (dS * lc.k.middleCols(hh * dh, dh));
      dk.middleCols(hh * dh, dh) =
          scale * (dS.transpose() * lc.q.middleCols(hh * dh, dh));
    }

    gl.wq += lc.a.transpose() * dq;
    gl.bq += dq.colwise().sum();
    gl.wk += lc.a.transpose() * dk;
    gl.bk += dk.colwise().sum();
    gl.wv += lc.a.transpose() * dv;
    gl.bv += dv.colwise().sum();
    Mat da =
        dq * l.wq.transpose() + dk * l.wk.transpose() + dv * l.wv.transpose();

    Mat dh_in = dh_mid;  // residual path
    dh_in += layer_norm_backward(da, lc.xhat1, lc.inv_std1, l.ln1_gamma,
                                 &gl.ln1_gamma, &gl.ln1_beta);
    dh_out = std::move(dh_in);
  }

  // Mask substitution: replaced rows route their gradient to the mask
  // embedding; nothing flows into the conv stack there.
  Mat dfront = std::move(dh_out);
  for (int idx : cache.masked) {
    grads->mask_embed += dfront.row(idx);
    dfront.row(idx).setZero();
  }

  Mat dz2f = (dfront.array() * gelu_grad_mat(cache.z2f).array()).matrix();
  grads->conv2_w += cache.a1.transpose() * dz2f;
  grads->conv2_b += dz2f.colwise().sum();
  Mat da1 = dz2f * params.conv2_w.transpose();
  Mat dz1f = (da1.array() * gelu_grad_mat(cache.z1f).array()).matrix();
  grads->conv1_w += cache.patches.transpose() * dz1f;
  grads->conv1_b += dz1f.colwise().sum();
}

// ---------------------------------------------------------------------------
// Softmax helpers and masked-prediction loss.
// ---------------------------------------------------------------------------

Mat softmax_rows(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    double mx = logits.row(r).maxCoeff();
    RowArray e = (logits.row(r).array() - mx).exp();
    out.row(r) = (e / e.sum()).matrix();
  }
  return out;
}

Mat log_softmax_rows(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    double mx = logits.row(r).maxCoeff();
    RowArray shifted = logits.row(r).array() - mx;
    double lse = std::log(shifted.exp().sum());
    out.row(r) = (shifted - lse).matrix();
  }
  return out;
}

Mat dlogits_from_dlogprobs(const Mat& logits, const Mat& dlogprobs) {
  if (logits.rows() != dlogprobs.rows() || logits.cols() != dlogprobs.cols())
    throw ShapeMismatch("dlogits_from_dlogprobs: shape mismatch");
  Mat probs = softmax_rows(logits);
  Eigen::VectorXd row_sums = dlogprobs.rowwise().sum();
  return dlogprobs - (probs.array().colwise() * row_sums.array()).matrix();
}

LossResult masked_prediction_loss(const Mat& logits,
                                  const std::vector<uint16_t>& targets,
                                  const MaskSpec& mask) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows())
    throw ShapeMismatch("masked_prediction_loss: target length " +
                        std::to_string(targets.size()) + " != frames " +
                        std::to_string(logits.rows()));
  if (mask.masked.empty())
    throw EmptyMask("masked_prediction_loss: empty mask");

  LossResult result;
  result.dlogits = Mat::Zero(logits.rows(), logits.cols());
  const double inv_m = 1.0 / static_cast<double>(mask.masked.size());
  for (int t : mask.masked) {
    if (t < 0 || t >= logits.rows())
      throw ShapeMismatch("masked_prediction_loss: mask index out of range");
    uint16_t y = targets[t];
    if (y >= logits.cols())
      throw ShapeMismatch("masked_prediction_loss: target label out of vocab");
    double mx = logits.row(t).maxCoeff();
    RowArray shifted = logits.row(t).array() - mx;
    double lse = std::log(shifted.exp().sum());
    result.loss += -(shifted(y) - lse) * inv_m;
    RowArray probs = (shifted - lse).exp();
    result.dlogits.row(t) = (probs * inv_m).matrix();
    result.dlogits(t, y) -= inv_m;
  }
  return result;
}

}  // namespace maskpred
