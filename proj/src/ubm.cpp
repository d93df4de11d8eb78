// src/ubm.cpp

// Copyright 2026  LFE-Kit Authors

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

#include "lfe/ubm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "lfe/parallel.hpp"

namespace lfe {

namespace {

constexpr double kVarFloorScale = 1e-3;    // of the global per-dim variance
constexpr double kWeightFloor = 1e-8;
constexpr double kEmptyCountScale = 1e-4;  // of the total frame count
constexpr int kBlockFrames = 4096;
constexpr int kKmeansIterations = 10;
constexpr std::size_t kMaxKmeansFrames = 1000000;

using RowMajorXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Precomputed terms so a block E-step is two matrix products:
// ll(t,c) = lognorm_c + x_t . miv_c - 0.5 * x_t^2 . iv_c
struct Scorer {
  Eigen::MatrixXd iv;       // K x D, 1/var
  Eigen::MatrixXd miv;      // K x D, mean/var
  Eigen::VectorXd lognorm;  // K
};

Scorer make_scorer(const DiagGmm& g) {
  Scorer s;
  s.iv = g.vars.cwiseInverse();
  s.miv = g.means.cwiseProduct(s.iv);
  const int K = g.n_components();
  const int D = g.dim();
  s.lognorm.resize(K);
  for (int c = 0; c < K; ++c) {
    const double logdet = g.vars.row(c).array().log().sum();
    const double q = g.means.row(c).cwiseProduct(s.miv.row(c)).sum();
    s.lognorm[c] = std::log(g.weights[c]) -
                   0.5 * (D * std::log(2.0 * std::numbers::pi) + logdet + q);
  }
  return s;
}

void score_block(const Scorer& s, const Eigen::MatrixXd& xb,
                 Eigen::MatrixXd& out) {
  out.noalias() = xb * s.miv.transpose();
  out.noalias() -= 0.5 * (xb.cwiseAbs2() * s.iv.transpose());
  out.rowwise() += s.lognorm.transpose();
}

// Row-wise logsumexp; turns ll into responsibilities in place.
void normalize_rows(Eigen::MatrixXd& ll, Eigen::VectorXd& total) {
  total.resize(ll.rows());
  for (Eigen::Index t = 0; t < ll.rows(); ++t) {
    const double m = ll.row(t).maxCoeff();
    const double sum = (ll.row(t).array() - m).exp().sum();
    total[t] = m + std::log(sum);
    ll.row(t) = (ll.row(t).array() - total[t]).exp();
  }
}

struct GlobalMoments {
  Eigen::VectorXd mean;  // D
  Eigen::VectorXd var;   // D
};

GlobalMoments global_moments(const FloatRowMat& x) {
  const Eigen::Index n = x.rows(), d = x.cols();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(d);
  for (Eigen::Index b = 0; b < n; b += kBlockFrames) {
    const Eigen::Index len = std::min<Eigen::Index>(kBlockFrames, n - b);
    const Eigen::MatrixXd xb = x.middleRows(b, len).cast<double>();
    sum += xb.colwise().sum().transpose();
    sq += xb.cwiseAbs2().colwise().sum().transpose();
  }
  GlobalMoments m;
  m.mean = sum / static_cast<double>(n);
  m.var =
      (sq / static_cast<double>(n) - m.mean.cwiseAbs2()).cwiseMax(kLogFloor);
  return m;
}

// k-means++ seeding followed by Lloyd refinement; returns K x D centers.
Eigen::MatrixXd kmeans_centers(const FloatRowMat& x, int k, int iterations,
                               int n_threads, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows(), d = x.cols();
  Eigen::MatrixXd centers(k, d);

  // Seeding: each next center is drawn with probability proportional to the
  // squared distance from the nearest already-chosen center.
  Eigen::VectorXd min_dist2 = Eigen::VectorXd::Constant(n, 0.0);
  centers.row(0) =
      x.row(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n)))
          .cast<double>();
  for (Eigen::Index t = 0; t < n; ++t)
    min_dist2[t] = (x.row(t).cast<double>() - centers.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = min_dist2.sum();
    Eigen::Index pick;
    if (total <= 0.0) {
      pick = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
    } else {
      const double u = uniform01(rng()) * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index t = 0; t < n; ++t) {
        acc += min_dist2[t];
        if (acc >= u) {
          pick = t;
          break;
        }
      }
    }
    centers.row(c) = x.row(pick).cast<double>();
    for (Eigen::Index t = 0; t < n; ++t) {
      const double d2 =
          (x.row(t).cast<double>() - centers.row(c)).squaredNorm();
      if (d2 < min_dist2[t]) min_dist2[t] = d2;
    }
  }

  struct Acc {
    Eigen::VectorXd count;
    Eigen::MatrixXd sum;
  };
  for (int it = 0; it < iterations; ++it) {
    std::vector<Acc> accs(static_cast<std::size_t>(std::max(1, n_threads)));
    for (auto& a : accs) {
      a.count = Eigen::VectorXd::Zero(k);
      a.sum = Eigen::MatrixXd::Zero(k, d);
    }
    const Eigen::VectorXd c2 = centers.cwiseAbs2().rowwise().sum();
    for_blocks_static(
        static_cast<std::size_t>(n), kBlockFrames, n_threads,
        [&](int worker, std::size_t b, std::size_t e) {
          Acc& a = accs[static_cast<std::size_t>(worker)];
          const Eigen::Index len = static_cast<Eigen::Index>(e - b);
          const Eigen::MatrixXd xb =
              x.middleRows(static_cast<Eigen::Index>(b), len).cast<double>();
          Eigen::MatrixXd d2 = -2.0 * (xb * centers.transpose());
          d2.rowwise() += c2.transpose();
          for (Eigen::Index i = 0; i < len; ++i) {
            Eigen::Index best;
            d2.row(i).minCoeff(&best);
            a.count[best] += 1.0;
            a.sum.row(best) += xb.row(i);
          }
        });
    for (std::size_t w = 1; w < accs.size(); ++w) {
      accs[0].count += accs[w].count;
      accs[0].sum += accs[w].sum;
    }
    for (int c = 0; c < k; ++c) {
      if (accs[0].count[c] > 0.0)
        centers.row(c) = accs[0].sum.row(c) / accs[0].count[c];
      // empty clusters keep their previous center
    }
  }
  return centers;
}

}  // namespace

DiagGmm init_kmeans(const FloatRowMat& frames, int n_components,
                    std::uint64_t seed, int n_threads) {
  const Eigen::Index n = frames.rows();
  const int k = n_components;
  if (k < 1) raise(ErrorCode::kInvalidSpec, "n_components must be positive");
  if (n < static_cast<Eigen::Index>(10) * k)
    raise(ErrorCode::kTooFewFrames, "initialization needs at least ", 10 * k,
          " frames for ", k, " components, have ", n);
  if (!frames.allFinite())
    raise(ErrorCode::kNumericalFailure, "non-finite values in training frames");

  const GlobalMoments gm = global_moments(frames);
  const Eigen::VectorXd var_floor = gm.var * kVarFloorScale;
  std::mt19937_64 rng(seed);

  // Subsample for initialization when the corpus is large.
  FloatRowMat sub;
  const FloatRowMat* init_x = &frames;
  if (static_cast<std::size_t>(n) > kMaxKmeansFrames) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(kMaxKmeansFrames);
    std::sort(idx.begin(), idx.end());
    sub.resize(static_cast<Eigen::Index>(kMaxKmeansFrames), frames.cols());
    for (std::size_t i = 0; i < kMaxKmeansFrames; ++i)
      sub.row(static_cast<Eigen::Index>(i)) = frames.row(idx[i]);
    init_x = &sub;
  }

  const Eigen::MatrixXd centers =
      kmeans_centers(*init_x, k, kKmeansIterations, n_threads, rng);

  // Within-cluster moments under the final hard assignment.
  const Eigen::Index ns = init_x->rows(), d = init_x->cols();
  Eigen::VectorXd count = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, d);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(k, d);
  const Eigen::VectorXd c2 = centers.cwiseAbs2().rowwise().sum();
  for (Eigen::Index b = 0; b < ns; b += kBlockFrames) {
    const Eigen::Index len = std::min<Eigen::Index>(kBlockFrames, ns - b);
    const Eigen::MatrixXd xb = init_x->middleRows(b, len).cast<double>();
    Eigen::MatrixXd d2 = -2.0 * (xb * centers.transpose());
    d2.rowwise() += c2.transpose();
    for (Eigen::Index i = 0; i < len; ++i) {
      Eigen::Index best;
      d2.row(i).minCoeff(&best);
      count[best] += 1.0;
      sum.row(best) += xb.row(i);
      sq.row(best) += xb.row(i).cwiseAbs2();
    }
  }

  DiagGmm g;
  g.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  g.means = centers;
  g.vars.resize(k, d);
  for (int c = 0; c < k; ++c) {
    if (count[c] > 0.0) {
      const Eigen::VectorXd m = sum.row(c).transpose() / count[c];
      g.means.row(c) = m.transpose();
      g.vars.row(c) = (sq.row(c).transpose() / count[c] - m.cwiseAbs2())
                          .cwiseMax(var_floor)
                          .transpose();
    } else {
      g.vars.row(c) = var_floor.transpose();
    }
  }
  return g;
}

DiagGmm em_fit(const DiagGmm& init, const FloatRowMat& frames,
               int n_iterations, int n_threads, double convergence_tol) {
  const Eigen::Index n = frames.rows(), d = frames.cols();
  const int k = init.n_components();
  if (init.dim() != d)
    raise(ErrorCode::kDimensionMismatch, "frames have dim ", d,
          ", mixture expects ", init.dim());
  if (n < 1) raise(ErrorCode::kTooFewFrames, "no frames to fit");
  if (!frames.allFinite())
    raise(ErrorCode::kNumericalFailure, "non-finite values in training frames");

  const GlobalMoments gm = global_moments(frames);
  const Eigen::VectorXd var_floor = gm.var * kVarFloorScale;

  DiagGmm g = init;
  struct Acc {
    Eigen::VectorXd n;
    Eigen::MatrixXd fx;
    Eigen::MatrixXd fx2;
    double ll = 0.0;
  };
  std::vector<double> frame_ll(static_cast<std::size_t>(n));

  for (int iter = 0; iter < n_iterations; ++iter) {
    const Scorer scorer = make_scorer(g);
    std::vector<Acc> accs(static_cast<std::size_t>(std::max(1, n_threads)));
    for (auto& a : accs) {
      a.n = Eigen::VectorXd::Zero(k);
      a.fx = Eigen::MatrixXd::Zero(k, d);
      a.fx2 = Eigen::MatrixXd::Zero(k, d);
    }
    for_blocks_static(
        static_cast<std::size_t>(n), kBlockFrames, n_threads,
        [&](int worker, std::size_t b, std::size_t e) {
          Acc& a = accs[static_cast<std::size_t>(worker)];
          const Eigen::Index len = static_cast<Eigen::Index>(e - b);
          const Eigen::MatrixXd xb =
              frames.middleRows(static_cast<Eigen::Index>(b), len)
                  .cast<double>();
          Eigen::MatrixXd resp(len, k);
          score_block(scorer, xb, resp);
          Eigen::VectorXd total;
          normalize_rows(resp, total);
          for (Eigen::Index i = 0; i < len; ++i) frame_ll[b + i] = total[i];
          a.ll += total.sum();
          a.n += resp.colwise().sum().transpose();
          a.fx.noalias() += resp.transpose() * xb;
          a.fx2.noalias() += resp.transpose() * xb.cwiseAbs2();
        });
    for (std::size_t w = 1; w < accs.size(); ++w) {
      accs[0].n += accs[w].n;
      accs[0].fx += accs[w].fx;
      accs[0].fx2 += accs[w].fx2;
      accs[0].ll += accs[w].ll;
    }
    const Acc& a = accs[0];

    const double mean_ll = a.ll / static_cast<double>(n);
    if (!std::isfinite(mean_ll))
      raise(ErrorCode::kNumericalFailure,
            "non-finite likelihood at iteration ", iter);
    const bool converged =
        !g.train_log.empty() && convergence_tol > 0.0 &&
        mean_ll - g.train_log.back() < convergence_tol;
    g.train_log.push_back(mean_ll);
    if (converged) break;

    // Components that lost almost all mass restart at the worst frames.
    std::vector<int> starved;
    for (int c = 0; c < k; ++c)
      if (a.n[c] < kEmptyCountScale * static_cast<double>(n))
        starved.push_back(c);
    std::vector<std::size_t> worst;
    if (!starved.empty()) {
      std::vector<std::size_t> order(frame_ll.size());
      std::iota(order.begin(), order.end(), 0);
      std::partial_sort(order.begin(), order.begin() + starved.size(),
                        order.end(), [&](std::size_t i, std::size_t j) {
                          return frame_ll[i] < frame_ll[j];
                        });
      worst.assign(order.begin(), order.begin() + starved.size());
    }

    std::size_t next_rescue = 0;
    for (int c = 0; c < k; ++c) {
      if (a.n[c] < kEmptyCountScale * static_cast<double>(n)) {
        const Eigen::Index t = static_cast<Eigen::Index>(worst[next_rescue++]);
        g.means.row(c) = frames.row(t).cast<double>();
        g.vars.row(c) = gm.var.transpose();
        g.weights[c] = 1.0 / k;
        continue;
      }
      const Eigen::VectorXd m = a.fx.row(c).transpose() / a.n[c];
      g.means.row(c) = m.transpose();
      g.vars.row(c) = (a.fx2.row(c).transpose() / a.n[c] - m.cwiseAbs2())
                          .cwiseMax(var_floor)
                          .transpose();
      g.weights[c] = a.n[c] / static_cast<double>(n);
    }
    g.weights = g.weights.cwiseMax(kWeightFloor);
    g.weights /= g.weights.sum();
  }
  return g;
}

DiagGmm train_ubm(const FloatRowMat& frames, const UbmConfig& cfg) {
  const DiagGmm init =
      init_kmeans(frames, cfg.n_components, cfg.seed, cfg.n_threads);
  return em_fit(init, frames, cfg.max_iterations, cfg.n_threads,
                cfg.convergence_tol);
}

Eigen::MatrixXd component_log_likelihoods(const DiagGmm& g,
                                          const FloatRowMat& frames) {
  if (frames.cols() != g.dim())
    raise(ErrorCode::kDimensionMismatch, "frames have dim ", frames.cols(),
          ", mixture expects ", g.dim());
  const Scorer scorer = make_scorer(g);
  Eigen::MatrixXd ll(frames.rows(), g.n_components());
  for (Eigen::Index b = 0; b < frames.rows(); b += kBlockFrames) {
    const Eigen::Index len =
        std::min<Eigen::Index>(kBlockFrames, frames.rows() - b);
    const Eigen::MatrixXd xb = frames.middleRows(b, len).cast<double>();
    Eigen::MatrixXd block(len, g.n_components());
    score_block(scorer, xb, block);
    ll.middleRows(b, len) = block;
  }
  return ll;
}

double mean_log_likelihood(const DiagGmm& g, const FloatRowMat& frames) {
  return frame_posteriors(g, frames, nullptr);
}

double frame_posteriors(const DiagGmm& g, const FloatRowMat& frames,
                        Eigen::MatrixXd* resp) {
  if (frames.rows() == 0)
    raise(ErrorCode::kTooFewFrames, "no frames to score");
  Eigen::MatrixXd ll = component_log_likelihoods(g, frames);
  Eigen::VectorXd total;
  normalize_rows(ll, total);
  if (resp) *resp = std::move(ll);
  return total.mean();
}

namespace {
constexpr char kGmmMagic[] = "LFEG";
constexpr std::uint16_t kGmmVersion = 1;

void write_row_major(BinaryWriter& w, const Eigen::MatrixXd& m) {
  const RowMajorXd rm = m;
  w.f64_array(std::span<const double>(rm.data(),
                                      static_cast<std::size_t>(rm.size())));
}

Eigen::MatrixXd read_row_major(BinaryReader& r, int rows, int cols) {
  RowMajorXd rm(rows, cols);
  r.f64_array(
      std::span<double>(rm.data(), static_cast<std::size_t>(rm.size())));
  return rm;
}
}  // namespace

void write_gmm_fields(BinaryWriter& w, const DiagGmm& g) {
  w.f64_array(std::span<const double>(
      g.weights.data(), static_cast<std::size_t>(g.weights.size())));
  write_row_major(w, g.means);
  write_row_major(w, g.vars);
  w.u32(static_cast<std::uint32_t>(g.train_log.size()));
  w.f64_array(g.train_log);
}

DiagGmm read_gmm_fields(BinaryReader& r, int k, int d) {
  DiagGmm g;
  g.weights.resize(k);
  r.f64_array(std::span<double>(g.weights.data(),
                                static_cast<std::size_t>(g.weights.size())));
  g.means = read_row_major(r, k, d);
  g.vars = read_row_major(r, k, d);
  g.train_log.resize(r.u32());
  r.f64_array(g.train_log);
  return g;
}

void write_gmm(const std::filesystem::path& path, const DiagGmm& g) {
  std::ostringstream body;
  BinaryWriter w(body);
  w.magic(kGmmMagic);
  w.u16(kGmmVersion);
  w.u32(static_cast<std::uint32_t>(g.n_components()));
  w.u32(static_cast<std::uint32_t>(g.dim()));
  write_gmm_fields(w, g);
  atomic_write_file(path, body.str());
}

DiagGmm read_gmm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kMissingFile, "cannot open ", path.string());
  BinaryReader r(in, path.string());
  r.expect_magic(kGmmMagic);
  const auto version = r.u16();
  if (version != kGmmVersion)
    raise(ErrorCode::kIoError, path.string(), ": unsupported version ",
          version);
  const int k = static_cast<int>(r.u32());
  const int d = static_cast<int>(r.u32());
  if (k < 1 || d < 1)
    raise(ErrorCode::kIoError, path.string(), ": bad mixture shape ", k, "x",
          d);
  return read_gmm_fields(r, k, d);
}

}  // namespace lfe
