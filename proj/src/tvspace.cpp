// src/tvspace.cpp

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

#include "lfe/tvspace.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "lfe/parallel.hpp"

namespace lfe {

namespace {

using RowMajorXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// G_c = T_c' Sigma_c^-1 T_c plus the variance-scaled T used for b = T'S^-1 f.
struct Precomp {
  std::vector<Eigen::MatrixXd> gram;  // K of R x R
  Eigen::MatrixXd t_over_var;         // (K*D) x R

  void build(const DiagGmm& ubm, const Eigen::MatrixXd& t) {
    const int k = ubm.n_components();
    const int d = ubm.dim();
    const int r = static_cast<int>(t.cols());
    t_over_var.resize(k * d, r);
    gram.resize(k);
    for (int c = 0; c < k; ++c) {
      const auto tc = t.middleRows(static_cast<Eigen::Index>(c) * d, d);
      const Eigen::VectorXd iv = ubm.vars.row(c).cwiseInverse().transpose();
      t_over_var.middleRows(static_cast<Eigen::Index>(c) * d, d) =
          iv.asDiagonal() * tc;
      gram[c].noalias() =
          tc.transpose() *
          t_over_var.middleRows(static_cast<Eigen::Index>(c) * d, d);
    }
  }
};

struct Posterior {
  Eigen::VectorXd w;
  Eigen::MatrixXd l_inv;   // posterior covariance
  double objective = 0.0;  // 0.5 * (b'w - log|L|)
};

Posterior posterior_of(const std::vector<Eigen::MatrixXd>& gram,
                       const Eigen::MatrixXd& t_over_var, const DiagGmm& ubm,
                       const BaumWelchStats& s, bool want_cov) {
  const int k = ubm.n_components();
  const int d = ubm.dim();
  const int r = static_cast<int>(t_over_var.cols());

  Eigen::MatrixXd l = Eigen::MatrixXd::Identity(r, r);
  for (int c = 0; c < k; ++c)
    if (s.n[c] > 0.0) l.noalias() += s.n[c] * gram[c];

  Eigen::VectorXd b = Eigen::VectorXd::Zero(r);
  for (int c = 0; c < k; ++c)
    b.noalias() += t_over_var.middleRows(static_cast<Eigen::Index>(c) * d, d)
                       .transpose() *
                   s.f.row(c).transpose();

  const Eigen::LLT<Eigen::MatrixXd> llt(l);
  if (llt.info() != Eigen::Success)
    raise(ErrorCode::kNumericalFailure,
          "posterior precision not positive definite for utterance ",
          s.utterance_id);

  Posterior p;
  p.w = llt.solve(b);
  const double log_det =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  p.objective = 0.5 * (b.dot(p.w) - log_det);
  if (want_cov)
    p.l_inv = llt.solve(Eigen::MatrixXd::Identity(r, r));
  return p;
}

void check_stats(const DiagGmm& ubm, const BaumWelchStats& s) {
  if (s.n.size() != ubm.n_components() || s.f.rows() != ubm.n_components() ||
      s.f.cols() != ubm.dim())
    raise(ErrorCode::kDimensionMismatch, "statistics for ", s.utterance_id,
          " have shape ", s.n.size(), "/", s.f.rows(), "x", s.f.cols(),
          ", mixture expects ", ubm.n_components(), "x", ubm.dim());
}

}  // namespace

BaumWelchStats accumulate_stats(const DiagGmm& ubm, const FeatureMatrix& feats,
                                const std::string& speaker_id) {
  if (feats.n_frames() == 0)
    raise(ErrorCode::kEmptyUtterance, "no frames in ", feats.utterance_id);
  Eigen::MatrixXd resp;
  frame_posteriors(ubm, feats.data, &resp);
  BaumWelchStats s;
  s.utterance_id = feats.utterance_id;
  s.speaker_id = speaker_id;
  s.n = resp.colwise().sum().transpose();
  const Eigen::MatrixXd x = feats.data.cast<double>();
  s.f.noalias() = resp.transpose() * x;
  s.f -= s.n.asDiagonal() * ubm.means;
  return s;
}

TvModel train_tv(const DiagGmm& ubm, const std::vector<BaumWelchStats>& stats,
                 const TvConfig& cfg) {
  const int k = ubm.n_components();
  const int d = ubm.dim();
  const int r = cfg.rank;
  if (r < 1) raise(ErrorCode::kInvalidSpec, "rank must be positive");
  if (r >= k * d)
    raise(ErrorCode::kInvalidSpec, "rank ", r,
          " must be below the supervector size ", k * d);
  if (stats.size() < static_cast<std::size_t>(r))
    raise(ErrorCode::kTooFewUtterances, "subspace of rank ", r, " needs at least ",
          r, " utterances, have ", stats.size());
  for (const auto& s : stats) check_stats(ubm, s);

  TvModel model;
  model.ubm = ubm;
  model.t.resize(static_cast<Eigen::Index>(k) * d, r);
  std::mt19937_64 rng(cfg.seed);
  const double init_scale = 0.1 * std::sqrt(ubm.vars.mean());
  for (Eigen::Index i = 0; i < model.t.rows(); ++i)
    for (Eigen::Index j = 0; j < model.t.cols(); ++j)
      model.t(i, j) = init_scale * normal01(rng);

  const std::size_t n_utts = stats.size();
  struct Acc {
    Eigen::MatrixXd c;                // (K*D) x R
    std::vector<Eigen::MatrixXd> a;   // K of R x R
    double objective = 0.0;
    bool used = false;
  };

  for (int iter = 0; iter < cfg.n_iterations; ++iter) {
    Precomp pre;
    pre.build(ubm, model.t);

    std::vector<Acc> accs(static_cast<std::size_t>(std::max(1, cfg.n_threads)));
    for_blocks_static(
        n_utts, 16, cfg.n_threads, [&](int worker, std::size_t b,
                                       std::size_t e) {
          Acc& acc = accs[static_cast<std::size_t>(worker)];
          if (!acc.used) {
            acc.c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k) * d, r);
            acc.a.assign(k, Eigen::MatrixXd::Zero(r, r));
            acc.used = true;
          }
          for (std::size_t u = b; u < e; ++u) {
            const BaumWelchStats& s = stats[u];
            const Posterior p =
                posterior_of(pre.gram, pre.t_over_var, ubm, s, true);
            acc.objective += p.objective;
            const Eigen::MatrixXd eww = p.l_inv + p.w * p.w.transpose();
            for (int c = 0; c < k; ++c) {
              if (s.n[c] > 0.0) acc.a[c].noalias() += s.n[c] * eww;
              acc.c.middleRows(static_cast<Eigen::Index>(c) * d, d)
                  .noalias() += s.f.row(c).transpose() * p.w.transpose();
            }
          }
        });
    Eigen::MatrixXd c_acc =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k) * d, r);
    std::vector<Eigen::MatrixXd> a_acc(k, Eigen::MatrixXd::Zero(r, r));
    double objective = 0.0;
    for (const Acc& acc : accs) {
      if (!acc.used) continue;
      c_acc += acc.c;
      for (int c = 0; c < k; ++c) a_acc[c] += acc.a[c];
      objective += acc.objective;
    }
    model.train_log.push_back(objective / static_cast<double>(n_utts));

    // T_c solves T_c A_c = C_c for every component.
    for (int c = 0; c < k; ++c) {
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(a_acc[c]);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        raise(ErrorCode::kSingularSystem, "component ", c,
              " accumulated no usable mass; cannot update the subspace");
      model.t.middleRows(static_cast<Eigen::Index>(c) * d, d) =
          ldlt.solve(c_acc.middleRows(static_cast<Eigen::Index>(c) * d, d)
                         .transpose())
              .transpose();
    }
  }
  return model;
}

TvExtractor::TvExtractor(const TvModel& model) : model_(&model) {
  Precomp pre;
  pre.build(model.ubm, model.t);
  gram_ = std::move(pre.gram);
  t_over_var_ = std::move(pre.t_over_var);
}

Eigen::VectorXd TvExtractor::extract(const BaumWelchStats& stats) const {
  check_stats(model_->ubm, stats);
  return posterior_of(gram_, t_over_var_, model_->ubm, stats, false).w;
}

Eigen::VectorXd extract_ivector(const TvModel& model,
                                const BaumWelchStats& stats) {
  return TvExtractor(model).extract(stats);
}

IvectorSet extract_ivectors(const TvModel& model,
                            const std::vector<BaumWelchStats>& stats,
                            const std::string& test_language,
                            const std::string& train_language, int n_threads) {
  const TvExtractor extractor(model);
  IvectorSet set;
  set.rank = static_cast<std::uint32_t>(model.rank());
  set.records.resize(stats.size());
  parallel_items(stats.size(), n_threads, [&](std::size_t i) {
    IvectorRecord& rec = set.records[i];
    rec.utterance_id = stats[i].utterance_id;
    rec.speaker_id = stats[i].speaker_id;
    rec.test_language = test_language;
    rec.train_language = train_language;
    rec.w = extractor.extract(stats[i]).cast<float>();
  });
  return set;
}

namespace {
constexpr char kTvMagic[] = "LFET";
constexpr std::uint16_t kTvVersion = 1;
constexpr char kIvecMagic[] = "LFEI";
constexpr std::uint16_t kIvecVersion = 1;
}  // namespace

void write_tv(const std::filesystem::path& path, const TvModel& model) {
  std::ostringstream body;
  BinaryWriter w(body);
  w.magic(kTvMagic);
  w.u16(kTvVersion);
  w.u32(static_cast<std::uint32_t>(model.ubm.n_components()));
  w.u32(static_cast<std::uint32_t>(model.ubm.dim()));
  w.u32(static_cast<std::uint32_t>(model.rank()));
  write_gmm_fields(w, model.ubm);
  const RowMajorXd t = model.t;
  w.f64_array(
      std::span<const double>(t.data(), static_cast<std::size_t>(t.size())));
  atomic_write_file(path, body.str());
}

TvModel read_tv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kMissingFile, "cannot open ", path.string());
  BinaryReader r(in, path.string());
  r.expect_magic(kTvMagic);
  const auto version = r.u16();
  if (version != kTvVersion)
    raise(ErrorCode::kIoError, path.string(), ": unsupported version ",
          version);
  const int k = static_cast<int>(r.u32());
  const int d = static_cast<int>(r.u32());
  const int rank = static_cast<int>(r.u32());
  if (k < 1 || d < 1 || rank < 1)
    raise(ErrorCode::kIoError, path.string(), ": bad model shape");
  TvModel model;
  model.ubm = read_gmm_fields(r, k, d);
  RowMajorXd t(static_cast<Eigen::Index>(k) * d, rank);
  r.f64_array(std::span<double>(t.data(), static_cast<std::size_t>(t.size())));
  model.t = t;
  return model;
}

void write_ivectors(const std::filesystem::path& path, const IvectorSet& set) {
  std::ostringstream body;
  BinaryWriter w(body);
  w.magic(kIvecMagic);
  w.u16(kIvecVersion);
  w.u32(static_cast<std::uint32_t>(set.records.size()));
  w.u32(set.rank);
  for (const auto& rec : set.records) {
    if (rec.w.size() != static_cast<Eigen::Index>(set.rank))
      raise(ErrorCode::kDimensionMismatch, "i-vector for ", rec.utterance_id,
            " has size ", rec.w.size(), ", set claims ", set.rank);
    w.str(rec.utterance_id);
    w.str(rec.speaker_id);
    w.str(rec.test_language);
    w.str(rec.train_language);
    w.f32_array(std::span<const float>(rec.w.data(),
                                       static_cast<std::size_t>(rec.w.size())));
  }
  atomic_write_file(path, body.str());
}

IvectorSet read_ivectors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kMissingFile, "cannot open ", path.string());
  BinaryReader r(in, path.string());
  r.expect_magic(kIvecMagic);
  const auto version = r.u16();
  if (version != kIvecVersion)
    raise(ErrorCode::kIoError, path.string(), ": unsupported version ",
          version);
  IvectorSet set;
  const auto count = r.u32();
  set.rank = r.u32();
  set.records.resize(count);
  for (auto& rec : set.records) {
    rec.utterance_id = r.str();
    rec.speaker_id = r.str();
    rec.test_language = r.str();
    rec.train_language = r.str();
    rec.w.resize(static_cast<Eigen::Index>(set.rank));
    r.f32_array(std::span<float>(rec.w.data(),
                                 static_cast<std::size_t>(rec.w.size())));
  }
  return set;
}

}  // namespace lfe
