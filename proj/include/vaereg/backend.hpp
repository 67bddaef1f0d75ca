// vaereg/backend.hpp

// Copyright 2026  The vaereg Authors
//
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

// Scoring back-ends: whitening, length normalization, PCA, LDA, cosine
// scoring and PLDA (EM training plus closed-form log-likelihood ratios).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <unordered_map>
#include <string>
#include <vector>

#include "vaereg/binary_io.hpp"
#include "vaereg/data.hpp"
#include "vaereg/error.hpp"
#include "vaereg/linalg.hpp"

namespace vaereg {

// ---------------------------------------------------------------------------
// Moments.

inline Vector mean_of_rows(const Matrix &x) {
  Vector m(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += r[j];
  }
  for (auto &v : m) v /= static_cast<double>(x.rows());
  return m;
}

/// Population (1/N) covariance of the rows around `mean`.
inline Matrix covariance_of_rows(const Matrix &x, const Vector &mean) {
  Matrix c(x.cols(), x.cols());
  Vector d(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = r[j] - mean[j];
    add_outer(c, d, d);
  }
  return symmetrized(scaled(c, 1.0 / static_cast<double>(x.rows())));
}

struct ClassScatter {
  Vector mean;     // global mean
  Matrix within;   // (1/N) sum over utterances of (x - mu_s)(x - mu_s)^T
  Matrix between;  // (1/N) sum over utterances of (mu_s - mean)(mu_s - mean)^T
  std::size_t n_classes = 0;
};

inline ClassScatter class_scatter(const EmbeddingSet &data) {
  const Matrix x = data.matrix();
  ClassScatter s;
  s.mean = mean_of_rows(x);
  const std::size_t D = data.dim();
  s.within = Matrix(D, D);
  s.between = Matrix(D, D);
  Vector d(D), mu(D);
  for (const auto &group : data.speaker_groups()) {
    std::fill(mu.begin(), mu.end(), 0.0);
    for (auto i : group) {
      auto r = x.row(i);
      for (std::size_t j = 0; j < D; ++j) mu[j] += r[j];
    }
    for (auto &v : mu) v /= static_cast<double>(group.size());
    for (auto i : group) {
      auto r = x.row(i);
      for (std::size_t j = 0; j < D; ++j) d[j] = r[j] - mu[j];
      add_outer(s.within, d, d);
    }
    for (std::size_t j = 0; j < D; ++j) d[j] = mu[j] - s.mean[j];
    add_outer(s.between, d, d, static_cast<double>(group.size()));
    ++s.n_classes;
  }
  const double inv = 1.0 / static_cast<double>(x.rows());
  s.within = symmetrized(scaled(s.within, inv));
  s.between = symmetrized(scaled(s.between, inv));
  return s;
}

/// Adds 1e-6 * trace / D to the diagonal.
inline Matrix with_trace_ridge(const Matrix &a, double rel = 1e-6) {
  Matrix r = a;
  const double ridge = rel * trace(a) / static_cast<double>(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) r(i, i) += ridge;
  return r;
}

// ---------------------------------------------------------------------------
// Projections.

enum class ProjectionKind : std::uint8_t { kPca = 0, kLda = 1, kWhiten = 2 };

inline const char *projection_kind_name(ProjectionKind k) {
  switch (k) {
    case ProjectionKind::kPca: return "pca";
    case ProjectionKind::kLda: return "lda";
    case ProjectionKind::kWhiten: return "whiten";
  }
  return "?";
}

/// x -> basis * (x - mean)
struct Projection {
  Vector mean;
  Matrix basis;  // out x in
  ProjectionKind kind = ProjectionKind::kPca;

  std::size_t in_dim() const { return basis.cols(); }
  std::size_t out_dim() const { return basis.rows(); }
  bool operator==(const Projection &) const = default;
};

inline Vector project(const Projection &p, std::span<const double> x) {
  if (x.size() != p.in_dim() || p.mean.size() != p.in_dim())
    fail(Errc::kShapeMismatch, "project: input has dim " +
                                   std::to_string(x.size()) + ", projection expects " +
                                   std::to_string(p.in_dim()));
  Vector c(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) c[j] = x[j] - p.mean[j];
  return matvec(p.basis, c);
}

inline Vector length_normalize(std::span<const double> x) {
  const double n = norm2(x);
  if (!(n > 0.0)) fail(Errc::kZeroVector, "length_normalize: zero vector");
  Vector y(x.begin(), x.end());
  for (auto &v : y) v /= n;
  return y;
}

/// Projects every record, optionally length-normalizing the result.
inline EmbeddingSet project_set(const Projection &p, const EmbeddingSet &data,
                                bool normalize = false) {
  Matrix out(data.size(), p.out_dim());
  for (std::size_t i = 0; i < data.size(); ++i) {
    Vector y = project(p, data[i].vec);
    if (normalize) y = length_normalize(y);
    out.set_row(i, y);
  }
  return data.with_vectors(out);
}

inline EmbeddingSet length_normalize_set(const EmbeddingSet &data) {
  Matrix out(data.size(), data.dim());
  for (std::size_t i = 0; i < data.size(); ++i)
    out.set_row(i, length_normalize(data[i].vec));
  return data.with_vectors(out);
}

/// basis = Lambda^{-1/2} V^T of the population covariance.
inline Projection fit_whitener(const Matrix &x) {
  const std::size_t D = x.cols();
  if (x.rows() < D + 1)
    fail(Errc::kTooFewSamples, "whitener needs at least dim + 1 samples");
  Projection p;
  p.kind = ProjectionKind::kWhiten;
  p.mean = mean_of_rows(x);
  const SymEig eig = sym_eig(covariance_of_rows(x, p.mean));
  const double top = eig.values.front();
  if (!(top > 0.0) || eig.values.back() < 1e-10 * top)
    fail(Errc::kRankDeficient, "covariance is rank deficient");
  p.basis = Matrix(D, D);
  for (std::size_t k = 0; k < D; ++k) {
    const double s = 1.0 / std::sqrt(eig.values[k]);
    for (std::size_t j = 0; j < D; ++j) p.basis(k, j) = s * eig.vectors(j, k);
  }
  return p;
}

inline Projection fit_whitener(const EmbeddingSet &data) {
  return fit_whitener(data.matrix());
}

/// Rows are the leading eigenvectors of the population covariance.
inline Projection fit_pca(const EmbeddingSet &data, std::size_t out_dim) {
  if (out_dim == 0 || out_dim > data.dim())
    fail(Errc::kInvalidDim, "pca out_dim " + std::to_string(out_dim) +
                                " not in [1, " + std::to_string(data.dim()) + "]");
  if (data.size() < 2) fail(Errc::kTooFewSamples, "pca needs at least 2 samples");
  const Matrix x = data.matrix();
  Projection p;
  p.kind = ProjectionKind::kPca;
  p.mean = mean_of_rows(x);
  const SymEig eig = sym_eig(covariance_of_rows(x, p.mean));
  p.basis = Matrix(out_dim, data.dim());
  for (std::size_t k = 0; k < out_dim; ++k)
    for (std::size_t j = 0; j < data.dim(); ++j) p.basis(k, j) = eig.vectors(j, k);
  return p;
}

/// Whiten the (ridged) within-class covariance, then take the leading
/// principal directions of the whitened between-class covariance.
inline Projection fit_lda(const EmbeddingSet &data, std::size_t out_dim) {
  const ClassScatter sc = class_scatter(data);
  if (sc.n_classes < 2) fail(Errc::kInvalidDim, "lda needs at least 2 speakers");
  if (out_dim == 0 || out_dim > std::min(data.dim(), sc.n_classes - 1))
    fail(Errc::kInvalidDim, "lda out_dim " + std::to_string(out_dim) +
                                " exceeds min(dim, speakers - 1) = " +
                                std::to_string(std::min(data.dim(), sc.n_classes - 1)));
  const std::size_t D = data.dim();
  const SymEig we = sym_eig(with_trace_ridge(sc.within));
  if (!(we.values.back() > 1e-12 * std::max(we.values.front(), 0.0)) ||
      !(we.values.front() > 0.0))
    fail(Errc::kSingularWithin, "within-class covariance is singular");
  Matrix t(D, D);  // within whitening, rows scaled eigenvectors
  for (std::size_t k = 0; k < D; ++k) {
    const double s = 1.0 / std::sqrt(we.values[k]);
    for (std::size_t j = 0; j < D; ++j) t(k, j) = s * we.vectors(j, k);
  }
  const SymEig be = sym_eig(matmul_nt(matmul(t, sc.between), t));
  Projection p;
  p.kind = ProjectionKind::kLda;
  p.mean = sc.mean;
  p.basis = Matrix(out_dim, D);
  for (std::size_t k = 0; k < out_dim; ++k)
    for (std::size_t j = 0; j < D; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < D; ++i) s += be.vectors(i, k) * t(i, j);
      p.basis(k, j) = s;
    }
  return p;
}

// ---------------------------------------------------------------------------
// PLDA.

/// x = m + U y + eps, y ~ N(0, I), eps ~ N(0, W).
struct PldaModel {
  Vector m;
  Matrix U;  // D x r
  Matrix W;

  std::size_t dim() const { return m.size(); }
  std::size_t latent_dim() const { return U.cols(); }
  Matrix B() const { return matmul_nt(U, U); }
  bool operator==(const PldaModel &) const = default;
};

struct PldaFit {
  PldaModel model;
  std::vector<double> log_likelihood;  // initial model, then after each iteration
};

namespace detail {

struct PldaEStep {
  double log_likelihood = 0.0;
  Matrix cxz;  // sum_s S_s [y_s^T 1]
  Matrix czz;  // sum_s n_s E[[y;1][y;1]^T]
};

inline PldaEStep plda_e_step(const PldaModel &model, const Matrix &x,
                             const std::vector<std::vector<std::size_t>> &groups) {
  const std::size_t D = model.dim();
  const std::size_t r = model.latent_dim();
  const Matrix lw = cholesky(model.W);
  const double logdet_w = log_det_from_cholesky(lw);
  Matrix wiu(D, r);  // W^{-1} U
  for (std::size_t k = 0; k < r; ++k) {
    Vector col = cholesky_solve(lw, model.U.col_vector(k));
    for (std::size_t i = 0; i < D; ++i) wiu(i, k) = col[i];
  }
  const Matrix g = symmetrized(matmul_tn(model.U, wiu));

  PldaEStep out;
  out.cxz = Matrix(D, r + 1);
  out.czz = Matrix(r + 1, r + 1);
  Vector sum_raw(D), sum_c(D), d(D);
  for (const auto &group : groups) {
    const double n = static_cast<double>(group.size());
    std::fill(sum_raw.begin(), sum_raw.end(), 0.0);
    double quad = 0.0;
    for (auto i : group) {
      auto row = x.row(i);
      for (std::size_t j = 0; j < D; ++j) {
        sum_raw[j] += row[j];
        d[j] = row[j] - model.m[j];
      }
      const Vector h = solve_lower(lw, d);
      quad += dot(h, h);
    }
    for (std::size_t j = 0; j < D; ++j) sum_c[j] = sum_raw[j] - n * model.m[j];
    const Vector b = matvec_t(wiu, sum_c);
    Matrix prec = scaled(g, n);
    for (std::size_t k = 0; k < r; ++k) prec(k, k) += 1.0;
    const Matrix lp = cholesky(prec);
    const Vector y = cholesky_solve(lp, b);
    const Matrix cov = inverse_spd(prec);

    out.log_likelihood += -0.5 * (n * static_cast<double>(D) * kLog2Pi +
                                  n * logdet_w + log_det_from_cholesky(lp) + quad -
                                  dot(b, y));

    for (std::size_t i = 0; i < D; ++i) {
      for (std::size_t k = 0; k < r; ++k) out.cxz(i, k) += sum_raw[i] * y[k];
      out.cxz(i, r) += sum_raw[i];
    }
    for (std::size_t a = 0; a < r; ++a) {
      for (std::size_t c = 0; c < r; ++c)
        out.czz(a, c) += n * (cov(a, c) + y[a] * y[c]);
      out.czz(a, r) += n * y[a];
      out.czz(r, a) += n * y[a];
    }
    out.czz(r, r) += n;
  }
  return out;
}

}  // namespace detail

/// Log-likelihood of all data under the model, utterances of one speaker
/// sharing their latent code.
inline double plda_log_likelihood(const PldaModel &model, const EmbeddingSet &data) {
  return detail::plda_e_step(model, data.matrix(), data.speaker_groups()).log_likelihood;
}

/// Raises eigenvalues of W below 1e-6 * trace / D up to that floor. A no-op
/// for well-conditioned W.
inline Matrix floor_within(const Matrix &w) {
  const double floor = 1e-6 * trace(w) / static_cast<double>(w.rows());
  const SymEig e = sym_eig(w);
  if (e.values.back() >= floor) return w;
  Matrix out(w.rows(), w.cols());
  for (std::size_t k = 0; k < w.rows(); ++k) {
    const double lam = std::max(e.values[k], floor);
    Vector v = e.vectors.col_vector(k);
    add_outer(out, v, v, lam);
  }
  return symmetrized(out);
}

/// Runs `iters` EM iterations starting from `model`.
inline PldaFit refine_plda(PldaModel model, const EmbeddingSet &data, std::size_t iters) {
  const auto groups = data.speaker_groups();
  const std::size_t D = model.dim();
  const std::size_t r = model.latent_dim();
  if (data.dim() != D) fail(Errc::kShapeMismatch, "plda model and data dims differ");
  const Matrix x = data.matrix();

  Matrix sxx(D, D);
  for (std::size_t i = 0; i < x.rows(); ++i) add_outer(sxx, x.row(i), x.row(i));
  const double N = static_cast<double>(x.rows());

  PldaFit fit;
  for (std::size_t it = 0;; ++it) {
    const detail::PldaEStep e = detail::plda_e_step(model, x, groups);
    fit.log_likelihood.push_back(e.log_likelihood);
    if (it == iters) break;

    // [U m] = Cxz Czz^{-1};  W = (Sxx - [U m] Cxz^T) / N
    const Matrix loading = transpose(solve_spd(e.czz, transpose(e.cxz)));
    Matrix w = scaled(sub(sxx, matmul_nt(loading, e.cxz)), 1.0 / N);
    for (std::size_t i = 0; i < D; ++i) {
      for (std::size_t k = 0; k < r; ++k) model.U(i, k) = loading(i, k);
      model.m[i] = loading(i, r);
    }
    model.W = floor_within(symmetrized(w));
    try {
      (void)cholesky(model.W);
    } catch (const Error &) {
      fail(Errc::kDegenerateData, "within covariance collapsed at iteration " +
                                      std::to_string(it));
    }
  }
  fit.model = std::move(model);
  return fit;
}

/// EM for the linear-Gaussian model with exact per-speaker posteriors.
/// Initialization: m = sample mean, U = leading eigenvectors of the speaker-mean
/// covariance scaled by the square roots of their eigenvalues, W = within-class
/// covariance plus a 1e-6 * trace / D ridge.
inline PldaFit fit_plda(const EmbeddingSet &data, std::size_t latent_dim,
                        std::size_t iters) {
  const auto groups = data.speaker_groups();
  if (groups.size() < 2) fail(Errc::kDegenerateData, "plda needs at least 2 speakers");
  if (latent_dim < 1 || latent_dim > data.dim())
    fail(Errc::kInvalidDim, "plda latent_dim " + std::to_string(latent_dim) +
                                " not in [1, " + std::to_string(data.dim()) + "]");
  const std::size_t D = data.dim();
  const std::size_t r = latent_dim;
  const Matrix x = data.matrix();

  PldaModel model;
  model.m = mean_of_rows(x);
  {
    Matrix means(groups.size(), D);
    for (std::size_t s = 0; s < groups.size(); ++s) {
      auto row = means.row(s);
      for (auto i : groups[s]) {
        auto xr = x.row(i);
        for (std::size_t j = 0; j < D; ++j) row[j] += xr[j];
      }
      for (auto &v : row) v /= static_cast<double>(groups[s].size());
    }
    const SymEig be = sym_eig(covariance_of_rows(means, model.m));
    model.U = Matrix(D, r);
    for (std::size_t k = 0; k < r; ++k) {
      const double s = std::sqrt(std::max(be.values[k], 0.0));
      for (std::size_t i = 0; i < D; ++i) model.U(i, k) = s * be.vectors(i, k);
    }
  }
  model.W = with_trace_ridge(class_scatter(data).within);
  try {
    (void)cholesky(model.W);
  } catch (const Error &) {
    fail(Errc::kDegenerateData, "within-class covariance not positive definite");
  }
  return refine_plda(std::move(model), data, iters);
}

/// Precomputed quadratic form of the same-speaker log-likelihood ratio:
///   llr = 0.5 e'Qe + 0.5 t'Qt + e'Pt + c   (e, t centered on m)
/// with T = B + W, A = (T - B T^{-1} B)^{-1}, Q = T^{-1} - A, P = T^{-1} B A,
/// c = 0.5 ln|T| - 0.5 ln|T - B T^{-1} B|.
class PldaScorer {
 public:
  explicit PldaScorer(const PldaModel &model) : m_(model.m) {
    const std::size_t D = model.dim();
    if (model.U.rows() != D || model.W.rows() != D || model.W.cols() != D)
      fail(Errc::kShapeMismatch, "plda model shapes");
    const Matrix b = model.B();
    const Matrix t = symmetrized(add(b, model.W));
    const Matrix t_inv = inverse_spd(t);
    const Matrix s = symmetrized(sub(t, matmul(matmul(b, t_inv), b)));
    const Matrix a = inverse_spd(s);
    q_ = symmetrized(sub(t_inv, a));
    p_ = symmetrized(matmul(matmul(t_inv, b), a));
    c_ = 0.5 * log_det_spd(t) - 0.5 * log_det_spd(s);
  }

  double score(std::span<const double> e, std::span<const double> t) const {
    const std::size_t D = m_.size();
    if (e.size() != D || t.size() != D)
      fail(Errc::kShapeMismatch, "plda score: vector dims do not match model");
    Vector ec(D), tc(D);
    for (std::size_t j = 0; j < D; ++j) {
      ec[j] = e[j] - m_[j];
      tc[j] = t[j] - m_[j];
    }
    const Vector qe = matvec(q_, ec);
    const Vector qt = matvec(q_, tc);
    const Vector pt = matvec(p_, tc);
    return 0.5 * dot(ec, qe) + 0.5 * dot(tc, qt) + dot(ec, pt) + c_;
  }

 private:
  Vector m_;
  Matrix q_;
  Matrix p_;
  double c_ = 0.0;
};

inline double plda_score_pair(const PldaModel &model, std::span<const double> e,
                              std::span<const double> t) {
  return PldaScorer(model).score(e, t);
}

inline double cosine_score(std::span<const double> e, std::span<const double> t) {
  if (e.size() != t.size()) fail(Errc::kShapeMismatch, "cosine: dims differ");
  const double ne = norm2(e);
  const double nt = norm2(t);
  if (!(ne > 0.0) || !(nt > 0.0)) fail(Errc::kZeroVector, "cosine: zero vector");
  return std::clamp(dot(e, t) / (ne * nt), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Trial scoring.

struct ScoreSet {
  std::vector<double> scores;

  std::size_t size() const { return scores.size(); }
  bool operator==(const ScoreSet &) const = default;
};

using PairScorer =
    std::function<double(std::span<const double>, std::span<const double>)>;

inline ScoreSet score_trials(const EmbeddingSet &enroll, const EmbeddingSet &test,
                             const TrialList &trials, const PairScorer &scorer) {
  ScoreSet out;
  out.scores.reserve(trials.size());
  for (const auto &t : trials) {
    const auto ei = enroll.find(t.enroll);
    if (ei < 0) fail(Errc::kUnknownTrialId, "enroll id '" + t.enroll + "' not found");
    const auto ti = test.find(t.test);
    if (ti < 0) fail(Errc::kUnknownTrialId, "test id '" + t.test + "' not found");
    out.scores.push_back(scorer(enroll[static_cast<std::size_t>(ei)].vec,
                                test[static_cast<std::size_t>(ti)].vec));
  }
  return out;
}

inline ScoreSet plda_score_trials(const PldaModel &model, const EmbeddingSet &enroll,
                                  const EmbeddingSet &test, const TrialList &trials) {
  const PldaScorer scorer(model);
  return score_trials(enroll, test, trials,
                      [&](auto e, auto t) { return scorer.score(e, t); });
}

inline ScoreSet cosine_score_trials(const EmbeddingSet &enroll,
                                    const EmbeddingSet &test,
                                    const TrialList &trials) {
  return score_trials(enroll, test, trials,
                      [](auto e, auto t) { return cosine_score(e, t); });
}

// ---------------------------------------------------------------------------
// PLDA back-end: center, whiten, length-normalize, then PLDA.

struct PldaBackend {
  Projection whitener;
  PldaModel plda;

  Vector transform(std::span<const double> x) const {
    return length_normalize(project(whitener, x));
  }
  EmbeddingSet transform(const EmbeddingSet &data) const {
    return project_set(whitener, data, true);
  }
};

struct PldaBackendFit {
  PldaBackend backend;
  std::vector<double> log_likelihood;
};

inline PldaBackendFit fit_plda_backend(const EmbeddingSet &data,
                                       std::size_t latent_dim, std::size_t iters) {
  PldaBackendFit out;
  out.backend.whitener = fit_whitener(data);
  PldaFit fit = fit_plda(out.backend.transform(data), latent_dim, iters);
  out.backend.plda = std::move(fit.model);
  out.log_likelihood = std::move(fit.log_likelihood);
  return out;
}

inline ScoreSet plda_backend_score_trials(const PldaBackend &backend,
                                          const EmbeddingSet &enroll,
                                          const EmbeddingSet &test,
                                          const TrialList &trials) {
  return plda_score_trials(backend.plda, backend.transform(enroll),
                           backend.transform(test), trials);
}

// ---------------------------------------------------------------------------
// "PRJ1": u8 kind, u32 out, u32 in, mean (in), basis row-major (out x in).
// "PLD1": u32 D, u32 r, m, U row-major, W row-major, u8 has_whitener,
//         then a PRJ1 blob when set.

inline void write_projection(std::ostream &os, const Projection &p) {
  io::write_magic(os, "PRJ1");
  io::write_u8(os, static_cast<std::uint8_t>(p.kind));
  io::write_u32(os, static_cast<std::uint32_t>(p.out_dim()));
  io::write_u32(os, static_cast<std::uint32_t>(p.in_dim()));
  for (double v : p.mean) io::write_f64(os, v);
  for (double v : p.basis.data()) io::write_f64(os, v);
}

inline Projection read_projection(std::istream &is) {
  io::expect_magic(is, "PRJ1");
  Projection p;
  const std::uint8_t kind = io::read_u8(is);
  if (kind > 2) fail(Errc::kParseError, "PRJ1 kind");
  p.kind = static_cast<ProjectionKind>(kind);
  const std::uint32_t out = io::read_u32(is);
  const std::uint32_t in = io::read_u32(is);
  p.mean.resize(in);
  for (auto &v : p.mean) v = io::read_f64(is);
  p.basis = Matrix(out, in);
  for (auto &v : p.basis.data()) v = io::read_f64(is);
  return p;
}

inline void write_plda(std::ostream &os, const PldaModel &m,
                       const Projection *whitener = nullptr) {
  io::write_magic(os, "PLD1");
  io::write_u32(os, static_cast<std::uint32_t>(m.dim()));
  io::write_u32(os, static_cast<std::uint32_t>(m.latent_dim()));
  for (double v : m.m) io::write_f64(os, v);
  for (double v : m.U.data()) io::write_f64(os, v);
  for (double v : m.W.data()) io::write_f64(os, v);
  io::write_u8(os, whitener ? 1 : 0);
  if (whitener) write_projection(os, *whitener);
}

struct PldaFile {
  PldaModel model;
  std::optional<Projection> whitener;
};

inline PldaFile read_plda(std::istream &is) {
  io::expect_magic(is, "PLD1");
  PldaFile f;
  const std::uint32_t D = io::read_u32(is);
  const std::uint32_t r = io::read_u32(is);
  f.model.m.resize(D);
  for (auto &v : f.model.m) v = io::read_f64(is);
  f.model.U = Matrix(D, r);
  for (auto &v : f.model.U.data()) v = io::read_f64(is);
  f.model.W = Matrix(D, D);
  for (auto &v : f.model.W.data()) v = io::read_f64(is);
  if (io::read_u8(is) != 0) f.whitener = read_projection(is);
  return f;
}

inline void save_projection(const std::string &path, const Projection &p) {
  auto os = io::open_out(path, true);
  write_projection(os, p);
}

inline Projection load_projection(const std::string &path) {
  auto is = io::open_in(path, true);
  return read_projection(is);
}

inline void save_plda_backend(const std::string &path, const PldaBackend &b) {
  auto os = io::open_out(path, true);
  write_plda(os, b.plda, &b.whitener);
}

inline PldaFile load_plda(const std::string &path) {
  auto is = io::open_in(path, true);
  return read_plda(is);
}

// Score files: "enroll test score" with six decimals.

inline void write_scores(std::ostream &os, const TrialList &trials,
                         const ScoreSet &scores) {
  if (trials.size() != scores.size())
    fail(Errc::kShapeMismatch, "score count does not match trial count");
  char buf[64];
  for (std::size_t i = 0; i < trials.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f", scores.scores[i]);
    os << trials[i].enroll << ' ' << trials[i].test << ' ' << buf << '\n';
  }
}

inline void save_scores(const std::string &path, const TrialList &trials,
                        const ScoreSet &scores) {
  auto os = io::open_out(path, false);
  write_scores(os, trials, scores);
}

/// Reads a score file and aligns it to `trials` by (enroll, test).
inline ScoreSet load_scores(const std::string &path, const TrialList &trials) {
  auto is = io::open_in(path, false);
  std::unordered_map<std::string, double> by_pair;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string a, b, s, extra;
    if (!(ls >> a)) continue;
    double v;
    if (!(ls >> b >> s) || (ls >> extra) || !parse_double(s, v))
      fail(Errc::kParseError, "line " + std::to_string(lineno) +
                                  ": expected 'enroll test score'");
    by_pair[a + '\n' + b] = v;
  }
  ScoreSet out;
  for (const auto &t : trials) {
    auto it = by_pair.find(t.enroll + '\n' + t.test);
    if (it == by_pair.end())
      fail(Errc::kUnknownTrialId, "no score for trial (" + t.enroll + ", " + t.test + ")");
    out.scores.push_back(it->second);
  }
  return out;
}

}  // namespace vaereg
