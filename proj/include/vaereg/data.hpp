// vaereg/data.hpp

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

// Labeled embedding sets, trial lists, their file formats, and the seeded
// synthetic generator used in place of real speaker corpora.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "vaereg/binary_io.hpp"
#include "vaereg/error.hpp"
#include "vaereg/linalg.hpp"
#include "vaereg/rng.hpp"

namespace vaereg {

struct EmbeddingRecord {
  std::string utt;
  std::string spk;
  Vector vec;
  bool operator==(const EmbeddingRecord &) const = default;
};

namespace detail {

inline bool valid_token(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id)
    if (c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r' ||
        c == '\v' || c == '\f')
      return false;
  return true;
}

}  // namespace detail

class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  explicit EmbeddingSet(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<EmbeddingRecord> &records() const { return records_; }
  const EmbeddingRecord &operator[](std::size_t i) const { return records_[i]; }

  void add(std::string utt, std::string spk, Vector vec) {
    if (!detail::valid_token(utt))
      fail(Errc::kParseError, "invalid utterance id '" + utt + "'");
    if (!detail::valid_token(spk))
      fail(Errc::kParseError, "invalid speaker id '" + spk + "'");
    if (records_.empty() && dim_ == 0) dim_ = vec.size();
    if (vec.size() != dim_)
      fail(Errc::kDimMismatch, "utterance '" + utt + "' has dim " +
                                   std::to_string(vec.size()) + ", expected " +
                                   std::to_string(dim_));
    if (!all_finite(vec))
      fail(Errc::kParseError, "utterance '" + utt + "' has non-finite values");
    if (!index_.emplace(utt, records_.size()).second)
      fail(Errc::kDuplicateUtteranceId, "duplicate utterance id '" + utt + "'");
    records_.push_back({std::move(utt), std::move(spk), std::move(vec)});
  }

  /// Index of an utterance id, or -1.
  std::ptrdiff_t find(const std::string &utt) const {
    auto it = index_.find(utt);
    return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
  }

  /// Vectors as rows of a matrix, in record order.
  Matrix matrix() const {
    Matrix m(size(), dim_);
    for (std::size_t i = 0; i < size(); ++i) m.set_row(i, records_[i].vec);
    return m;
  }

  /// Speaker ids in first-appearance order.
  std::vector<std::string> speakers() const {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto &r : records_)
      if (seen.insert(r.spk).second) out.push_back(r.spk);
    return out;
  }

  /// Record indices grouped per speaker, speakers in first-appearance order.
  std::vector<std::vector<std::size_t>> speaker_groups() const {
    std::vector<std::vector<std::size_t>> groups;
    std::unordered_map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      auto [it, inserted] = slot.emplace(records_[i].spk, groups.size());
      if (inserted) groups.emplace_back();
      groups[it->second].push_back(i);
    }
    return groups;
  }

  /// Same ids and order with new vectors (all of one new dimension).
  EmbeddingSet with_vectors(const Matrix &rows) const {
    if (rows.rows() != size())
      fail(Errc::kShapeMismatch, "with_vectors: row count");
    EmbeddingSet out(rows.cols());
    for (std::size_t i = 0; i < size(); ++i)
      out.add(records_[i].utt, records_[i].spk, rows.row_vector(i));
    return out;
  }

  bool operator==(const EmbeddingSet &o) const {
    return dim_ == o.dim_ && records_ == o.records_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<EmbeddingRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Splits by speaker: the first `n_first` speakers (in order of appearance)
/// go to the first set, the rest to the second.
inline std::pair<EmbeddingSet, EmbeddingSet> split_by_speaker(
    const EmbeddingSet &data, std::size_t n_first) {
  std::unordered_map<std::string, std::size_t> rank;
  for (const auto &s : data.speakers()) rank.emplace(s, rank.size());
  EmbeddingSet a(data.dim()), b(data.dim());
  for (const auto &r : data.records())
    (rank.at(r.spk) < n_first ? a : b).add(r.utt, r.spk, r.vec);
  return {std::move(a), std::move(b)};
}

// ---------------------------------------------------------------------------
// Embedding files.

enum class EmbeddingFormat { kCsv, kBinary };

/// `.csv` suffix selects CSV, anything else binary.
inline EmbeddingFormat format_for_path(const std::string &path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0
             ? EmbeddingFormat::kCsv
             : EmbeddingFormat::kBinary;
}

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view s, double &out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline void write_embeddings_csv(std::ostream &os, const EmbeddingSet &set) {
  os << "utt,spk";
  for (std::size_t j = 0; j < set.dim(); ++j) os << ",d" << j;
  os << '\n';
  for (const auto &r : set.records()) {
    os << r.utt << ',' << r.spk;
    for (double x : r.vec) os << ',' << format_double(x);
    os << '\n';
  }
}

inline EmbeddingSet read_embeddings_csv(std::istream &is) {
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  bool have_header = false;
  EmbeddingSet set;
  auto split = [](const std::string &s) {
    std::vector<std::string_view> f;
    std::string_view v(s);
    std::size_t start = 0;
    while (true) {
      auto pos = v.find(',', start);
      f.push_back(v.substr(start, pos == std::string_view::npos
                                      ? std::string_view::npos
                                      : pos - start));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    return f;
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line);
    if (!have_header) {
      if (fields.size() < 3 || fields[0] != "utt" || fields[1] != "spk")
        fail(Errc::kParseError,
             "line " + std::to_string(lineno) + ": expected header utt,spk,d0,...");
      dim = fields.size() - 2;
      set = EmbeddingSet(dim);
      have_header = true;
      continue;
    }
    if (fields.size() != dim + 2)
      fail(Errc::kParseError, "line " + std::to_string(lineno) + ": " +
                                  std::to_string(fields.size()) +
                                  " fields, expected " +
                                  std::to_string(dim + 2));
    Vector v(dim);
    for (std::size_t j = 0; j < dim; ++j)
      if (!parse_double(fields[j + 2], v[j]))
        fail(Errc::kParseError, "line " + std::to_string(lineno) +
                                    ": bad number '" +
                                    std::string(fields[j + 2]) + "'");
    try {
      set.add(std::string(fields[0]), std::string(fields[1]), std::move(v));
    } catch (const Error &e) {
      if (e.code() == Errc::kParseError)
        fail(Errc::kParseError, "line " + std::to_string(lineno) + ": " + e.what());
      throw;
    }
  }
  if (set.empty()) fail(Errc::kEmptySet, "no embedding records");
  return set;
}

// "EMB1", u32 count, u32 dim, then per record length-prefixed utt and spk
// ids followed by dim float64 values.
inline void write_embeddings_binary(std::ostream &os, const EmbeddingSet &set) {
  io::write_magic(os, "EMB1");
  io::write_u32(os, static_cast<std::uint32_t>(set.size()));
  io::write_u32(os, static_cast<std::uint32_t>(set.dim()));
  for (const auto &r : set.records()) {
    io::write_string(os, r.utt);
    io::write_string(os, r.spk);
    for (double x : r.vec) io::write_f64(os, x);
  }
}

inline EmbeddingSet read_embeddings_binary(std::istream &is) {
  if (is.peek() == std::char_traits<char>::eof())
    fail(Errc::kEmptySet, "empty embedding file");
  io::expect_magic(is, "EMB1");
  const std::uint32_t count = io::read_u32(is);
  const std::uint32_t dim = io::read_u32(is);
  if (count == 0) fail(Errc::kEmptySet, "no embedding records");
  EmbeddingSet set(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string utt = io::read_string(is);
    std::string spk = io::read_string(is);
    Vector v(dim);
    for (auto &x : v) x = io::read_f64(is);
    set.add(std::move(utt), std::move(spk), std::move(v));
  }
  return set;
}

inline void save_embeddings(const std::string &path, const EmbeddingSet &set,
                            EmbeddingFormat format) {
  auto os = io::open_out(path, format == EmbeddingFormat::kBinary);
  if (format == EmbeddingFormat::kCsv)
    write_embeddings_csv(os, set);
  else
    write_embeddings_binary(os, set);
  if (!os) fail(Errc::kIoError, "write failed for '" + path + "'");
}

inline void save_embeddings(const std::string &path, const EmbeddingSet &set) {
  save_embeddings(path, set, format_for_path(path));
}

inline EmbeddingSet load_embeddings(const std::string &path,
                                    EmbeddingFormat format) {
  auto is = io::open_in(path, format == EmbeddingFormat::kBinary);
  return format == EmbeddingFormat::kCsv ? read_embeddings_csv(is)
                                         : read_embeddings_binary(is);
}

inline EmbeddingSet load_embeddings(const std::string &path) {
  return load_embeddings(path, format_for_path(path));
}

// ---------------------------------------------------------------------------
// Trials.

struct Trial {
  std::string enroll;
  std::string test;
  bool target = false;
  bool operator==(const Trial &) const = default;
};

class TrialList {
 public:
  void add(std::string enroll, std::string test, bool target) {
    if (enroll.empty() || test.empty())
      fail(Errc::kParseError, "empty trial id");
    if (!pairs_.insert(enroll + '\n' + test).second)
      fail(Errc::kDuplicatePair, "duplicate trial (" + enroll + ", " + test + ")");
    trials_.push_back({std::move(enroll), std::move(test), target});
  }

  std::size_t size() const { return trials_.size(); }
  bool empty() const { return trials_.empty(); }
  const Trial &operator[](std::size_t i) const { return trials_[i]; }
  const std::vector<Trial> &trials() const { return trials_; }
  auto begin() const { return trials_.begin(); }
  auto end() const { return trials_.end(); }

  std::size_t count_targets() const {
    return static_cast<std::size_t>(std::count_if(
        trials_.begin(), trials_.end(), [](const Trial &t) { return t.target; }));
  }

  bool operator==(const TrialList &o) const { return trials_ == o.trials_; }

 private:
  std::vector<Trial> trials_;
  std::unordered_set<std::string> pairs_;
};

inline TrialList read_trials(std::istream &is) {
  TrialList list;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string a, b, label, extra;
    if (!(ls >> a)) continue;
    if (!(ls >> b >> label) || (ls >> extra))
      fail(Errc::kParseError, "line " + std::to_string(lineno) +
                                  ": expected 'enroll test target|nontarget'");
    bool target;
    if (label == "target")
      target = true;
    else if (label == "nontarget")
      target = false;
    else
      fail(Errc::kParseError, "line " + std::to_string(lineno) +
                                  ": bad label '" + label + "'");
    list.add(std::move(a), std::move(b), target);
  }
  return list;
}

inline TrialList load_trials(const std::string &path) {
  auto is = io::open_in(path, false);
  return read_trials(is);
}

inline void write_trials(std::ostream &os, const TrialList &list) {
  for (const auto &t : list)
    os << t.enroll << ' ' << t.test << ' '
       << (t.target ? "target" : "nontarget") << '\n';
}

inline void save_trials(const std::string &path, const TrialList &list) {
  auto os = io::open_out(path, false);
  write_trials(os, list);
}

/// Samples same-speaker and different-speaker pairs uniformly without
/// replacement. A pair (i, j) always has i < j in record order, so an
/// utterance is never paired with itself.
inline TrialList make_trials(const EmbeddingSet &data, std::size_t n_target,
                             std::size_t n_nontarget, std::uint64_t seed) {
  const std::size_t n = data.size();
  std::vector<std::pair<std::uint32_t, std::uint32_t>> same;
  std::uint64_t total_pairs = n < 2 ? 0 : std::uint64_t(n) * (n - 1) / 2;
  for (const auto &group : data.speaker_groups())
    for (std::size_t a = 0; a < group.size(); ++a)
      for (std::size_t b = a + 1; b < group.size(); ++b)
        same.emplace_back(static_cast<std::uint32_t>(group[a]),
                          static_cast<std::uint32_t>(group[b]));
  const std::uint64_t n_diff = total_pairs - same.size();
  if (n_target > same.size())
    fail(Errc::kInsufficientPairs,
         "requested " + std::to_string(n_target) + " target trials, only " +
             std::to_string(same.size()) + " same-speaker pairs exist");
  if (n_nontarget > n_diff)
    fail(Errc::kInsufficientPairs,
         "requested " + std::to_string(n_nontarget) +
             " nontarget trials, only " + std::to_string(n_diff) +
             " different-speaker pairs exist");

  Rng rng(seed);
  // Partial Fisher-Yates over the same-speaker pairs.
  for (std::size_t k = 0; k < n_target; ++k) {
    const std::size_t pick = k + static_cast<std::size_t>(rng.below(same.size() - k));
    std::swap(same[k], same[pick]);
  }

  std::vector<std::pair<std::uint32_t, std::uint32_t>> diff;
  if (n_nontarget * 2 > n_diff) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (data[i].spk != data[j].spk)
          diff.emplace_back(static_cast<std::uint32_t>(i),
                            static_cast<std::uint32_t>(j));
    for (std::size_t k = 0; k < n_nontarget; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(rng.below(diff.size() - k));
      std::swap(diff[k], diff[pick]);
    }
    diff.resize(n_nontarget);
  } else {
    std::unordered_set<std::uint64_t> taken;
    while (diff.size() < n_nontarget) {
      auto i = static_cast<std::uint32_t>(rng.below(n));
      auto j = static_cast<std::uint32_t>(rng.below(n));
      if (i == j || data[i].spk == data[j].spk) continue;
      if (i > j) std::swap(i, j);
      if (taken.insert((std::uint64_t(i) << 32) | j).second)
        diff.emplace_back(i, j);
    }
  }

  TrialList list;
  for (std::size_t k = 0; k < n_target; ++k)
    list.add(data[same[k].first].utt, data[same[k].second].utt, true);
  for (const auto &[i, j] : diff) list.add(data[i].utt, data[j].utt, false);
  return list;
}

// ---------------------------------------------------------------------------
// Synthetic generator.

enum class Warp { kIdentity, kCubic, kExp };

inline Warp warp_from_name(const std::string &s) {
  if (s == "identity") return Warp::kIdentity;
  if (s == "cubic") return Warp::kCubic;
  if (s == "exp") return Warp::kExp;
  fail(Errc::kInvalidConfig, "unknown warp '" + s + "'");
}

inline const char *warp_name(Warp w) {
  switch (w) {
    case Warp::kIdentity: return "identity";
    case Warp::kCubic: return "cubic";
    case Warp::kExp: return "exp";
  }
  return "?";
}

/// Elementwise warp; strictly increasing for strength >= 0.
inline double apply_warp(Warp w, double strength, double t) {
  switch (w) {
    case Warp::kIdentity: return t;
    case Warp::kCubic: return t + strength * t * t * t;
    case Warp::kExp:
      if (strength == 0.0) return t;
      return std::copysign(std::expm1(strength * std::abs(t)) / strength, t);
  }
  return t;
}

struct SynthConfig {
  std::size_t n_speakers = 200;
  std::size_t utts_per_speaker = 10;
  std::size_t obs_dim = 20;
  std::size_t latent_dim = 5;
  double within_scale = 1.0;
  double loading_scale = 1.0;
  double loading_decay = 1.0;  // column k of U scaled by (k+1)^-decay
  Warp warp = Warp::kCubic;
  double warp_strength = 0.2;
  std::uint64_t seed = 0;
};

struct GroundTruth {
  Vector m;
  Matrix U;  // obs_dim x latent_dim
  Matrix W;
  Matrix R;  // rotation applied after the warp
  Matrix speaker_codes;  // n_speakers x latent_dim
};

struct SynthResult {
  EmbeddingSet data;
  GroundTruth truth;
};

inline std::string speaker_name(std::size_t s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%05zu", s);
  return buf;
}

/// phi = m + U y_s + eps with y_s ~ N(0, I), eps ~ N(0, W); the emitted vector
/// is R h(phi) with h the elementwise warp.
inline SynthResult generate_synthetic(const SynthConfig &cfg) {
  if (cfg.n_speakers < 1 || cfg.utts_per_speaker < 1 || cfg.obs_dim < 1 ||
      cfg.latent_dim < 1)
    fail(Errc::kInvalidConfig, "synth counts must be >= 1");
  if (cfg.latent_dim > cfg.obs_dim)
    fail(Errc::kInvalidConfig, "latent_dim must not exceed obs_dim");
  if (!(cfg.within_scale > 0.0))
    fail(Errc::kInvalidConfig, "within_scale must be > 0");
  if (!(cfg.warp_strength >= 0.0))
    fail(Errc::kInvalidConfig, "warp_strength must be >= 0");

  const std::size_t D = cfg.obs_dim;
  const std::size_t r = cfg.latent_dim;
  Rng rng(cfg.seed);
  GroundTruth gt;

  gt.m.resize(D);
  for (auto &x : gt.m) x = rng.normal();

  gt.U = Matrix(D, r);
  for (std::size_t i = 0; i < D; ++i)
    for (std::size_t k = 0; k < r; ++k)
      gt.U(i, k) = cfg.loading_scale * rng.normal() /
                   std::pow(static_cast<double>(k + 1), cfg.loading_decay);

  Matrix a(D, D);
  for (auto &x : a.data()) x = rng.normal();
  gt.W = matmul_nt(a, a);
  for (std::size_t i = 0; i < D; ++i)
    for (std::size_t j = 0; j < D; ++j)
      gt.W(i, j) = cfg.within_scale *
                   (gt.W(i, j) / static_cast<double>(D) + (i == j ? 0.1 : 0.0));
  gt.W = symmetrized(gt.W);

  // Rotation: Gram-Schmidt on the columns of a Gaussian matrix.
  Matrix g(D, D);
  for (auto &x : g.data()) x = rng.normal();
  gt.R = Matrix(D, D);
  for (std::size_t c = 0; c < D; ++c) {
    Vector col = g.col_vector(c);
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t p = 0; p < c; ++p) {
        Vector q = gt.R.col_vector(p);
        const double proj = dot(col, q);
        for (std::size_t i = 0; i < D; ++i) col[i] -= proj * q[i];
      }
    const double nrm = norm2(col);
    for (std::size_t i = 0; i < D; ++i) gt.R(i, c) = col[i] / nrm;
  }

  const Matrix chol_w = cholesky(gt.W);
  gt.speaker_codes = Matrix(cfg.n_speakers, r);
  EmbeddingSet set(D);
  Vector phi(D), eps(D), z(D);
  for (std::size_t s = 0; s < cfg.n_speakers; ++s) {
    auto y = gt.speaker_codes.row(s);
    for (auto &v : y) v = rng.normal();
    const Vector speaker_center = add(gt.m, matvec(gt.U, y));
    const std::string spk = speaker_name(s);
    for (std::size_t u = 0; u < cfg.utts_per_speaker; ++u) {
      for (auto &e : z) e = rng.normal();
      for (std::size_t i = 0; i < D; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k <= i; ++k) acc += chol_w(i, k) * z[k];
        eps[i] = acc;
      }
      for (std::size_t i = 0; i < D; ++i)
        phi[i] = apply_warp(cfg.warp, cfg.warp_strength, speaker_center[i] + eps[i]);
      char utt[48];
      std::snprintf(utt, sizeof(utt), "%s-u%03zu", spk.c_str(), u);
      set.add(utt, spk, matvec(gt.R, phi));
    }
  }
  return {std::move(set), std::move(gt)};
}

}  // namespace vaereg
