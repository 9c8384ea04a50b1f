#ifndef SIGKIT_MEASURES_HPP
#define SIGKIT_MEASURES_HPP

// Per-example inputs for paired comparisons and the corpus-level measures
// computed from them. Non-decomposable measures (precision, recall, F) are
// carried as per-example count vectors so that any resample can re-aggregate
// the counts instead of averaging per-example scores.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sigkit/errors.hpp"

namespace sigkit {

enum class Side { a, b };

namespace detail {

inline void require_unique_ids(const std::vector<std::string>& ids) {
  std::unordered_set<std::string> seen;
  seen.reserve(ids.size());
  for (const auto& id : ids) {
    if (!seen.insert(id).second) fail(ErrorKind::data_error, "duplicate example id '" + id + "'");
  }
}

inline std::vector<std::string> default_ids(std::size_t n) {
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i);
  return ids;
}

}  // namespace detail

/// Id-aligned real-valued scores of systems A and B on the same examples.
class PairedScores {
 public:
  PairedScores(std::vector<std::string> ids, std::vector<double> a, std::vector<double> b)
      : ids_(std::move(ids)), a_(std::move(a)), b_(std::move(b)) {
    if (a_.empty()) fail(ErrorKind::empty_sample, "paired scores are empty");
    if (a_.size() != b_.size() || a_.size() != ids_.size()) {
      fail(ErrorKind::data_error, "paired scores have misaligned lengths");
    }
    for (std::size_t i = 0; i < a_.size(); ++i) {
      if (!std::isfinite(a_[i]) || !std::isfinite(b_[i])) {
        fail(ErrorKind::data_error, "non-finite score for example '" + ids_[i] + "'");
      }
    }
    detail::require_unique_ids(ids_);
  }

  /// Ids default to "0", "1", ...
  PairedScores(const std::vector<double>& a, const std::vector<double>& b)
      : PairedScores(detail::default_ids(a.size()), a, b) {}

  std::size_t size() const noexcept { return a_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::span<const double> a() const noexcept { return a_; }
  std::span<const double> b() const noexcept { return b_; }
  std::span<const double> side(Side s) const noexcept { return s == Side::a ? a() : b(); }

  /// a_i - b_i for every example.
  std::vector<double> deltas() const {
    std::vector<double> d(a_.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = a_[i] - b_[i];
    return d;
  }

  /// Systems exchanged.
  PairedScores swapped() const { return PairedScores(ids_, b_, a_); }

 private:
  std::vector<std::string> ids_;
  std::vector<double> a_;
  std::vector<double> b_;
};

/// How a summed count vector becomes a corpus-level measure.
class Combiner {
 public:
  enum class Kind { mean, accuracy, precision, recall, f_beta, ratio };

  static Combiner mean() { return Combiner(Kind::mean); }
  static Combiner accuracy() { return Combiner(Kind::accuracy); }
  static Combiner precision() { return Combiner(Kind::precision); }
  static Combiner recall() { return Combiner(Kind::recall); }
  static Combiner f_beta(double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) fail(ErrorKind::invalid_argument, "f_beta requires beta > 0");
    Combiner c(Kind::f_beta);
    c.beta_ = beta;
    return c;
  }
  static Combiner ratio(std::size_t numerator, std::size_t denominator, std::size_t arity) {
    if (numerator >= arity || denominator >= arity) fail(ErrorKind::invalid_argument, "ratio index out of range");
    Combiner c(Kind::ratio);
    c.numerator_ = numerator;
    c.denominator_ = denominator;
    c.arity_ = arity;
    return c;
  }

  Kind kind() const noexcept { return kind_; }
  double beta() const noexcept { return beta_; }
  std::size_t numerator() const noexcept { return numerator_; }
  std::size_t denominator() const noexcept { return denominator_; }

  /// Count-vector width the combiner reads: 1 for mean, 2 for accuracy
  /// (correct, total), 3 for precision/recall/F as (tp, fp, fn).
  std::size_t arity() const noexcept {
    switch (kind_) {
      case Kind::mean: return 1;
      case Kind::accuracy: return 2;
      case Kind::precision:
      case Kind::recall:
      case Kind::f_beta: return 3;
      case Kind::ratio: return arity_;
    }
    return 0;
  }

  std::string name() const {
    switch (kind_) {
      case Kind::mean: return "mean";
      case Kind::accuracy: return "accuracy";
      case Kind::precision: return "precision";
      case Kind::recall: return "recall";
      case Kind::f_beta: return beta_ == 1.0 ? "f1" : "fbeta:" + std::to_string(beta_);
      case Kind::ratio: return "ratio:" + std::to_string(numerator_) + ":" + std::to_string(denominator_);
    }
    return "unknown";
  }

  friend bool operator==(const Combiner&, const Combiner&) = default;

 private:
  explicit Combiner(Kind kind) : kind_(kind) {}

  Kind kind_;
  double beta_ = 1.0;
  std::size_t numerator_ = 0;
  std::size_t denominator_ = 1;
  std::size_t arity_ = 2;
};

/// A measure value. `degenerate` marks an empty denominator, reported as 0.
struct Measured {
  double value = 0.0;
  bool degenerate = false;

  friend bool operator==(const Measured&, const Measured&) = default;
};

/// Applies the combiner to summed counts. `examples` is the number of
/// summed rows and is only read by the mean combiner.
template <class Count>
Measured combine(std::span<const Count> totals, const Combiner& combiner, std::size_t examples = 1) {
  if (totals.size() != combiner.arity()) fail(ErrorKind::invalid_argument, "count arity does not match combiner");
  const auto at = [&](std::size_t i) { return static_cast<double>(totals[i]); };
  const auto safe_ratio = [](double num, double den) {
    return den == 0.0 ? Measured{0.0, true} : Measured{num / den, false};
  };
  switch (combiner.kind()) {
    case Combiner::Kind::mean:
      if (examples == 0) fail(ErrorKind::empty_sample, "mean over zero examples");
      return {at(0) / static_cast<double>(examples), false};
    case Combiner::Kind::accuracy:
      return safe_ratio(at(0), at(1));
    case Combiner::Kind::precision:
      return safe_ratio(at(0), at(0) + at(1));
    case Combiner::Kind::recall:
      return safe_ratio(at(0), at(0) + at(2));
    case Combiner::Kind::f_beta: {
      const Measured p = safe_ratio(at(0), at(0) + at(1));
      const Measured r = safe_ratio(at(0), at(0) + at(2));
      if (p.degenerate || r.degenerate) return {0.0, true};
      const double b2 = combiner.beta() * combiner.beta();
      const double den = b2 * p.value + r.value;
      // tp = 0 with both denominators nonzero: P = R = 0, F defined as 0.
      if (den == 0.0) return {0.0, false};
      return {(1.0 + b2) * p.value * r.value / den, false};
    }
    case Combiner::Kind::ratio:
      return safe_ratio(at(combiner.numerator()), at(combiner.denominator()));
  }
  return {};
}

inline Measured combine(std::initializer_list<std::int64_t> totals, const Combiner& combiner,
                        std::size_t examples = 1) {
  return combine(std::span<const std::int64_t>(totals.begin(), totals.size()), combiner, examples);
}

/// Per-example count vectors for systems A and B plus the combiner that
/// turns their sums into the corpus measure.
class SufficientStats {
 public:
  /// `a_counts` and `b_counts` hold one vector per example, all of width
  /// combiner.arity().
  SufficientStats(std::vector<std::string> ids, const std::vector<std::vector<std::int64_t>>& a_counts,
                  const std::vector<std::vector<std::int64_t>>& b_counts, Combiner combiner)
      : ids_(std::move(ids)), arity_(combiner.arity()), combiner_(combiner) {
    if (a_counts.empty()) fail(ErrorKind::empty_sample, "sufficient statistics are empty");
    if (a_counts.size() != b_counts.size() || a_counts.size() != ids_.size()) {
      fail(ErrorKind::data_error, "sufficient statistics have misaligned lengths");
    }
    a_.reserve(a_counts.size() * arity_);
    b_.reserve(b_counts.size() * arity_);
    for (std::size_t i = 0; i < a_counts.size(); ++i) {
      if (a_counts[i].size() != arity_ || b_counts[i].size() != arity_) {
        fail(ErrorKind::data_error, "count vector arity mismatch for example '" + ids_[i] + "'");
      }
      for (std::size_t j = 0; j < arity_; ++j) {
        if (a_counts[i][j] < 0 || b_counts[i][j] < 0) {
          fail(ErrorKind::data_error, "negative count for example '" + ids_[i] + "'");
        }
        a_.push_back(a_counts[i][j]);
        b_.push_back(b_counts[i][j]);
      }
    }
    detail::require_unique_ids(ids_);
  }

  SufficientStats(const std::vector<std::vector<std::int64_t>>& a_counts,
                  const std::vector<std::vector<std::int64_t>>& b_counts, Combiner combiner)
      : SufficientStats(detail::default_ids(a_counts.size()), a_counts, b_counts, combiner) {}

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t arity() const noexcept { return arity_; }
  const Combiner& combiner() const noexcept { return combiner_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  std::span<const std::int64_t> row(Side s, std::size_t i) const noexcept {
    const auto& flat = s == Side::a ? a_ : b_;
    return std::span<const std::int64_t>(flat).subspan(i * arity_, arity_);
  }

  SufficientStats swapped() const {
    SufficientStats out = *this;
    std::swap(out.a_, out.b_);
    return out;
  }

 private:
  std::vector<std::string> ids_;
  std::size_t arity_;
  Combiner combiner_;
  std::vector<std::int64_t> a_;
  std::vector<std::int64_t> b_;
};

inline double mean_score(std::span<const double> scores) {
  if (scores.empty()) fail(ErrorKind::empty_sample, "mean of an empty list");
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

/// Combined measure over a multiset of example indices (repeats count).
inline Measured corpus_statistic(const SufficientStats& stats, Side side, std::span<const std::size_t> subset) {
  if (subset.empty()) fail(ErrorKind::empty_sample, "corpus statistic over an empty subset");
  std::vector<std::int64_t> totals(stats.arity(), 0);
  for (const std::size_t i : subset) {
    if (i >= stats.size()) fail(ErrorKind::invalid_argument, "subset index out of range");
    const auto row = stats.row(side, i);
    for (std::size_t j = 0; j < totals.size(); ++j) totals[j] += row[j];
  }
  return combine(std::span<const std::int64_t>(totals), stats.combiner(), subset.size());
}

inline Measured corpus_statistic(const PairedScores& scores, Side side, std::span<const std::size_t> subset) {
  if (subset.empty()) fail(ErrorKind::empty_sample, "corpus statistic over an empty subset");
  const auto values = scores.side(side);
  double sum = 0.0;
  for (const std::size_t i : subset) {
    if (i >= values.size()) fail(ErrorKind::invalid_argument, "subset index out of range");
    sum += values[i];
  }
  return {sum / static_cast<double>(subset.size()), false};
}

/// Corpus measure over every example once.
template <class Data>
Measured corpus_statistic(const Data& data, Side side) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return corpus_statistic(data, side, all);
}

/// Predictions of one system against gold values, for correlation measures.
class CorrelationSample {
 public:
  CorrelationSample(std::vector<double> predictions, std::vector<double> gold)
      : predictions_(std::move(predictions)), gold_(std::move(gold)) {
    if (predictions_.size() != gold_.size()) fail(ErrorKind::data_error, "prediction and gold lengths differ");
    if (predictions_.size() < 4) fail(ErrorKind::insufficient_data, "correlation sample needs n >= 4");
  }

  std::size_t size() const noexcept { return gold_.size(); }
  std::span<const double> predictions() const noexcept { return predictions_; }
  std::span<const double> gold() const noexcept { return gold_; }

 private:
  std::vector<double> predictions_;
  std::vector<double> gold_;
};

/// 1-based ranks; tied values share the average of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

/// Pearson correlation of two equal-length vectors.
inline double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorKind::invalid_argument, "pearson_r: length mismatch");
  if (x.size() < 2) fail(ErrorKind::insufficient_data, "pearson_r: need at least two points");
  const double mx = mean_score(x);
  const double my = mean_score(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorKind::degenerate_sample, "correlation of a zero-variance vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double pearson_r(const CorrelationSample& s) { return pearson_r(s.predictions(), s.gold()); }

inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson_r(rx, ry);
}

inline double spearman_rho(const CorrelationSample& s) { return spearman_rho(s.predictions(), s.gold()); }

}  // namespace sigkit

#endif  // SIGKIT_MEASURES_HPP
