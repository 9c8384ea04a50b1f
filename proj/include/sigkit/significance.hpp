#ifndef SIGKIT_SIGNIFICANCE_HPP
#define SIGKIT_SIGNIFICANCE_HPP

// Paired significance tests: McNemar, paired t, Wilcoxon signed-rank,
// paired bootstrap, paired permutation (approximate randomization), and
// Fisher-z / bootstrap tests for correlations.
//
// Sign convention: delta = measure(A) - measure(B). Tail::greater tests
// "A is better than B", Tail::less the reverse.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "sigkit/errors.hpp"
#include "sigkit/measures.hpp"
#include "sigkit/numerics.hpp"
#include "sigkit/rng.hpp"

namespace sigkit {

enum class Tail { two_sided, greater, less };

enum class TestId { mcnemar, paired_t, wilcoxon, bootstrap, permutation, correlation_z, correlation_bootstrap };

inline constexpr std::string_view to_string(Tail tail) noexcept {
  switch (tail) {
    case Tail::two_sided: return "two_sided";
    case Tail::greater: return "greater";
    case Tail::less: return "less";
  }
  return "two_sided";
}

inline constexpr std::string_view to_string(TestId id) noexcept {
  switch (id) {
    case TestId::mcnemar: return "mcnemar";
    case TestId::paired_t: return "paired_t";
    case TestId::wilcoxon: return "wilcoxon";
    case TestId::bootstrap: return "bootstrap";
    case TestId::permutation: return "permutation";
    case TestId::correlation_z: return "correlation_z";
    case TestId::correlation_bootstrap: return "correlation_bootstrap";
  }
  return "unknown";
}

inline Tail parse_tail(std::string_view s) {
  for (Tail t : {Tail::two_sided, Tail::greater, Tail::less}) {
    if (s == to_string(t)) return t;
  }
  fail(ErrorKind::invalid_argument, "unknown tail '" + std::string(s) + "'");
}

inline TestId parse_test_id(std::string_view s) {
  for (TestId t : {TestId::mcnemar, TestId::paired_t, TestId::wilcoxon, TestId::bootstrap, TestId::permutation,
                   TestId::correlation_z, TestId::correlation_bootstrap}) {
    if (s == to_string(t)) return t;
  }
  fail(ErrorKind::invalid_argument, "unknown test '" + std::string(s) + "'");
}

/// Tail seen from the other system's side.
constexpr Tail mirrored(Tail tail) noexcept {
  return tail == Tail::greater ? Tail::less : tail == Tail::less ? Tail::greater : Tail::two_sided;
}

struct TestResult {
  TestId test = TestId::paired_t;
  double statistic = 0.0;
  Probability p_value;
  Tail tail = Tail::two_sided;
  std::size_t n = 0;
  double alpha = 0.05;
  bool reject = false;
  std::optional<std::size_t> resamples;  // sampling-based tests only
  std::optional<std::uint64_t> seed;     // sampling-based tests only
  std::vector<std::string> notes;

  friend bool operator==(const TestResult&, const TestResult&) = default;
};

namespace detail {

inline void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::invalid_argument, "alpha must lie in (0, 1)");
}

inline TestResult make_result(TestId test, double statistic, double p, Tail tail, std::size_t n, double alpha) {
  require_alpha(alpha);
  TestResult r;
  r.test = test;
  r.statistic = statistic;
  r.p_value = Probability::clamped(p);
  r.tail = tail;
  r.n = n;
  r.alpha = alpha;
  r.reject = r.p_value.value() <= alpha;
  return r;
}

// p-value from a standard normal statistic.
inline double normal_p(double z, Tail tail) {
  switch (tail) {
    case Tail::two_sided: return std::min(1.0, 2.0 * std_normal_sf(std::fabs(z)).value());
    case Tail::greater: return std_normal_sf(z).value();
    case Tail::less: return std_normal_cdf(z).value();
  }
  return 1.0;
}

// Floating-point slack when comparing a resampled delta against the observed
// one, so that mathematically tied deltas count as ties.
inline double tie_slack(double observed) noexcept { return 1e-12 * std::fabs(observed); }

// Permutation-style comparison: is `value` at least as extreme as `observed`?
inline bool as_extreme(double value, double observed, Tail tail) noexcept {
  const double slack = tie_slack(observed);
  switch (tail) {
    case Tail::two_sided: return std::fabs(value) >= std::fabs(observed) - slack;
    case Tail::greater: return value >= observed - slack;
    case Tail::less: return value <= observed + slack;
  }
  return false;
}

struct Tally {
  std::size_t hits = 0;
  std::size_t degenerate = 0;

  Tally& operator+=(const Tally& o) noexcept {
    hits += o.hits;
    degenerate += o.degenerate;
    return *this;
  }
};

// Runs body(begin, end) over [0, count) on up to `threads` workers and sums
// the tallies. Sums are order-independent, so the split does not matter.
template <class Body>
Tally parallel_tally(std::size_t count, unsigned threads, Body body) {
  if (threads <= 1 || count < 2) return body(std::size_t{0}, count);
  const std::size_t workers = std::min<std::size_t>(threads, count);
  std::vector<Tally> partial(workers);
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = count * w / workers;
      const std::size_t end = count * (w + 1) / workers;
      pool.emplace_back([&partial, &errors, &body, w, begin, end] {
        try {
          partial[w] = body(begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Tally total;
  for (const auto& t : partial) total += t;
  return total;
}

inline std::vector<std::string> resample_notes(std::size_t degenerate) {
  std::vector<std::string> notes{"approximate"};
  if (degenerate > 0) notes.push_back("degenerate_resamples=" + std::to_string(degenerate));
  return notes;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// McNemar

/// Cross-classification of per-example correctness of A and B.
struct PairedOutcomeTable {
  std::uint64_t n11 = 0;  // both correct
  std::uint64_t n10 = 0;  // only A correct
  std::uint64_t n01 = 0;  // only B correct
  std::uint64_t n00 = 0;  // both wrong

  std::uint64_t total() const noexcept { return n11 + n10 + n01 + n00; }
  std::uint64_t discordant() const noexcept { return n10 + n01; }
  PairedOutcomeTable swapped() const noexcept { return {n11, n01, n10, n00}; }

  /// Builds the table from 0/1 correctness vectors.
  static PairedOutcomeTable from_correctness(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail(ErrorKind::data_error, "correctness vectors differ in length");
    PairedOutcomeTable t;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const bool ok_a = a[i] == 1.0;
      const bool ok_b = b[i] == 1.0;
      if ((!ok_a && a[i] != 0.0) || (!ok_b && b[i] != 0.0)) {
        fail(ErrorKind::data_error, "correctness values must be 0 or 1");
      }
      (ok_a ? (ok_b ? t.n11 : t.n10) : (ok_b ? t.n01 : t.n00))++;
    }
    return t;
  }

  friend bool operator==(const PairedOutcomeTable&, const PairedOutcomeTable&) = default;
};

/// Discordant counts at or below which McNemar uses the exact binomial form.
inline constexpr std::uint64_t kMcNemarExactLimit = 25;

namespace detail {

inline std::uint64_t binomial_coefficient(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// P[Bin(d, 1/2) in [lo, hi]], exact for d <= 62.
inline double binomial_half_mass(std::uint64_t d, std::uint64_t lo, std::uint64_t hi) {
  std::uint64_t count = 0;
  for (std::uint64_t i = lo; i <= hi && i <= d; ++i) count += binomial_coefficient(d, i);
  return std::ldexp(static_cast<double>(count), -static_cast<int>(d));
}

}  // namespace detail

inline TestResult mcnemar(const PairedOutcomeTable& table, double alpha = 0.05, Tail tail = Tail::two_sided) {
  if (table.total() == 0) fail(ErrorKind::empty_sample, "mcnemar: empty table");
  const std::uint64_t d = table.discordant();
  if (d == 0) fail(ErrorKind::degenerate_sample, "mcnemar: the systems never disagree");

  if (d <= kMcNemarExactLimit) {
    double p = 1.0;
    switch (tail) {
      case Tail::two_sided:
        p = std::min(1.0, 2.0 * detail::binomial_half_mass(d, 0, std::min(table.n10, table.n01)));
        break;
      case Tail::greater: p = detail::binomial_half_mass(d, table.n10, d); break;
      case Tail::less: p = detail::binomial_half_mass(d, 0, table.n10); break;
    }
    auto r = detail::make_result(TestId::mcnemar, static_cast<double>(table.n10), p, tail, table.total(), alpha);
    r.notes = {"exact", "discordant=" + std::to_string(d)};
    return r;
  }

  const double diff = static_cast<double>(table.n10) - static_cast<double>(table.n01);
  const double corrected = std::max(0.0, std::fabs(diff) - 1.0);
  const double chi2 = corrected * corrected / static_cast<double>(d);
  double p = 1.0;
  if (tail == Tail::two_sided) {
    p = chi2_sf(chi2, 1).value();
  } else {
    const double z = std::copysign(corrected, diff) / std::sqrt(static_cast<double>(d));
    p = detail::normal_p(z, tail);
  }
  auto r = detail::make_result(TestId::mcnemar, chi2, p, tail, table.total(), alpha);
  r.notes = {"approximate", "continuity-corrected", "discordant=" + std::to_string(d)};
  return r;
}

// ---------------------------------------------------------------------------
// Paired t

inline TestResult paired_t(const PairedScores& scores, Tail tail = Tail::two_sided, double alpha = 0.05) {
  const std::size_t n = scores.size();
  if (n < 2) fail(ErrorKind::insufficient_data, "paired_t: need at least two pairs");
  const auto d = scores.deltas();
  if (std::all_of(d.begin(), d.end(), [&](double x) { return x == d.front(); })) {
    fail(ErrorKind::degenerate_sample, "paired_t: deltas have zero variance");
  }
  const double mean = mean_score(d);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) fail(ErrorKind::degenerate_sample, "paired_t: deltas have zero variance");
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const auto df = static_cast<std::int64_t>(n - 1);
  double p = 1.0;
  switch (tail) {
    case Tail::two_sided: p = std::min(1.0, 2.0 * student_t_sf(std::fabs(t), df).value()); break;
    case Tail::greater: p = student_t_sf(t, df).value(); break;
    case Tail::less: p = student_t_cdf(t, df).value(); break;
  }
  auto r = detail::make_result(TestId::paired_t, t, p, tail, n, alpha);
  r.notes = {"df=" + std::to_string(df)};
  return r;
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank

enum class WilcoxonMode { exact, approx, auto_select };

/// Nonzero deltas at or below which auto mode enumerates (absent ties).
inline constexpr std::size_t kWilcoxonAutoExactLimit = 20;
/// Upper limit for forced exact mode.
inline constexpr std::size_t kWilcoxonExactMax = 1000;

/// Ranked absolute deltas after zero removal.
struct SignedRanks {
  std::vector<double> ranks;    // rank of |d_i| among nonzero deltas
  std::vector<bool> positive;   // sign of d_i
  std::size_t zeros_dropped = 0;
  bool has_ties = false;
  double tie_term = 0.0;        // sum over tie groups of t^3 - t

  std::size_t size() const noexcept { return ranks.size(); }

  double w_plus() const noexcept {
    double w = 0.0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      if (positive[i]) w += ranks[i];
    }
    return w;
  }
};

inline SignedRanks signed_ranks(std::span<const double> deltas) {
  SignedRanks out;
  std::vector<double> magnitudes;
  for (double d : deltas) {
    if (d == 0.0) {
      ++out.zeros_dropped;
      continue;
    }
    magnitudes.push_back(std::fabs(d));
    out.positive.push_back(d > 0.0);
  }
  out.ranks = average_ranks(magnitudes);
  std::vector<double> sorted = magnitudes;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const auto t = static_cast<double>(j - i);
    if (j - i > 1) {
      out.has_ties = true;
      out.tie_term += t * t * t - t;
    }
    i = j;
  }
  return out;
}

namespace detail {

// Exact null of W+ given the ranks: each rank enters with probability 1/2.
// Ranks are doubled so that average ranks stay integral. Returns
// {P[W+ <= w], P[W+ >= w]}.
inline std::pair<double, double> signed_rank_exact_tails(const SignedRanks& sr) {
  const std::size_t m = sr.size();
  std::vector<std::size_t> doubled(m);
  std::size_t total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    doubled[i] = static_cast<std::size_t>(std::llround(2.0 * sr.ranks[i]));
    total += doubled[i];
  }
  std::size_t observed = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (sr.positive[i]) observed += doubled[i];
  }

  if (m <= 62) {
    std::vector<std::uint64_t> ways(total + 1, 0);
    ways[0] = 1;
    std::size_t reach = 0;
    for (std::size_t r : doubled) {
      reach += r;
      for (std::size_t s = reach; s >= r; --s) {
        ways[s] += ways[s - r];
        if (s == r) break;
      }
    }
    std::uint64_t below = 0, above = 0;
    for (std::size_t s = 0; s <= total; ++s) {
      if (s <= observed) below += ways[s];
      if (s >= observed) above += ways[s];
    }
    const int e = -static_cast<int>(m);
    return {std::ldexp(static_cast<double>(below), e), std::ldexp(static_cast<double>(above), e)};
  }

  std::vector<double> mass(total + 1, 0.0);
  mass[0] = 1.0;
  std::size_t reach = 0;
  for (std::size_t r : doubled) {
    reach += r;
    for (std::size_t s = reach; s >= r; --s) {
      mass[s] = 0.5 * (mass[s] + mass[s - r]);
      if (s == r) break;
    }
    for (std::size_t s = 0; s < r && s <= reach; ++s) mass[s] *= 0.5;
  }
  double below = 0.0, above = 0.0;
  for (std::size_t s = 0; s <= total; ++s) {
    if (s <= observed) below += mass[s];
    if (s >= observed) above += mass[s];
  }
  return {std::min(1.0, below), std::min(1.0, above)};
}

}  // namespace detail

inline TestResult wilcoxon_signed_rank(const PairedScores& scores, Tail tail = Tail::two_sided, double alpha = 0.05,
                                       WilcoxonMode mode = WilcoxonMode::auto_select) {
  const auto deltas = scores.deltas();
  const SignedRanks sr = signed_ranks(deltas);
  const std::size_t m = sr.size();
  if (m == 0) fail(ErrorKind::degenerate_sample, "wilcoxon: all deltas are zero");

  bool exact = false;
  switch (mode) {
    case WilcoxonMode::exact:
      if (m > kWilcoxonExactMax) fail(ErrorKind::invalid_argument, "wilcoxon: too many deltas for exact mode");
      exact = true;
      break;
    case WilcoxonMode::approx: exact = false; break;
    case WilcoxonMode::auto_select: exact = m <= kWilcoxonAutoExactLimit && !sr.has_ties; break;
  }

  const double w = sr.w_plus();
  double p = 1.0;
  std::vector<std::string> notes;
  if (exact) {
    const auto [below, above] = detail::signed_rank_exact_tails(sr);
    switch (tail) {
      case Tail::two_sided: p = std::min(1.0, 2.0 * std::min(below, above)); break;
      case Tail::greater: p = above; break;
      case Tail::less: p = below; break;
    }
    notes.push_back("exact");
    if (sr.has_ties) notes.push_back("tie-conditional");
  } else {
    const auto md = static_cast<double>(m);
    const double mu = md * (md + 1.0) / 4.0;
    const double var = md * (md + 1.0) * (2.0 * md + 1.0) / 24.0 - sr.tie_term / 48.0;
    if (!(var > 0.0)) fail(ErrorKind::degenerate_sample, "wilcoxon: zero null variance");
    const double sigma = std::sqrt(var);
    double z = 0.0;
    switch (tail) {
      case Tail::two_sided: z = std::max(0.0, std::fabs(w - mu) - 0.5) / sigma; break;
      case Tail::greater: z = (w - mu - 0.5) / sigma; break;
      case Tail::less: z = (w - mu + 0.5) / sigma; break;
    }
    p = detail::normal_p(z, tail);
    notes.push_back("approximate");
    if (sr.has_ties) notes.push_back("tie-corrected");
  }
  notes.push_back("zeros_dropped=" + std::to_string(sr.zeros_dropped));
  auto r = detail::make_result(TestId::wilcoxon, w, p, tail, scores.size(), alpha);
  r.notes = std::move(notes);
  return r;
}

// ---------------------------------------------------------------------------
// Resampling tests

struct ResampleOptions {
  std::size_t resamples = 10000;
  std::uint64_t seed = kDefaultSeed;
  Tail tail = Tail::two_sided;
  double alpha = 0.05;
  unsigned threads = 1;
};

/// Minimum bootstrap resample count.
inline constexpr std::size_t kMinBootstrapResamples = 100;

namespace detail {

inline double observed_delta(const PairedScores& scores) { return mean_score(scores.deltas()); }

inline double observed_delta(const SufficientStats& stats) {
  const Measured a = corpus_statistic(stats, Side::a);
  const Measured b = corpus_statistic(stats, Side::b);
  if (a.degenerate || b.degenerate) fail(ErrorKind::degenerate_sample, "measure undefined on the full data");
  return a.value - b.value;
}

// p = (hits + 1) / (count + 1).
inline TestResult smoothed_result(TestId test, double delta, const Tally& tally, std::size_t count, std::size_t n,
                                  const ResampleOptions& opt) {
  const double p = static_cast<double>(tally.hits + 1) / static_cast<double>(count + 1);
  auto r = make_result(test, delta, p, opt.tail, n, opt.alpha);
  r.resamples = count;
  r.seed = opt.seed;
  r.notes = resample_notes(tally.degenerate);
  return r;
}

// Shift-null bootstrap comparison of a resampled delta.
inline bool bootstrap_extreme(double resampled, double observed, Tail tail) noexcept {
  return as_extreme(resampled - observed, observed, tail);
}

}  // namespace detail

/// Paired bootstrap over per-example scores (mean measure).
inline TestResult paired_bootstrap(const PairedScores& scores, const ResampleOptions& opt = {}) {
  const std::size_t n = scores.size();
  if (n < 2) fail(ErrorKind::insufficient_data, "bootstrap: need at least two pairs");
  if (opt.resamples < kMinBootstrapResamples) fail(ErrorKind::invalid_argument, "bootstrap: need at least 100 resamples");
  detail::require_alpha(opt.alpha);
  const auto d = scores.deltas();
  const double observed = mean_score(d);
  const auto inv_n = 1.0 / static_cast<double>(n);
  const auto tally = detail::parallel_tally(opt.resamples, opt.threads, [&](std::size_t begin, std::size_t end) {
    detail::Tally t;
    for (std::size_t b = begin; b < end; ++b) {
      auto rng = stream(opt.seed, b);
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) sum += d[rng.bounded(n)];
      if (detail::bootstrap_extreme(sum * inv_n, observed, opt.tail)) ++t.hits;
    }
    return t;
  });
  return detail::smoothed_result(TestId::bootstrap, observed, tally, opt.resamples, n, opt);
}

/// Paired bootstrap over per-example count vectors; each resample re-sums the
/// counts and reapplies the combiner.
inline TestResult paired_bootstrap(const SufficientStats& stats, const ResampleOptions& opt = {}) {
  const std::size_t n = stats.size();
  if (n < 2) fail(ErrorKind::insufficient_data, "bootstrap: need at least two examples");
  if (opt.resamples < kMinBootstrapResamples) fail(ErrorKind::invalid_argument, "bootstrap: need at least 100 resamples");
  detail::require_alpha(opt.alpha);
  const double observed = detail::observed_delta(stats);
  const auto tally = detail::parallel_tally(opt.resamples, opt.threads, [&](std::size_t begin, std::size_t end) {
    detail::Tally t;
    std::vector<std::size_t> idx(n);
    for (std::size_t b = begin; b < end; ++b) {
      auto rng = stream(opt.seed, b);
      for (auto& i : idx) i = rng.bounded(n);
      const Measured ma = corpus_statistic(stats, Side::a, idx);
      const Measured mb = corpus_statistic(stats, Side::b, idx);
      if (ma.degenerate || mb.degenerate) ++t.degenerate;
      if (detail::bootstrap_extreme(ma.value - mb.value, observed, opt.tail)) ++t.hits;
    }
    return t;
  });
  return detail::smoothed_result(TestId::bootstrap, observed, tally, opt.resamples, n, opt);
}

enum class PermutationMode { exact, sampled, auto_select };

/// Largest n for which all 2^n swap masks are enumerated.
inline constexpr std::size_t kPermutationExactMaxN = 20;

namespace detail {

// Delta under a swap mask, where bit i of `mask(i)` swaps pair i.
struct ScoreSwapper {
  const std::vector<double>& d;
  template <class MaskBit>
  Measured operator()(MaskBit&& swapped) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) sum += swapped(i) ? -d[i] : d[i];
    return {sum / static_cast<double>(d.size()), false};
  }
};

struct CountSwapper {
  const SufficientStats& stats;
  template <class MaskBit>
  Measured operator()(MaskBit&& swapped) const {
    const std::size_t k = stats.arity();
    std::vector<std::int64_t> sum_a(k, 0), sum_b(k, 0);
    for (std::size_t i = 0; i < stats.size(); ++i) {
      const bool s = swapped(i);
      const auto ra = stats.row(s ? Side::b : Side::a, i);
      const auto rb = stats.row(s ? Side::a : Side::b, i);
      for (std::size_t c = 0; c < k; ++c) {
        sum_a[c] += ra[c];
        sum_b[c] += rb[c];
      }
    }
    const Measured ma = combine(std::span<const std::int64_t>(sum_a), stats.combiner(), stats.size());
    const Measured mb = combine(std::span<const std::int64_t>(sum_b), stats.combiner(), stats.size());
    return {ma.value - mb.value, ma.degenerate || mb.degenerate};
  }
};

template <class Swapper>
TestResult permutation_impl(const Swapper& delta_under, std::size_t n, double observed, const ResampleOptions& opt,
                            PermutationMode mode) {
  if (n < 2) fail(ErrorKind::insufficient_data, "permutation: need at least two pairs");
  require_alpha(opt.alpha);
  const bool exact = mode == PermutationMode::exact || (mode == PermutationMode::auto_select && n <= kPermutationExactMaxN);
  if (exact) {
    if (n > kPermutationExactMaxN) fail(ErrorKind::invalid_argument, "permutation: exact mode needs n <= 20");
    const std::size_t masks = std::size_t{1} << n;
    const auto tally = parallel_tally(masks, opt.threads, [&](std::size_t begin, std::size_t end) {
      Tally t;
      for (std::size_t mask = begin; mask < end; ++mask) {
        const Measured m = delta_under([mask](std::size_t i) { return ((mask >> i) & 1U) != 0; });
        if (m.degenerate) ++t.degenerate;
        if (as_extreme(m.value, observed, opt.tail)) ++t.hits;
      }
      return t;
    });
    const double p = static_cast<double>(tally.hits) / static_cast<double>(masks);
    auto r = make_result(TestId::permutation, observed, p, opt.tail, n, opt.alpha);
    r.notes = {"exact", "masks=" + std::to_string(masks)};
    if (tally.degenerate > 0) r.notes.push_back("degenerate_resamples=" + std::to_string(tally.degenerate));
    return r;
  }

  if (opt.resamples < 1) fail(ErrorKind::invalid_argument, "permutation: need at least one resample");
  const std::size_t words = (n + 63) / 64;
  const auto tally = parallel_tally(opt.resamples, opt.threads, [&](std::size_t begin, std::size_t end) {
    Tally t;
    std::vector<std::uint64_t> bits(words);
    for (std::size_t r = begin; r < end; ++r) {
      auto rng = stream(opt.seed, r);
      for (auto& w : bits) w = rng();
      const Measured m = delta_under([&bits](std::size_t i) { return ((bits[i >> 6] >> (i & 63)) & 1U) != 0; });
      if (m.degenerate) ++t.degenerate;
      if (as_extreme(m.value, observed, opt.tail)) ++t.hits;
    }
    return t;
  });
  return smoothed_result(TestId::permutation, observed, tally, opt.resamples, n, opt);
}

}  // namespace detail

/// Paired permutation test: the null swaps A_i and B_i independently per pair.
inline TestResult permutation_test(const PairedScores& scores, const ResampleOptions& opt = {},
                                   PermutationMode mode = PermutationMode::auto_select) {
  const auto d = scores.deltas();
  const detail::ScoreSwapper swapper{d};
  const double observed = swapper([](std::size_t) { return false; }).value;
  return detail::permutation_impl(swapper, scores.size(), observed, opt, mode);
}

inline TestResult permutation_test(const SufficientStats& stats, const ResampleOptions& opt = {},
                                   PermutationMode mode = PermutationMode::auto_select) {
  const double observed = detail::observed_delta(stats);
  return detail::permutation_impl(detail::CountSwapper{stats}, stats.size(), observed, opt, mode);
}

// ---------------------------------------------------------------------------
// Correlations

enum class CorrelationKind { pearson, spearman };

inline constexpr std::string_view to_string(CorrelationKind k) noexcept {
  return k == CorrelationKind::pearson ? "pearson" : "spearman";
}

/// Variance inflation of the Fisher-transformed Spearman coefficient.
inline constexpr double kSpearmanVarianceFactor = 1.06;

inline double fisher_transform(double r) {
  if (!(std::fabs(r) < 1.0)) fail(ErrorKind::invalid_argument, "fisher_transform: |r| must be < 1");
  return std::atanh(r);
}

inline double correlation(CorrelationKind kind, std::span<const double> x, std::span<const double> y) {
  return kind == CorrelationKind::pearson ? pearson_r(x, y) : spearman_rho(x, y);
}

/// z-test of a single correlation against r0 (r0 must be 0 for Spearman).
inline TestResult correlation_z_test(CorrelationKind kind, double r, std::size_t n, Tail tail = Tail::two_sided,
                                     double alpha = 0.05, double r0 = 0.0) {
  if (n <= 3) fail(ErrorKind::insufficient_data, "correlation_z_test: need n > 3");
  if (!(std::fabs(r0) < 1.0)) fail(ErrorKind::invalid_argument, "correlation_z_test: |r0| must be < 1");
  const double scale = std::sqrt(static_cast<double>(n - 3));
  double z = 0.0;
  if (kind == CorrelationKind::pearson) {
    z = (fisher_transform(r) - fisher_transform(r0)) * scale;
  } else {
    if (r0 != 0.0) fail(ErrorKind::invalid_argument, "correlation_z_test: spearman supports r0 = 0 only");
    z = std::sqrt(static_cast<double>(n - 3) / kSpearmanVarianceFactor) * fisher_transform(r);
  }
  auto res = detail::make_result(TestId::correlation_z, z, detail::normal_p(z, tail), tail, n, alpha);
  res.notes = {std::string(to_string(kind)), "approximate"};
  return res;
}

/// z-test for the difference of two correlations from independent samples.
inline TestResult correlation_z_test_independent(CorrelationKind kind, double r1, std::size_t n1, double r2,
                                                 std::size_t n2, Tail tail = Tail::two_sided, double alpha = 0.05) {
  if (n1 <= 3 || n2 <= 3) fail(ErrorKind::insufficient_data, "correlation_z_test_independent: need n > 3");
  const double c = kind == CorrelationKind::pearson ? 1.0 : kSpearmanVarianceFactor;
  const double se = std::sqrt(c / static_cast<double>(n1 - 3) + c / static_cast<double>(n2 - 3));
  const double z = (fisher_transform(r1) - fisher_transform(r2)) / se;
  auto res = detail::make_result(TestId::correlation_z, z, detail::normal_p(z, tail), tail, n1 + n2, alpha);
  res.notes = {std::string(to_string(kind)), "independent_samples", "approximate"};
  return res;
}

/// Redraws allowed per resample when a resampled vector has zero variance.
inline constexpr int kCorrelationRedraws = 16;

/// Bootstrap test of corr(A, gold) - corr(B, gold); examples are resampled
/// jointly across both systems and the gold vector.
inline TestResult correlation_bootstrap(const CorrelationSample& sample_a, const CorrelationSample& sample_b,
                                        CorrelationKind kind, const ResampleOptions& opt = {}) {
  const std::size_t n = sample_a.size();
  if (sample_b.size() != n) fail(ErrorKind::data_error, "correlation_bootstrap: samples differ in size");
  if (!std::equal(sample_a.gold().begin(), sample_a.gold().end(), sample_b.gold().begin())) {
    fail(ErrorKind::data_error, "correlation_bootstrap: samples must share the gold vector");
  }
  if (opt.resamples < kMinBootstrapResamples) fail(ErrorKind::invalid_argument, "bootstrap: need at least 100 resamples");
  detail::require_alpha(opt.alpha);
  const auto gold = sample_a.gold();
  const auto pa = sample_a.predictions();
  const auto pb = sample_b.predictions();
  const double observed = correlation(kind, pa, gold) - correlation(kind, pb, gold);

  const auto tally = detail::parallel_tally(opt.resamples, opt.threads, [&](std::size_t begin, std::size_t end) {
    detail::Tally t;
    std::vector<double> ga(n), xa(n), xb(n);
    for (std::size_t b = begin; b < end; ++b) {
      bool drawn = false;
      for (int attempt = 0; attempt < kCorrelationRedraws && !drawn; ++attempt) {
        auto rng = stream(derive_seed(opt.seed, static_cast<std::uint64_t>(attempt)), b);
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t i = rng.bounded(n);
          ga[j] = gold[i];
          xa[j] = pa[i];
          xb[j] = pb[i];
        }
        try {
          const double delta = correlation(kind, xa, ga) - correlation(kind, xb, ga);
          if (detail::bootstrap_extreme(delta, observed, opt.tail)) ++t.hits;
          drawn = true;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::degenerate_sample) throw;
          ++t.degenerate;
        }
      }
      if (!drawn) fail(ErrorKind::degenerate_sample, "correlation_bootstrap: resamples keep collapsing to zero variance");
    }
    return t;
  });
  auto r = detail::smoothed_result(TestId::correlation_bootstrap, observed, tally, opt.resamples, n, opt);
  r.notes.insert(r.notes.begin(), std::string(to_string(kind)));
  if (tally.degenerate > 0) r.notes.back() = "redrawn_resamples=" + std::to_string(tally.degenerate);
  return r;
}

}  // namespace sigkit

#endif  // SIGKIT_SIGNIFICANCE_HPP
