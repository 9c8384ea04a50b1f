#ifndef SIGKIT_VALIDITY_MC_HPP
#define SIGKIT_VALIDITY_MC_HPP

// Monte Carlo harness for type-I error and power. Each trial draws a fresh
// paired dataset from a generator, runs one test, and records whether it
// rejected. Trial t draws only from (seed, t), so rates do not depend on the
// thread count.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "sigkit/errors.hpp"
#include "sigkit/measures.hpp"
#include "sigkit/rng.hpp"
#include "sigkit/significance.hpp"

namespace sigkit {

enum class NullFamily {
  paired_normal,
  paired_laplace,
  paired_bernoulli_correctness,
  exchangeable_counts,
  independent_gaussians_for_correlation,
};

inline constexpr std::string_view to_string(NullFamily f) noexcept {
  switch (f) {
    case NullFamily::paired_normal: return "paired_normal";
    case NullFamily::paired_laplace: return "paired_laplace";
    case NullFamily::paired_bernoulli_correctness: return "paired_bernoulli_correctness";
    case NullFamily::exchangeable_counts: return "exchangeable_counts";
    case NullFamily::independent_gaussians_for_correlation: return "independent_gaussians_for_correlation";
  }
  return "paired_normal";
}

inline NullFamily parse_null_family(std::string_view s) {
  for (auto f : {NullFamily::paired_normal, NullFamily::paired_laplace, NullFamily::paired_bernoulli_correctness,
                 NullFamily::exchangeable_counts, NullFamily::independent_gaussians_for_correlation}) {
    if (s == to_string(f)) return f;
  }
  fail(ErrorKind::invalid_argument, "unknown generator '" + std::string(s) + "'");
}

/// Paired-data generator. With effect = 0 both systems have equal expected
/// performance. The effect is read per family:
///   paired_normal / paired_laplace: mean delta = effect * scale (delta sd = scale)
///   paired_bernoulli_correctness: P(A correct) = base_rate + effect
///   exchangeable_counts: A's per-item hit rate = base_rate + effect
///   independent_gaussians_for_correlation: corr(pred_a, gold) = effect
struct NullGenerator {
  NullFamily family = NullFamily::paired_normal;
  std::size_t n = 100;
  double scale = 1.0;
  double base_rate = 0.7;
  double effect = 0.0;
};

/// One generated dataset; only the fields for the family are set.
struct GeneratedData {
  std::optional<PairedScores> scores;
  std::optional<PairedOutcomeTable> table;
  std::optional<SufficientStats> counts;
  std::optional<CorrelationSample> correlation_a;
  std::optional<CorrelationSample> correlation_b;
};

inline GeneratedData generate(const NullGenerator& g, std::uint64_t seed) {
  if (g.n < 2) fail(ErrorKind::invalid_argument, "generator needs n >= 2");
  auto rng = stream(seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  GeneratedData out;
  const std::size_t n = g.n;

  switch (g.family) {
    case NullFamily::paired_normal:
    case NullFamily::paired_laplace: {
      std::vector<double> a(n), b(n);
      std::exponential_distribution<double> expo(1.0);
      const double shift = g.effect * g.scale;
      for (std::size_t i = 0; i < n; ++i) {
        b[i] = normal(rng);
        double noise = 0.0;
        if (g.family == NullFamily::paired_normal) {
          noise = normal(rng);
        } else {
          // Laplace with unit variance: (E1 - E2) / sqrt(2).
          noise = (expo(rng) - expo(rng)) / std::numbers::sqrt2;
        }
        a[i] = b[i] + shift + g.scale * noise;
      }
      out.scores.emplace(std::move(a), std::move(b));
      break;
    }
    case NullFamily::paired_bernoulli_correctness: {
      const double pa = g.base_rate + g.effect;
      if (!(pa >= 0.0 && pa <= 1.0 && g.base_rate >= 0.0 && g.base_rate <= 1.0)) {
        fail(ErrorKind::invalid_argument, "bernoulli rates must lie in [0, 1]");
      }
      std::vector<double> a(n), b(n);
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = rng.uniform() < pa ? 1.0 : 0.0;
        b[i] = rng.uniform() < g.base_rate ? 1.0 : 0.0;
      }
      out.table = PairedOutcomeTable::from_correctness(a, b);
      out.scores.emplace(std::move(a), std::move(b));
      break;
    }
    case NullFamily::exchangeable_counts: {
      const double ra = g.base_rate + g.effect;
      if (!(ra >= 0.0 && ra <= 1.0 && g.base_rate >= 0.0 && g.base_rate <= 1.0)) {
        fail(ErrorKind::invalid_argument, "hit rates must lie in [0, 1]");
      }
      // Per example: gold mentions g in [1, 5]; each system predicts p in
      // [1, 5] items, of which each of the first min(g, p) is a hit with the
      // system's rate.
      std::vector<std::vector<std::int64_t>> ca(n), cb(n);
      const auto draw = [&](std::int64_t gold, double rate) {
        const auto predicted = static_cast<std::int64_t>(1 + rng.bounded(5));
        std::int64_t tp = 0;
        for (std::int64_t k = 0; k < std::min(gold, predicted); ++k) tp += rng.uniform() < rate ? 1 : 0;
        return std::vector<std::int64_t>{tp, predicted - tp, gold - tp};
      };
      for (std::size_t i = 0; i < n; ++i) {
        const auto gold = static_cast<std::int64_t>(1 + rng.bounded(5));
        ca[i] = draw(gold, ra);
        cb[i] = draw(gold, g.base_rate);
      }
      out.counts.emplace(ca, cb, Combiner::f_beta(1.0));
      break;
    }
    case NullFamily::independent_gaussians_for_correlation: {
      if (!(std::fabs(g.effect) < 1.0)) fail(ErrorKind::invalid_argument, "correlation effect must satisfy |rho| < 1");
      if (n < 4) fail(ErrorKind::invalid_argument, "correlation generator needs n >= 4");
      std::vector<double> gold(n), pa(n), pb(n);
      const double rest = std::sqrt(1.0 - g.effect * g.effect);
      for (std::size_t i = 0; i < n; ++i) {
        gold[i] = normal(rng);
        pa[i] = g.effect * gold[i] + rest * normal(rng);
        pb[i] = normal(rng);
      }
      out.correlation_a.emplace(std::move(pa), gold);
      out.correlation_b.emplace(std::move(pb), std::move(gold));
      break;
    }
  }
  return out;
}

/// A test as run inside the harness.
struct TestConfig {
  TestId test = TestId::paired_t;
  WilcoxonMode wilcoxon_mode = WilcoxonMode::auto_select;
  PermutationMode permutation_mode = PermutationMode::sampled;
  CorrelationKind correlation = CorrelationKind::pearson;
  std::size_t resamples = 1000;
  Tail tail = Tail::two_sided;

  std::string label() const {
    std::string s(to_string(test));
    if (test == TestId::wilcoxon) {
      if (wilcoxon_mode == WilcoxonMode::exact) s += "_exact";
      if (wilcoxon_mode == WilcoxonMode::approx) s += "_approx";
    }
    if (test == TestId::correlation_z || test == TestId::correlation_bootstrap) {
      s += "_" + std::string(to_string(correlation));
    }
    return s;
  }
};

/// Parses a harness test label: a TestId name, optionally suffixed
/// (wilcoxon_exact, wilcoxon_approx, correlation_z_spearman, ...).
inline TestConfig parse_test_config(std::string_view label) {
  TestConfig c;
  const auto strip = [&](std::string_view suffix) {
    if (label.size() > suffix.size() && label.substr(label.size() - suffix.size()) == suffix) {
      label.remove_suffix(suffix.size());
      return true;
    }
    return false;
  };
  if (strip("_exact")) c.wilcoxon_mode = WilcoxonMode::exact;
  else if (strip("_approx")) c.wilcoxon_mode = WilcoxonMode::approx;
  else if (strip("_spearman")) c.correlation = CorrelationKind::spearman;
  else strip("_pearson");
  c.test = parse_test_id(label);
  return c;
}

struct RateEstimate {
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t trials = 0;
  std::size_t rejections = 0;
  std::size_t degenerate = 0;  // trials whose test was undefined (counted as no rejection)
};

/// z quantile for a two-sided 99% interval.
inline constexpr double kZ995 = 2.5758293035489004;

/// Wilson score interval at 99% for k successes in n trials.
inline std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = kZ995) {
  const auto nd = static_cast<double>(n);
  const double p = static_cast<double>(k) / nd;
  const double z2 = z * z;
  const double center = (p + z2 / (2.0 * nd)) / (1.0 + z2 / nd);
  const double half = z * std::sqrt(p * (1.0 - p) / nd + z2 / (4.0 * nd * nd)) / (1.0 + z2 / nd);
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace detail {

inline bool family_fits(TestId test, NullFamily f) {
  switch (test) {
    case TestId::paired_t:
    case TestId::wilcoxon:
      return f == NullFamily::paired_normal || f == NullFamily::paired_laplace ||
             f == NullFamily::paired_bernoulli_correctness;
    case TestId::mcnemar: return f == NullFamily::paired_bernoulli_correctness;
    case TestId::bootstrap:
    case TestId::permutation: return f != NullFamily::independent_gaussians_for_correlation;
    case TestId::correlation_z:
    case TestId::correlation_bootstrap: return f == NullFamily::independent_gaussians_for_correlation;
  }
  return false;
}

inline TestResult run_on(const TestConfig& c, const GeneratedData& data, std::uint64_t seed, double alpha) {
  ResampleOptions opt;
  opt.resamples = c.resamples;
  opt.seed = seed;
  opt.tail = c.tail;
  opt.alpha = alpha;
  switch (c.test) {
    case TestId::mcnemar: return mcnemar(*data.table, alpha, c.tail);
    case TestId::paired_t: return paired_t(*data.scores, c.tail, alpha);
    case TestId::wilcoxon: return wilcoxon_signed_rank(*data.scores, c.tail, alpha, c.wilcoxon_mode);
    case TestId::bootstrap:
      return data.counts ? paired_bootstrap(*data.counts, opt) : paired_bootstrap(*data.scores, opt);
    case TestId::permutation:
      return data.counts ? permutation_test(*data.counts, opt, c.permutation_mode)
                         : permutation_test(*data.scores, opt, c.permutation_mode);
    case TestId::correlation_z: {
      const double r = correlation(c.correlation, data.correlation_a->predictions(), data.correlation_a->gold());
      return correlation_z_test(c.correlation, r, data.correlation_a->size(), c.tail, alpha);
    }
    case TestId::correlation_bootstrap:
      return correlation_bootstrap(*data.correlation_a, *data.correlation_b, c.correlation, opt);
  }
  fail(ErrorKind::invalid_argument, "unsupported test");
}

}  // namespace detail

/// Fraction of trials in which `test` rejects at `alpha` on data from `generator`.
inline RateEstimate rejection_rate(const TestConfig& test, const NullGenerator& generator, std::size_t trials,
                                   double alpha, std::uint64_t seed, unsigned threads = 1) {
  if (trials < 1000) fail(ErrorKind::invalid_argument, "Monte Carlo harness needs at least 1000 trials");
  detail::require_alpha(alpha);
  if (!detail::family_fits(test.test, generator.family)) {
    fail(ErrorKind::invalid_argument, "generator " + std::string(to_string(generator.family)) + " cannot feed " +
                                          test.label());
  }
  const auto tally = detail::parallel_tally(trials, threads, [&](std::size_t begin, std::size_t end) {
    detail::Tally t;
    for (std::size_t trial = begin; trial < end; ++trial) {
      const GeneratedData data = generate(generator, derive_seed(seed, trial, 0));
      try {
        if (detail::run_on(test, data, derive_seed(seed, trial, 1), alpha).reject) ++t.hits;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::degenerate_sample && e.kind() != ErrorKind::insufficient_data) throw;
        ++t.degenerate;
      }
    }
    return t;
  });
  RateEstimate est;
  est.trials = trials;
  est.rejections = tally.hits;
  est.degenerate = tally.degenerate;
  est.rate = static_cast<double>(tally.hits) / static_cast<double>(trials);
  std::tie(est.ci_low, est.ci_high) = wilson_interval(tally.hits, trials);
  return est;
}

/// Type-I error rate: the generator must satisfy the null (effect = 0).
inline RateEstimate type1_error_rate(const TestConfig& test, const NullGenerator& generator, std::size_t trials,
                                     double alpha, std::uint64_t seed, unsigned threads = 1) {
  if (generator.effect != 0.0) fail(ErrorKind::invalid_argument, "type-I error needs a null generator (effect = 0)");
  return rejection_rate(test, generator, trials, alpha, seed, threads);
}

/// Power under the alternative encoded by generator.effect.
inline RateEstimate power_rate(const TestConfig& test, const NullGenerator& generator, std::size_t trials,
                               double alpha, std::uint64_t seed, unsigned threads = 1) {
  return rejection_rate(test, generator, trials, alpha, seed, threads);
}

/// A harness cell and the bound its type-I rate must respect.
struct ValidityCell {
  TestConfig test;
  NullGenerator generator;
  double lower = 0.0;  // empirical rate must be >= lower ...
  double upper = 1.0;  // ... and <= upper
};

/// The standard validity grid at alpha = 0.05.
inline std::vector<ValidityCell> default_validity_grid() {
  const auto cfg = [](std::string_view label) { return parse_test_config(label); };
  const auto gen = [](NullFamily f, std::size_t n) {
    NullGenerator g;
    g.family = f;
    g.n = n;
    return g;
  };
  return {
      {cfg("paired_t"), gen(NullFamily::paired_normal, 100), 0.035, 0.065},
      {cfg("wilcoxon_approx"), gen(NullFamily::paired_laplace, 100), 0.035, 0.065},
      {cfg("correlation_z_pearson"), gen(NullFamily::independent_gaussians_for_correlation, 100), 0.035, 0.065},
      {cfg("correlation_z_spearman"), gen(NullFamily::independent_gaussians_for_correlation, 100), 0.035, 0.065},
      {cfg("permutation"), gen(NullFamily::paired_normal, 100), 0.035, 0.065},
      {cfg("permutation"), gen(NullFamily::exchangeable_counts, 100), 0.035, 0.065},
      {cfg("bootstrap"), gen(NullFamily::paired_normal, 100), 0.035, 0.065},
      {cfg("bootstrap"), gen(NullFamily::exchangeable_counts, 100), 0.035, 0.065},
      {cfg("mcnemar"), gen(NullFamily::paired_bernoulli_correctness, 30), 0.0, 0.065},
      {cfg("mcnemar"), gen(NullFamily::paired_bernoulli_correctness, 100), 0.0, 0.065},
      {cfg("wilcoxon_exact"), gen(NullFamily::paired_laplace, 15), 0.0, 0.065},
  };
}

inline void write_csv_header(std::ostream& out) { out << "test,generator,n,alpha,rate,ci_low,ci_high\n"; }

inline void write_csv_row(std::ostream& out, const TestConfig& test, const NullGenerator& g, double alpha,
                          const RateEstimate& est) {
  out << test.label() << ',' << to_string(g.family) << ',' << g.n << ',' << alpha << ',' << est.rate << ','
      << est.ci_low << ',' << est.ci_high << '\n';
}

}  // namespace sigkit

#endif  // SIGKIT_VALIDITY_MC_HPP
