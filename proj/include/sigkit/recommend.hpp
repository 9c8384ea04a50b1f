#ifndef SIGKIT_RECOMMEND_HPP
#define SIGKIT_RECOMMEND_HPP

// Which significance test applies to which evaluation measure, and the
// decision procedure that picks the parametric test only when its
// normality assumption survives a check on the per-example deltas.

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sigkit/errors.hpp"
#include "sigkit/normality.hpp"
#include "sigkit/significance.hpp"

namespace sigkit {

enum class MeasureId {
  contingency_table,
  exact_match,
  accuracy,
  recall,
  precision,
  f_score,
  perplexity,
  spearman,
  pearson,
  uas,
  las,
  rouge,
  bleu,
  meteor,
  pinc,
  cider,
  coref_family,
  agreement_family,
  mrr,
};

enum class IngestionForm { scores, counts, correctness, correlation };

/// Parametric options. `t_test` runs as paired_t, `z_test` as correlation_z.
enum class ParametricTest { t_test, z_test };

/// Nonparametric options as they appear in the measure table.
enum class NonparametricTest { mcnemar, wilcoxon, bootstrap, permutation };

struct MeasureSpec {
  MeasureId measure;
  std::string_view name;
  std::string_view exemplary_task;
  std::optional<ParametricTest> parametric;
  std::vector<NonparametricTest> nonparametric;
  IngestionForm ingestion_form;
  std::vector<int> comment_keys;  // 1..7, see README
};

inline constexpr std::string_view to_string(IngestionForm f) noexcept {
  switch (f) {
    case IngestionForm::scores: return "scores";
    case IngestionForm::counts: return "counts";
    case IngestionForm::correctness: return "correctness";
    case IngestionForm::correlation: return "correlation";
  }
  return "scores";
}

inline constexpr std::string_view to_string(ParametricTest t) noexcept {
  return t == ParametricTest::t_test ? "t_test" : "z_test";
}

inline constexpr std::string_view to_string(NonparametricTest t) noexcept {
  switch (t) {
    case NonparametricTest::mcnemar: return "mcnemar";
    case NonparametricTest::wilcoxon: return "wilcoxon";
    case NonparametricTest::bootstrap: return "bootstrap";
    case NonparametricTest::permutation: return "permutation";
  }
  return "bootstrap";
}

inline IngestionForm parse_ingestion_form(std::string_view s) {
  for (auto f : {IngestionForm::scores, IngestionForm::counts, IngestionForm::correctness, IngestionForm::correlation}) {
    if (s == to_string(f)) return f;
  }
  fail(ErrorKind::invalid_argument, "unknown input form '" + std::string(s) + "'");
}

/// The measure table, one entry per row, in table order.
inline const std::vector<MeasureSpec>& registry() {
  using M = MeasureId;
  using N = NonparametricTest;
  using F = IngestionForm;
  constexpr auto t = ParametricTest::t_test;
  constexpr auto z = ParametricTest::z_test;
  static const std::vector<N> resampling{N::bootstrap, N::permutation};
  static const std::vector<MeasureSpec> table{
      {M::contingency_table, "contingency_table", "Binary sentiment classification", std::nullopt, {N::mcnemar},
       F::correctness, {}},
      {M::exact_match, "exact_match", "Question answering", t, resampling, F::scores, {1, 2}},
      {M::accuracy, "accuracy", "Sequence labeling", t, resampling, F::scores, {1, 2}},
      {M::recall, "recall", "Phrase-based (constituent) parsing", t, resampling, F::counts, {1, 2, 6}},
      {M::precision, "precision", "Phrase-based (constituent) parsing", std::nullopt, resampling, F::counts, {2, 6}},
      {M::f_score, "f_score", "Semantic parsing", std::nullopt, resampling, F::counts, {2, 6}},
      {M::perplexity, "perplexity", "Language modeling", std::nullopt, {N::wilcoxon}, F::scores, {5}},
      {M::spearman, "spearman", "Word similarity", z, resampling, F::correlation, {2, 3}},
      {M::pearson, "pearson", "Word similarity", z, resampling, F::correlation, {2, 3}},
      {M::uas, "uas", "Dependency parsing", t, resampling, F::scores, {1, 2, 4}},
      {M::las, "las", "Dependency parsing", t, resampling, F::scores, {1, 2, 4}},
      {M::rouge, "rouge", "Summarization", std::nullopt, resampling, F::scores, {2}},
      {M::bleu, "bleu", "Machine translation", std::nullopt, resampling, F::scores, {2}},
      {M::meteor, "meteor", "Machine translation", std::nullopt, resampling, F::scores, {2}},
      {M::pinc, "pinc", "Paraphrasing", std::nullopt, resampling, F::scores, {2}},
      {M::cider, "cider", "Image description generation", std::nullopt, resampling, F::scores, {2}},
      {M::coref_family, "coref_family", "Coreference resolution", std::nullopt, resampling, F::counts, {2, 7}},
      {M::agreement_family, "agreement_family", "Annotation reliability", std::nullopt, resampling, F::scores, {2}},
      {M::mrr, "mrr", "Question answering, information retrieval", std::nullopt, resampling, F::scores, {2}},
  };
  return table;
}

inline const MeasureSpec& lookup(MeasureId id) {
  const auto& table = registry();
  const auto it = std::find_if(table.begin(), table.end(), [id](const MeasureSpec& s) { return s.measure == id; });
  if (it == table.end()) fail(ErrorKind::invalid_argument, "measure missing from registry");
  return *it;
}

inline const MeasureSpec& lookup(std::string_view name) {
  const auto& table = registry();
  const auto it = std::find_if(table.begin(), table.end(), [name](const MeasureSpec& s) { return s.name == name; });
  if (it == table.end()) fail(ErrorKind::invalid_argument, "unknown measure '" + std::string(name) + "'");
  return *it;
}

inline std::string_view to_string(MeasureId id) { return lookup(id).name; }

enum class RecommendationBasis {
  table_parametric_ok,
  normality_failed,
  no_parametric_exists,
  insufficient_data_for_normality,
};

inline constexpr std::string_view to_string(RecommendationBasis b) noexcept {
  switch (b) {
    case RecommendationBasis::table_parametric_ok: return "table_parametric_ok";
    case RecommendationBasis::normality_failed: return "normality_failed";
    case RecommendationBasis::no_parametric_exists: return "no_parametric_exists";
    case RecommendationBasis::insufficient_data_for_normality: return "insufficient_data_for_normality";
  }
  return "no_parametric_exists";
}

inline RecommendationBasis parse_basis(std::string_view s) {
  for (auto b : {RecommendationBasis::table_parametric_ok, RecommendationBasis::normality_failed,
                 RecommendationBasis::no_parametric_exists, RecommendationBasis::insufficient_data_for_normality}) {
    if (s == to_string(b)) return b;
  }
  fail(ErrorKind::invalid_argument, "unknown basis '" + std::string(s) + "'");
}

struct Recommendation {
  MeasureId measure;
  TestId test;
  RecommendationBasis basis;
  std::optional<NormalityReport> normality;

  bool parametric() const noexcept { return basis == RecommendationBasis::table_parametric_ok; }
};

struct RecommendOptions {
  double alpha_norm = kDefaultAlphaNorm;
  /// Prefer the bootstrap where the table lists bootstrap and permutation.
  bool prefer_bootstrap = false;
};

namespace detail {

inline TestId nonparametric_choice(const MeasureSpec& spec, const RecommendOptions& opt) {
  const auto has = [&](NonparametricTest t) {
    return std::find(spec.nonparametric.begin(), spec.nonparametric.end(), t) != spec.nonparametric.end();
  };
  if (has(NonparametricTest::mcnemar)) return TestId::mcnemar;
  if (has(NonparametricTest::wilcoxon)) return TestId::wilcoxon;
  // Correlations only have a resampling route through the joint bootstrap.
  if (spec.ingestion_form == IngestionForm::correlation) return TestId::correlation_bootstrap;
  if (opt.prefer_bootstrap && has(NonparametricTest::bootstrap)) return TestId::bootstrap;
  return has(NonparametricTest::permutation) ? TestId::permutation : TestId::bootstrap;
}

}  // namespace detail

/// Picks the test for `measure`. Deltas are required when the measure has a
/// parametric option; they are checked for normality before it is chosen.
inline Recommendation recommend(MeasureId measure, std::optional<std::span<const double>> deltas,
                                const RecommendOptions& opt = {}) {
  const MeasureSpec& spec = lookup(measure);
  Recommendation rec{measure, detail::nonparametric_choice(spec, opt), RecommendationBasis::no_parametric_exists,
                     std::nullopt};
  if (!spec.parametric) return rec;
  if (!deltas) fail(ErrorKind::invalid_argument, "deltas are required for a measure with a parametric option");
  if (deltas->size() < kNormalityMinN) {
    rec.basis = RecommendationBasis::insufficient_data_for_normality;
    return rec;
  }
  try {
    rec.normality = dagostino_k2(*deltas, opt.alpha_norm);
  } catch (const Error& e) {
    // Constant deltas: the parametric statistic is undefined as well.
    if (e.kind() != ErrorKind::degenerate_sample) throw;
    rec.basis = RecommendationBasis::normality_failed;
    return rec;
  }
  if (rec.normality->pass) {
    rec.test = *spec.parametric == ParametricTest::t_test ? TestId::paired_t : TestId::correlation_z;
    rec.basis = RecommendationBasis::table_parametric_ok;
  } else {
    rec.basis = RecommendationBasis::normality_failed;
  }
  return rec;
}

}  // namespace sigkit

#endif  // SIGKIT_RECOMMEND_HPP
