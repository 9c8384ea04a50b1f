#ifndef SIGKIT_CLI_HPP
#define SIGKIT_CLI_HPP

// Command-line surface: `run`, `recommend` and `validate`.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 degenerate sample.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sigkit/errors.hpp"
#include "sigkit/io.hpp"
#include "sigkit/measures.hpp"
#include "sigkit/recommend.hpp"
#include "sigkit/significance.hpp"
#include "sigkit/validity_mc.hpp"

namespace sigkit {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_degenerate = 3 };

inline int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return exit_usage;
    case ErrorKind::data_error:
    case ErrorKind::empty_sample: return exit_data;
    case ErrorKind::degenerate_sample:
    case ErrorKind::insufficient_data: return exit_degenerate;
  }
  return exit_usage;
}

/// Parses "mean", "accuracy", "precision", "recall", "f1", "fbeta:<beta>",
/// or "ratio:<num>:<den>:<arity>".
inline Combiner parse_combiner(const std::string& s) {
  if (s == "mean") return Combiner::mean();
  if (s == "accuracy") return Combiner::accuracy();
  if (s == "precision") return Combiner::precision();
  if (s == "recall") return Combiner::recall();
  if (s == "f1") return Combiner::f_beta(1.0);
  try {
    if (s.rfind("fbeta:", 0) == 0) return Combiner::f_beta(std::stod(s.substr(6)));
    if (s.rfind("ratio:", 0) == 0) {
      std::size_t num = 0, den = 0, arity = 0;
      char c1 = 0, c2 = 0;
      std::istringstream in(s.substr(6));
      if (in >> num >> c1 >> den >> c2 >> arity && c1 == ':' && c2 == ':' && in.eof()) {
        return Combiner::ratio(num, den, arity);
      }
    }
  } catch (const std::logic_error&) {
  }
  fail(ErrorKind::invalid_argument, "unknown combiner '" + s + "'");
}

inline Combiner default_combiner(MeasureId m) {
  switch (m) {
    case MeasureId::recall: return Combiner::recall();
    case MeasureId::precision: return Combiner::precision();
    case MeasureId::f_score:
    case MeasureId::coref_family: return Combiner::f_beta(1.0);
    default: return Combiner::mean();
  }
}

/// Per-example differences in true positives. Under a recall combiner with
/// identical gold counts (tp + fn) per example, the recall difference is
/// their scaled mean, so a paired t-test on them tests the recall delta.
inline std::vector<double> recall_hit_deltas(const SufficientStats& stats) {
  if (stats.combiner().kind() != Combiner::Kind::recall) {
    fail(ErrorKind::invalid_argument, "count input supports paired_t only with the recall combiner");
  }
  std::vector<double> d(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto a = stats.row(Side::a, i);
    const auto b = stats.row(Side::b, i);
    if (a[0] + a[2] != b[0] + b[2]) {
      fail(ErrorKind::data_error, "example '" + stats.ids()[i] + "': systems disagree on gold count tp + fn");
    }
    d[i] = static_cast<double>(a[0] - b[0]);
  }
  return d;
}

struct RunOptions {
  std::optional<std::string> measure;
  std::optional<std::string> test;
  bool auto_select = false;
  std::optional<std::string> form;
  std::optional<std::string> combiner;
  std::string input;
  std::optional<std::string> input_b;
  std::optional<std::string> gold;
  double alpha = 0.05;
  std::string tail = "two_sided";
  std::size_t resamples = 10000;
  std::optional<std::uint64_t> seed;
  std::string mode = "auto";
  double alpha_norm = kDefaultAlphaNorm;
  bool prefer_bootstrap = false;
  unsigned threads = 1;
  double r0 = 0.0;
  std::string format = "json";
};

namespace detail {

inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("SIGKIT_SEED"); env != nullptr && *env != '\0') {
    std::uint64_t v = 0;
    const std::string_view s(env);
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) fail(ErrorKind::invalid_argument, "SIGKIT_SEED is not an integer");
    return v;
  }
  return kDefaultSeed;
}

inline ReportFormat parse_format(const std::string& s) {
  if (s == "json") return ReportFormat::json;
  if (s == "text") return ReportFormat::text;
  fail(ErrorKind::invalid_argument, "unknown format '" + s + "'");
}

// Deltas used to gate the parametric branch; empty when not applicable.
inline std::optional<std::vector<double>> gating_deltas(const LoadedInput& data) {
  if (const auto* s = std::get_if<PairedScores>(&data)) return s->deltas();
  if (const auto* c = std::get_if<CorrectnessInput>(&data)) return c->scores.deltas();
  if (const auto* k = std::get_if<SufficientStats>(&data)) {
    if (k->combiner().kind() == Combiner::Kind::recall) return recall_hit_deltas(*k);
  }
  return std::nullopt;
}

inline const PairedScores& scores_of(const LoadedInput& data, TestId test) {
  if (const auto* s = std::get_if<PairedScores>(&data)) return *s;
  if (const auto* c = std::get_if<CorrectnessInput>(&data)) return c->scores;
  fail(ErrorKind::invalid_argument, std::string(to_string(test)) + " needs scores or correctness input");
}

inline TestResult execute(TestId test, const LoadedInput& data, const RunOptions& o, std::uint64_t seed) {
  const Tail tail = parse_tail(o.tail);
  ResampleOptions ro;
  ro.resamples = o.resamples;
  ro.seed = seed;
  ro.tail = tail;
  ro.alpha = o.alpha;
  ro.threads = o.threads;

  switch (test) {
    case TestId::mcnemar: {
      const auto* c = std::get_if<CorrectnessInput>(&data);
      if (c == nullptr) fail(ErrorKind::invalid_argument, "mcnemar needs correctness input");
      return mcnemar(c->table, o.alpha, tail);
    }
    case TestId::paired_t: {
      if (const auto* k = std::get_if<SufficientStats>(&data)) {
        auto r = paired_t(PairedScores(recall_hit_deltas(*k), std::vector<double>(k->size(), 0.0)), tail, o.alpha);
        r.notes.push_back("recall_hit_deltas");
        return r;
      }
      return paired_t(scores_of(data, test), tail, o.alpha);
    }
    case TestId::wilcoxon: {
      WilcoxonMode mode = WilcoxonMode::auto_select;
      if (o.mode == "exact") mode = WilcoxonMode::exact;
      else if (o.mode == "approx") mode = WilcoxonMode::approx;
      else if (o.mode != "auto") fail(ErrorKind::invalid_argument, "wilcoxon mode must be auto, exact or approx");
      return wilcoxon_signed_rank(scores_of(data, test), tail, o.alpha, mode);
    }
    case TestId::bootstrap:
      if (const auto* k = std::get_if<SufficientStats>(&data)) return paired_bootstrap(*k, ro);
      return paired_bootstrap(scores_of(data, test), ro);
    case TestId::permutation: {
      PermutationMode mode = PermutationMode::auto_select;
      if (o.mode == "exact") mode = PermutationMode::exact;
      else if (o.mode == "sampled") mode = PermutationMode::sampled;
      else if (o.mode != "auto") fail(ErrorKind::invalid_argument, "permutation mode must be auto, exact or sampled");
      if (const auto* k = std::get_if<SufficientStats>(&data)) return permutation_test(*k, ro, mode);
      return permutation_test(scores_of(data, test), ro, mode);
    }
    case TestId::correlation_z:
    case TestId::correlation_bootstrap: break;
  }
  fail(ErrorKind::invalid_argument, "unsupported test");
}

inline TestResult execute_correlation(TestId test, const CorrelationInput& in, CorrelationKind kind,
                                      const RunOptions& o, std::uint64_t seed) {
  if (test == TestId::correlation_z) {
    if (in.b) fail(ErrorKind::invalid_argument, "correlation_z tests a single system; omit --input-b");
    const double r = correlation(kind, in.a.predictions(), in.a.gold());
    return correlation_z_test(kind, r, in.a.size(), parse_tail(o.tail), o.alpha, o.r0);
  }
  if (test != TestId::correlation_bootstrap) {
    fail(ErrorKind::invalid_argument, std::string(to_string(test)) + " cannot run on correlation input");
  }
  if (!in.b) fail(ErrorKind::invalid_argument, "correlation_bootstrap needs --input-b");
  ResampleOptions ro;
  ro.resamples = o.resamples;
  ro.seed = seed;
  ro.tail = parse_tail(o.tail);
  ro.alpha = o.alpha;
  ro.threads = o.threads;
  return correlation_bootstrap(in.a, *in.b, kind, ro);
}

}  // namespace detail

/// Executes `run` and returns the report.
inline Report run_command(const RunOptions& o) {
  if (o.test && o.auto_select) fail(ErrorKind::invalid_argument, "--test and --auto are mutually exclusive");
  if (!o.test && !o.measure) fail(ErrorKind::invalid_argument, "give --test, or --measure to use the recommendation");
  const MeasureSpec* spec = o.measure ? &lookup(*o.measure) : nullptr;
  const bool use_recommendation = !o.test;

  IngestionForm form = IngestionForm::scores;
  if (o.form) form = parse_ingestion_form(*o.form);
  else if (spec) form = spec->ingestion_form;
  else fail(ErrorKind::invalid_argument, "--form is required without --measure");

  Combiner combiner = o.combiner ? parse_combiner(*o.combiner) : spec ? default_combiner(spec->measure) : Combiner::mean();
  if (form == IngestionForm::correlation && !o.gold) fail(ErrorKind::invalid_argument, "correlation input needs --gold");
  if (form != IngestionForm::correlation && (o.gold || o.input_b)) {
    fail(ErrorKind::invalid_argument, "--gold/--input-b apply to correlation input only");
  }

  std::optional<TestId> test;
  if (o.test) {
    test = parse_test_id(*o.test);
    const bool correlation_test = *test == TestId::correlation_z || *test == TestId::correlation_bootstrap;
    if (correlation_test != (form == IngestionForm::correlation)) {
      fail(ErrorKind::invalid_argument,
           std::string(to_string(*test)) + " cannot run on " + std::string(to_string(form)) + " input");
    }
    if (*test == TestId::mcnemar && form != IngestionForm::correctness) {
      fail(ErrorKind::invalid_argument, "mcnemar needs correctness input");
    }
  }

  const std::uint64_t seed = detail::resolve_seed(o.seed);
  const Loaded loaded = load_input({o.input, o.input_b, o.gold}, form, combiner);

  Report report;
  if (spec) report.measure = std::string(spec->name);

  if (form == IngestionForm::correlation) {
    const auto& in = std::get<CorrelationInput>(loaded.data);
    const CorrelationKind kind =
        spec && spec->measure == MeasureId::spearman ? CorrelationKind::spearman : CorrelationKind::pearson;
    std::vector<std::string> extra;
    if (use_recommendation) {
      // Two systems scored against one gold vector give dependent
      // correlations, which only the joint bootstrap handles.
      if (in.b) {
        test = TestId::correlation_bootstrap;
        report.basis = spec->parametric ? RecommendationBasis::normality_failed : RecommendationBasis::no_parametric_exists;
        extra.push_back("dependent_correlations");
      } else {
        if (!spec->parametric) fail(ErrorKind::invalid_argument, "single-system correlation input needs a z-test measure");
        test = TestId::correlation_z;
        report.basis = RecommendationBasis::table_parametric_ok;
      }
    }
    report.result = detail::execute_correlation(*test, in, kind, o, seed);
    report.result.notes.insert(report.result.notes.end(), extra.begin(), extra.end());
  } else {
    if (use_recommendation) {
      const auto deltas = detail::gating_deltas(loaded.data);
      RecommendOptions ro{o.alpha_norm, o.prefer_bootstrap};
      const Recommendation rec = deltas ? recommend(spec->measure, std::span<const double>(*deltas), ro)
                                        : recommend(spec->measure, std::nullopt, ro);
      test = rec.test;
      report.basis = rec.basis;
      if (rec.normality) report.normality = NormalitySummary::from(*rec.normality);
      if (*test == TestId::mcnemar && form != IngestionForm::correctness) {
        fail(ErrorKind::invalid_argument, "mcnemar needs correctness input");
      }
    }
    report.result = detail::execute(*test, loaded.data, o, seed);
  }
  report.result.notes.push_back("input_checksum=fnv1a64:" + hex64(loaded.checksum));
  return report;
}

inline nlohmann::json recommendation_json(const MeasureSpec& spec, const Recommendation& rec) {
  using nlohmann::json;
  json nonparametric = json::array();
  for (auto t : spec.nonparametric) nonparametric.push_back(std::string(to_string(t)));
  json j;
  j["measure"] = std::string(spec.name);
  j["test"] = std::string(to_string(rec.test));
  j["basis"] = std::string(to_string(rec.basis));
  j["parametric"] = spec.parametric ? json(std::string(to_string(*spec.parametric))) : json(nullptr);
  j["nonparametric"] = nonparametric;
  j["ingestion_form"] = std::string(to_string(spec.ingestion_form));
  j["comments"] = spec.comment_keys;
  j["normality"] = rec.normality ? json{{"statistic", rec.normality->statistic},
                                        {"p_value", rec.normality->p_value.value()},
                                        {"pass", rec.normality->pass}}
                                 : json(nullptr);
  j["version"] = std::string(kVersion);
  return j;
}

struct ValidateOptions {
  std::vector<std::string> tests;
  std::optional<std::string> generator;
  std::size_t n = 100;
  std::size_t trials = 10000;
  double alpha = 0.05;
  std::optional<std::uint64_t> seed;
  std::size_t resamples = 1000;
  double effect = 0.0;
  double base_rate = 0.7;
  unsigned threads = 1;
  std::optional<std::string> output;
};

inline void validate_command(const ValidateOptions& o, std::ostream& out) {
  const std::uint64_t seed = detail::resolve_seed(o.seed);
  std::vector<ValidityCell> cells;
  if (o.tests.empty()) {
    if (o.generator) fail(ErrorKind::invalid_argument, "--generator needs at least one --test");
    cells = default_validity_grid();
  } else {
    if (!o.generator) fail(ErrorKind::invalid_argument, "--generator is required with --test");
    for (const auto& label : o.tests) {
      ValidityCell c;
      c.test = parse_test_config(label);
      c.generator.family = parse_null_family(*o.generator);
      c.generator.n = o.n;
      c.generator.effect = o.effect;
      c.generator.base_rate = o.base_rate;
      cells.push_back(c);
    }
  }
  std::ofstream file;
  if (o.output) {
    file.open(*o.output);
    if (!file) fail(ErrorKind::data_error, *o.output + ": cannot open for writing");
  }
  std::ostream& sink = o.output ? static_cast<std::ostream&>(file) : out;
  write_csv_header(sink);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto& c = cells[i];
    c.test.resamples = o.resamples;
    const auto est = rejection_rate(c.test, c.generator, o.trials, o.alpha, derive_seed(seed, i, 7), o.threads);
    write_csv_row(sink, c.test, c.generator, o.alpha, est);
  }
}

/// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Paired significance tests for comparing two systems on evaluation measures"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run a significance test on paired per-example outputs");
  run_cmd->add_option("--measure", run.measure, "Evaluation measure (see `recommend --list`)");
  run_cmd->add_option("--test", run.test, "mcnemar|paired_t|wilcoxon|bootstrap|permutation|correlation_z|correlation_bootstrap");
  run_cmd->add_flag("--auto", run.auto_select, "Pick the test from the measure recommendation");
  run_cmd->add_option("--form", run.form, "scores|counts|correctness|correlation");
  run_cmd->add_option("--combiner", run.combiner, "mean|accuracy|precision|recall|f1|fbeta:B|ratio:NUM:DEN:ARITY");
  run_cmd->add_option("--input", run.input, "Input TSV (system A predictions for correlation input)")->required();
  run_cmd->add_option("--input-b", run.input_b, "System B predictions (correlation input)");
  run_cmd->add_option("--gold", run.gold, "Gold values (correlation input)");
  run_cmd->add_option("--alpha", run.alpha, "Significance level")->capture_default_str();
  run_cmd->add_option("--tail", run.tail, "two_sided|greater|less")->capture_default_str();
  run_cmd->add_option("--resamples,-B,-R", run.resamples, "Bootstrap / permutation resamples")->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "Resampling seed (default: $SIGKIT_SEED)");
  run_cmd->add_option("--mode", run.mode, "auto|exact|approx|sampled")->capture_default_str();
  run_cmd->add_option("--alpha-norm", run.alpha_norm, "Normality check level")->capture_default_str();
  run_cmd->add_flag("--prefer-bootstrap", run.prefer_bootstrap, "Default to bootstrap instead of permutation");
  run_cmd->add_option("--threads", run.threads, "Resampling threads")->capture_default_str();
  run_cmd->add_option("--r0", run.r0, "Null correlation for correlation_z (pearson)")->capture_default_str();
  run_cmd->add_option("--format", run.format, "json|text")->capture_default_str();

  std::optional<std::string> rec_measure;
  bool rec_list = false;
  RunOptions rec_input;
  auto* rec_cmd = app.add_subcommand("recommend", "Recommend a test for an evaluation measure");
  rec_cmd->add_option("--measure", rec_measure, "Evaluation measure");
  rec_cmd->add_flag("--list", rec_list, "Print the full measure table");
  rec_cmd->add_option("--input", rec_input.input, "Optional input used for the normality check");
  rec_cmd->add_option("--form", rec_input.form, "Input form");
  rec_cmd->add_option("--combiner", rec_input.combiner, "Combiner for counts input");
  rec_cmd->add_option("--alpha-norm", rec_input.alpha_norm, "Normality check level")->capture_default_str();
  rec_cmd->add_flag("--prefer-bootstrap", rec_input.prefer_bootstrap, "Default to bootstrap instead of permutation");

  ValidateOptions val;
  auto* val_cmd = app.add_subcommand("validate", "Estimate type-I error (or power) by Monte Carlo; prints CSV");
  val_cmd->add_option("--test", val.tests, "Test label, repeatable (e.g. paired_t, wilcoxon_exact); default grid if omitted");
  val_cmd->add_option("--generator", val.generator, "Null generator family");
  val_cmd->add_option("--n", val.n, "Examples per trial")->capture_default_str();
  val_cmd->add_option("--trials", val.trials, "Monte Carlo trials")->capture_default_str();
  val_cmd->add_option("--alpha", val.alpha, "Significance level")->capture_default_str();
  val_cmd->add_option("--seed", val.seed, "Seed (default: $SIGKIT_SEED)");
  val_cmd->add_option("--resamples", val.resamples, "Resamples per trial for resampling tests")->capture_default_str();
  val_cmd->add_option("--effect", val.effect, "Effect size (0 = null)")->capture_default_str();
  val_cmd->add_option("--base-rate", val.base_rate, "Base rate for bernoulli/count generators")->capture_default_str();
  val_cmd->add_option("--threads", val.threads, "Worker threads")->capture_default_str();
  val_cmd->add_option("--output,-o", val.output, "CSV output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  }

  try {
    if (run_cmd->parsed()) {
      const Report report = run_command(run);
      out << render_report(report, detail::parse_format(run.format));
    } else if (rec_cmd->parsed()) {
      if (rec_list) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& spec : registry()) {
          const Recommendation rec{spec.measure, detail::nonparametric_choice(spec, {}),
                                   spec.parametric ? RecommendationBasis::table_parametric_ok
                                                   : RecommendationBasis::no_parametric_exists,
                                   std::nullopt};
          rows.push_back(recommendation_json(spec, rec));
        }
        out << rows.dump(2) << '\n';
        return exit_ok;
      }
      if (!rec_measure) fail(ErrorKind::invalid_argument, "recommend needs --measure or --list");
      const MeasureSpec& spec = lookup(*rec_measure);
      std::optional<std::vector<double>> deltas;
      if (!rec_input.input.empty()) {
        const IngestionForm form = rec_input.form ? parse_ingestion_form(*rec_input.form) : spec.ingestion_form;
        if (form == IngestionForm::correlation) {
          fail(ErrorKind::invalid_argument, "recommend does not read correlation input");
        }
        const Combiner combiner = rec_input.combiner ? parse_combiner(*rec_input.combiner) : default_combiner(spec.measure);
        deltas = detail::gating_deltas(load_input({rec_input.input, {}, {}}, form, combiner).data);
      }
      const RecommendOptions ro{rec_input.alpha_norm, rec_input.prefer_bootstrap};
      const Recommendation rec =
          deltas ? recommend(spec.measure, std::span<const double>(*deltas), ro) : recommend(spec.measure, std::nullopt, ro);
      out << recommendation_json(spec, rec).dump(2) << '\n';
    } else if (val_cmd->parsed()) {
      validate_command(val, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  }
  return exit_ok;
}

}  // namespace sigkit

#endif  // SIGKIT_CLI_HPP
