#ifndef SIGKIT_IO_HPP
#define SIGKIT_IO_HPP

// TSV ingestion and report serialization.
//
// Input schemas (UTF-8, tab separated, header row required):
//   scores       id  score_a  score_b
//   correctness  id  a  b            (a, b in {0, 1})
//   counts       id  a1..ak  b1..bk  (k fixed by the header)
//   correlation  id  pred            (one file per system) plus id  gold

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sigkit/errors.hpp"
#include "sigkit/measures.hpp"
#include "sigkit/normality.hpp"
#include "sigkit/recommend.hpp"
#include "sigkit/significance.hpp"

namespace sigkit {

inline constexpr std::string_view kVersion = "0.1.0";

/// 64-bit FNV-1a digest of raw bytes.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

/// A parsed TSV file: header plus data rows, each tagged with its 1-based line.
struct TsvTable {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;
  std::uint64_t checksum = 0;

  [[noreturn]] void fail_at(std::size_t row, const std::string& what) const {
    fail(ErrorKind::data_error, path + ":" + std::to_string(lines[row]) + ": " + what);
  }
};

namespace detail {

inline std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.emplace_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace detail

/// Parses TSV text. Trailing blank lines are ignored; any other blank line
/// is a data error.
inline TsvTable parse_tsv(std::string_view text, std::string path = "<input>") {
  TsvTable t;
  t.path = std::move(path);
  t.checksum = fnv1a64(text);
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(++line_no, line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  while (!lines.empty() && lines.back().second.empty()) lines.pop_back();
  if (lines.empty()) fail(ErrorKind::empty_sample, t.path + ": empty file");
  t.header = detail::split_tabs(lines.front().second);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [no, line] = lines[i];
    if (line.empty()) fail(ErrorKind::data_error, t.path + ":" + std::to_string(no) + ": blank line");
    auto fields = detail::split_tabs(line);
    if (fields.size() != t.header.size()) {
      fail(ErrorKind::data_error, t.path + ":" + std::to_string(no) + ": expected " +
                                      std::to_string(t.header.size()) + " fields, found " +
                                      std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.lines.push_back(no);
  }
  if (t.rows.empty()) fail(ErrorKind::empty_sample, t.path + ": no data rows");
  return t;
}

inline TsvTable read_tsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data_error, path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_tsv(buf.str(), path);
}

namespace detail {

inline double parse_real(const TsvTable& t, std::size_t row, std::size_t col) {
  const std::string& s = t.rows[row][col];
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) {
    t.fail_at(row, "column '" + t.header[col] + "': '" + s + "' is not a finite number");
  }
  return v;
}

inline std::int64_t parse_count(const TsvTable& t, std::size_t row, std::size_t col) {
  const std::string& s = t.rows[row][col];
  std::int64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || v < 0) {
    t.fail_at(row, "column '" + t.header[col] + "': '" + s + "' is not a nonnegative integer");
  }
  return v;
}

inline void require_columns(const TsvTable& t, std::size_t expected, std::string_view schema) {
  if (t.header.size() != expected) {
    fail(ErrorKind::data_error, t.path + ":1: header must have " + std::to_string(expected) + " columns (" +
                                    std::string(schema) + ")");
  }
}

inline void require_unique_rows(const TsvTable& t) {
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (!seen.emplace(t.rows[r][0], r).second) t.fail_at(r, "duplicate id '" + t.rows[r][0] + "'");
  }
}

}  // namespace detail

inline PairedScores load_scores(const TsvTable& t) {
  detail::require_columns(t, 3, "id, score_a, score_b");
  detail::require_unique_rows(t);
  std::vector<std::string> ids;
  std::vector<double> a, b;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ids.push_back(t.rows[r][0]);
    a.push_back(detail::parse_real(t, r, 1));
    b.push_back(detail::parse_real(t, r, 2));
  }
  return PairedScores(std::move(ids), std::move(a), std::move(b));
}

/// Correctness input: the 0/1 vectors and their cross-classification.
struct CorrectnessInput {
  PairedScores scores;
  PairedOutcomeTable table;
};

inline CorrectnessInput load_correctness(const TsvTable& t) {
  detail::require_columns(t, 3, "id, a, b");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 1; c <= 2; ++c) {
      if (t.rows[r][c] != "0" && t.rows[r][c] != "1") {
        t.fail_at(r, "column '" + t.header[c] + "': correctness must be 0 or 1, found '" + t.rows[r][c] + "'");
      }
    }
  }
  PairedScores scores = load_scores(t);
  const auto table = PairedOutcomeTable::from_correctness(scores.a(), scores.b());
  return {std::move(scores), table};
}

inline SufficientStats load_counts(const TsvTable& t, const Combiner& combiner) {
  if (t.header.size() < 3 || (t.header.size() - 1) % 2 != 0) {
    fail(ErrorKind::data_error, t.path + ":1: counts header must be id followed by k columns per system");
  }
  const std::size_t k = (t.header.size() - 1) / 2;
  if (k != combiner.arity()) {
    fail(ErrorKind::data_error, t.path + ":1: " + std::to_string(k) + " count columns per system, combiner " +
                                    combiner.name() + " needs " + std::to_string(combiner.arity()));
  }
  detail::require_unique_rows(t);
  std::vector<std::string> ids;
  std::vector<std::vector<std::int64_t>> a, b;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ids.push_back(t.rows[r][0]);
    std::vector<std::int64_t> ra(k), rb(k);
    for (std::size_t j = 0; j < k; ++j) {
      ra[j] = detail::parse_count(t, r, 1 + j);
      rb[j] = detail::parse_count(t, r, 1 + k + j);
    }
    a.push_back(std::move(ra));
    b.push_back(std::move(rb));
  }
  return SufficientStats(std::move(ids), a, b, combiner);
}

/// Correlation input: system A (and optionally B) joined with gold on id,
/// in gold-file order.
struct CorrelationInput {
  std::vector<std::string> ids;
  CorrelationSample a;
  std::optional<CorrelationSample> b;
};

namespace detail {

inline std::vector<double> join_on_gold(const TsvTable& pred, const TsvTable& gold) {
  require_columns(pred, 2, "id, pred");
  require_unique_rows(pred);
  std::unordered_map<std::string, double> by_id;
  for (std::size_t r = 0; r < pred.rows.size(); ++r) by_id.emplace(pred.rows[r][0], parse_real(pred, r, 1));
  if (by_id.size() != gold.rows.size()) {
    fail(ErrorKind::data_error, pred.path + ": ids do not match the gold file (" + std::to_string(by_id.size()) +
                                    " vs " + std::to_string(gold.rows.size()) + ")");
  }
  std::vector<double> out;
  out.reserve(gold.rows.size());
  for (std::size_t r = 0; r < gold.rows.size(); ++r) {
    const auto it = by_id.find(gold.rows[r][0]);
    if (it == by_id.end()) gold.fail_at(r, "id '" + gold.rows[r][0] + "' missing from " + pred.path);
    out.push_back(it->second);
  }
  return out;
}

}  // namespace detail

inline CorrelationInput load_correlation(const TsvTable& pred_a, const std::optional<TsvTable>& pred_b,
                                         const TsvTable& gold) {
  detail::require_columns(gold, 2, "id, gold");
  detail::require_unique_rows(gold);
  std::vector<std::string> ids;
  std::vector<double> g;
  for (std::size_t r = 0; r < gold.rows.size(); ++r) {
    ids.push_back(gold.rows[r][0]);
    g.push_back(detail::parse_real(gold, r, 1));
  }
  CorrelationInput in{ids, CorrelationSample(detail::join_on_gold(pred_a, gold), g), std::nullopt};
  if (pred_b) in.b.emplace(detail::join_on_gold(*pred_b, gold), g);
  return in;
}

using LoadedInput = std::variant<PairedScores, SufficientStats, CorrectnessInput, CorrelationInput>;

/// Paths for load_input. `secondary` (system B predictions) and `gold` are
/// read only for the correlation form.
struct InputPaths {
  std::string primary;
  std::optional<std::string> secondary;
  std::optional<std::string> gold;
};

struct Loaded {
  LoadedInput data;
  std::uint64_t checksum = 0;  // digest over all files read
};

inline Loaded load_input(const InputPaths& paths, IngestionForm form,
                         const Combiner& combiner = Combiner::mean()) {
  const TsvTable primary = read_tsv(paths.primary);
  switch (form) {
    case IngestionForm::scores: return {load_scores(primary), primary.checksum};
    case IngestionForm::correctness: return {load_correctness(primary), primary.checksum};
    case IngestionForm::counts: return {load_counts(primary, combiner), primary.checksum};
    case IngestionForm::correlation: {
      if (!paths.gold) fail(ErrorKind::invalid_argument, "correlation input needs a gold file");
      const TsvTable gold = read_tsv(*paths.gold);
      std::optional<TsvTable> second;
      if (paths.secondary) second = read_tsv(*paths.secondary);
      std::uint64_t sum = primary.checksum ^ (gold.checksum * 3);
      if (second) sum ^= second->checksum * 7;
      return {load_correlation(primary, second, gold), sum};
    }
  }
  fail(ErrorKind::invalid_argument, "unknown input form");
}

// ---------------------------------------------------------------------------
// Reports

struct NormalitySummary {
  double statistic = 0.0;
  double p_value = 0.0;
  bool pass = false;

  static NormalitySummary from(const NormalityReport& r) { return {r.statistic, r.p_value.value(), r.pass}; }
  friend bool operator==(const NormalitySummary&, const NormalitySummary&) = default;
};

/// A test result with its provenance: measure, recommendation basis and
/// normality check (when a recommendation chose the test).
struct Report {
  TestResult result;
  std::optional<std::string> measure;
  std::optional<RecommendationBasis> basis;
  std::optional<NormalitySummary> normality;
  std::string version{kVersion};

  friend bool operator==(const Report&, const Report&) = default;
};

enum class ReportFormat { json, text };

inline nlohmann::json to_json(const Report& r) {
  using nlohmann::json;
  const TestResult& t = r.result;
  json j;
  j["test"] = std::string(to_string(t.test));
  j["measure"] = r.measure ? json(*r.measure) : json(nullptr);
  j["statistic"] = t.statistic;
  j["p_value"] = t.p_value.value();
  j["alpha"] = t.alpha;
  j["reject"] = t.reject;
  j["tail"] = std::string(to_string(t.tail));
  j["n"] = t.n;
  j["resamples"] = t.resamples ? json(*t.resamples) : json(nullptr);
  j["seed"] = t.seed ? json(*t.seed) : json(nullptr);
  j["basis"] = r.basis ? json(std::string(to_string(*r.basis))) : json(nullptr);
  j["normality"] = r.normality ? json{{"statistic", r.normality->statistic},
                                      {"p_value", r.normality->p_value},
                                      {"pass", r.normality->pass}}
                               : json(nullptr);
  j["notes"] = t.notes;
  j["version"] = r.version;
  return j;
}

inline Report report_from_json(const nlohmann::json& j) {
  try {
    Report r;
    TestResult& t = r.result;
    t.test = parse_test_id(j.at("test").get<std::string>());
    if (!j.at("measure").is_null()) r.measure = j.at("measure").get<std::string>();
    t.statistic = j.at("statistic").get<double>();
    t.p_value = Probability(j.at("p_value").get<double>());
    t.alpha = j.at("alpha").get<double>();
    t.reject = j.at("reject").get<bool>();
    t.tail = parse_tail(j.at("tail").get<std::string>());
    t.n = j.at("n").get<std::size_t>();
    if (!j.at("resamples").is_null()) t.resamples = j.at("resamples").get<std::size_t>();
    if (!j.at("seed").is_null()) t.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("basis").is_null()) r.basis = parse_basis(j.at("basis").get<std::string>());
    if (const auto& nj = j.at("normality"); !nj.is_null()) {
      r.normality = NormalitySummary{nj.at("statistic").get<double>(), nj.at("p_value").get<double>(),
                                     nj.at("pass").get<bool>()};
    }
    t.notes = j.at("notes").get<std::vector<std::string>>();
    r.version = j.at("version").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data_error, std::string("malformed report: ") + e.what());
  }
}

inline Report parse_report(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data_error, std::string("malformed report: ") + e.what());
  }
  return report_from_json(j);
}

inline std::string render_report(const Report& r, ReportFormat format) {
  if (format == ReportFormat::json) return to_json(r).dump(2) + "\n";

  const TestResult& t = r.result;
  std::ostringstream s;
  s << std::setprecision(6);
  s << "test        " << to_string(t.test) << " (" << to_string(t.tail) << ")\n";
  if (r.measure) s << "measure     " << *r.measure << '\n';
  if (r.basis) s << "basis       " << to_string(*r.basis) << '\n';
  if (r.normality) {
    s << "normality   K2 = " << r.normality->statistic << ", p = " << r.normality->p_value
      << (r.normality->pass ? " (pass)" : " (fail)") << '\n';
  }
  s << "n           " << t.n << '\n';
  s << "statistic   " << t.statistic << '\n';
  s << "p-value     " << std::setprecision(10) << t.p_value.value() << std::setprecision(6) << '\n';
  s << "decision    " << (t.reject ? "reject H0" : "do not reject H0") << " at alpha = " << t.alpha << '\n';
  if (t.resamples) s << "resamples   " << *t.resamples << " (seed " << t.seed.value_or(0) << ")\n";
  if (!t.notes.empty()) {
    s << "notes      ";
    for (const auto& note : t.notes) s << ' ' << note;
    s << '\n';
  }
  s << "version     " << r.version << '\n';
  return s.str();
}

}  // namespace sigkit

#endif  // SIGKIT_IO_HPP
