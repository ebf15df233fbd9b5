#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "repot/runner.hpp"
#include "repot/util.hpp"

namespace repot {

// ---------------------------------------------------------------------------
// success tables

struct RateCell {
  int successes = 0;
  int total = 0;
  double pct() const { return total ? 100.0 * successes / total : 0.0; }
};

struct SuccessKey {
  std::string model;
  std::string method;
  std::string env;
  int complexity = 0;
  bool operator<(const SuccessKey& o) const {
    return std::tie(model, method, env, complexity) <
           std::tie(o.model, o.method, o.env, o.complexity);
  }
};

using SuccessTable = std::map<SuccessKey, RateCell>;

// Stratified success rates. Rows with a runner_exception still count in the
// denominator: an aborted problem is a failed problem.
inline SuccessTable success_table(const std::vector<TraceRecord>& traces) {
  SuccessTable out;
  for (const auto& t : traces) {
    auto& cell = out[{t.model, t.method, t.env, t.complexity}];
    ++cell.total;
    if (t.success) ++cell.successes;
  }
  return out;
}

inline std::map<std::pair<std::string, std::string>, RateCell> success_by_model_method(
    const std::vector<TraceRecord>& traces) {
  std::map<std::pair<std::string, std::string>, RateCell> out;
  for (const auto& t : traces) {
    auto& cell = out[{t.model, t.method}];
    ++cell.total;
    if (t.success) ++cell.successes;
  }
  return out;
}

// ---------------------------------------------------------------------------
// paired bootstrap

struct PairedSample {
  // outcome pairs aligned on problem_id: (method_a_success, method_b_success)
  std::vector<std::pair<bool, bool>> pairs;
};

inline PairedSample make_paired_sample(const std::vector<TraceRecord>& traces,
                                       const std::string& method_a,
                                       const std::string& method_b) {
  std::map<std::string, bool> arm_a, arm_b;
  for (const auto& t : traces) {
    std::map<std::string, bool>* arm = nullptr;
    std::string which;
    if (t.method == method_a) arm = &arm_a, which = method_a;
    if (t.method == method_b) arm = &arm_b, which = method_b;
    if (!arm) continue;
    if (arm->count(t.problem_id))
      throw std::invalid_argument("duplicate trace for problem '" + t.problem_id + "' in method " +
                                  which);
    (*arm)[t.problem_id] = t.success;
  }
  for (const auto& [id, s] : arm_a) {
    (void)s;
    if (!arm_b.count(id))
      throw std::invalid_argument("problem '" + id + "' present in " + method_a + " but not " +
                                  method_b);
  }
  for (const auto& [id, s] : arm_b) {
    (void)s;
    if (!arm_a.count(id))
      throw std::invalid_argument("problem '" + id + "' present in " + method_b + " but not " +
                                  method_a);
  }
  PairedSample out;
  for (const auto& [id, a] : arm_a) out.pairs.emplace_back(a, arm_b.at(id));
  return out;
}

struct BootstrapCi {
  double delta = 0;  // percentage points, method_a - method_b
  double lo = 0;
  double hi = 0;
  int n = 0;
  long resamples = 0;
};

namespace detail {

inline double percentile_nearest_rank(const std::vector<double>& sorted, double q) {
  const long m = static_cast<long>(sorted.size());
  long idx = static_cast<long>(std::ceil(q * static_cast<double>(m))) - 1;
  idx = std::clamp<long>(idx, 0, m - 1);
  return sorted[static_cast<size_t>(idx)];
}

}  // namespace detail

// Percentile CI over resampled problem indices. For n <= 4 every one of the
// n^n resamples is enumerated instead of drawing B, so tiny samples are exact.
inline BootstrapCi paired_bootstrap_ci(const PairedSample& sample, long B = 10000,
                                       double level = 0.95, uint64_t seed = 0) {
  const size_t n = sample.pairs.size();
  if (n == 0) throw std::invalid_argument("empty paired sample");
  if (B < 1) throw std::invalid_argument("B must be >= 1");
  if (level <= 0 || level >= 1) throw std::invalid_argument("level must be in (0, 1)");

  std::vector<int> d(n);
  long sum = 0;
  for (size_t i = 0; i < n; ++i) {
    d[i] = (sample.pairs[i].first ? 1 : 0) - (sample.pairs[i].second ? 1 : 0);
    sum += d[i];
  }
  const double scale = 100.0 / static_cast<double>(n);

  std::vector<double> stats;
  if (n <= 4) {
    size_t count = 1;
    for (size_t i = 0; i < n; ++i) count *= n;
    stats.reserve(count);
    std::vector<size_t> pick(n, 0);
    for (size_t c = 0; c < count; ++c) {
      long s = 0;
      for (size_t i = 0; i < n; ++i) s += d[pick[i]];
      stats.push_back(static_cast<double>(s) * scale);
      for (size_t i = 0; i < n; ++i) {
        if (++pick[i] < n) break;
        pick[i] = 0;
      }
    }
  } else {
    Rng rng(seed);
    stats.reserve(static_cast<size_t>(B));
    for (long rep = 0; rep < B; ++rep) {
      long s = 0;
      for (size_t i = 0; i < n; ++i) s += d[rng.below(n)];
      stats.push_back(static_cast<double>(s) * scale);
    }
  }
  std::sort(stats.begin(), stats.end());

  BootstrapCi ci;
  ci.delta = static_cast<double>(sum) * scale;
  ci.lo = detail::percentile_nearest_rank(stats, (1.0 - level) / 2.0);
  ci.hi = detail::percentile_nearest_rank(stats, (1.0 + level) / 2.0);
  ci.n = static_cast<int>(n);
  ci.resamples = static_cast<long>(stats.size());
  return ci;
}

// ---------------------------------------------------------------------------
// recovery-condition model

struct RecoveryParams {
  double p = 0;        // initial success rate
  double q = 0;        // failed with a nonempty verified prefix
  double r = 0;        // repair success given a recoverable prefix
  double b = 0;        // fresh-retry success given first failure
  double b_prime = 0;  // fresh-retry success on the zero-prefix subset

  void validate() const {
    for (double v : {p, q, r, b, b_prime})
      if (v < 0 || v > 1) throw std::invalid_argument("recovery parameters must be in [0, 1]");
    if (p + q > 1 + 1e-12) throw std::invalid_argument("p + q must not exceed 1");
    if (b_prime > b + 1e-12) throw std::invalid_argument("b' must not exceed b");
  }
};

struct Eq2Result {
  bool holds = false;
  double margin = 0;
};

inline Eq2Result eq2_evaluate(const RecoveryParams& params) {
  params.validate();
  Eq2Result out;
  out.margin = params.q * (params.r - params.b) -
               (1.0 - params.p - params.q) * (params.b - params.b_prime);
  out.holds = out.margin > 0;
  return out;
}

struct RateEstimate {
  long numerator = 0;
  long denominator = 0;
  bool defined() const { return denominator > 0; }
  double value() const {
    if (!defined()) throw std::logic_error("rate is undefined");
    return static_cast<double>(numerator) / static_cast<double>(denominator);
  }
};

struct Eq2Estimates {
  RateEstimate p;        // over pot traces
  RateEstimate q;        // over pot traces; undefined when no failure was observed
  RateEstimate r;        // over repot traces whose initial call failed with a prefix
  RateEstimate b;        // over pot_retry traces whose attempt 1 failed
  RateEstimate b_prime;  // the b subset restricted to zero-prefix attempt-1 failures

  bool all_defined() const {
    return p.defined() && q.defined() && r.defined() && b.defined() && b_prime.defined();
  }
  std::vector<std::string> undefined_names() const {
    std::vector<std::string> out;
    if (!p.defined()) out.push_back("p");
    if (!q.defined()) out.push_back("q");
    if (!r.defined()) out.push_back("r");
    if (!b.defined()) out.push_back("b");
    if (!b_prime.defined()) out.push_back("b'");
    return out;
  }
  RecoveryParams params() const {
    auto missing = undefined_names();
    if (!missing.empty()) {
      std::string names;
      for (const auto& m : missing) {
        if (!names.empty()) names += ", ";
        names += m;
      }
      throw std::invalid_argument("undefined recovery parameters: " + names);
    }
    return {p.value(), q.value(), r.value(), b.value(), b_prime.value()};
  }
};

// Sample estimates of the recovery-model parameters from pot, pot_retry and
// repot traces. Conditional rates with an empty conditioning set come back
// undefined, never imputed to zero.
inline Eq2Estimates eq2_estimate(const std::vector<TraceRecord>& traces) {
  Eq2Estimates est;
  long pot_failures = 0;
  for (const auto& t : traces) {
    if (t.method == "pot") {
      ++est.p.denominator;
      ++est.q.denominator;
      if (t.success) {
        ++est.p.numerator;
      } else {
        ++pot_failures;
        if (t.verified_prefix_len > 0) ++est.q.numerator;
      }
    } else if (t.method == "pot_retry") {
      if (!t.attempt1_success || *t.attempt1_success) continue;
      ++est.b.denominator;
      if (t.success) ++est.b.numerator;
      if (t.attempt1_prefix_len && *t.attempt1_prefix_len == 0) {
        ++est.b_prime.denominator;
        if (t.success) ++est.b_prime.numerator;
      }
    } else if (t.method == "repot" || t.method == "adaptive_repot") {
      if (!t.repot_initial_pot_success || *t.repot_initial_pot_success) continue;
      if (!t.initial_prefix_len || *t.initial_prefix_len == 0) continue;
      ++est.r.denominator;
      if (t.success) ++est.r.numerator;
    }
  }
  // q is a rate over all pot traces, but with zero observed failures there is
  // no evidence about the failure mix, so it is reported undefined.
  if (pot_failures == 0) est.q = {};
  return est;
}

// ---------------------------------------------------------------------------
// cost decomposition

struct CostRow {
  std::string model;
  std::string method;
  int n = 0;
  double mean_in = 0;
  double mean_out = 0;
  double median_in = 0;
  double median_out = 0;
  double mean_calls = 0;
  double mean_wall_s = 0;
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t m = v.size();
  if (m % 2) return v[m / 2];
  return (v[m / 2 - 1] + v[m / 2]) / 2.0;
}

}  // namespace detail

// Per-(model, method) token/call/latency aggregates. Tokens are summed over a
// problem's calls first, then averaged across problems.
inline std::vector<CostRow> cost_decomposition(const std::vector<TraceRecord>& traces) {
  struct Acc {
    std::vector<double> in, out;
    long calls = 0;
    double wall_ms = 0;
  };
  std::map<std::pair<std::string, std::string>, Acc> groups;
  for (const auto& t : traces) {
    auto& g = groups[{t.model, t.method}];
    long in = 0, out = 0;
    for (const auto& c : t.llm_calls) {
      in += c.prompt_tokens;
      out += c.completion_tokens;
    }
    g.in.push_back(static_cast<double>(in));
    g.out.push_back(static_cast<double>(out));
    g.calls += static_cast<long>(t.llm_calls.size());
    g.wall_ms += static_cast<double>(t.wall_ms);
  }
  std::vector<CostRow> rows;
  for (const auto& [key, g] : groups) {
    CostRow row;
    row.model = key.first;
    row.method = key.second;
    row.n = static_cast<int>(g.in.size());
    double sum_in = 0, sum_out = 0;
    for (double v : g.in) sum_in += v;
    for (double v : g.out) sum_out += v;
    row.mean_in = sum_in / row.n;
    row.mean_out = sum_out / row.n;
    row.median_in = detail::median(g.in);
    row.median_out = detail::median(g.out);
    row.mean_calls = static_cast<double>(g.calls) / row.n;
    row.mean_wall_s = g.wall_ms / row.n / 1000.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// capability-scaling regression

struct RegressionCell {
  std::string model;
  std::string env;
  std::optional<double> x;  // mean verified-prefix fraction on failed initial pot plans
  double y = 0;             // repot - pot_retry success delta in percentage points
};

// One cell per (model, environment) that has both a repot and a pot_retry
// arm; x is left undefined when that cell shows no failed pot plan.
inline std::vector<RegressionCell> capability_cells(const std::vector<TraceRecord>& traces) {
  struct Acc {
    double frac_sum = 0;
    int frac_n = 0;
    RateCell repot, retry;
  };
  std::map<std::pair<std::string, std::string>, Acc> groups;
  for (const auto& t : traces) {
    auto& g = groups[{t.model, t.env}];
    if (t.method == "pot") {
      if (!t.success) {
        double frac = t.plan_len > 0
                          ? static_cast<double>(t.verified_prefix_len) / t.plan_len
                          : 0.0;
        g.frac_sum += frac;
        ++g.frac_n;
      }
    } else if (t.method == "repot") {
      ++g.repot.total;
      if (t.success) ++g.repot.successes;
    } else if (t.method == "pot_retry") {
      ++g.retry.total;
      if (t.success) ++g.retry.successes;
    }
  }
  std::vector<RegressionCell> cells;
  for (const auto& [key, g] : groups) {
    if (!g.repot.total || !g.retry.total) continue;
    RegressionCell cell;
    cell.model = key.first;
    cell.env = key.second;
    if (g.frac_n) cell.x = g.frac_sum / g.frac_n;
    cell.y = g.repot.pct() - g.retry.pct();
    cells.push_back(std::move(cell));
  }
  return cells;
}

struct Regression {
  double slope = 0;
  double intercept = 0;
  int used = 0;
  std::vector<std::string> skipped;  // "model/env" labels with undefined x
};

inline Regression prefix_fraction_regression(const std::vector<RegressionCell>& cells) {
  Regression out;
  std::vector<std::pair<double, double>> pts;
  for (const auto& c : cells) {
    if (!c.x) {
      out.skipped.push_back(c.model + "/" + c.env);
      continue;
    }
    pts.emplace_back(*c.x, c.y);
  }
  if (pts.size() < 2)
    throw std::invalid_argument("regression underdetermined: need at least 2 cells with defined x");
  double mx = 0, my = 0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= pts.size();
  my /= pts.size();
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0) throw std::invalid_argument("regression degenerate: constant x");
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  out.used = static_cast<int>(pts.size());
  return out;
}

// ---------------------------------------------------------------------------
// paired mechanism subset

struct MechanismRow {
  std::string model;
  int n = 0;
  std::optional<double> repot_pct;
  std::optional<double> retry_pct;
  std::optional<double> delta;
};

// Restricts to problems where both pot_retry's attempt 1 and repot's initial
// call failed, then compares conditional recovery rates.
inline std::vector<MechanismRow> paired_mechanism_subset(const std::vector<TraceRecord>& traces) {
  struct Pair {
    std::optional<bool> repot_success, repot_initial_ok;
    std::optional<bool> retry_success, retry_attempt1_ok;
  };
  std::map<std::string, std::map<std::string, Pair>> by_model;
  for (const auto& t : traces) {
    if (t.method == "repot") {
      auto& p = by_model[t.model][t.problem_id];
      p.repot_success = t.success;
      p.repot_initial_ok = t.repot_initial_pot_success;
    } else if (t.method == "pot_retry") {
      auto& p = by_model[t.model][t.problem_id];
      p.retry_success = t.success;
      p.retry_attempt1_ok = t.attempt1_success;
    }
  }
  std::vector<MechanismRow> rows;
  for (const auto& [model, problems] : by_model) {
    MechanismRow row;
    row.model = model;
    int repot_wins = 0, retry_wins = 0;
    for (const auto& [id, p] : problems) {
      (void)id;
      if (!p.repot_initial_ok || *p.repot_initial_ok) continue;
      if (!p.retry_attempt1_ok || *p.retry_attempt1_ok) continue;
      ++row.n;
      if (*p.repot_success) ++repot_wins;
      if (*p.retry_success) ++retry_wins;
    }
    if (row.n) {
      row.repot_pct = 100.0 * repot_wins / row.n;
      row.retry_pct = 100.0 * retry_wins / row.n;
      row.delta = *row.repot_pct - *row.retry_pct;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// adaptive routing histogram

inline const std::vector<std::string>& adaptive_routes() {
  static const std::vector<std::string> routes = {
      "initial_success", "fresh_retry_empty", "fresh_retry_short_prefix", "suffix_repair"};
  return routes;
}

// Per-model counts over route_taken. Every trace passed in must carry a
// route; counts sum to the trace count.
inline std::map<std::string, std::map<std::string, int>> routing_histogram(
    const std::vector<TraceRecord>& traces) {
  const auto& valid = adaptive_routes();
  std::map<std::string, std::map<std::string, int>> out;
  for (const auto& t : traces) {
    if (!t.route_taken)
      throw std::invalid_argument("trace for '" + t.problem_id + "' has no route_taken");
    if (std::find(valid.begin(), valid.end(), *t.route_taken) == valid.end())
      throw std::invalid_argument("unknown route label '" + *t.route_taken + "'");
    ++out[t.model][*t.route_taken];
  }
  return out;
}

// ---------------------------------------------------------------------------
// per-environment delta table

struct EnvDeltaRow {
  std::string model;
  std::string env;
  RateCell a, b;
  double delta_pp = 0;  // a - b in percentage points
};

inline std::vector<EnvDeltaRow> per_env_delta_table(const std::vector<TraceRecord>& traces,
                                                    const std::string& method_a = "repot",
                                                    const std::string& method_b = "pot") {
  std::map<std::pair<std::string, std::string>, EnvDeltaRow> rows;
  for (const auto& t : traces) {
    if (t.method != method_a && t.method != method_b) continue;
    auto& row = rows[{t.model, t.env}];
    row.model = t.model;
    row.env = t.env;
    auto& cell = t.method == method_a ? row.a : row.b;
    ++cell.total;
    if (t.success) ++cell.successes;
  }
  std::vector<EnvDeltaRow> out;
  for (auto& [key, row] : rows) {
    (void)key;
    row.delta_pp = row.a.pct() - row.b.pct();
    out.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// renderers: aligned text + csv

namespace detail {

inline std::string fmt_fixed(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", places, v);
  return buf;
}

inline std::string render_aligned(const std::vector<std::string>& header,
                                  const std::vector<std::vector<std::string>>& rows,
                                  size_t left_cols) {
  std::vector<size_t> width(header.size());
  for (size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& row : rows)
    for (size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  auto emit = [&](const std::vector<std::string>& cells) {
    std::string line;
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) line += "  ";
      const size_t pad = width[i] - cells[i].size();
      if (i < left_cols) {
        line += cells[i];
        if (i + 1 < cells.size()) line += std::string(pad, ' ');
      } else {
        line += std::string(pad, ' ') + cells[i];
      }
    }
    line += '\n';
    return line;
  };
  std::string out = emit(header);
  for (const auto& row : rows) out += emit(row);
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

inline std::string csv_render(const std::vector<std::string>& header,
                              const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_field(cells[i]);
    }
    out += '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  return out;
}

}  // namespace detail

inline std::vector<std::vector<std::string>> success_rows(const SuccessTable& table) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [key, cell] : table)
    rows.push_back({key.model, key.method, key.env, std::to_string(key.complexity),
                    std::to_string(cell.successes), std::to_string(cell.total),
                    detail::fmt_fixed(cell.pct(), 1)});
  return rows;
}

inline std::string render_success_table(const SuccessTable& table) {
  return detail::render_aligned({"Model", "Method", "Env", "Complexity", "Successes", "N", "Rate%"},
                                success_rows(table), 3);
}

inline std::string success_table_csv(const SuccessTable& table) {
  return detail::csv_render({"model", "method", "env", "complexity", "successes", "n", "rate_pct"},
                            success_rows(table));
}

// One row per model, one column per method, R-PR delta last.
inline std::string render_headline(const std::vector<TraceRecord>& traces, bool csv = false) {
  auto cells = success_by_model_method(traces);
  std::set<std::string> models;
  for (const auto& [key, cell] : cells) {
    (void)cell;
    models.insert(key.first);
  }
  const std::vector<std::string> method_order = {"cot", "sc",    "pot",
                                                 "pot_retry", "repot", "adaptive_repot"};
  std::vector<std::string> header = {"Model", "CoT", "SC", "PoT", "PoT-retry", "RePoT",
                                     "Adaptive", "R-PR"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& model : models) {
    std::vector<std::string> row = {model};
    std::optional<double> repot_pct, retry_pct;
    for (const auto& method : method_order) {
      auto it = cells.find({model, method});
      if (it == cells.end()) {
        row.push_back("-");
        continue;
      }
      const double pct = it->second.pct();
      row.push_back(detail::fmt_fixed(pct, 1));
      if (method == "repot") repot_pct = pct;
      if (method == "pot_retry") retry_pct = pct;
    }
    row.push_back(repot_pct && retry_pct ? detail::fmt_fixed(*repot_pct - *retry_pct, 1) : "-");
    rows.push_back(std::move(row));
  }
  return csv ? detail::csv_render(header, rows) : detail::render_aligned(header, rows, 1);
}

inline std::string render_per_env(const std::vector<EnvDeltaRow>& rows_in, bool csv = false) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : rows_in)
    rows.push_back({r.model, r.env, detail::fmt_fixed(r.a.pct(), 1),
                    detail::fmt_fixed(r.b.pct(), 1), detail::fmt_fixed(r.delta_pp, 1)});
  const std::vector<std::string> header = {"Model", "Env", "A%", "B%", "Delta"};
  return csv ? detail::csv_render(header, rows) : detail::render_aligned(header, rows, 2);
}

// One row per (model, method) with merged in/out token columns in text mode.
inline std::string render_cost(const std::vector<CostRow>& rows_in, bool csv = false) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : rows_in) {
    if (csv) {
      rows.push_back({r.model, r.method, detail::fmt_fixed(r.mean_in, 1),
                      detail::fmt_fixed(r.mean_out, 1), detail::fmt_fixed(r.median_in, 1),
                      detail::fmt_fixed(r.median_out, 1), detail::fmt_fixed(r.mean_calls, 2),
                      detail::fmt_fixed(r.mean_wall_s, 1)});
    } else {
      rows.push_back({r.model, r.method,
                      detail::fmt_fixed(r.mean_in, 0) + " / " + detail::fmt_fixed(r.mean_out, 0),
                      detail::fmt_fixed(r.median_in, 0) + " / " +
                          detail::fmt_fixed(r.median_out, 0),
                      detail::fmt_fixed(r.mean_calls, 2), detail::fmt_fixed(r.mean_wall_s, 1)});
    }
  }
  if (csv)
    return detail::csv_render({"model", "method", "mean_tokens_in", "mean_tokens_out",
                               "median_tokens_in", "median_tokens_out", "mean_calls",
                               "mean_wall_s"},
                              rows);
  return detail::render_aligned({"Model", "Method", "Mean tokens (in/out)",
                                 "Median tokens (in/out)", "Mean calls", "Mean wall (s)"},
                                rows, 2);
}

// One row per model over the both-failed-first paired subset.
inline std::string render_mechanism(const std::vector<MechanismRow>& rows_in, bool csv = false) {
  std::vector<std::vector<std::string>> rows;
  auto cell = [](const std::optional<double>& v) {
    return v ? detail::fmt_fixed(*v, 1) : std::string("-");
  };
  for (const auto& r : rows_in)
    rows.push_back({r.model, std::to_string(r.n), cell(r.repot_pct), cell(r.retry_pct),
                    cell(r.delta)});
  const std::vector<std::string> header = {"Model", "N", "RePoT%", "Retry%", "Delta"};
  return csv ? detail::csv_render(header, rows) : detail::render_aligned(header, rows, 1);
}

inline std::string render_routing(const std::map<std::string, std::map<std::string, int>>& hist,
                                  bool csv = false) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [model, counts] : hist) {
    std::vector<std::string> row = {model};
    int total = 0;
    for (const auto& route : adaptive_routes()) {
      auto it = counts.find(route);
      const int n = it == counts.end() ? 0 : it->second;
      row.push_back(std::to_string(n));
      total += n;
    }
    row.push_back(std::to_string(total));
    rows.push_back(std::move(row));
  }
  std::vector<std::string> header = {"Model"};
  for (const auto& route : adaptive_routes()) header.push_back(route);
  header.push_back("Total");
  return csv ? detail::csv_render(header, rows) : detail::render_aligned(header, rows, 1);
}

inline std::string render_eq2(const Eq2Estimates& est) {
  auto line = [](const std::string& name, const RateEstimate& e) {
    if (!e.defined()) return name + " = undefined (0 conditioning cases)\n";
    return name + " = " + detail::fmt_fixed(e.value(), 4) + " (" + std::to_string(e.numerator) +
           "/" + std::to_string(e.denominator) + ")\n";
  };
  std::string out;
  out += line("p", est.p);
  out += line("q", est.q);
  out += line("r", est.r);
  out += line("b", est.b);
  out += line("b'", est.b_prime);
  if (est.all_defined()) {
    auto res = eq2_evaluate(est.params());
    out += "margin q(r-b) - (1-p-q)(b-b') = " + detail::fmt_fixed(res.margin, 4) + "\n";
    out += std::string("repot beats pot_retry: ") + (res.holds ? "yes" : "no") + "\n";
  } else {
    out += "margin: undefined\n";
  }
  return out;
}

}  // namespace repot
