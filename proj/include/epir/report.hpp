// Copyright 2026 The epir Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// CSV rows shared by every command, parameter sweeps, and the per-figure
// data sets.

#ifndef EPIR_REPORT_HPP_
#define EPIR_REPORT_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "epir/analysis.hpp"
#include "epir/core.hpp"
#include "epir/error.hpp"
#include "epir/game.hpp"
#include "epir/mechanisms.hpp"
#include "epir/rng.hpp"

namespace epir {

inline constexpr std::string_view kCsvHeader =
    "mechanism,n,d,d_a,u,param,param_value,epsilon,delta,cm_records,cp_accesses,"
    "eps_empirical,eps_ci_low,eps_ci_high,verdict";
inline constexpr std::size_t kCsvColumns = 15;

struct CsvRow {
  std::string mechanism;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t d_a = 0;
  std::size_t u = 1;
  std::string param;  // "p", "theta", "t" or empty
  std::optional<double> param_value;
  double epsilon = 0.0;
  double delta = 0.0;
  double cm_records = 0.0;
  double cp_accesses = 0.0;
  std::optional<double> eps_empirical;
  std::optional<double> eps_ci_low;
  std::optional<double> eps_ci_high;
  std::string verdict;
};

// Shortest text that reads back to the same double; +inf is "inf".
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Strict number parser: accepts "1e6", "0.25", "inf"; rejects trailing junk.
inline double parse_double(std::string_view text) {
  if (text == "inf" || text == "+inf") return kInfinity;
  if (text == "-inf") return -kInfinity;
  double v = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end || text.empty()) {
    throw ParameterError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

// Non-negative integer, written plainly or in scientific notation ("1e5").
inline std::uint64_t parse_count(std::string_view text) {
  const double v = parse_double(text);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1.8e19) {
    throw ParameterError("not a non-negative integer: '" + std::string(text) + "'");
  }
  return static_cast<std::uint64_t>(v);
}

inline std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = text.find(sep, start);
    out.emplace_back(text.substr(start, at == std::string_view::npos ? text.npos : at - start));
    if (at == std::string_view::npos) return out;
    start = at + 1;
  }
}

inline std::string format_row(const CsvRow& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::ostringstream out;
  out << r.mechanism << ',' << r.n << ',' << r.d << ',' << r.d_a << ',' << r.u << ',' << r.param
      << ',' << opt(r.param_value) << ',' << format_double(r.epsilon) << ','
      << format_double(r.delta) << ',' << format_double(r.cm_records) << ','
      << format_double(r.cp_accesses) << ',' << opt(r.eps_empirical) << ','
      << opt(r.eps_ci_low) << ',' << opt(r.eps_ci_high) << ',' << r.verdict;
  return out.str();
}

inline void write_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
  out << kCsvHeader << '\n';
  for (const CsvRow& row : rows) out << format_row(row) << '\n';
}

// Parses and validates a CSV document against the schema. Throws
// ParameterError naming the line and column on any mismatch.
inline std::vector<CsvRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ParameterError("CSV: header mismatch");
  }
  std::vector<CsvRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    auto fail = [&](const std::string& what) {
      throw ParameterError("CSV line " + std::to_string(line_no) + ": " + what);
    };
    if (cells.size() != kCsvColumns) fail("expected 15 columns, got " + std::to_string(cells.size()));
    auto count = [&](std::size_t k, const char* name) -> std::size_t {
      try {
        return static_cast<std::size_t>(parse_count(cells[k]));
      } catch (const ParameterError&) {
        fail(std::string("bad ") + name);
      }
      return 0;
    };
    auto real = [&](std::size_t k, const char* name) -> double {
      try {
        return parse_double(cells[k]);
      } catch (const ParameterError&) {
        fail(std::string("bad ") + name);
      }
      return 0.0;
    };
    auto opt_real = [&](std::size_t k, const char* name) -> std::optional<double> {
      if (cells[k].empty()) return std::nullopt;
      return real(k, name);
    };
    CsvRow r;
    r.mechanism = cells[0];
    try {
      parse_mechanism(r.mechanism);
    } catch (const ParameterError&) {
      fail("unknown mechanism '" + r.mechanism + "'");
    }
    r.n = count(1, "n");
    r.d = count(2, "d");
    r.d_a = count(3, "d_a");
    r.u = count(4, "u");
    r.param = cells[5];
    if (r.param != "" && r.param != "p" && r.param != "theta" && r.param != "t") fail("bad param name");
    r.param_value = opt_real(6, "param_value");
    if (r.param.empty() != !r.param_value.has_value()) fail("param and param_value must be set together");
    r.epsilon = real(7, "epsilon");
    r.delta = real(8, "delta");
    r.cm_records = real(9, "cm_records");
    r.cp_accesses = real(10, "cp_accesses");
    r.eps_empirical = opt_real(11, "eps_empirical");
    r.eps_ci_low = opt_real(12, "eps_ci_low");
    r.eps_ci_high = opt_real(13, "eps_ci_high");
    r.verdict = cells[14];
    if (r.d_a > r.d) fail("d_a > d");
    if (!(r.epsilon >= 0.0)) fail("epsilon must be >= 0");
    if (!(r.delta >= 0.0 && r.delta <= 1.0)) fail("delta must lie in [0, 1]");
    if (!(r.cm_records >= 0.0 && r.cp_accesses >= 0.0)) fail("costs must be >= 0");
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class Spacing { kLinear, kLog };

struct SweepSpec {
  std::string name;  // p, theta or t
  double start = 0.0;
  double stop = 0.0;
  std::size_t steps = 1;
  Spacing spacing = Spacing::kLinear;
};

// "name=start:stop:steps" with an optional "log" or "lin" suffix on steps.
// Without a suffix p and t are log-spaced and theta linear.
inline SweepSpec parse_sweep(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw ParameterError("sweep '" + std::string(text) + "' lacks '='");
  SweepSpec spec;
  spec.name = std::string(text.substr(0, eq));
  if (spec.name != "p" && spec.name != "theta" && spec.name != "t") {
    throw ParameterError("sweep parameter must be p, theta or t");
  }
  const auto parts = split(text.substr(eq + 1), ':');
  if (parts.size() != 3) throw ParameterError("sweep needs start:stop:steps");
  spec.start = parse_double(parts[0]);
  spec.stop = parse_double(parts[1]);
  std::string steps = parts[2];
  spec.spacing = spec.name == "theta" ? Spacing::kLinear : Spacing::kLog;
  auto ends_with = [&](std::string_view suffix) {
    return steps.size() >= suffix.size() && steps.compare(steps.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with("log")) {
    spec.spacing = Spacing::kLog;
    steps.resize(steps.size() - 3);
  } else if (ends_with("lin")) {
    spec.spacing = Spacing::kLinear;
    steps.resize(steps.size() - 3);
  }
  spec.steps = static_cast<std::size_t>(parse_count(steps));
  if (spec.steps < 1) throw ParameterError("sweep needs at least 1 step");
  if (!(spec.start <= spec.stop) || !std::isfinite(spec.start) || !std::isfinite(spec.stop)) {
    throw ParameterError("sweep needs finite start <= stop");
  }
  if (spec.spacing == Spacing::kLog && !(spec.start > 0.0)) {
    throw ParameterError("log sweep needs start > 0");
  }
  return spec;
}

inline std::vector<double> sweep_points(const SweepSpec& spec) {
  std::vector<double> out;
  if (spec.steps == 1) return {spec.start};
  for (std::size_t k = 0; k < spec.steps; ++k) {
    const double f = static_cast<double>(k) / static_cast<double>(spec.steps - 1);
    double v = spec.spacing == Spacing::kLinear
                   ? spec.start + f * (spec.stop - spec.start)
                   : spec.start * std::pow(spec.stop / spec.start, f);
    if (k + 1 == spec.steps) v = spec.stop;
    out.push_back(v);
  }
  return out;
}

// Name of the tunable parameter, or empty for parameter-free mechanisms.
inline std::string param_name(Mechanism m) {
  switch (m) {
    case Mechanism::kNaiveDummy:
    case Mechanism::kDirect:
    case Mechanism::kBundledAnon:
    case Mechanism::kSeparatedAnon:
      return "p";
    case Mechanism::kSparse:
    case Mechanism::kAnonSparse:
      return "theta";
    case Mechanism::kSubset:
      return "t";
    default:
      return "";
  }
}

inline MechanismParams make_mechanism(Mechanism m, double value) {
  const auto count = static_cast<std::size_t>(std::llround(value));
  switch (m) {
    case Mechanism::kNaiveDummy: return NaiveDummy{count};
    case Mechanism::kNaiveAnon: return NaiveAnon{};
    case Mechanism::kDirect: return Direct{count};
    case Mechanism::kBundledAnon: return BundledAnon{count};
    case Mechanism::kSeparatedAnon: return SeparatedAnon{count};
    case Mechanism::kSparse: return Sparse{value};
    case Mechanism::kAnonSparse: return AnonSparse{value};
    case Mechanism::kSubset: return Subset{count};
    case Mechanism::kChor: return Chor{};
  }
  throw ParameterError("unknown mechanism");
}

// Sweep values made admissible for the mechanism: p rounded to a multiple of
// d (at least 2) and capped at n, t rounded into [1, d], theta checked
// against (0, 1/2]. Duplicates created by rounding are dropped.
inline std::vector<double> sweep_grid(Mechanism m, const SweepSpec& spec, const SystemParams& sp) {
  const std::string want = param_name(m);
  if (want.empty()) throw ParameterError(std::string(mechanism_name(m)) + " takes no sweep parameter");
  if (spec.name != want) {
    throw ParameterError(std::string(mechanism_name(m)) + " sweeps " + want + ", not " + spec.name);
  }
  std::vector<double> out;
  for (double v : sweep_points(spec)) {
    double value = v;
    if (want == "p") {
      const std::size_t step = m == Mechanism::kNaiveDummy ? 1 : sp.d;
      const std::size_t cap = sp.n / step * step;
      std::size_t p = static_cast<std::size_t>(std::llround(v / static_cast<double>(step))) * step;
      p = std::clamp<std::size_t>(p, step, cap);
      if (p < 2) p = (2 + step - 1) / step * step;
      if (p > sp.n) throw ParameterError("no admissible p for these n and d");
      value = static_cast<double>(p);
    } else if (want == "t") {
      value = static_cast<double>(std::clamp<long long>(std::llround(v), 1, static_cast<long long>(sp.d)));
    } else if (!(v > 0.0 && v <= 0.5)) {
      throw ParameterError("theta sweep must stay within (0, 1/2]");
    }
    if (out.empty() || out.back() != value) out.push_back(value);
  }
  return out;
}

// The tunable parameter of a configured mechanism, if it has one.
inline std::optional<double> mechanism_value(const MechanismParams& mech) {
  return std::visit(
      [](const auto& m) -> std::optional<double> {
        if constexpr (requires { m.p; }) return static_cast<double>(m.p);
        if constexpr (requires { m.theta; }) return m.theta;
        if constexpr (requires { m.t; }) return static_cast<double>(m.t);
        return std::nullopt;
      },
      mech);
}

// Analytic row: bound and costs, empirical columns empty.
inline CsvRow analytic_row(Mechanism m, std::optional<double> value, const SystemParams& sp) {
  const MechanismParams mech = make_mechanism(m, value.value_or(0.0));
  const PrivacyBound bound = analytic_bound(mech, sp);
  const CostEstimate cost = cost_model(mech, sp, 1.0, 0.0);
  CsvRow row;
  row.mechanism = std::string(mechanism_name(m));
  row.n = sp.n;
  row.d = sp.d;
  row.d_a = sp.d_a;
  row.u = sp.u;
  row.param = param_name(m);
  if (!row.param.empty()) row.param_value = value;
  row.epsilon = bound.epsilon;
  row.delta = bound.delta;
  row.cm_records = cost.cm_records;
  row.cp_accesses = cost.cp_accesses;
  return row;
}

// One row per (d_a, grid point), d_a-major.
inline std::vector<CsvRow> analyze_rows(Mechanism m, SystemParams sp,
                                        const std::vector<std::size_t>& d_a_values,
                                        const std::optional<SweepSpec>& sweep,
                                        std::optional<double> fixed_value = std::nullopt) {
  std::vector<double> grid;
  if (sweep) {
    grid = sweep_grid(m, *sweep, sp);
  } else if (!param_name(m).empty()) {
    if (!fixed_value) throw ParameterError(param_name(m) + " must be given or swept");
    grid = {*fixed_value};
  }
  std::vector<CsvRow> rows;
  for (std::size_t d_a : d_a_values) {
    sp.d_a = d_a;
    sp.Validate();
    if (grid.empty()) {
      rows.push_back(analytic_row(m, std::nullopt, sp));
    } else {
      for (double v : grid) rows.push_back(analytic_row(m, v, sp));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Figures

struct FigureData {
  std::string id;  // fig1 .. fig5, fig6a .. fig6d
  std::vector<CsvRow> rows;
};

inline constexpr std::size_t kFigureN = 1'000'000;
inline constexpr std::size_t kFigureD = 100;
inline constexpr std::size_t kFigureU = 1000;

inline std::vector<FigureData> figure_data() {
  const std::vector<std::size_t> d_as = {50, 90, 99};
  const SweepSpec p_sweep = parse_sweep("p=100:1e6:200log");
  const SweepSpec theta_sweep = parse_sweep("theta=0.01:0.5:50lin");
  const SweepSpec t_sweep = parse_sweep("t=1:100:100lin");
  const SystemParams base{.n = kFigureN, .d = kFigureD, .d_a = 0, .u = 1};
  SystemParams anon = base;
  anon.u = kFigureU;

  std::vector<FigureData> figs;
  figs.push_back({"fig1", analyze_rows(Mechanism::kDirect, base, d_as, p_sweep)});
  figs.push_back({"fig2", analyze_rows(Mechanism::kBundledAnon, anon, d_as, p_sweep)});
  figs.push_back({"fig3", analyze_rows(Mechanism::kSparse, base, d_as, theta_sweep)});
  figs.push_back({"fig4", analyze_rows(Mechanism::kAnonSparse, anon, d_as, theta_sweep)});
  figs.push_back({"fig5", analyze_rows(Mechanism::kSubset, base, d_as, t_sweep)});

  // Cost-versus-epsilon sets at d_a = d/2. The a/b and c/d pairs hold the
  // same rows; the plot picks cp_accesses or cm_records.
  const std::vector<std::size_t> half = {kFigureD / 2};
  auto join = [](std::vector<CsvRow> a, const std::vector<CsvRow>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  const auto plain = join(analyze_rows(Mechanism::kDirect, base, half, p_sweep),
                          analyze_rows(Mechanism::kSparse, base, half, theta_sweep));
  const auto composed = join(analyze_rows(Mechanism::kBundledAnon, anon, half, p_sweep),
                             analyze_rows(Mechanism::kAnonSparse, anon, half, theta_sweep));
  figs.push_back({"fig6a", plain});
  figs.push_back({"fig6b", plain});
  figs.push_back({"fig6c", composed});
  figs.push_back({"fig6d", composed});
  return figs;
}

// ---------------------------------------------------------------------------
// Simulation and oracle rows

// Mechanisms whose bound comes from the composition lemma. Its constant
// likelihood simplification can be exceeded, so moderate exceedances are
// reported as WARN rather than FAIL.
inline bool is_composed(Mechanism m) {
  return m == Mechanism::kBundledAnon || m == Mechanism::kSeparatedAnon ||
         m == Mechanism::kAnonSparse;
}

inline constexpr double kSoundnessSigmas = 4.0;

inline std::string monte_carlo_verdict(Mechanism m, double analytic_eps, const LikelihoodReport& r) {
  if (r.zero_support_witness) return "NOT-EPS-PRIVATE";
  if (std::isinf(analytic_eps)) return "WARN";  // no witness found for a scheme without a bound
  if (r.epsilon_empirical <= analytic_eps + kSoundnessSigmas * r.sigma) return "PASS";
  if (is_composed(m) && r.epsilon_empirical < 10.0 * analytic_eps + kSoundnessSigmas * r.sigma) {
    return "WARN";
  }
  return "FAIL";
}

inline CsvRow simulate_row(const GameConfig& cfg, std::uint64_t trials, RngStream& rng) {
  const Mechanism m = mechanism_of(cfg.mechanism);
  const std::optional<double> value = mechanism_value(cfg.mechanism);
  CsvRow row = analytic_row(m, value, cfg.params);
  if (m == Mechanism::kSubset) {
    // The schema has no empirical-delta column: the estimate of delta and its
    // 95% interval go in the empirical columns.
    const EventFrequency freq = subset_delta_estimate(cfg, trials, rng);
    const double rate = freq.rate();
    const double sigma = std::sqrt(std::max(rate * (1.0 - rate), 1.0 / static_cast<double>(trials)) /
                                   static_cast<double>(trials));
    row.eps_empirical = rate;
    row.eps_ci_low = std::max(0.0, rate - 1.96 * sigma);
    row.eps_ci_high = std::min(1.0, rate + 1.96 * sigma);
    row.verdict = std::fabs(rate - row.delta) <= kSoundnessSigmas * sigma ? "PASS" : "FAIL";
    return row;
  }
  const LikelihoodReport report = monte_carlo_estimate(cfg, trials, rng);
  row.eps_empirical = report.epsilon_empirical;
  row.eps_ci_low = report.ci_low;
  row.eps_ci_high = report.ci_high;
  row.verdict = monte_carlo_verdict(m, row.epsilon, report);
  return row;
}

inline constexpr double kTightTolerance = 1e-9;

// TIGHT when the exact ratio equals e^epsilon, LOOSE when below, VIOLATED
// when above.
inline std::string oracle_verdict(double analytic_eps, const LikelihoodReport& r) {
  if (r.zero_support_witness) return std::isinf(analytic_eps) ? "NOT-EPS-PRIVATE" : "VIOLATED";
  if (std::isinf(analytic_eps)) return "LOOSE";
  const double bound = std::exp(analytic_eps);
  const double slack = kTightTolerance * std::max(1.0, bound);
  if (std::fabs(r.max_ratio - bound) <= slack) return "TIGHT";
  return r.max_ratio < bound ? "LOOSE" : "VIOLATED";
}

inline CsvRow oracle_row(const GameConfig& cfg, ObservationMode mode = ObservationMode::kReduced) {
  const Mechanism m = mechanism_of(cfg.mechanism);
  const std::optional<double> value = mechanism_value(cfg.mechanism);
  CsvRow row = analytic_row(m, value, cfg.params);
  const LikelihoodReport report = exact_oracle(cfg, mode);
  row.eps_empirical = report.epsilon_empirical;
  row.eps_ci_low = report.epsilon_empirical;
  row.eps_ci_high = report.epsilon_empirical;
  if (m == Mechanism::kSubset) {
    // Subset-PIR is (0, delta)-private: compare the one-sided mass with delta.
    const bool ok = report.one_sided_mass <= row.delta + kTightTolerance &&
                    report.two_sided_max_ratio <= 1.0 + kTightTolerance;
    row.verdict = std::fabs(report.one_sided_mass - row.delta) <= kTightTolerance && ok ? "TIGHT"
                  : ok                                                                ? "LOOSE"
                                                                                      : "VIOLATED";
    return row;
  }
  row.verdict = oracle_verdict(row.epsilon, report);
  return row;
}

}  // namespace epir

#endif  // EPIR_REPORT_HPP_
