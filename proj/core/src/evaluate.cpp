// Copyright 2026 The aad-bench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "aad/evaluate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

namespace aad {

namespace {

constexpr double kZeroDiff = 1e-12;

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(std::span<const double> v, StdConvention c) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double denom = c == StdConvention::Sample ? static_cast<double>(v.size() - 1) : static_cast<double>(v.size());
  return std::sqrt(ss / denom);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

template <class T>
T parse_number(const std::string& s, const char* field) {
  T v{};
  const auto* end = s.data() + s.size();
  auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw std::runtime_error(std::string("results.csv: bad value '") + s + "' in column " + field);
  return v;
}

std::string describe(const ConfigKey& k) {
  return "dataset=" + k.dataset + " strategy=" + std::string(to_string(k.strategy)) + " window=" +
         shortest(k.window_s) + " k=" + std::to_string(k.k) + " model=" + k.model;
}

std::vector<SubjectSummary> summarize_impl(std::span<const RunRecord> records, std::size_t n_rep,
                                           std::size_t n_folds, std::vector<std::string>* missing) {
  std::map<std::pair<std::string, ConfigKey>, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) groups[{r.subject_id, config_of(r)}].push_back(&r);

  std::vector<SubjectSummary> out;
  std::vector<std::string> problems;
  for (const auto& [id, group] : groups) {
    std::vector<int> seen(n_rep * n_folds, 0);
    std::vector<std::string> local;
    for (const auto* r : group) {
      if (r->repetition >= n_rep || r->fold >= n_folds) {
        local.push_back("subject=" + id.first + " " + describe(id.second) + " unexpected cell repetition=" +
                        std::to_string(r->repetition) + " fold=" + std::to_string(r->fold));
        continue;
      }
      if (++seen[r->repetition * n_folds + r->fold] > 1)
        local.push_back("subject=" + id.first + " " + describe(id.second) + " duplicate cell repetition=" +
                        std::to_string(r->repetition) + " fold=" + std::to_string(r->fold));
    }
    for (std::size_t rep = 0; rep < n_rep; ++rep)
      for (std::size_t f = 0; f < n_folds; ++f)
        if (seen[rep * n_folds + f] == 0)
          local.push_back("subject=" + id.first + " " + describe(id.second) + " missing repetition=" +
                          std::to_string(rep) + " fold=" + std::to_string(f));
    if (!local.empty()) {
      problems.insert(problems.end(), local.begin(), local.end());
      continue;
    }
    std::vector<double> acc;
    for (const auto* r : group) acc.push_back(r->accuracy);
    out.push_back({id.first, id.second, mean_of(acc), std_of(acc, StdConvention::Sample), acc.size()});
  }
  if (missing) {
    *missing = std::move(problems);
  } else if (!problems.empty()) {
    std::string msg = "incomplete result grid: " + problems.front();
    if (problems.size() > 1) msg += " (and " + std::to_string(problems.size() - 1) + " more)";
    throw IncompleteGridError(msg, std::move(problems));
  }
  return out;
}

// Distribution of the doubled positive-rank sum over all 2^n sign patterns.
std::vector<double> signed_rank_distribution(std::span<const long long> doubled_ranks) {
  const long long total = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), 0LL);
  std::vector<double> dist(static_cast<std::size_t>(total) + 1, 0.0);
  dist[0] = 1.0;
  long long reach = 0;
  for (long long r : doubled_ranks) {
    for (long long s = reach; s >= 0; --s)
      if (dist[static_cast<std::size_t>(s)] != 0.0) dist[static_cast<std::size_t>(s + r)] += dist[static_cast<std::size_t>(s)];
    reach += r;
  }
  return dist;
}

}  // namespace

ConfigKey config_of(const RunRecord& r) { return {r.dataset, r.strategy, r.window_s, r.k, r.model}; }

std::string model_name(std::size_t k) { return "EEGWaveNet-K" + std::to_string(k); }

std::vector<SubjectSummary> summarize(std::span<const RunRecord> records, std::size_t n_repetitions,
                                      std::size_t n_folds) {
  return summarize_impl(records, n_repetitions, n_folds, nullptr);
}

std::vector<SubjectSummary> summarize_partial(std::span<const RunRecord> records, std::size_t n_repetitions,
                                              std::size_t n_folds, std::vector<std::string>& missing) {
  return summarize_impl(records, n_repetitions, n_folds, &missing);
}

std::vector<ConfigSummary> aggregate(std::span<const SubjectSummary> subjects, StdConvention convention) {
  std::map<ConfigKey, std::vector<const SubjectSummary*>> groups;
  for (const auto& s : subjects) groups[s.key].push_back(&s);
  std::vector<ConfigSummary> out;
  for (auto& [key, group] : groups) {
    std::sort(group.begin(), group.end(),
              [](const SubjectSummary* a, const SubjectSummary* b) { return a->subject_id < b->subject_id; });
    ConfigSummary cs;
    cs.key = key;
    cs.n_subjects = group.size();
    std::vector<double> means;
    for (const auto* s : group) {
      means.push_back(s->mean_accuracy);
      cs.per_subject.emplace_back(s->subject_id, s->mean_accuracy);
    }
    cs.mean_accuracy = mean_of(means);
    cs.std_accuracy = std_of(means, convention);
    out.push_back(std::move(cs));
  }
  return out;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  return wilcoxon_signed_rank(a, b, false);
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b, bool force_normal) {
  if (a.size() != b.size()) throw std::invalid_argument("Wilcoxon test needs paired samples of equal length");
  std::vector<double> diff;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (std::abs(d) > kZeroDiff) diff.push_back(d);
  }
  WilcoxonResult res;
  res.n = diff.size();
  if (diff.empty()) {
    res.degenerate = true;
    res.p_two_sided = 1.0;
    return res;
  }
  if (diff.size() < 5) throw std::invalid_argument("Wilcoxon test needs at least 5 non-zero differences");

  // Average ranks of |d|, kept doubled so they stay integral.
  const std::size_t n = diff.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return std::abs(diff[i]) < std::abs(diff[j]); });
  std::vector<long long> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(std::abs(diff[order[j + 1]]) - std::abs(diff[order[i]])) <= kZeroDiff) ++j;
    const auto doubled = static_cast<long long>(i + j + 2);  // 2 * mean of 1-based ranks i+1..j+1
    for (std::size_t m = i; m <= j; ++m) rank2[order[m]] = doubled;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  long long plus2 = 0, total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (diff[i] > 0) plus2 += rank2[i];
  }
  res.w_plus = static_cast<double>(plus2) / 2.0;
  res.w_minus = static_cast<double>(total2 - plus2) / 2.0;
  res.statistic = res.w_plus - res.w_minus;

  if (n <= 20 && !force_normal) {
    const auto dist = signed_rank_distribution(rank2);
    const double patterns = std::ldexp(1.0, static_cast<int>(n));
    double lower = 0.0, upper = 0.0;
    for (std::size_t s = 0; s < dist.size(); ++s) {
      if (static_cast<long long>(s) <= plus2) lower += dist[s];
      if (static_cast<long long>(s) >= plus2) upper += dist[s];
    }
    res.p_two_sided = std::min(1.0, 2.0 * std::min(lower, upper) / patterns);
    res.exact = true;
    return res;
  }
  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  const double dev = res.w_plus - mean;
  const double corrected = std::max(std::abs(dev) - 0.5, 0.0);
  const double z = var > 0.0 ? corrected / std::sqrt(var) : 0.0;
  res.p_two_sided = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  res.exact = false;
  return res;
}

double fit_accuracy_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw std::invalid_argument("slope fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("slope fit needs at least two distinct window lengths");
  return sxy / sxx;
}

std::vector<Comparison> compare_k(std::span<const SubjectSummary> subjects) {
  using Cell = std::tuple<std::string, Strategy, double>;
  std::map<Cell, std::map<std::size_t, std::map<std::string, double>>> grid;
  for (const auto& s : subjects)
    grid[{s.key.dataset, s.key.strategy, s.key.window_s}][s.key.k][s.subject_id] = s.mean_accuracy;

  std::vector<Comparison> out;
  for (const auto& [cell, by_k] : grid) {
    if (by_k.size() < 2) continue;
    const auto& [base_k, base] = *by_k.begin();
    for (auto it = std::next(by_k.begin()); it != by_k.end(); ++it) {
      Comparison c;
      c.dataset = std::get<0>(cell);
      c.strategy = std::get<1>(cell);
      c.window_s = std::get<2>(cell);
      c.k_a = it->first;
      c.k_b = base_k;
      std::vector<double> a, b;
      for (const auto& [subject, acc] : it->second) {
        auto match = base.find(subject);
        if (match == base.end()) continue;
        a.push_back(acc);
        b.push_back(match->second);
      }
      c.n_subjects = a.size();
      if (!a.empty()) {
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d += a[i] - b[i];
        c.mean_diff = d / static_cast<double>(a.size());
        try {
          c.test = wilcoxon_signed_rank(a, b);
        } catch (const std::invalid_argument&) {
          c.test.reset();
        }
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<SlopeRow> slope_table(std::span<const ConfigSummary> summaries) {
  using Row = std::tuple<std::string, Strategy, std::size_t>;
  std::map<Row, std::vector<std::pair<double, double>>> groups;
  for (const auto& s : summaries)
    groups[{s.key.dataset, s.key.strategy, s.key.k}].emplace_back(s.key.window_s, 100.0 * s.mean_accuracy);
  std::vector<SlopeRow> out;
  for (const auto& [row, points] : groups) {
    SlopeRow r{std::get<0>(row), std::get<1>(row), std::get<2>(row), std::nullopt};
    std::set<double> distinct;
    for (const auto& p : points) distinct.insert(p.first);
    if (distinct.size() >= 2) r.slope = fit_accuracy_slope(points);
    out.push_back(std::move(r));
  }
  return out;
}

std::string results_csv_header() {
  return "dataset,subject_id,strategy,window_s,stride_s,k,model,repetition,fold,accuracy,n_test_windows,seed";
}

std::string to_csv_line(const RunRecord& r) {
  for (const auto* s : {&r.dataset, &r.subject_id, &r.model})
    if (s->find_first_of(",\n\"") != std::string::npos)
      throw std::invalid_argument("results.csv fields must not contain commas, quotes or newlines: " + *s);
  std::ostringstream out;
  out << r.dataset << ',' << r.subject_id << ',' << to_string(r.strategy) << ',' << shortest(r.window_s) << ','
      << shortest(r.stride_s) << ',' << r.k << ',' << r.model << ',' << r.repetition << ',' << r.fold << ','
      << fixed(r.accuracy, 6) << ',' << r.n_test_windows << ',' << r.seed;
  return out.str();
}

RunRecord parse_csv_line(const std::string& line) {
  const auto f = split(line, ',');
  if (f.size() != 12) throw std::runtime_error("results.csv: expected 12 columns, got " + std::to_string(f.size()));
  RunRecord r;
  r.dataset = f[0];
  r.subject_id = f[1];
  r.strategy = strategy_from_string(f[2]);
  r.window_s = parse_number<double>(f[3], "window_s");
  r.stride_s = parse_number<double>(f[4], "stride_s");
  r.k = parse_number<std::size_t>(f[5], "k");
  r.model = f[6];
  r.repetition = parse_number<std::size_t>(f[7], "repetition");
  r.fold = parse_number<std::size_t>(f[8], "fold");
  r.accuracy = parse_number<double>(f[9], "accuracy");
  r.n_test_windows = parse_number<std::size_t>(f[10], "n_test_windows");
  r.seed = parse_number<std::uint64_t>(f[11], "seed");
  if (r.accuracy < 0.0 || r.accuracy > 1.0) throw std::runtime_error("results.csv: accuracy outside [0, 1]");
  return r;
}

void write_results_csv(std::span<const RunRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << results_csv_header() << '\n';
  for (const auto& r : records) out << to_csv_line(r) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<RunRecord> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::vector<RunRecord> out;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line == results_csv_header()) continue;
    }
    out.push_back(parse_csv_line(line));
  }
  return out;
}

std::vector<RunRecord> canonical_order(std::vector<RunRecord> records) {
  std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.dataset, a.subject_id, a.strategy, a.window_s, a.k, a.model, a.repetition, a.fold) <
           std::tie(b.dataset, b.subject_id, b.strategy, b.window_s, b.k, b.model, b.repetition, b.fold);
  });
  return records;
}

std::string format_cell(double mean_fraction, double std_fraction) {
  return fixed(100.0 * mean_fraction, 2) + "±" + fixed(100.0 * std_fraction, 2);
}

void emit_tables(std::span<const RunRecord> records, std::span<const ConfigSummary> summaries,
                 std::span<const Comparison> comparisons, std::span<const SlopeRow> slopes,
                 const std::filesystem::path& out_dir, StdConvention convention) {
  if (summaries.empty()) throw std::invalid_argument("no summaries to emit");
  std::filesystem::create_directories(out_dir);
  write_results_csv(canonical_order({records.begin(), records.end()}), out_dir / "results.csv");

  const char* conv = convention == StdConvention::Sample ? "sample" : "population";
  {
    std::ofstream out(out_dir / "summary.csv", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write summary.csv");
    out << "dataset,strategy,window_s,k,model,n_subjects,mean_accuracy,std_accuracy,std_convention\n";
    for (const auto& s : summaries)
      out << s.key.dataset << ',' << to_string(s.key.strategy) << ',' << shortest(s.key.window_s) << ',' << s.key.k
          << ',' << s.key.model << ',' << s.n_subjects << ',' << fixed(s.mean_accuracy, 6) << ','
          << fixed(s.std_accuracy, 6) << ',' << conv << '\n';
  }

  std::ofstream md(out_dir / "tables.md", std::ios::trunc);
  if (!md) throw std::runtime_error("cannot write tables.md");
  std::set<double> windows;
  std::set<std::pair<std::string, Strategy>> columns;
  std::set<std::pair<std::size_t, std::string>> rows;
  std::map<std::tuple<double, std::string, Strategy, std::size_t, std::string>, const ConfigSummary*> cells;
  for (const auto& s : summaries) {
    windows.insert(s.key.window_s);
    columns.emplace(s.key.dataset, s.key.strategy);
    rows.emplace(s.key.k, s.key.model);
    cells[{s.key.window_s, s.key.dataset, s.key.strategy, s.key.k, s.key.model}] = &s;
  }

  md << "# Decoding accuracy (%)\n";
  for (double w : windows) {
    md << "\n## Decision window " << shortest(w) << " s\n\n| Model |";
    for (const auto& [dataset, strategy] : columns) md << ' ' << dataset << ' ' << to_string(strategy) << " |";
    md << "\n|---|";
    for (std::size_t i = 0; i < columns.size(); ++i) md << "---|";
    md << '\n';
    for (const auto& [k, model] : rows) {
      md << "| " << model << " |";
      for (const auto& [dataset, strategy] : columns) {
        auto it = cells.find({w, dataset, strategy, k, model});
        md << ' ' << (it == cells.end() ? std::string("-") : format_cell(it->second->mean_accuracy, it->second->std_accuracy))
           << " |";
      }
      md << '\n';
    }
    md << "\nMean ± " << conv << " standard deviation across subjects of per-subject means over all folds.\n";
  }

  if (!comparisons.empty()) {
    md << "\n## Wilcoxon signed-rank tests\n\n"
       << "| Dataset | Strategy | Window (s) | Comparison | n | Mean diff (pts) | W+ | p (two-sided) | Method |\n"
       << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& c : comparisons) {
      md << "| " << c.dataset << " | " << to_string(c.strategy) << " | " << shortest(c.window_s) << " | K" << c.k_a
         << " vs K" << c.k_b << " | " << c.n_subjects << " | " << fixed(100.0 * c.mean_diff, 2) << " | ";
      if (c.test) {
        md << fixed(c.test->w_plus, 1) << " | " << fixed(c.test->p_two_sided, 4) << " | "
           << (c.test->degenerate ? "degenerate" : c.test->exact ? "exact" : "normal") << " |\n";
      } else {
        md << "n/a | n/a | too few subjects |\n";
      }
    }
  }

  if (!slopes.empty()) {
    md << "\n## Accuracy vs window length (least-squares slope, %/s)\n\n"
       << "| Dataset | Strategy | Model | Slope |\n|---|---|---|---|\n";
    for (const auto& s : slopes)
      md << "| " << s.dataset << " | " << to_string(s.strategy) << " | " << model_name(s.k) << " | "
         << (s.slope ? fixed(*s.slope, 2) : std::string("n/a")) << " |\n";
  }
}

}  // namespace aad
