#include "globug/eval.hpp"

#include "globug/error.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace globug {

namespace {

Error eval_error(const std::string& message) { return Error("eval", message); }

}  // namespace

void QueryResult::validate() const {
  if (relevant_file_ids.empty()) {
    throw eval_error(fmt::format("query {} has an empty relevant set", bug_id));
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& id : ranked_file_ids) {
    if (!seen.insert(id).second) {
      throw eval_error(fmt::format("query {} ranks file {} twice", bug_id, id));
    }
  }
}

std::optional<std::size_t> first_relevant_rank(const QueryResult& result) {
  for (std::size_t i = 0; i < result.ranked_file_ids.size(); ++i) {
    if (result.relevant_file_ids.contains(result.ranked_file_ids[i])) return i + 1;
  }
  return std::nullopt;
}

double reciprocal_rank(const QueryResult& result) {
  const auto rank = first_relevant_rank(result);
  return rank ? 1.0 / static_cast<double>(*rank) : 0.0;
}

double average_precision(const QueryResult& result) {
  if (result.relevant_file_ids.empty()) {
    throw eval_error(fmt::format("query {} has an empty relevant set", result.bug_id));
  }
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < result.ranked_file_ids.size(); ++i) {
    if (!result.relevant_file_ids.contains(result.ranked_file_ids[i])) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(result.relevant_file_ids.size());
}

namespace {

template <typename F>
double mean_over(std::span<const QueryResult> results, F&& f, const char* what) {
  if (results.empty()) throw eval_error(fmt::format("{} of an empty query set", what));
  double sum = 0.0;
  for (const auto& r : results) sum += f(r);
  return sum / static_cast<double>(results.size());
}

}  // namespace

double mrr(std::span<const QueryResult> results) {
  return mean_over(results, reciprocal_rank, "MRR");
}

double map(std::span<const QueryResult> results) {
  return mean_over(results, average_precision, "MAP");
}

std::size_t top_n(std::span<const QueryResult> results, std::size_t n) {
  if (n < 1) throw eval_error("top-N cutoff must be at least 1");
  return static_cast<std::size_t>(std::count_if(results.begin(), results.end(), [n](const auto& r) {
    const auto rank = first_relevant_rank(r);
    return rank && *rank <= n;
  }));
}

std::size_t MetricsReport::unranked_count() const {
  return static_cast<std::size_t>(std::count_if(
      per_query.begin(), per_query.end(), [](const auto& q) { return !q.first_rank; }));
}

MetricsReport evaluate(std::span<const QueryResult> results) {
  if (results.empty()) throw eval_error("cannot evaluate an empty query set");
  MetricsReport report;
  for (const auto& r : results) {
    r.validate();
    report.per_query.push_back(
        {r.bug_id, reciprocal_rank(r), average_precision(r), first_relevant_rank(r)});
  }
  report.mrr = mrr(results);
  report.map = map(results);
  for (auto n : kTopNCutoffs) report.top_n[n] = top_n(results, n);
  return report;
}

// ---------------------------------------------------------------------------

std::string_view to_string(WilcoxonMethod method) {
  switch (method) {
    case WilcoxonMethod::Auto:
      return "auto";
    case WilcoxonMethod::Exact:
      return "exact";
    case WilcoxonMethod::Normal:
      return "normal";
  }
  return "?";
}

std::vector<std::uint64_t> signed_rank_counts(std::span<const std::uint64_t> doubled_ranks) {
  const std::uint64_t total = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(),
                                              std::uint64_t{0});
  std::vector<std::uint64_t> counts(total + 1, 0);
  counts[0] = 1;
  std::uint64_t reach = 0;
  for (auto r : doubled_ranks) {
    reach += r;
    for (std::uint64_t s = reach; s >= r; --s) {
      counts[s] += counts[s - r];
      if (s == r) break;
    }
  }
  return counts;
}

double signed_rank_normal_tail(double w_plus, std::size_t n, std::span<const std::size_t> ties,
                               bool lower) {
  const double nd = static_cast<double>(n);
  const double mean = nd * (nd + 1.0) / 4.0;
  double variance = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0;
  for (auto t : ties) {
    const double td = static_cast<double>(t);
    variance -= (td * td * td - td) / 48.0;
  }
  const double sd = std::sqrt(variance);
  if (lower) {
    const double z = (w_plus + 0.5 - mean) / sd;
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
  }
  const double z = (w_plus - 0.5 - mean) / sd;
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    WilcoxonMethod method) {
  if (a.size() != b.size()) {
    throw eval_error(fmt::format("paired samples differ in length ({} vs {})", a.size(), b.size()));
  }
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (!std::isfinite(d)) throw eval_error("non-finite paired value");
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.empty()) throw eval_error("all differences zero");
  if (diffs.size() < kWilcoxonMinPairs) {
    throw eval_error(fmt::format("only {} nonzero differences (need at least {})", diffs.size(),
                                 kWilcoxonMinPairs));
  }

  std::sort(diffs.begin(), diffs.end(),
            [](double x, double y) { return std::abs(x) < std::abs(y); });
  const std::size_t n = diffs.size();
  std::vector<std::uint64_t> doubled(n);
  std::vector<std::size_t> tie_groups;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(diffs[j + 1]) == std::abs(diffs[i])) ++j;
    for (std::size_t k = i; k <= j; ++k) doubled[k] = i + j + 2;
    if (j > i) tie_groups.push_back(j - i + 1);
    i = j + 1;
  }

  std::uint64_t doubled_plus = 0;
  std::uint64_t doubled_total = 0;
  for (std::size_t k = 0; k < n; ++k) {
    doubled_total += doubled[k];
    if (diffs[k] > 0) doubled_plus += doubled[k];
  }

  WilcoxonResult result;
  result.n = n;
  result.ties = !tie_groups.empty();
  result.w_plus = static_cast<double>(doubled_plus) / 2.0;
  result.w_minus = static_cast<double>(doubled_total - doubled_plus) / 2.0;
  result.statistic = std::min(result.w_plus, result.w_minus);
  result.method = method == WilcoxonMethod::Auto
                      ? (n <= kWilcoxonExactLimit ? WilcoxonMethod::Exact : WilcoxonMethod::Normal)
                      : method;

  double lower = 0.0;
  double upper = 0.0;
  if (result.method == WilcoxonMethod::Exact) {
    if (n > 62) throw eval_error("exact distribution limited to 62 differences");
    const auto counts = signed_rank_counts(doubled);
    std::uint64_t below = 0;
    std::uint64_t above = 0;
    for (std::uint64_t s = 0; s < counts.size(); ++s) {
      if (s <= doubled_plus) below += counts[s];
      if (s >= doubled_plus) above += counts[s];
    }
    const double space = std::ldexp(1.0, static_cast<int>(n));
    lower = static_cast<double>(below) / space;
    upper = static_cast<double>(above) / space;
  } else {
    lower = signed_rank_normal_tail(result.w_plus, n, tie_groups, true);
    upper = signed_rank_normal_tail(result.w_plus, n, tie_groups, false);
  }
  result.p_value = std::min(1.0, 2.0 * std::min(lower, upper));
  return result;
}

// ---------------------------------------------------------------------------

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::size_t hits(const MetricsReport& m, std::size_t n) {
  const auto it = m.top_n.find(n);
  return it == m.top_n.end() ? 0 : it->second;
}

}  // namespace

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows) {
  out << "project,method,MRR,MAP,Top1,Top5,Top10\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{:.6f},{:.6f},{},{},{}\n", csv_field(r.project), r.method_id,
                       r.metrics.mrr, r.metrics.map, hits(r.metrics, 1), hits(r.metrics, 5),
                       hits(r.metrics, 10));
  }
}

void write_wilcoxon_csv(std::ostream& out, std::span<const WilcoxonRow> rows) {
  out << "method_a,method_b,metric,n,statistic,p_value,test,note\n";
  for (const auto& r : rows) {
    if (r.result) {
      out << fmt::format("{},{},{},{},{:.1f},{:.6g},{},{}\n", r.method_a, r.method_b, r.metric,
                         r.result->n, r.result->statistic, r.result->p_value,
                         to_string(r.result->method), csv_field(r.note));
    } else {
      out << fmt::format("{},{},{},,,,,{}\n", r.method_a, r.method_b, r.metric,
                         csv_field(r.note));
    }
  }
}

void write_metrics_json(std::ostream& out, std::span<const MetricsRow> rows,
                        std::span<const WilcoxonRow> tests) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["metrics"] = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json row;
    row["project"] = r.project;
    row["method"] = r.method_id;
    row["queries"] = r.metrics.query_count();
    row["MRR"] = r.metrics.mrr;
    row["MAP"] = r.metrics.map;
    for (auto n : kTopNCutoffs) row[fmt::format("Top{}", n)] = hits(r.metrics, n);
    row["unranked"] = r.metrics.unranked_count();
    ordered_json per_query = ordered_json::array();
    for (const auto& q : r.metrics.per_query) {
      ordered_json item;
      item["bug_id"] = q.bug_id;
      item["RR"] = q.reciprocal_rank;
      item["AP"] = q.average_precision;
      item["first_rank"] = q.first_rank ? ordered_json(*q.first_rank) : ordered_json(nullptr);
      per_query.push_back(std::move(item));
    }
    row["per_query"] = std::move(per_query);
    doc["metrics"].push_back(std::move(row));
  }
  doc["wilcoxon"] = ordered_json::array();
  for (const auto& t : tests) {
    ordered_json item;
    item["method_a"] = t.method_a;
    item["method_b"] = t.method_b;
    item["metric"] = t.metric;
    if (t.result) {
      item["n"] = t.result->n;
      item["statistic"] = t.result->statistic;
      item["w_plus"] = t.result->w_plus;
      item["w_minus"] = t.result->w_minus;
      item["p_value"] = t.result->p_value;
      item["test"] = to_string(t.result->method);
    }
    if (!t.note.empty()) item["note"] = t.note;
    doc["wilcoxon"].push_back(std::move(item));
  }
  out << doc.dump(2) << '\n';
}

}  // namespace globug
