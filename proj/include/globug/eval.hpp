#ifndef GLOBUG_EVAL_HPP
#define GLOBUG_EVAL_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace globug {

struct QueryResult {
  std::string bug_id;
  std::vector<std::string> ranked_file_ids;
  std::unordered_set<std::string> relevant_file_ids;

  /// Throws Error("eval") when the relevant set is empty or the ranking
  /// repeats a file.
  void validate() const;
};

/// 1-based rank of the first relevant file, nullopt when none is ranked.
std::optional<std::size_t> first_relevant_rank(const QueryResult& result);

/// 1 / rank of the first relevant file; 0 when no relevant file is ranked.
double reciprocal_rank(const QueryResult& result);

/// Mean over relevant files of precision at each relevant position, divided
/// by the size of the relevant set (unranked relevant files contribute 0).
double average_precision(const QueryResult& result);

/// Throws Error("eval") on an empty collection.
double mrr(std::span<const QueryResult> results);
double map(std::span<const QueryResult> results);

/// Queries with a relevant file in the first n ranks. Throws when n < 1.
std::size_t top_n(std::span<const QueryResult> results, std::size_t n);

struct QueryMetrics {
  std::string bug_id;
  double reciprocal_rank = 0.0;
  double average_precision = 0.0;
  std::optional<std::size_t> first_rank;  // nullopt: flagged as unranked
};

struct MetricsReport {
  double mrr = 0.0;
  double map = 0.0;
  std::map<std::size_t, std::size_t> top_n;  // N -> hits, N in {1, 5, 10}
  std::vector<QueryMetrics> per_query;

  std::size_t query_count() const noexcept { return per_query.size(); }
  std::size_t unranked_count() const;
};

inline constexpr std::size_t kTopNCutoffs[] = {1, 5, 10};

MetricsReport evaluate(std::span<const QueryResult> results);

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank test.

enum class WilcoxonMethod { Auto, Exact, Normal };

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  std::size_t n = 0;  // nonzero differences
  double p_value = 1.0;  // two-sided
  WilcoxonMethod method = WilcoxonMethod::Exact;
  bool ties = false;
};

inline constexpr std::size_t kWilcoxonExactLimit = 12;
inline constexpr std::size_t kWilcoxonMinPairs = 5;

/// Two-sided paired test on a - b. Zero differences are dropped, tied
/// magnitudes get mid-ranks. Auto uses the exact null distribution for
/// n <= 12 and the normal approximation (tie and continuity corrected)
/// above. Throws Error("eval") on a length mismatch, when every difference
/// is zero, or when fewer than 5 nonzero differences remain.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    WilcoxonMethod method = WilcoxonMethod::Auto);

/// Null distribution of the doubled W+ for the given doubled ranks:
/// counts[s] = number of sign assignments with 2 W+ = s.
std::vector<std::uint64_t> signed_rank_counts(std::span<const std::uint64_t> doubled_ranks);

/// Normal-approximation tail P(W+ <= w) (lower) or P(W+ >= w), with
/// continuity correction, for n ranks whose tie groups have the given sizes.
double signed_rank_normal_tail(double w_plus, std::size_t n, std::span<const std::size_t> ties,
                               bool lower);

std::string_view to_string(WilcoxonMethod method);

// ---------------------------------------------------------------------------
// Report tables.

struct MetricsRow {
  std::string project;  // "ALL" for the pooled aggregate
  int method_id = 0;
  MetricsReport metrics;
};

struct WilcoxonRow {
  int method_a = 0;
  int method_b = 0;
  std::string metric;  // "RR" or "AP"
  std::optional<WilcoxonResult> result;
  std::string note;  // set when the test could not run
};

inline constexpr std::string_view kAggregateProject = "ALL";

/// project,method,MRR,MAP,Top1,Top5,Top10
void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows);

/// method_a,method_b,metric,n,statistic,p_value,test,note
void write_wilcoxon_csv(std::ostream& out, std::span<const WilcoxonRow> rows);

/// Both tables plus per-query values as one JSON document.
void write_metrics_json(std::ostream& out, std::span<const MetricsRow> rows,
                        std::span<const WilcoxonRow> tests);

}  // namespace globug

#endif  // GLOBUG_EVAL_HPP
