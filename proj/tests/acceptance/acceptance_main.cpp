// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero when any criterion fails.

#include "globug/doc2vec.hpp"
#include "globug/error.hpp"
#include "globug/eval.hpp"
#include "globug/pipeline.hpp"
#include "globug/rank.hpp"
#include "globug/tfidf.hpp"

#include "oracles.hpp"
#include "synthetic_benchmark.hpp"

#include <fmt/core.h>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace fs = std::filesystem;
using namespace globug;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Pass;
  std::string detail;
};

Outcome pass(std::string detail) { return {Status::Pass, std::move(detail)}; }
Outcome fail(std::string detail) { return {Status::Fail, std::move(detail)}; }

Outcome check(bool ok, std::string detail) {
  return {ok ? Status::Pass : Status::Fail, std::move(detail)};
}

// -- 1 ----------------------------------------------------------------------

Outcome rvsm_oracle() {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> n_docs(1, 20);
  std::uniform_int_distribution<int> length(0, 40);
  std::uniform_int_distribution<int> term(0, 30);
  double worst = 0.0;
  for (int round = 0; round < 50; ++round) {
    std::vector<testing::Doc> files(static_cast<std::size_t>(n_docs(rng)));
    for (auto& f : files) {
      const int len = length(rng);
      for (int i = 0; i < len; ++i) f.push_back("t" + std::to_string(term(rng)));
    }
    testing::Doc query;
    for (int i = 0; i < 15; ++i) query.push_back("t" + std::to_string(term(rng) + 4));

    std::vector<TokenStream> streams;
    for (const auto& f : files) streams.push_back({f, Origin::SourceFile});
    const auto vocab = Vocabulary::build(streams);
    std::vector<TfIdfVector> vectors;
    for (const auto& s : streams) vectors.push_back(vectorize(s, vocab));
    const auto norm = LengthNormalizer::fit(vectors);
    const auto q = vectorize({query, Origin::BugReport}, vocab);
    const auto expected = testing::brute_force_rvsm(files, query);
    for (std::size_t i = 0; i < files.size(); ++i) {
      worst = std::max(worst, testing::relative_error(rvsm(q, vectors[i], norm), expected[i]));
    }
  }
  return check(worst <= 1e-12, fmt::format("max relative error {:.3g} over 50 corpora", worst));
}

// -- 2 ----------------------------------------------------------------------

QueryResult ranked_result(int n, std::unordered_set<std::string> relevant) {
  QueryResult r;
  r.bug_id = "q";
  for (int i = 1; i <= n; ++i) r.ranked_file_ids.push_back("f" + std::to_string(i));
  r.relevant_file_ids = std::move(relevant);
  return r;
}

Outcome metric_fixtures() {
  const std::vector<QueryResult> three = {ranked_result(5, {"f1"}), ranked_result(5, {"f2"}),
                                          ranked_result(5, {"f4"})};
  const double m = mrr(three);
  const double ap = average_precision(ranked_result(5, {"f1", "f3"}));
  const bool fixtures = m == (1.0 + 0.5 + 0.25) / 3.0 && std::abs(m - 0.58333) < 5e-6 &&
                        ap == (1.0 + 2.0 / 3.0) / 2.0 && std::abs(ap - 0.83333) < 5e-6;

  std::mt19937_64 rng(2);
  std::size_t violations = 0;
  for (int round = 0; round < 1000; ++round) {
    const int queries = std::uniform_int_distribution<int>(1, 20)(rng);
    std::vector<QueryResult> set;
    for (int k = 0; k < queries; ++k) {
      const int n = std::uniform_int_distribution<int>(1, 30)(rng);
      const int rel = std::uniform_int_distribution<int>(1, n + 5)(rng);
      set.push_back(ranked_result(n, {"f" + std::to_string(rel)}));
    }
    std::size_t previous = 0;
    for (std::size_t cut = 1; cut <= 35; ++cut) {
      const auto hits = top_n(set, cut);
      if (hits < previous) ++violations;
      previous = hits;
    }
  }
  return check(fixtures && violations == 0,
               fmt::format("MRR {:.5f}, AvgP {:.5f}, Top-N monotonicity violations {} / 1000 sets",
                           m, ap, violations));
}

// -- 3 ----------------------------------------------------------------------

std::vector<std::uint64_t> enumerate_counts(const std::vector<std::uint64_t>& doubled) {
  std::uint64_t total_rank = 0;
  for (auto r : doubled) total_rank += r;
  std::vector<std::uint64_t> counts(total_rank + 1, 0);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << doubled.size()); ++mask) {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < doubled.size(); ++i) {
      if (mask >> i & 1U) s += doubled[i];
    }
    ++counts[s];
  }
  return counts;
}

Outcome wilcoxon_exactness() {
  std::mt19937_64 rng(3);
  std::size_t mismatches = 0;
  std::size_t compared = 0;

  // Null distributions for every n up to 12, with and without tied magnitudes.
  for (std::size_t n = 1; n <= kWilcoxonExactLimit; ++n) {
    for (int round = 0; round < 10; ++round) {
      std::vector<double> magnitudes(n);
      std::uniform_int_distribution<int> v(1, round == 0 ? 1000 : 4);
      for (auto& x : magnitudes) x = v(rng);
      std::vector<std::uint64_t> doubled(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t smaller = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
          smaller += magnitudes[j] < magnitudes[i];
          equal += magnitudes[j] == magnitudes[i];
        }
        doubled[i] = 2 * smaller + equal + 1;
      }
      ++compared;
      if (signed_rank_counts(doubled) != enumerate_counts(doubled)) ++mismatches;
    }
  }

  // Two-sided p-values of the test itself.
  for (std::size_t n = kWilcoxonMinPairs; n <= kWilcoxonExactLimit; ++n) {
    for (int round = 0; round < 50; ++round) {
      std::uniform_int_distribution<int> v(0, round % 2 == 0 ? 1000 : 5);
      std::vector<double> a(n), b(n);
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = v(rng);
        b[i] = v(rng);
        if (a[i] == b[i]) a[i] += 1;
      }
      const auto expected = testing::enumerate_wilcoxon(a, b);
      const auto r = wilcoxon_signed_rank(a, b);
      ++compared;
      if (r.method != WilcoxonMethod::Exact || r.p_value != expected.p_two_sided ||
          r.w_plus != expected.w_plus) {
        ++mismatches;
      }
    }
  }

  // Normal approximation against enumeration at n = 12, no ties.
  const std::size_t n = kWilcoxonExactLimit;
  std::vector<std::uint64_t> doubled;
  for (std::uint64_t r = 1; r <= n; ++r) doubled.push_back(2 * r);
  const auto counts = enumerate_counts(doubled);
  const double total = std::ldexp(1.0, static_cast<int>(n));
  double cdf = 0.0;
  double tail_gap = 0.0;
  double two_sided_gap = 0.0;
  const double max_w = static_cast<double>(n * (n + 1) / 2);
  for (std::size_t s = 0; s < counts.size(); s += 2) {
    cdf += static_cast<double>(counts[s]) / total;
    const double w = static_cast<double>(s / 2);
    const double lower = signed_rank_normal_tail(w, n, {}, true);
    tail_gap = std::max(tail_gap, std::abs(cdf - lower));
    // Two-sided p of a sample whose W+ equals w.
    double upper_exact = 0.0;
    for (std::size_t t = s; t < counts.size(); t += 2) upper_exact += static_cast<double>(counts[t]);
    upper_exact /= total;
    const double exact_two = std::min(1.0, 2.0 * std::min(cdf, upper_exact));
    const double normal_two =
        std::min(1.0, 2.0 * std::min(lower, signed_rank_normal_tail(w, n, {}, false)));
    if (w <= max_w) two_sided_gap = std::max(two_sided_gap, std::abs(exact_two - normal_two));
  }

  return check(mismatches == 0 && tail_gap <= 0.01,
               fmt::format("exact mismatches {} / {}; n=12 normal vs enumeration: tail CDF gap "
                           "{:.4f} (two-sided p gap {:.4f}, info)",
                           mismatches, compared, tail_gap, two_sided_gap));
}

// -- 4 ----------------------------------------------------------------------

using ModelD = BasicEmbeddingModel<double>;

ModelD toy_model(TrainingMode mode, std::uint64_t seed) {
  ModelD m;
  m.mode = mode;
  m.vocabulary = EmbeddingVocabulary::from_counts({"a", "b", "c", "d", "e"}, {5, 4, 3, 2, 1});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  auto fill = [&](auto& x) {
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  };
  m.words.resize(5, 4);
  m.docs.resize(2, 4);
  m.output.resize(5, 4);
  m.bias.resize(5);
  fill(m.words);
  fill(m.docs);
  fill(m.output);
  fill(m.bias);
  m.doc_ids = {"d0", "d1"};
  return m;
}

double gradient_gap(ModelD model, const TrainingExample& ex, Objective objective) {
  ModelGradient<double> grad;
  example_gradient(model, ex, objective, grad);
  const double h = 1e-5;
  double worst = 0.0;
  auto probe = [&](auto& params, const auto& analytic) {
    for (Index i = 0; i < params.size(); ++i) {
      const double saved = params.data()[i];
      params.data()[i] = saved + h;
      const double up = example_loss(model, ex, objective);
      params.data()[i] = saved - h;
      const double down = example_loss(model, ex, objective);
      params.data()[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic.data()[i];
      const double scale = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / scale);
    }
  };
  probe(model.words, grad.words);
  probe(model.docs, grad.docs);
  probe(model.output, grad.output);
  probe(model.bias, grad.bias);
  return worst;
}

Outcome gradient_check() {
  double worst = 0.0;
  for (auto mode : {TrainingMode::PvDm, TrainingMode::PvDbow}) {
    TrainingExample ex;
    ex.doc = 1;
    if (mode == TrainingMode::PvDm) ex.context = {0, 2, 3, 2};
    ex.target = 4;
    ex.negatives = {1, 3, 1};
    for (auto objective : {Objective::NegativeSampling, Objective::FullSoftmax}) {
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        worst = std::max(worst, gradient_gap(toy_model(mode, seed), ex, objective));
      }
    }
  }
  const auto m = toy_model(TrainingMode::PvDm, 9);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 5.0);
  double sum_gap = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Vector<double> h(4);
    for (Index k = 0; k < 4; ++k) h(k) = g(rng);
    sum_gap = std::max(sum_gap, std::abs(softmax_probabilities<double>(h, m.output, m.bias).sum() - 1.0));
  }
  return check(worst < 1e-4 && sum_gap <= 1e-9,
               fmt::format("max gradient relative error {:.3g}; softmax |sum - 1| {:.3g}", worst,
                           sum_gap));
}

// -- 5 ----------------------------------------------------------------------

Outcome synthetic_end_to_end(const fs::path& scratch) {
  const auto bench = testing::write_synthetic_benchmark(scratch / "bench");
  RunConfig config;
  config.benchmark = bench.root;
  config.output_dir = scratch / "e2e";
  config.methods = {1, 2, 3, 4};
  config.wilcoxon_pairs = {};
  const auto outcome = evaluate_benchmark(config);

  std::map<std::pair<int, std::string>, std::optional<std::size_t>> rank;  // (method, bug)
  for (const auto& row : outcome.metrics) {
    if (row.project == kAggregateProject) continue;
    for (const auto& q : row.metrics.per_query) {
      rank[{row.method_id, row.project + "/" + q.bug_id}] = q.first_rank;
    }
  }
  std::string detail;
  bool ok = true;
  for (int method = 1; method <= 4; ++method) {
    std::size_t regular = 0, top = 0;
    for (const auto& q : bench.queries) {
      if (q.decoy) continue;
      ++regular;
      const auto r = rank[{method, q.project + "/" + q.bug_id}];
      top += r && *r == 1;
    }
    const double share = static_cast<double>(top) / static_cast<double>(regular);
    ok = ok && share >= 0.95;
    detail += fmt::format("M{} rank-1 {}/{}; ", method, top, regular);
  }
  std::size_t decoys = 0, outranked = 0;
  for (const auto& q : bench.queries) {
    if (!q.decoy) continue;
    ++decoys;
    const auto r1 = rank[{1, q.project + "/" + q.bug_id}];
    const auto r4 = rank[{4, q.project + "/" + q.bug_id}];
    outranked += r1 && r4 && *r4 < *r1;
  }
  ok = ok && decoys > 0 && outranked == decoys;
  detail += fmt::format("decoy queries where M4 beats M1 {}/{}", outranked, decoys);
  return check(ok, detail);
}

// -- 6 ----------------------------------------------------------------------

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

std::string directory_bytes(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) {
    all += fs::relative(f, dir).string() + "\n" + testing::read_text(f);
  }
  return all;
}

Outcome determinism(const fs::path& scratch) {
  const auto bench = testing::write_synthetic_benchmark(scratch / "bench-det");
  std::string reference;
  std::size_t csv_files = 0;
  for (const std::string name : {"det1", "det2"}) {
    const auto out = scratch / name;
    const auto command = fmt::format(
        "{} -q -b {} -o {} --seed 11 --vector-size 24 --epochs 8 --write-rankings evaluate "
        ">/dev/null 2>&1",
        GLOBUG_CLI, quote(bench.root), quote(out));
    const int status = std::system(command.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      return fail(fmt::format("evaluate exited with status {}", status));
    }
    fs::remove_all(out / "cache");
    const auto bytes = directory_bytes(out);
    if (reference.empty()) {
      reference = bytes;
      for (const auto& e : fs::recursive_directory_iterator(out)) csv_files += e.path().extension() == ".csv";
    } else if (bytes != reference) {
      return fail("CSV outputs differ between runs");
    }
  }
  return check(csv_files > 3, fmt::format("{} CSV files byte-identical across two runs (all 7 methods)",
                                          csv_files));
}

// -- 7 ----------------------------------------------------------------------

std::vector<Index> argsort(const ScoreVector& s) {
  std::vector<Index> idx(static_cast<std::size_t>(s.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return s(a) > s(b); });
  return idx;
}

Outcome fusion_invariants() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> log_c(-8.0, 8.0);
  std::size_t direct_mismatch = 0, scale_mismatch = 0;
  for (int round = 0; round < 100; ++round) {
    const auto n = static_cast<Index>(std::uniform_int_distribution<int>(2, 200)(rng));
    ScoreVector d(n), i(n);
    for (Index k = 0; k < n; ++k) {
      d(k) = u(rng);
      i(k) = u(rng);
    }
    if (argsort(fuse(d, i, 1.0, 0.0)) != argsort(d)) ++direct_mismatch;
    const double c = std::exp(log_c(rng));
    const auto base = argsort(fuse(d, i, 0.8, 0.2));
    if (argsort(fuse(c * d, i, 0.8, 0.2)) != base) ++scale_mismatch;
    if (argsort(fuse(d, c * i, 0.8, 0.2)) != base) ++scale_mismatch;
  }
  return check(direct_mismatch == 0 && scale_mismatch == 0,
               fmt::format("w2=0 mismatches {} / 100; scaling mismatches {} / 200", direct_mismatch,
                           scale_mismatch));
}

// -- 8 ----------------------------------------------------------------------

Outcome real_benchmark(const fs::path& scratch) {
  const char* root = std::getenv("GLOBUG_BENCH4BL");
  if (root == nullptr || *root == '\0') {
    return {Status::Skip, "set GLOBUG_BENCH4BL to a benchmark root to run"};
  }
  RunConfig config;
  config.benchmark = root;
  config.output_dir = scratch / "bench4bl";
  const auto prepared = prepare_benchmark(config);
  const Project* csv = nullptr;
  for (const auto& p : prepared.benchmark.projects) {
    std::string upper = p.name;
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) {
      return static_cast<char>(std::toupper(c));
    });
    if (upper == "CSV") csv = &p;
  }
  if (csv == nullptr) return fail("no CSV project under the benchmark root");
  const auto vocab = build_global_idf(prepared.benchmark, csv->name);
  const bool ok = csv->source_files.size() == 29 && csv->bug_reports.size() == 14 &&
                  vocab.size() == 263402;
  return check(ok, fmt::format("CSV {} files / {} bug reports; global vocabulary {} "
                               "(environment-dependent)",
                               csv->source_files.size(), csv->bug_reports.size(), vocab.size()));
}

}  // namespace

int main() {
  testing::TempDir scratch("globug-acceptance");
  const struct {
    int id;
    const char* name;
    double limit_seconds;  // 0: no limit
    std::function<Outcome()> run;
  } criteria[] = {
      {1, "TF.IDF/rVSM oracle equivalence", 5, rvsm_oracle},
      {2, "metric fixtures and Top-N monotonicity", 5, metric_fixtures},
      {3, "Wilcoxon exactness", 30, wilcoxon_exactness},
      {4, "embedding gradient check", 10, gradient_check},
      {5, "end-to-end synthetic benchmark", 60, [&] { return synthetic_end_to_end(scratch.path()); }},
      {6, "determinism of evaluate", 0, [&] { return determinism(scratch.path()); }},
      {7, "fusion invariants", 0, fusion_invariants},
      {8, "real benchmark counts (optional)", 0, [&] { return real_benchmark(scratch.path()); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = fail(fmt::format("exception: {}", e.what()));
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.status == Status::Pass && c.limit_seconds > 0 && seconds >= c.limit_seconds) {
      o = fail(fmt::format("{} (took {:.2f} s, limit {} s)", o.detail, seconds, c.limit_seconds));
    }
    const char* label = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    failures += o.status == Status::Fail;
    fmt::print("[{}] {}. {}: {} ({:.2f} s)\n", label, c.id, c.name, o.detail, seconds);
  }
  return failures == 0 ? 0 : 1;
}
