#include "globug/error.hpp"
#include "globug/pipeline.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>

namespace {

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

int fail(std::string_view kind, const std::string& message, std::string_view bug_id = {}) {
  std::cerr << "error: kind=" << kind;
  if (!bug_id.empty()) std::cerr << " bug_id=" << bug_id;
  std::cerr << " message=" << one_line(message) << '\n';
  return kind == "usage" ? 2 : 1;
}

std::vector<std::pair<int, int>> parse_pairs(const std::vector<std::string>& specs) {
  std::vector<std::pair<int, int>> pairs;
  for (const auto& s : specs) {
    const auto colon = s.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument(s);
      pairs.emplace_back(std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1)));
    } catch (const std::logic_error&) {
      throw globug::Error("usage", fmt::format("method pair must look like A:B, got '{}'", s));
    }
  }
  return pairs;
}

void print_ranking(const globug::LocalizeOutcome& outcome) {
  fmt::print("{:>4}  {:>10}  {:>10}  {:>10}  {}\n", "rank", "final", "direct", "indirect", "file");
  const auto& entries = outcome.ranking.entries;
  for (std::size_t i = 0; i < entries.size() && i < 10; ++i) {
    fmt::print("{:>4}  {:>10.6f}  {:>10.6f}  {:>10.6f}  {}\n", i + 1, entries[i].final_score,
               entries[i].direct_score, entries[i].indirect_score, outcome.file_paths[i]);
  }
}

void print_metrics(std::span<const globug::MetricsRow> rows) {
  fmt::print("{:<16} {:>6} {:>8} {:>8} {:>5} {:>5} {:>5}\n", "project", "method", "MRR", "MAP",
             "Top1", "Top5", "Top10");
  for (const auto& r : rows) {
    const auto top = [&](std::size_t n) {
      auto it = r.metrics.top_n.find(n);
      return it == r.metrics.top_n.end() ? std::size_t{0} : it->second;
    };
    fmt::print("{:<16} {:>6} {:>8.4f} {:>8.4f} {:>5} {:>5} {:>5}\n", r.project, r.method_id,
               r.metrics.mrr, r.metrics.map, top(1), top(5), top(10));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"globug: IR-based bug localization with global TF.IDF and paragraph vectors"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value configuration file (flags take precedence)");

  globug::RunConfig run;
  std::string benchmark;
  std::string output = "globug-out";
  std::string cache;
  std::string stopwords;
  std::string keywords;
  std::string history = "earlier";
  std::string counting = "exclude-held-out";
  std::string wilcoxon = "auto";
  std::vector<std::string> pairs;
  std::size_t min_token_length = run.preprocess.min_token_length;
  bool no_split = false;
  bool lenient = false;
  bool quiet = false;
  std::optional<double> min_alpha_dm;
  std::optional<double> min_alpha_dbow;

  app.add_option("--benchmark,-b", benchmark, "Benchmark root (one subdirectory per project)");
  app.add_option("--output,-o", output, "Output directory")->capture_default_str();
  app.add_option("--cache", cache, "Artifact cache directory (default <output>/cache)");
  app.add_option("--project", run.projects, "Restrict to these projects (repeatable)");
  app.add_option("--methods", run.methods, "Method ids 1..7")->delimiter(',');
  app.add_option("--pairs", pairs, "Wilcoxon method pairs A:B")->delimiter(',');
  app.add_option("--wilcoxon", wilcoxon, "auto|exact|normal")->capture_default_str();
  app.add_option("--history", history, "earlier|all")->capture_default_str();
  app.add_option("--idf-counting", counting, "exclude-held-out|include-all")
      ->capture_default_str();
  app.add_flag("--lenient-fix-links", lenient, "Drop unresolvable fix links instead of failing");
  app.add_option("--stopwords", stopwords, "Stop-word list file");
  app.add_option("--keywords", keywords, "Keyword list file");
  app.add_option("--min-token-length", min_token_length)->capture_default_str();
  app.add_flag("--no-split", no_split, "Index identifiers unsplit");
  app.add_option("--seed", run.embedding.seed)->capture_default_str();
  app.add_option("--vector-size", run.embedding.vector_size)->capture_default_str();
  app.add_option("--alpha", run.embedding.alpha)->capture_default_str();
  app.add_option("--min-alpha-dm", min_alpha_dm, "Default alpha/2");
  app.add_option("--min-alpha-dbow", min_alpha_dbow, "Default alpha/3");
  app.add_option("--window", run.embedding.window)->capture_default_str();
  app.add_option("--min-count", run.embedding.min_count)->capture_default_str();
  app.add_option("--negative", run.embedding.negative)->capture_default_str();
  app.add_option("--sample", run.embedding.sample)->capture_default_str();
  app.add_option("--epochs", run.embedding.epochs)->capture_default_str();
  app.add_option("--infer-epochs", run.embedding.infer_epochs, "0: same as --epochs")
      ->capture_default_str();
  app.add_flag("--write-rankings", run.write_rankings, "evaluate: also write ranking CSVs");
  app.add_flag("--quiet,-q", quiet, "No progress output on stderr");

  auto* train_cmd = app.add_subcommand("train-global", "Build global IDF and embedding models");
  auto* localize_cmd = app.add_subcommand("localize", "Rank files for one bug report");
  std::string bug_id;
  std::string project;
  int method = 4;
  localize_cmd->add_option("--bug-id", bug_id)->required();
  localize_cmd->add_option("--in-project", project, "Project holding the bug report");
  localize_cmd->add_option("--method,-m", method)->capture_default_str();
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Run methods on every query and score them");
  auto* report_cmd = app.add_subcommand("report", "Summarize an evaluation's metrics.csv");
  std::string metrics_path;
  report_cmd->add_option("--metrics", metrics_path, "Default <output>/metrics.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  const globug::Logger log = [quiet](std::string_view line) {
    if (!quiet) std::cerr << "globug: " << line << '\n';
  };

  try {
    run.benchmark = benchmark;
    run.output_dir = output;
    run.cache_dir = cache;
    run.load.strict_fix_links = !lenient;
    if (!stopwords.empty()) run.preprocess.stopwords = globug::load_term_list(stopwords);
    if (!keywords.empty()) run.preprocess.keywords = globug::load_term_list(keywords);
    run.preprocess.min_token_length = min_token_length;
    run.preprocess.split_compound_identifiers = !no_split;
    run.embedding.min_alpha_dm = min_alpha_dm;
    run.embedding.min_alpha_dbow = min_alpha_dbow;
    if (!pairs.empty()) run.wilcoxon_pairs = parse_pairs(pairs);

    static const std::map<std::string, globug::HistoryPolicy> histories{
        {"earlier", globug::HistoryPolicy::StrictlyEarlier},
        {"all", globug::HistoryPolicy::AllOthers}};
    static const std::map<std::string, globug::IdfCounting> countings{
        {"exclude-held-out", globug::IdfCounting::ExcludeHeldOut},
        {"include-all", globug::IdfCounting::IncludeAll}};
    static const std::map<std::string, globug::WilcoxonMethod> tests{
        {"auto", globug::WilcoxonMethod::Auto},
        {"exact", globug::WilcoxonMethod::Exact},
        {"normal", globug::WilcoxonMethod::Normal}};
    const auto choose = [](const auto& table, const std::string& key, std::string_view what) {
      const auto it = table.find(key);
      if (it == table.end()) {
        throw globug::Error("usage", fmt::format("unknown {} '{}'", what, key));
      }
      return it->second;
    };
    run.history = choose(histories, history, "history policy");
    run.idf_counting = choose(countings, counting, "IDF counting");
    run.wilcoxon_method = choose(tests, wilcoxon, "Wilcoxon method");

    if (*train_cmd) {
      const auto entries = globug::train_global(run, log);
      fmt::print("project,idf,pv_dm,pv_dbow\n");
      for (const auto& e : entries) {
        fmt::print("{},{},{},{}\n", e.project, globug::to_string(e.idf),
                   globug::to_string(e.pv_dm), globug::to_string(e.pv_dbow));
      }
    } else if (*localize_cmd) {
      const auto outcome = globug::localize_bug(run, project, bug_id, method, log);
      print_ranking(outcome);
      log(fmt::format("ranking written to {}", outcome.csv.string()));
    } else if (*evaluate_cmd) {
      const auto outcome = globug::evaluate_benchmark(run, log);
      print_metrics(outcome.metrics);
      for (const auto& t : outcome.tests) {
        if (t.result) {
          fmt::print("wilcoxon {} vs {} ({}): n={} p={:.6g}\n", t.method_a, t.method_b, t.metric,
                     t.result->n, t.result->p_value);
        } else {
          fmt::print("wilcoxon {} vs {} ({}): {}\n", t.method_a, t.method_b, t.metric, t.note);
        }
      }
      for (const auto& f : outcome.files) log(fmt::format("wrote {}", f.string()));
    } else if (*report_cmd) {
      const std::filesystem::path path =
          metrics_path.empty() ? run.output_dir / "metrics.csv" : std::filesystem::path(metrics_path);
      const auto rows = globug::read_metrics_csv(path);
      print_metrics(rows);
      const auto summary = globug::summarize(path, run.wilcoxon_pairs);
      fmt::print("\n{:>8} {:>8} {:>8} {:>10} {:>10}\n", "method_a", "method_b", "projects",
                 "dMRR", "dMAP");
      for (const auto& s : summary) {
        fmt::print("{:>8} {:>8} {:>8} {:>9.2f}% {:>9.2f}%\n", s.method_a, s.method_b, s.projects,
                   100.0 * s.mrr_improvement, 100.0 * s.map_improvement);
      }
      const auto wilcoxon_csv = path.parent_path() / "wilcoxon.csv";
      if (std::ifstream in{wilcoxon_csv}) {
        fmt::print("\n");
        std::cout << in.rdbuf();
      }
    }
  } catch (const globug::CorpusError& e) {
    return fail(e.kind(), e.what(), e.bug_id());
  } catch (const globug::Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("io", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
