#ifndef GLOBUG_PIPELINE_HPP
#define GLOBUG_PIPELINE_HPP

// Orchestration behind the command-line tool: corpus loading, the on-disk
// artifact cache, and the train-global / localize / evaluate / report
// commands.

#include "globug/corpus.hpp"
#include "globug/doc2vec.hpp"
#include "globug/eval.hpp"
#include "globug/rank.hpp"
#include "globug/tfidf.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace globug {

using Logger = std::function<void(std::string_view)>;

struct RunConfig {
  std::filesystem::path benchmark;
  std::filesystem::path output_dir = "globug-out";
  std::filesystem::path cache_dir;  // output_dir / "cache" when empty
  /// Projects to train or evaluate for; empty means every project.
  std::vector<std::string> projects;
  std::vector<int> methods = {1, 2, 3, 4, 5, 6, 7};
  std::vector<std::pair<int, int>> wilcoxon_pairs = {{1, 2}, {3, 4}, {2, 5}, {4, 6}, {4, 7}};
  WilcoxonMethod wilcoxon_method = WilcoxonMethod::Auto;
  HistoryPolicy history = HistoryPolicy::StrictlyEarlier;
  IdfCounting idf_counting = IdfCounting::ExcludeHeldOut;
  LoadOptions load;
  PreprocessConfig preprocess = PreprocessConfig::defaults();
  EmbeddingConfig embedding;
  /// Also write one ranking CSV per (project, method) during evaluate.
  bool write_rankings = false;

  std::filesystem::path effective_cache_dir() const;

  /// Throws Error("usage") for unknown method ids or a missing benchmark,
  /// and when the output directory lies inside the benchmark.
  void validate() const;
};

enum class CacheStatus { Hit, Trained, Retrained };

std::string_view to_string(CacheStatus status);

/// Fingerprints: any change to the corpus, preprocessing, IDF counting or
/// embedding settings changes the fingerprint of dependent artifacts.
std::string idf_fingerprint(std::string_view corpus, const PreprocessConfig& preprocess,
                            std::string_view held_out, IdfCounting counting);
std::string embedding_fingerprint(std::string_view corpus, const PreprocessConfig& preprocess,
                                  const EmbeddingConfig& config, std::string_view held_out,
                                  TrainingMode mode);

/// Global models per held-out project under one directory:
///   <root>/<project>/idf.txt, pv_dm.bin, pv_dbow.bin
/// Unreadable or stale files are rebuilt with a warning.
class ArtifactCache {
 public:
  explicit ArtifactCache(std::filesystem::path root, Logger log = {});

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path idf_path(std::string_view held_out) const;
  std::filesystem::path embedding_path(std::string_view held_out, TrainingMode mode) const;

  /// Loads without training; nullopt when missing, unreadable or stale.
  std::optional<Vocabulary> load_idf(std::string_view held_out,
                                     std::string_view fingerprint) const;
  std::optional<EmbeddingModel> load_embedding(std::string_view held_out, TrainingMode mode,
                                               std::string_view fingerprint) const;

  Vocabulary idf(const Benchmark& benchmark, std::string_view held_out, IdfCounting counting,
                 std::string_view fingerprint, CacheStatus* status = nullptr) const;
  EmbeddingModel embedding(const Benchmark& benchmark, std::string_view held_out,
                           TrainingMode mode, const EmbeddingConfig& config,
                           std::string_view fingerprint, CacheStatus* status = nullptr) const;

 private:
  void warn(std::string_view message) const;

  std::filesystem::path root_;
  Logger log_;
};

/// Training corpus of the global embedding models for a held-out project:
/// every project's source files plus the bug reports of all other projects.
/// The vocabulary is built from source files only.
struct EmbeddingCorpus {
  std::vector<TokenStream> documents;
  std::vector<std::string> doc_ids;
  EmbeddingVocabulary vocabulary;
};

EmbeddingCorpus embedding_corpus(const Benchmark& benchmark, std::string_view held_out,
                                 int min_count);

/// Loaded and preprocessed benchmark plus its fingerprint.
struct PreparedBenchmark {
  Benchmark benchmark;
  std::string fingerprint;
};

PreparedBenchmark prepare_benchmark(const RunConfig& config, const Logger& log = {});

/// Global models for one held-out project, owned.
struct GlobalModels {
  std::optional<Vocabulary> idf;
  std::optional<EmbeddingModel> pv_dm;
  std::optional<EmbeddingModel> pv_dbow;

  GlobalArtifacts view(const EmbeddingConfig& config) const;
};

struct TrainEntry {
  std::string project;
  CacheStatus idf = CacheStatus::Hit;
  CacheStatus pv_dm = CacheStatus::Hit;
  CacheStatus pv_dbow = CacheStatus::Hit;
};

/// Builds (or reuses) every global model for each requested held-out project.
std::vector<TrainEntry> train_global(const RunConfig& config, const Logger& log = {});

struct LocalizeOutcome {
  std::string project;
  RankedList ranking;
  std::vector<std::string> file_paths;  // rank order
  std::filesystem::path csv;
};

/// Ranks the files of the project holding `bug_id` with one method. Global
/// models must already be in the cache. `project` may be empty when the bug
/// id is unique across the benchmark.
LocalizeOutcome localize_bug(const RunConfig& config, std::string_view project,
                             std::string_view bug_id, int method_id, const Logger& log = {});

struct EvaluationOutcome {
  std::vector<MetricsRow> metrics;
  std::vector<WilcoxonRow> tests;
  std::vector<std::filesystem::path> files;
};

/// Runs every method on every eligible query and writes metrics.csv,
/// metrics.json and wilcoxon.csv to the output directory. Missing global
/// models are trained through the cache.
EvaluationOutcome evaluate_benchmark(const RunConfig& config, const Logger& log = {});

/// Mean relative improvement of method b over method a across projects.
struct ImprovementRow {
  int method_a = 0;
  int method_b = 0;
  std::size_t projects = 0;
  double mrr_improvement = 0.0;  // fraction, 0.066 for 6.6 %
  double map_improvement = 0.0;
};

/// Summarizes an existing metrics.csv: per-pair improvements, written to
/// summary.csv next to it. Projects where method a scores 0 are skipped.
std::vector<ImprovementRow> summarize(const std::filesystem::path& metrics_csv,
                                      std::span<const std::pair<int, int>> pairs);

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

void write_summary_csv(std::ostream& out, std::span<const ImprovementRow> rows);

}  // namespace globug

#endif  // GLOBUG_PIPELINE_HPP
