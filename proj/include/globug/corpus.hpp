#ifndef GLOBUG_CORPUS_HPP
#define GLOBUG_CORPUS_HPP

#include "globug/preprocess.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace globug {

struct SourceFile {
  /// Project-relative path below `sources/`; doubles as the file id.
  std::string id;
  std::string path;
  std::string raw_text;
  TokenStream tokens{{}, Origin::SourceFile};
  bool degenerate = false;  // empty file
};

struct BugReport {
  std::string id;
  std::string summary;
  std::string description;
  /// Ground truth, as SourceFile ids once resolved by the loader.
  std::vector<std::string> fixed_files;
  std::optional<std::string> timestamp;
  TokenStream tokens{{}, Origin::BugReport};

  /// Query text: summary followed by description.
  std::string text() const;
};

class Project {
 public:
  std::string name;
  std::vector<SourceFile> source_files;
  std::vector<BugReport> bug_reports;
  /// Reports dropped by validate_and_filter.
  std::size_t removed_reports = 0;
  std::vector<std::string> warnings;

  bool has_queries() const noexcept { return !bug_reports.empty(); }

  /// Position of a file in `source_files`, by id.
  std::optional<std::size_t> file_index(std::string_view id) const;
  std::optional<std::size_t> bug_index(std::string_view id) const;

  /// Rebuilds the id lookup tables; call after mutating the collections.
  void reindex();

 private:
  std::unordered_map<std::string, std::size_t> file_lookup_;
  std::unordered_map<std::string, std::size_t> bug_lookup_;
};

struct ManifestEntry {
  std::string project;
  std::size_t source_files = 0;
  std::size_t bug_reports = 0;
};

struct Benchmark {
  std::vector<Project> projects;
  std::optional<std::vector<ManifestEntry>> manifest;

  const Project& project(std::string_view name) const;
  Project& project(std::string_view name);
  bool contains(std::string_view name) const;
};

struct LoadOptions {
  /// Strict: a fix link that names no source file is an error. Lenient: the
  /// link is dropped with a warning and validate_and_filter decides.
  bool strict_fix_links = true;
};

/// Loads a project directory. Two layouts are understood:
///   canonical  <root>/sources/**/*.java + <root>/bugs/*.json
///   Bench4BL   <root>/sources/**/*.java + <root>/bugrepo/repository.xml
/// The Bench4BL adapter always resolves fix links leniently.
Project load_project(const std::filesystem::path& root, const LoadOptions& options = {});

/// Drops reports whose fix set resolves to no file; `removed_reports` is
/// incremented by the number dropped.
Project validate_and_filter(Project project);

/// One validated Project per subdirectory, sorted by name. `manifest.csv` at
/// the root, when present, is checked against the loaded counts.
Benchmark load_benchmark(const std::filesystem::path& root, const LoadOptions& options = {});

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

/// Resolves one fix-link string against project file ids: exact path, then a
/// dotted Java name (org.x.Foo.java), then a unique path suffix, then a unique
/// basename. Basename matches add a warning.
std::optional<std::string> resolve_fix_link(const std::vector<std::string>& file_ids,
                                            std::string_view link,
                                            std::vector<std::string>* warnings = nullptr);

/// Corpus ordering of reports: timestamp when present, else id. Purely
/// numeric ids compare numerically.
bool report_precedes(const BugReport& a, const BugReport& b);

/// Fills token streams of every source file and bug report.
void preprocess_project(Project& project, const PreprocessConfig& config);
void preprocess_benchmark(Benchmark& benchmark, const PreprocessConfig& config);

/// Digest over names, paths, contents, and fix links.
std::string corpus_fingerprint(const Benchmark& benchmark);

}  // namespace globug

#endif  // GLOBUG_CORPUS_HPP
