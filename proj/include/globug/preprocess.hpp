#ifndef GLOBUG_PREPROCESS_HPP
#define GLOBUG_PREPROCESS_HPP

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace globug {

enum class Origin { BugReport, SourceFile };

/// Ordered sequence of lowercase, stemmed terms. Every vectorizer consumes
/// these; tokens never contain stop words, keywords, or empty strings.
struct TokenStream {
  std::vector<std::string> tokens;
  Origin origin = Origin::BugReport;

  bool empty() const noexcept { return tokens.empty(); }
  std::size_t size() const noexcept { return tokens.size(); }
};

struct PreprocessConfig {
  std::unordered_set<std::string> stopwords;
  std::unordered_set<std::string> keywords;
  std::size_t min_token_length = 2;
  /// On: emit camelCase/underscore parts plus the joined compound.
  /// Off: emit the identifier as a single joined term.
  bool split_compound_identifiers = true;

  /// Committed English stop words and the Java reserved-word set.
  static PreprocessConfig defaults();

  bool is_filtered(std::string_view term) const;

  /// Stable digest of every field; feeds artifact fingerprints.
  std::string fingerprint() const;
};

/// Reads a one-term-per-line list. Blank lines and '#' comments are skipped.
std::unordered_set<std::string> load_term_list(const std::filesystem::path& path);
std::unordered_set<std::string> parse_term_list(std::string_view text);

/// Removes line/block comments and the contents of string, char and text-block
/// literals (quotes included). An unterminated block comment strips to end of
/// input and appends a message to `warnings` when given.
std::string strip_code_noise(std::string_view raw_source,
                             std::vector<std::string>* warnings = nullptr);

/// Splits on camelCase boundaries, underscores, '$' and digits. Parts are
/// lowercased; the joined compound is appended when there are two or more
/// parts. Terms shorter than `config.min_token_length` are dropped.
std::vector<std::string> split_identifier(std::string_view identifier,
                                          const PreprocessConfig& config);

/// Porter stemmer (reference C implementation, including its `bli` and `logi`
/// step-2 rules). Input must be lowercase ASCII.
std::string stem(std::string_view term);

TokenStream preprocess(std::string_view text, Origin origin, const PreprocessConfig& config);

}  // namespace globug

#endif  // GLOBUG_PREPROCESS_HPP
