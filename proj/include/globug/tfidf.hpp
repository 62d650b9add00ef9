#ifndef GLOBUG_TFIDF_HPP
#define GLOBUG_TFIDF_HPP

#include "globug/corpus.hpp"
#include "globug/types.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace globug {

enum class Scope { Local, Global };

/// Which source files the global model counts document frequencies over.
/// Vocabulary terms always come from every project.
enum class IdfCounting {
  ExcludeHeldOut,  // df and #docs over all projects except the held-out one
  IncludeAll,
};

std::string_view to_string(Scope scope);
std::string_view to_string(IdfCounting counting);

/// Term dictionary with document frequencies, built from source files only.
/// Term ids are dense and follow lexicographic term order.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Throws ModelError on an empty collection.
  static Vocabulary build(std::span<const TokenStream> documents, Scope scope = Scope::Local);

  /// Assembles a vocabulary from already-counted terms. Terms must be sorted
  /// and unique; df entries are clamped to [1, total_documents].
  static Vocabulary from_counts(std::vector<std::string> terms,
                                std::vector<std::uint32_t> document_frequency,
                                std::uint64_t total_documents, Scope scope,
                                std::string held_out = {});

  std::optional<TermId> find(std::string_view term) const;
  const std::string& term(TermId id) const { return terms_[id]; }
  std::uint32_t document_frequency(TermId id) const { return df_[id]; }
  std::size_t size() const noexcept { return terms_.size(); }
  std::uint64_t total_documents() const noexcept { return total_documents_; }
  Scope scope() const noexcept { return scope_; }
  /// Project excluded from df counting (global scope only).
  const std::string& held_out() const noexcept { return held_out_; }

  /// ln(#docs / n_t)
  double idf(TermId id) const;

  bool operator==(const Vocabulary& other) const;

 private:
  std::vector<std::string> terms_;
  std::vector<std::uint32_t> df_;
  std::unordered_map<std::string, TermId> index_;
  std::uint64_t total_documents_ = 0;
  Scope scope_ = Scope::Local;
  std::string held_out_;
};

struct TfIdfVector {
  Eigen::SparseVector<double> weights;
  std::string source_doc_id;
  /// Raw length of the token stream, out-of-vocabulary terms included.
  std::size_t term_count = 0;

  double norm() const { return weights.norm(); }
};

/// weight(t) = (ln f_t + 1) * ln(#docs / n_t) for in-vocabulary terms.
TfIdfVector vectorize(const TokenStream& stream, const Vocabulary& vocab,
                      std::string source_doc_id = {});

/// Cosine of two sparse vectors; 0 when either has zero norm.
double cosine(const TfIdfVector& u, const TfIdfVector& v);

/// Min-max normalization of document lengths over the corpus being ranked.
struct LengthNormalizer {
  std::size_t min_terms = 0;
  std::size_t max_terms = 0;

  static LengthNormalizer fit(std::span<const TfIdfVector> files);

  /// Maps a term count to [0, 1]; a degenerate range maps everything to 0.
  double operator()(std::size_t term_count) const;
};

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Revised VSM score: logistic(N(#terms_file)) * cosine(bug, file).
double rvsm(const TfIdfVector& bug, const TfIdfVector& file, const LengthNormalizer& norm);

/// Vocabulary from every project's source files; document frequencies and
/// #docs from the counting set chosen by `counting`. Terms unseen in the
/// counting set get df = 1. Throws CorpusError for an unknown project.
Vocabulary build_global_idf(const Benchmark& benchmark, std::string_view held_out,
                            IdfCounting counting = IdfCounting::ExcludeHeldOut);

/// Line-oriented text format:
///   globug-idf 1
///   scope <local|global>
///   held_out <name or ->
///   docs <#docs>
///   terms <V>
///   fingerprint <hex or ->
///   <term>\t<df>      (V lines)
void write_vocabulary(std::ostream& out, const Vocabulary& vocab,
                      std::string_view fingerprint = {});
/// Throws ArtifactError on malformed input. Returns the stored fingerprint.
Vocabulary read_vocabulary(std::istream& in, std::string* fingerprint = nullptr);

}  // namespace globug

#endif  // GLOBUG_TFIDF_HPP
