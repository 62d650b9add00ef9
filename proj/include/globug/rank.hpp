#ifndef GLOBUG_RANK_HPP
#define GLOBUG_RANK_HPP

#include "globug/corpus.hpp"
#include "globug/doc2vec.hpp"
#include "globug/tfidf.hpp"
#include "globug/types.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace globug {

/// Document representation a relevancy function compares with.
enum class Representation {
  None,
  TfIdfLocal,
  TfIdfGlobal,
  Doc2VecGlobal,
  TfIdfGlobalPlusDoc2VecGlobal,
};

std::string_view to_string(Representation r);

struct MethodConfig {
  int method_id = 3;
  Representation direct = Representation::TfIdfLocal;
  Representation indirect = Representation::TfIdfLocal;
  double w1 = 0.8;
  double w2 = 0.2;

  /// The seven experimental methods:
  ///   1 local TF.IDF direct only        5 global Doc2Vec direct only
  ///   2 global TF.IDF direct only       6 global TF.IDF direct + global Doc2Vec indirect
  ///   3 BugLocator (local / local)      7 TF.IDF+Doc2Vec (global) on both functions
  ///   4 GloBug variation 1 (global / global TF.IDF)
  /// Direct-only methods use w1 = 1, w2 = 0. Throws Error("usage") otherwise.
  static MethodConfig for_method(int method_id);

  bool uses(Representation r) const { return direct == r || indirect == r; }
  bool needs_global_idf() const;
  bool needs_embeddings() const;
};

enum class HistoryPolicy {
  StrictlyEarlier,  // reports before the query in corpus order
  AllOthers,        // every other report of the project
};

/// Models trained on the global corpus for one held-out project. Pointers
/// must outlive every ProjectIndex built from them.
struct GlobalArtifacts {
  const Vocabulary* idf = nullptr;
  const EmbeddingModel* pv_dm = nullptr;
  const EmbeddingModel* pv_dbow = nullptr;
  EmbeddingConfig embedding;  // inference settings
};

/// Every representation of one document the index was asked to build.
struct DocumentVectors {
  TfIdfVector local;
  TfIdfVector global;
  Vector<float> embedding;  // [PV-DM ; PV-DBOW]
};

/// Precomputed representations of a project's files and bug reports, for a
/// given set of methods. Immutable after construction; safe to share across
/// threads.
class ProjectIndex {
 public:
  ProjectIndex(const Project& project, const GlobalArtifacts& artifacts,
               std::span<const MethodConfig> methods);

  const Project& project() const noexcept { return *project_; }
  bool has(Representation r) const;

  const DocumentVectors& file(std::size_t i) const { return files_[i]; }
  std::size_t file_count() const noexcept { return files_.size(); }
  const LengthNormalizer& local_lengths() const noexcept { return local_lengths_; }
  const LengthNormalizer& global_lengths() const noexcept { return global_lengths_; }

  /// Representations of a bug report: cached for project reports (by id),
  /// computed on the fly otherwise.
  DocumentVectors represent(const BugReport& bug) const;

 private:
  DocumentVectors build(const TokenStream& tokens, const std::string& id) const;
  void require(Representation r) const;

  const Project* project_;
  GlobalArtifacts artifacts_;
  bool local_ = false;
  bool global_ = false;
  bool embedding_ = false;
  std::optional<Vocabulary> local_vocab_;
  std::vector<DocumentVectors> files_;
  std::vector<DocumentVectors> bugs_;
  LengthNormalizer local_lengths_;
  LengthNormalizer global_lengths_;
};

/// Min-max normalization to [0, 1]; a constant vector maps to all zeros.
ScoreVector min_max_normalize(const ScoreVector& scores);

/// Per-file direct score. TF.IDF representations use rVSM, Doc2Vec uses
/// cosine of inferred vectors, the combined one averages both after min-max.
ScoreVector direct_relevancy(const BugReport& query, const ProjectIndex& index,
                             Representation representation);

/// Per-file indirect score: sum over history reports B fixing f of
/// sim(query, B) / |fixed(B)|. Doc2Vec similarities are clamped at 0.
ScoreVector indirect_relevancy(const BugReport& query, std::span<const BugReport* const> history,
                               const ProjectIndex& index, Representation representation);

/// w1 * minmax(direct) + w2 * minmax(indirect). Throws ModelError when the
/// vectors cover different file sets (different lengths).
ScoreVector fuse(const ScoreVector& direct, const ScoreVector& indirect, double w1, double w2);

std::vector<const BugReport*> history_for(const Project& project, const BugReport& query,
                                          HistoryPolicy policy);

struct RankedEntry {
  std::size_t file = 0;  // index into project.source_files
  double final_score = 0.0;
  double direct_score = 0.0;
  double indirect_score = 0.0;
};

struct RankedList {
  std::string query_bug_id;
  int method_id = 0;
  /// Sorted by final score descending; ties by file path ascending.
  std::vector<RankedEntry> entries;

  /// Source-file ids in rank order.
  std::vector<std::string> file_ids(const Project& project) const;
};

RankedList localize(const BugReport& query, const ProjectIndex& index, const MethodConfig& config,
                    std::span<const BugReport* const> history);

RankedList localize(const BugReport& query, const ProjectIndex& index, const MethodConfig& config,
                    HistoryPolicy policy = HistoryPolicy::StrictlyEarlier);

/// CSV: bug_id,rank,file_path,final,direct,indirect (rank is 1-based).
void write_ranked_list_header(std::ostream& out);
void write_ranked_list_rows(std::ostream& out, const RankedList& list, const Project& project);

}  // namespace globug

#endif  // GLOBUG_RANK_HPP
