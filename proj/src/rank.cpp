#include "globug/rank.hpp"

#include "globug/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>
#include <ostream>

namespace globug {

std::string_view to_string(Representation r) {
  switch (r) {
    case Representation::None:
      return "none";
    case Representation::TfIdfLocal:
      return "tfidf-local";
    case Representation::TfIdfGlobal:
      return "tfidf-global";
    case Representation::Doc2VecGlobal:
      return "doc2vec-global";
    case Representation::TfIdfGlobalPlusDoc2VecGlobal:
      return "tfidf+doc2vec-global";
  }
  return "?";
}

MethodConfig MethodConfig::for_method(int method_id) {
  using R = Representation;
  MethodConfig c;
  c.method_id = method_id;
  switch (method_id) {
    case 1:
      c.direct = R::TfIdfLocal;
      c.indirect = R::None;
      break;
    case 2:
      c.direct = R::TfIdfGlobal;
      c.indirect = R::None;
      break;
    case 3:
      c.direct = R::TfIdfLocal;
      c.indirect = R::TfIdfLocal;
      break;
    case 4:
      c.direct = R::TfIdfGlobal;
      c.indirect = R::TfIdfGlobal;
      break;
    case 5:
      c.direct = R::Doc2VecGlobal;
      c.indirect = R::None;
      break;
    case 6:
      c.direct = R::TfIdfGlobal;
      c.indirect = R::Doc2VecGlobal;
      break;
    case 7:
      c.direct = R::TfIdfGlobalPlusDoc2VecGlobal;
      c.indirect = R::TfIdfGlobalPlusDoc2VecGlobal;
      break;
    default:
      throw Error("usage", fmt::format("unknown method id {} (expected 1..7)", method_id));
  }
  if (c.indirect == R::None) {
    c.w1 = 1.0;
    c.w2 = 0.0;
  }
  return c;
}

bool MethodConfig::needs_global_idf() const {
  return uses(Representation::TfIdfGlobal) ||
         uses(Representation::TfIdfGlobalPlusDoc2VecGlobal);
}

bool MethodConfig::needs_embeddings() const {
  return uses(Representation::Doc2VecGlobal) ||
         uses(Representation::TfIdfGlobalPlusDoc2VecGlobal);
}

ProjectIndex::ProjectIndex(const Project& project, const GlobalArtifacts& artifacts,
                           std::span<const MethodConfig> methods)
    : project_(&project), artifacts_(artifacts) {
  for (const auto& m : methods) {
    local_ = local_ || m.uses(Representation::TfIdfLocal);
    global_ = global_ || m.needs_global_idf();
    embedding_ = embedding_ || m.needs_embeddings();
  }
  if (global_ && artifacts_.idf == nullptr) {
    throw ArtifactError("global IDF model required but not provided");
  }
  if (embedding_ && (artifacts_.pv_dm == nullptr || artifacts_.pv_dbow == nullptr)) {
    throw ArtifactError("PV-DM and PV-DBOW models required but not provided");
  }
  if (local_) {
    std::vector<TokenStream> docs;
    docs.reserve(project.source_files.size());
    for (const auto& f : project.source_files) docs.push_back(f.tokens);
    if (docs.empty()) throw CorpusError("project " + project.name + " has no source files");
    local_vocab_ = Vocabulary::build(docs, Scope::Local);
  }

  files_.reserve(project.source_files.size());
  for (const auto& f : project.source_files) files_.push_back(build(f.tokens, f.id));
  bugs_.reserve(project.bug_reports.size());
  for (const auto& b : project.bug_reports) bugs_.push_back(build(b.tokens, b.id));

  std::vector<TfIdfVector> lengths;
  if (local_) {
    for (const auto& f : files_) lengths.push_back(f.local);
    local_lengths_ = LengthNormalizer::fit(lengths);
  }
  if (global_) {
    lengths.clear();
    for (const auto& f : files_) lengths.push_back(f.global);
    global_lengths_ = LengthNormalizer::fit(lengths);
  }
}

bool ProjectIndex::has(Representation r) const {
  switch (r) {
    case Representation::None:
      return true;
    case Representation::TfIdfLocal:
      return local_;
    case Representation::TfIdfGlobal:
      return global_;
    case Representation::Doc2VecGlobal:
      return embedding_;
    case Representation::TfIdfGlobalPlusDoc2VecGlobal:
      return global_ && embedding_;
  }
  return false;
}

void ProjectIndex::require(Representation r) const {
  if (!has(r)) {
    throw ArtifactError(fmt::format("project index for {} was not built with {}", project_->name,
                                    to_string(r)));
  }
}

DocumentVectors ProjectIndex::build(const TokenStream& tokens, const std::string& id) const {
  DocumentVectors v;
  if (local_) v.local = vectorize(tokens, *local_vocab_, id);
  if (global_) v.global = vectorize(tokens, *artifacts_.idf, id);
  if (embedding_) {
    v.embedding =
        combined_vector(tokens, *artifacts_.pv_dm, *artifacts_.pv_dbow, artifacts_.embedding)
            .values;
  }
  return v;
}

DocumentVectors ProjectIndex::represent(const BugReport& bug) const {
  if (auto i = project_->bug_index(bug.id); i && project_->bug_reports[*i].tokens.tokens ==
                                                       bug.tokens.tokens) {
    return bugs_[*i];
  }
  return build(bug.tokens, bug.id);
}

ScoreVector min_max_normalize(const ScoreVector& scores) {
  if (scores.size() == 0) return scores;
  const double lo = scores.minCoeff();
  const double hi = scores.maxCoeff();
  if (!(hi > lo)) return ScoreVector::Zero(scores.size());
  return ((scores.array() - lo) / (hi - lo)).matrix();
}

namespace {

ScoreVector direct_scores(const DocumentVectors& q, const ProjectIndex& index, Representation r) {
  const auto n = static_cast<Index>(index.file_count());
  ScoreVector s(n);
  switch (r) {
    case Representation::None:
      return ScoreVector::Zero(n);
    case Representation::TfIdfLocal:
      for (Index i = 0; i < n; ++i) {
        s(i) = rvsm(q.local, index.file(static_cast<std::size_t>(i)).local, index.local_lengths());
      }
      return s;
    case Representation::TfIdfGlobal:
      for (Index i = 0; i < n; ++i) {
        s(i) = rvsm(q.global, index.file(static_cast<std::size_t>(i)).global,
                    index.global_lengths());
      }
      return s;
    case Representation::Doc2VecGlobal:
      for (Index i = 0; i < n; ++i) {
        s(i) = cosine<float>(q.embedding, index.file(static_cast<std::size_t>(i)).embedding);
      }
      return s;
    case Representation::TfIdfGlobalPlusDoc2VecGlobal:
      return 0.5 * (min_max_normalize(direct_scores(q, index, Representation::TfIdfGlobal)) +
                    min_max_normalize(direct_scores(q, index, Representation::Doc2VecGlobal)));
  }
  return ScoreVector::Zero(n);
}

double report_similarity(const DocumentVectors& q, const DocumentVectors& b, Representation r) {
  switch (r) {
    case Representation::TfIdfLocal:
      return cosine(q.local, b.local);
    case Representation::TfIdfGlobal:
      return cosine(q.global, b.global);
    case Representation::Doc2VecGlobal:
      return std::max(0.0, cosine<float>(q.embedding, b.embedding));
    default:
      return 0.0;
  }
}

ScoreVector indirect_scores(const DocumentVectors& q, std::span<const BugReport* const> history,
                            const ProjectIndex& index, Representation r) {
  const auto n = static_cast<Index>(index.file_count());
  if (r == Representation::None) return ScoreVector::Zero(n);
  if (r == Representation::TfIdfGlobalPlusDoc2VecGlobal) {
    return 0.5 *
           (min_max_normalize(indirect_scores(q, history, index, Representation::TfIdfGlobal)) +
            min_max_normalize(indirect_scores(q, history, index, Representation::Doc2VecGlobal)));
  }
  ScoreVector s = ScoreVector::Zero(n);
  const auto& project = index.project();
  for (const BugReport* past : history) {
    std::vector<std::size_t> fixed;
    for (const auto& id : past->fixed_files) {
      if (auto f = project.file_index(id)) fixed.push_back(*f);
    }
    if (fixed.empty()) continue;
    const double sim = report_similarity(q, index.represent(*past), r);
    if (sim == 0.0) continue;
    const double share = sim / static_cast<double>(fixed.size());
    for (auto f : fixed) s(static_cast<Index>(f)) += share;
  }
  return s;
}

}  // namespace

ScoreVector direct_relevancy(const BugReport& query, const ProjectIndex& index,
                             Representation representation) {
  if (representation != Representation::None) {
    // throws for representations the index lacks
    if (!index.has(representation)) {
      throw ArtifactError(fmt::format("missing model for {}", to_string(representation)));
    }
  }
  return direct_scores(index.represent(query), index, representation);
}

ScoreVector indirect_relevancy(const BugReport& query, std::span<const BugReport* const> history,
                               const ProjectIndex& index, Representation representation) {
  if (!index.has(representation)) {
    throw ArtifactError(fmt::format("missing model for {}", to_string(representation)));
  }
  if (history.empty() || representation == Representation::None) {
    return ScoreVector::Zero(static_cast<Index>(index.file_count()));
  }
  return indirect_scores(index.represent(query), history, index, representation);
}

ScoreVector fuse(const ScoreVector& direct, const ScoreVector& indirect, double w1, double w2) {
  if (direct.size() != indirect.size()) {
    throw ModelError(fmt::format("cannot fuse score maps over different file sets ({} vs {})",
                                 direct.size(), indirect.size()));
  }
  return w1 * min_max_normalize(direct) + w2 * min_max_normalize(indirect);
}

std::vector<const BugReport*> history_for(const Project& project, const BugReport& query,
                                          HistoryPolicy policy) {
  std::vector<const BugReport*> history;
  const auto position = project.bug_index(query.id);
  for (std::size_t i = 0; i < project.bug_reports.size(); ++i) {
    const auto& r = project.bug_reports[i];
    if (r.id == query.id) continue;
    if (policy == HistoryPolicy::StrictlyEarlier) {
      const bool earlier = position ? i < *position : report_precedes(r, query);
      if (!earlier) continue;
    }
    history.push_back(&r);
  }
  return history;
}

std::vector<std::string> RankedList::file_ids(const Project& project) const {
  std::vector<std::string> ids;
  ids.reserve(entries.size());
  for (const auto& e : entries) ids.push_back(project.source_files[e.file].id);
  return ids;
}

RankedList localize(const BugReport& query, const ProjectIndex& index, const MethodConfig& config,
                    std::span<const BugReport* const> history) {
  const ScoreVector direct = direct_relevancy(query, index, config.direct);
  const ScoreVector indirect = indirect_relevancy(query, history, index, config.indirect);
  const ScoreVector final_scores = fuse(direct, indirect, config.w1, config.w2);

  RankedList list;
  list.query_bug_id = query.id;
  list.method_id = config.method_id;
  list.entries.resize(index.file_count());
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    const auto k = static_cast<Index>(i);
    list.entries[i] = {i, final_scores(k), direct(k), indirect(k)};
  }
  const auto& files = index.project().source_files;
  std::sort(list.entries.begin(), list.entries.end(),
            [&](const RankedEntry& a, const RankedEntry& b) {
              if (a.final_score != b.final_score) return a.final_score > b.final_score;
              return files[a.file].path < files[b.file].path;
            });
  return list;
}

RankedList localize(const BugReport& query, const ProjectIndex& index, const MethodConfig& config,
                    HistoryPolicy policy) {
  const auto history = history_for(index.project(), query, policy);
  return localize(query, index, config, history);
}

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

}  // namespace

void write_ranked_list_header(std::ostream& out) {
  out << "bug_id,rank,file_path,final,direct,indirect\n";
}

void write_ranked_list_rows(std::ostream& out, const RankedList& list, const Project& project) {
  std::size_t rank = 1;
  for (const auto& e : list.entries) {
    out << fmt::format("{},{},{},{:.10g},{:.10g},{:.10g}\n", csv_field(list.query_bug_id), rank++,
                       csv_field(project.source_files[e.file].path), e.final_score,
                       e.direct_score, e.indirect_score);
  }
}

}  // namespace globug
