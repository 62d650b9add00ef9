#include "globug/tfidf.hpp"

#include "globug/error.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace globug {

std::string_view to_string(Scope scope) { return scope == Scope::Local ? "local" : "global"; }

std::string_view to_string(IdfCounting counting) {
  return counting == IdfCounting::ExcludeHeldOut ? "exclude-held-out" : "include-all";
}

namespace {

// Sorted unique terms of one document.
std::vector<std::string_view> unique_terms(const TokenStream& doc) {
  std::vector<std::string_view> terms(doc.tokens.begin(), doc.tokens.end());
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  return terms;
}

}  // namespace

Vocabulary Vocabulary::build(std::span<const TokenStream> documents, Scope scope) {
  if (documents.empty()) throw ModelError("cannot build a vocabulary from zero documents");
  std::map<std::string, std::uint32_t> counts;
  for (const auto& doc : documents) {
    for (auto term : unique_terms(doc)) ++counts[std::string(term)];
  }
  std::vector<std::string> terms;
  std::vector<std::uint32_t> df;
  terms.reserve(counts.size());
  df.reserve(counts.size());
  for (auto& [term, n] : counts) {
    terms.push_back(term);
    df.push_back(n);
  }
  return from_counts(std::move(terms), std::move(df), documents.size(), scope);
}

Vocabulary Vocabulary::from_counts(std::vector<std::string> terms,
                                   std::vector<std::uint32_t> document_frequency,
                                   std::uint64_t total_documents, Scope scope,
                                   std::string held_out) {
  if (terms.size() != document_frequency.size()) {
    throw ModelError("vocabulary terms and frequencies differ in length");
  }
  if (total_documents == 0) throw ModelError("vocabulary needs at least one counted document");
  Vocabulary v;
  v.terms_ = std::move(terms);
  v.df_ = std::move(document_frequency);
  v.total_documents_ = total_documents;
  v.scope_ = scope;
  v.held_out_ = std::move(held_out);
  v.index_.reserve(v.terms_.size());
  for (std::size_t i = 0; i < v.terms_.size(); ++i) {
    if (i > 0 && !(v.terms_[i - 1] < v.terms_[i])) {
      throw ModelError("vocabulary terms must be sorted and unique");
    }
    v.df_[i] = static_cast<std::uint32_t>(
        std::clamp<std::uint64_t>(v.df_[i], 1, total_documents));
    v.index_.emplace(v.terms_[i], static_cast<TermId>(i));
  }
  return v;
}

std::optional<TermId> Vocabulary::find(std::string_view term) const {
  const auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double Vocabulary::idf(TermId id) const {
  return std::log(static_cast<double>(total_documents_) / static_cast<double>(df_[id]));
}

bool Vocabulary::operator==(const Vocabulary& other) const {
  return terms_ == other.terms_ && df_ == other.df_ &&
         total_documents_ == other.total_documents_ && scope_ == other.scope_ &&
         held_out_ == other.held_out_;
}

TfIdfVector vectorize(const TokenStream& stream, const Vocabulary& vocab,
                      std::string source_doc_id) {
  std::map<TermId, std::uint32_t> frequency;
  for (const auto& token : stream.tokens) {
    if (auto id = vocab.find(token)) ++frequency[*id];
  }
  TfIdfVector v;
  v.source_doc_id = std::move(source_doc_id);
  v.term_count = stream.tokens.size();
  v.weights.resize(static_cast<Index>(vocab.size()));
  v.weights.reserve(static_cast<Index>(frequency.size()));
  for (const auto& [id, f] : frequency) {
    const double w = (std::log(static_cast<double>(f)) + 1.0) * vocab.idf(id);
    if (w != 0.0) v.weights.insertBack(static_cast<Index>(id)) = w;
  }
  return v;
}

double cosine(const TfIdfVector& u, const TfIdfVector& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  if (u.weights.size() != v.weights.size()) {
    throw ModelError("cosine of vectors built against different vocabularies");
  }
  return std::clamp(u.weights.dot(v.weights) / (nu * nv), 0.0, 1.0);
}

LengthNormalizer LengthNormalizer::fit(std::span<const TfIdfVector> files) {
  LengthNormalizer n;
  if (files.empty()) return n;
  const auto [lo, hi] = std::minmax_element(
      files.begin(), files.end(),
      [](const TfIdfVector& a, const TfIdfVector& b) { return a.term_count < b.term_count; });
  n.min_terms = lo->term_count;
  n.max_terms = hi->term_count;
  return n;
}

double LengthNormalizer::operator()(std::size_t term_count) const {
  if (max_terms <= min_terms) return 0.0;
  const double x = (static_cast<double>(term_count) - static_cast<double>(min_terms)) /
                   static_cast<double>(max_terms - min_terms);
  return std::clamp(x, 0.0, 1.0);
}

double rvsm(const TfIdfVector& bug, const TfIdfVector& file, const LengthNormalizer& norm) {
  const double similarity = cosine(bug, file);
  if (similarity == 0.0) return 0.0;
  return logistic(norm(file.term_count)) * similarity;
}

Vocabulary build_global_idf(const Benchmark& benchmark, std::string_view held_out,
                            IdfCounting counting) {
  if (!benchmark.contains(held_out)) {
    throw CorpusError("unknown held-out project: " + std::string(held_out));
  }
  std::set<std::string> all_terms;
  std::map<std::string, std::uint32_t> counts;
  std::uint64_t docs = 0;
  for (const auto& project : benchmark.projects) {
    const bool counted = counting == IdfCounting::IncludeAll || project.name != held_out;
    for (const auto& file : project.source_files) {
      const auto terms = unique_terms(file.tokens);
      for (auto t : terms) all_terms.emplace(t);
      if (!counted) continue;
      ++docs;
      for (auto t : terms) ++counts[std::string(t)];
    }
  }
  if (docs == 0) {
    throw ModelError("global IDF for '" + std::string(held_out) +
                     "' has no source files outside the held-out project");
  }
  std::vector<std::string> terms(all_terms.begin(), all_terms.end());
  std::vector<std::uint32_t> df(terms.size(), 1);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (auto it = counts.find(terms[i]); it != counts.end()) df[i] = it->second;
  }
  return Vocabulary::from_counts(std::move(terms), std::move(df), docs, Scope::Global,
                                 std::string(held_out));
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab, std::string_view fingerprint) {
  out << "globug-idf 1\n";
  out << "scope " << to_string(vocab.scope()) << '\n';
  out << "held_out " << (vocab.held_out().empty() ? "-" : vocab.held_out()) << '\n';
  out << "docs " << vocab.total_documents() << '\n';
  out << "terms " << vocab.size() << '\n';
  out << "fingerprint " << (fingerprint.empty() ? std::string_view("-") : fingerprint) << '\n';
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out << vocab.term(static_cast<TermId>(i)) << '\t'
        << vocab.document_frequency(static_cast<TermId>(i)) << '\n';
  }
}

Vocabulary read_vocabulary(std::istream& in, std::string* fingerprint) {
  auto expect = [&](std::string_view key) {
    std::string line;
    if (!std::getline(in, line)) throw ArtifactError("truncated IDF header");
    if (line.rfind(std::string(key) + " ", 0) != 0) {
      throw ArtifactError("IDF header: expected '" + std::string(key) + "'");
    }
    return line.substr(key.size() + 1);
  };
  if (expect("globug-idf") != "1") throw ArtifactError("unsupported IDF format version");
  const std::string scope_text = expect("scope");
  if (scope_text != "local" && scope_text != "global") throw ArtifactError("bad IDF scope");
  std::string held_out = expect("held_out");
  if (held_out == "-") held_out.clear();
  std::uint64_t docs = 0;
  std::size_t count = 0;
  try {
    docs = std::stoull(expect("docs"));
    count = std::stoull(expect("terms"));
  } catch (const std::invalid_argument&) {
    throw ArtifactError("bad IDF header counts");
  }
  std::string stored = expect("fingerprint");
  if (fingerprint) *fingerprint = stored == "-" ? std::string() : stored;

  std::vector<std::string> terms;
  std::vector<std::uint32_t> df;
  terms.reserve(count);
  df.reserve(count);
  std::string line;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw ArtifactError("truncated IDF term table");
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw ArtifactError("malformed IDF term line");
    terms.push_back(line.substr(0, tab));
    try {
      df.push_back(static_cast<std::uint32_t>(std::stoul(line.substr(tab + 1))));
    } catch (const std::exception&) {
      throw ArtifactError("malformed IDF document frequency");
    }
  }
  try {
    return Vocabulary::from_counts(std::move(terms), std::move(df), docs,
                                   scope_text == "local" ? Scope::Local : Scope::Global,
                                   std::move(held_out));
  } catch (const ModelError& e) {
    throw ArtifactError(std::string("invalid IDF model: ") + e.what());
  }
}

}  // namespace globug
