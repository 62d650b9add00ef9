#ifndef GLOBUG_DOC2VEC_HPP
#define GLOBUG_DOC2VEC_HPP

// Paragraph vectors (PV-DM and PV-DBOW) trained by SGD with negative
// sampling. Models are templated on the scalar type; `EmbeddingModel` (float)
// is what the pipeline trains and stores, double is used for diagnostics.

#include "globug/doc2vec_kernels.hpp"
#include "globug/preprocess.hpp"
#include "globug/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace globug {

enum class TrainingMode { PvDm, PvDbow };

enum class Objective { NegativeSampling, FullSoftmax };

std::string_view to_string(TrainingMode mode);

struct EmbeddingConfig {
  int vector_size = 100;
  double alpha = 0.045;
  std::optional<double> min_alpha_dm;    // alpha / 2 when unset
  std::optional<double> min_alpha_dbow;  // alpha / 3 when unset
  int window = 5;
  int min_count = 2;
  int negative = 5;
  double sample = 0.0;
  bool hs = false;
  int epochs = 20;
  int infer_epochs = 0;  // 0: same as epochs
  std::uint64_t seed = 1;

  double min_alpha(TrainingMode mode) const;
  int inference_epochs() const { return infer_epochs > 0 ? infer_epochs : epochs; }

  /// Throws ModelError when an invariant is violated or hs is requested.
  void validate() const;

  std::string fingerprint() const;
};

/// Word index of the embedding model. Indices follow descending frequency,
/// ties broken by term.
class EmbeddingVocabulary {
 public:
  static EmbeddingVocabulary build(std::span<const TokenStream> documents, int min_count);
  static EmbeddingVocabulary from_counts(std::vector<std::string> terms,
                                         std::vector<std::uint64_t> counts);

  std::optional<Index> find(std::string_view term) const;
  const std::string& term(Index i) const { return terms_[static_cast<std::size_t>(i)]; }
  std::uint64_t count(Index i) const { return counts_[static_cast<std::size_t>(i)]; }
  Index size() const noexcept { return static_cast<Index>(terms_.size()); }
  std::uint64_t total_count() const noexcept { return total_; }

  /// Word indices of the in-vocabulary tokens, in order.
  std::vector<Index> encode(const TokenStream& stream) const;

  bool operator==(const EmbeddingVocabulary& other) const {
    return terms_ == other.terms_ && counts_ == other.counts_;
  }

 private:
  std::vector<std::string> terms_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, Index> index_;
  std::uint64_t total_ = 0;
};

template <typename Scalar>
struct BasicEmbeddingModel {
  TrainingMode mode = TrainingMode::PvDm;
  EmbeddingConfig config;
  EmbeddingVocabulary vocabulary;
  RowMatrix<Scalar> words;   // V x d, context inputs (PV-DM)
  RowMatrix<Scalar> docs;    // N x d, one row per training document
  RowMatrix<Scalar> output;  // V x d, U
  Vector<Scalar> bias;       // V, b
  std::vector<std::string> doc_ids;

  Index dimension() const noexcept { return words.cols(); }
};

using EmbeddingModel = BasicEmbeddingModel<float>;

template <typename Scalar>
struct BasicDocVector {
  Vector<Scalar> values;
  std::string source_doc_id;
  /// Set when no token of the input was in the vocabulary.
  bool out_of_vocabulary = false;
};

using DocVector = BasicDocVector<float>;

/// Linear decay from `start` to `end` across `steps` updates; the last step
/// uses exactly `end`.
struct LearningRateSchedule {
  double start = 0.0;
  double end = 0.0;
  std::uint64_t steps = 1;

  double at(std::uint64_t step) const {
    if (steps <= 1) return start;
    if (step + 1 >= steps) return end;
    const double progress = static_cast<double>(step) / static_cast<double>(steps - 1);
    return start - (start - end) * progress;
  }
};

struct TrainingReport {
  std::vector<double> epoch_loss;  // mean negative-sampling loss per update
  double first_alpha = 0.0;
  double last_alpha = 0.0;
  std::uint64_t updates = 0;
};

/// Trains on `documents` with a prebuilt vocabulary. Documents become rows of
/// `docs` in order. Single-threaded and bitwise deterministic for a seed.
template <typename Scalar>
BasicEmbeddingModel<Scalar> train(std::span<const TokenStream> documents,
                                  const EmbeddingVocabulary& vocabulary,
                                  const EmbeddingConfig& config, TrainingMode mode,
                                  std::span<const std::string> doc_ids = {},
                                  TrainingReport* report = nullptr);

/// Same, with the vocabulary built from `documents` at config.min_count.
template <typename Scalar>
BasicEmbeddingModel<Scalar> train(std::span<const TokenStream> documents,
                                  const EmbeddingConfig& config, TrainingMode mode,
                                  TrainingReport* report = nullptr);

/// Fits a fresh document vector with the model's word and output weights
/// frozen. The RNG stream depends on config.seed and the token sequence only.
template <typename Scalar>
BasicDocVector<Scalar> infer_vector(const TokenStream& stream,
                                    const BasicEmbeddingModel<Scalar>& model,
                                    const EmbeddingConfig& config);

/// Concatenation [PV-DM ; PV-DBOW] of both inferred vectors.
template <typename Scalar>
BasicDocVector<Scalar> combined_vector(const TokenStream& stream,
                                       const BasicEmbeddingModel<Scalar>& dm_model,
                                       const BasicEmbeddingModel<Scalar>& dbow_model,
                                       const EmbeddingConfig& config);

/// Dense cosine; 0 when either vector is zero.
template <typename Scalar>
double cosine(const Vector<Scalar>& a, const Vector<Scalar>& b) {
  const double na = static_cast<double>(a.norm());
  const double nb = static_cast<double>(b.norm());
  if (na == 0.0 || nb == 0.0) return 0.0;
  return static_cast<double>(a.dot(b)) / (na * nb);
}

// ---------------------------------------------------------------------------
// Diagnostics: a single prediction and its exact dense gradient.

/// Predict `target` from document `doc` (plus `context` words for PV-DM).
/// `negatives` is used by the negative-sampling objective only.
struct TrainingExample {
  Index doc = 0;
  std::vector<Index> context;
  Index target = 0;
  std::vector<Index> negatives;
};

template <typename Scalar>
struct ModelGradient {
  RowMatrix<Scalar> words;
  RowMatrix<Scalar> docs;
  RowMatrix<Scalar> output;
  Vector<Scalar> bias;
};

/// h of the model for this example (mean of doc and context rows for PV-DM).
template <typename Scalar>
Vector<Scalar> hidden_layer(const BasicEmbeddingModel<Scalar>& model,
                            const TrainingExample& example);

template <typename Scalar>
Scalar example_loss(const BasicEmbeddingModel<Scalar>& model, const TrainingExample& example,
                    Objective objective);

/// Loss plus the gradient with respect to every parameter.
template <typename Scalar>
Scalar example_gradient(const BasicEmbeddingModel<Scalar>& model, const TrainingExample& example,
                        Objective objective, ModelGradient<Scalar>& gradient);

/// One negative-sampling SGD update for `example`, in place, exactly as the
/// trainer performs it. Returns the loss before the update.
template <typename Scalar>
Scalar apply_sgd_step(BasicEmbeddingModel<Scalar>& model, const TrainingExample& example,
                      Scalar learning_rate);

/// Mean full-softmax loss over every position of every document, with the
/// full (unshrunk) context window. Deterministic.
template <typename Scalar>
double corpus_loss(const BasicEmbeddingModel<Scalar>& model, std::span<const TokenStream> documents);

// ---------------------------------------------------------------------------
// Serialization. Binary, native little-endian:
//   magic "GLBD2V01", u8 mode, u8 sizeof(Scalar), u64 d, u64 V, u64 N,
//   string config-fingerprint, string artifact-fingerprint,
//   config fields, V x (string term, u64 count), N x string doc id,
//   words, docs, output (row-major), bias.
// Strings are u32 length + bytes.

template <typename Scalar>
void write_embedding(std::ostream& out, const BasicEmbeddingModel<Scalar>& model,
                     std::string_view fingerprint = {});

/// Throws ArtifactError on malformed or truncated input.
template <typename Scalar>
BasicEmbeddingModel<Scalar> read_embedding(std::istream& in, std::string* fingerprint = nullptr);

}  // namespace globug

#endif  // GLOBUG_DOC2VEC_HPP
