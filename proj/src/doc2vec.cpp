#include "globug/doc2vec.hpp"

#include "globug/error.hpp"
#include "globug/hash.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <random>

namespace globug {

std::string_view to_string(TrainingMode mode) {
  return mode == TrainingMode::PvDm ? "pv-dm" : "pv-dbow";
}

double EmbeddingConfig::min_alpha(TrainingMode mode) const {
  if (mode == TrainingMode::PvDm) return min_alpha_dm.value_or(alpha / 2.0);
  return min_alpha_dbow.value_or(alpha / 3.0);
}

void EmbeddingConfig::validate() const {
  if (vector_size < 1) throw ModelError("vector_size must be >= 1");
  if (!(alpha > 0.0)) throw ModelError("alpha must be positive");
  for (auto mode : {TrainingMode::PvDm, TrainingMode::PvDbow}) {
    const double m = min_alpha(mode);
    if (!(m > 0.0) || m > alpha) {
      throw ModelError(fmt::format("min_alpha for {} must lie in (0, alpha]", to_string(mode)));
    }
  }
  if (window < 1) throw ModelError("window must be >= 1");
  if (negative < 0) throw ModelError("negative must be >= 0");
  if (min_count < 1) throw ModelError("min_count must be >= 1");
  if (sample < 0.0) throw ModelError("sample must be >= 0");
  if (epochs < 1) throw ModelError("epochs must be >= 1");
  if (infer_epochs < 0) throw ModelError("infer_epochs must be >= 0");
  if (hs) throw ModelError("hierarchical softmax is not supported; use negative sampling");
}

std::string EmbeddingConfig::fingerprint() const {
  return Fnv1a()
      .field(fmt::format("d={};alpha={:.17g};dm_min={:.17g};dbow_min={:.17g};window={};"
                         "min_count={};negative={};sample={:.17g};hs={};epochs={};infer={};"
                         "seed={}",
                         vector_size, alpha, min_alpha(TrainingMode::PvDm),
                         min_alpha(TrainingMode::PvDbow), window, min_count, negative, sample,
                         hs ? 1 : 0, epochs, inference_epochs(), seed))
      .hex();
}

EmbeddingVocabulary EmbeddingVocabulary::build(std::span<const TokenStream> documents,
                                               int min_count) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& doc : documents) {
    for (const auto& t : doc.tokens) ++counts[t];
  }
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [term, n] : counts) {
    if (n >= static_cast<std::uint64_t>(min_count)) kept.emplace_back(term, n);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> terms;
  std::vector<std::uint64_t> freq;
  for (auto& [term, n] : kept) {
    terms.push_back(term);
    freq.push_back(n);
  }
  return from_counts(std::move(terms), std::move(freq));
}

EmbeddingVocabulary EmbeddingVocabulary::from_counts(std::vector<std::string> terms,
                                                     std::vector<std::uint64_t> counts) {
  if (terms.size() != counts.size()) throw ModelError("vocabulary terms/counts length mismatch");
  EmbeddingVocabulary v;
  v.terms_ = std::move(terms);
  v.counts_ = std::move(counts);
  for (std::size_t i = 0; i < v.terms_.size(); ++i) {
    if (!v.index_.emplace(v.terms_[i], static_cast<Index>(i)).second) {
      throw ModelError("duplicate vocabulary term: " + v.terms_[i]);
    }
    v.total_ += v.counts_[i];
  }
  return v;
}

std::optional<Index> EmbeddingVocabulary::find(std::string_view term) const {
  const auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<Index> EmbeddingVocabulary::encode(const TokenStream& stream) const {
  std::vector<Index> out;
  out.reserve(stream.tokens.size());
  for (const auto& t : stream.tokens) {
    if (auto i = find(t)) out.push_back(*i);
  }
  return out;
}

namespace {

template <typename Scalar>
struct Workspace {
  Vector<Scalar> h;
  Vector<Scalar> grad_h;
  std::vector<Scalar> coefficients;
  std::vector<OutputTarget<Scalar>> targets;
  std::vector<Index> context;
};

// One negative-sampling SGD update. Reads parameters from `model`; writes the
// shared weights through `shared` when non-null (training) and always updates
// `doc`. Returns the example loss before the update.
template <typename Scalar>
Scalar sgd_update(const BasicEmbeddingModel<Scalar>& model, BasicEmbeddingModel<Scalar>* shared,
                  Vector<Scalar>& doc, std::span<const Index> context,
                  std::span<const OutputTarget<Scalar>> targets, Scalar lr, Workspace<Scalar>& ws) {
  const bool dm = model.mode == TrainingMode::PvDm;
  ws.h = doc;
  if (dm) {
    for (Index c : context) ws.h.noalias() += model.words.row(c).transpose();
  }
  const Scalar scale = dm ? Scalar(1) / static_cast<Scalar>(1 + context.size()) : Scalar(1);
  ws.h *= scale;
  ws.grad_h.setZero(ws.h.size());

  const Scalar loss = negative_sampling_gradient<Scalar>(ws.h, model.output, model.bias, targets,
                                                         ws.grad_h, ws.coefficients);
  if (shared != nullptr) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const Scalar step = lr * ws.coefficients[i];
      shared->output.row(targets[i].row).noalias() -= step * ws.h.transpose();
      shared->bias(targets[i].row) -= step;
    }
  }
  ws.grad_h *= scale * lr;
  doc -= ws.grad_h;
  if (shared != nullptr && dm) {
    for (Index c : context) shared->words.row(c).noalias() -= ws.grad_h.transpose();
  }
  return loss;
}

template <typename Scalar>
class Sampler {
 public:
  Sampler(const EmbeddingVocabulary& vocab, const EmbeddingConfig& config, std::uint64_t seed)
      : rng_(seed), config_(config) {
    cdf_.reserve(static_cast<std::size_t>(vocab.size()));
    double acc = 0.0;
    for (Index i = 0; i < vocab.size(); ++i) {
      acc += std::pow(static_cast<double>(vocab.count(i)), 0.75);
      cdf_.push_back(acc);
    }
    if (config.sample > 0.0) {
      const double threshold = config.sample * static_cast<double>(vocab.total_count());
      keep_.reserve(cdf_.size());
      for (Index i = 0; i < vocab.size(); ++i) {
        const double f = static_cast<double>(vocab.count(i));
        keep_.push_back(std::min(1.0, (std::sqrt(f / threshold) + 1.0) * threshold / f));
      }
    }
  }

  std::mt19937_64& rng() { return rng_; }

  Scalar uniform(Scalar lo, Scalar hi) {
    return static_cast<Scalar>(std::uniform_real_distribution<double>(lo, hi)(rng_));
  }

  Index noise_word() {
    const double u = std::uniform_real_distribution<double>(0.0, cdf_.back())(rng_);
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<Index>(std::min<std::ptrdiff_t>(it - cdf_.begin(),
                                                       static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
  }

  int window_shrink() {
    return std::uniform_int_distribution<int>(0, config_.window - 1)(rng_);
  }

  std::vector<Index> subsample(const std::vector<Index>& words) {
    if (keep_.empty()) return words;
    std::vector<Index> out;
    out.reserve(words.size());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Index w : words) {
      if (u(rng_) < keep_[static_cast<std::size_t>(w)]) out.push_back(w);
    }
    return out;
  }

  void fill_targets(Index target, std::vector<OutputTarget<Scalar>>& targets) {
    targets.clear();
    targets.push_back({target, Scalar(1)});
    for (int k = 0; k < config_.negative; ++k) {
      const Index noise = noise_word();
      if (noise != target) targets.push_back({noise, Scalar(0)});
    }
  }

 private:
  std::mt19937_64 rng_;
  const EmbeddingConfig& config_;
  std::vector<double> cdf_;
  std::vector<double> keep_;
};

// Runs every position of one document once. Returns summed loss.
template <typename Scalar>
double document_pass(const BasicEmbeddingModel<Scalar>& model, BasicEmbeddingModel<Scalar>* shared,
                     Vector<Scalar>& doc, const std::vector<Index>& encoded, Scalar lr,
                     Sampler<Scalar>& sampler, Workspace<Scalar>& ws, std::uint64_t& updates) {
  const std::vector<Index> sentence = sampler.subsample(encoded);
  const auto n = static_cast<std::ptrdiff_t>(sentence.size());
  const bool dm = model.mode == TrainingMode::PvDm;
  double loss = 0.0;
  for (std::ptrdiff_t pos = 0; pos < n; ++pos) {
    ws.context.clear();
    if (dm) {
      const std::ptrdiff_t reach = model.config.window - sampler.window_shrink();
      for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, pos - reach);
           j <= std::min(n - 1, pos + reach); ++j) {
        if (j != pos) ws.context.push_back(sentence[static_cast<std::size_t>(j)]);
      }
    }
    sampler.fill_targets(sentence[static_cast<std::size_t>(pos)], ws.targets);
    loss += static_cast<double>(sgd_update<Scalar>(model, shared, doc, ws.context, ws.targets, lr, ws));
    ++updates;
  }
  return loss;
}

std::uint64_t mix_seed(std::uint64_t seed, const TokenStream& stream) {
  Fnv1a h;
  h.field(std::to_string(seed));
  for (const auto& t : stream.tokens) h.field(t);
  return h.digest();
}

}  // namespace

template <typename Scalar>
BasicEmbeddingModel<Scalar> train(std::span<const TokenStream> documents,
                                  const EmbeddingVocabulary& vocabulary,
                                  const EmbeddingConfig& config, TrainingMode mode,
                                  std::span<const std::string> doc_ids, TrainingReport* report) {
  config.validate();
  if (documents.size() < 2) throw ModelError("paragraph-vector training needs >= 2 documents");
  if (vocabulary.size() == 0) throw ModelError("embedding vocabulary is empty after filtering");
  if (!doc_ids.empty() && doc_ids.size() != documents.size()) {
    throw ModelError("doc_ids and documents differ in length");
  }

  const Index d = config.vector_size;
  const Index V = vocabulary.size();
  const auto N = static_cast<Index>(documents.size());

  BasicEmbeddingModel<Scalar> model;
  model.mode = mode;
  model.config = config;
  model.vocabulary = vocabulary;
  model.words.resize(V, d);
  model.docs.resize(N, d);
  model.output = RowMatrix<Scalar>::Zero(V, d);
  model.bias = Vector<Scalar>::Zero(V);
  if (doc_ids.empty()) {
    for (Index i = 0; i < N; ++i) model.doc_ids.push_back(std::to_string(i));
  } else {
    model.doc_ids.assign(doc_ids.begin(), doc_ids.end());
  }

  Sampler<Scalar> sampler(vocabulary, config, config.seed);
  const Scalar radius = Scalar(0.5) / static_cast<Scalar>(d);
  for (Index i = 0; i < V; ++i) {
    for (Index j = 0; j < d; ++j) model.words(i, j) = sampler.uniform(-radius, radius);
  }
  for (Index i = 0; i < N; ++i) {
    for (Index j = 0; j < d; ++j) model.docs(i, j) = sampler.uniform(-radius, radius);
  }

  std::vector<std::vector<Index>> encoded;
  encoded.reserve(documents.size());
  for (const auto& doc : documents) encoded.push_back(vocabulary.encode(doc));

  const LearningRateSchedule schedule{
      config.alpha, config.min_alpha(mode),
      static_cast<std::uint64_t>(config.epochs) * static_cast<std::uint64_t>(N)};
  TrainingReport local;
  local.first_alpha = schedule.at(0);
  Workspace<Scalar> ws;
  Vector<Scalar> doc(d);
  std::uint64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double loss = 0.0;
    std::uint64_t updates = 0;
    for (Index i = 0; i < N; ++i, ++step) {
      const double lr = schedule.at(step);
      local.last_alpha = lr;
      doc = model.docs.row(i).transpose();
      loss += document_pass<Scalar>(model, &model, doc, encoded[static_cast<std::size_t>(i)],
                                    static_cast<Scalar>(lr), sampler, ws, updates);
      model.docs.row(i) = doc.transpose();
    }
    const double mean = updates > 0 ? loss / static_cast<double>(updates) : 0.0;
    if (!std::isfinite(mean)) {
      throw ModelError(fmt::format("non-finite training loss at epoch {}", epoch));
    }
    local.epoch_loss.push_back(mean);
    local.updates += updates;
  }
  if (report != nullptr) *report = std::move(local);
  return model;
}

template <typename Scalar>
BasicEmbeddingModel<Scalar> train(std::span<const TokenStream> documents,
                                  const EmbeddingConfig& config, TrainingMode mode,
                                  TrainingReport* report) {
  const auto vocabulary = EmbeddingVocabulary::build(documents, config.min_count);
  return train<Scalar>(documents, vocabulary, config, mode, {}, report);
}

template <typename Scalar>
BasicDocVector<Scalar> infer_vector(const TokenStream& stream,
                                    const BasicEmbeddingModel<Scalar>& model,
                                    const EmbeddingConfig& config) {
  const Index d = model.dimension();
  BasicDocVector<Scalar> result;
  const std::vector<Index> encoded = model.vocabulary.encode(stream);
  if (encoded.empty()) {
    result.values = Vector<Scalar>::Zero(d);
    result.out_of_vocabulary = true;
    return result;
  }

  Sampler<Scalar> sampler(model.vocabulary, config, mix_seed(config.seed, stream));
  const Scalar radius = Scalar(0.5) / static_cast<Scalar>(d);
  result.values.resize(d);
  for (Index j = 0; j < d; ++j) result.values(j) = sampler.uniform(-radius, radius);

  const int epochs = config.inference_epochs();
  const LearningRateSchedule schedule{config.alpha, config.min_alpha(model.mode),
                                      static_cast<std::uint64_t>(epochs)};
  Workspace<Scalar> ws;
  std::uint64_t updates = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    document_pass<Scalar>(model, nullptr, result.values, encoded,
                          static_cast<Scalar>(schedule.at(static_cast<std::uint64_t>(epoch))),
                          sampler, ws, updates);
  }
  return result;
}

template <typename Scalar>
BasicDocVector<Scalar> combined_vector(const TokenStream& stream,
                                       const BasicEmbeddingModel<Scalar>& dm_model,
                                       const BasicEmbeddingModel<Scalar>& dbow_model,
                                       const EmbeddingConfig& config) {
  if (dm_model.dimension() != dbow_model.dimension()) {
    throw ModelError(fmt::format("PV-DM and PV-DBOW dimensions differ ({} vs {})",
                                 dm_model.dimension(), dbow_model.dimension()));
  }
  const auto dm = infer_vector(stream, dm_model, config);
  const auto dbow = infer_vector(stream, dbow_model, config);
  BasicDocVector<Scalar> out;
  out.values.resize(dm.values.size() + dbow.values.size());
  out.values << dm.values, dbow.values;
  out.out_of_vocabulary = dm.out_of_vocabulary && dbow.out_of_vocabulary;
  return out;
}

template <typename Scalar>
Vector<Scalar> hidden_layer(const BasicEmbeddingModel<Scalar>& model,
                            const TrainingExample& example) {
  Vector<Scalar> h = model.docs.row(example.doc).transpose();
  if (model.mode == TrainingMode::PvDbow) return h;
  for (Index c : example.context) h.noalias() += model.words.row(c).transpose();
  h /= static_cast<Scalar>(1 + example.context.size());
  return h;
}

template <typename Scalar>
Scalar example_loss(const BasicEmbeddingModel<Scalar>& model, const TrainingExample& example,
                    Objective objective) {
  const Vector<Scalar> h = hidden_layer(model, example);
  Vector<Scalar> grad_h = Vector<Scalar>::Zero(h.size());
  std::vector<Scalar> coefficients;
  if (objective == Objective::FullSoftmax) {
    return softmax_gradient<Scalar>(h, model.output, model.bias, example.target, grad_h,
                                    coefficients);
  }
  std::vector<OutputTarget<Scalar>> targets{{example.target, Scalar(1)}};
  for (Index n : example.negatives) targets.push_back({n, Scalar(0)});
  return negative_sampling_gradient<Scalar>(h, model.output, model.bias, targets, grad_h,
                                            coefficients);
}

template <typename Scalar>
Scalar example_gradient(const BasicEmbeddingModel<Scalar>& model, const TrainingExample& example,
                        Objective objective, ModelGradient<Scalar>& gradient) {
  gradient.words = RowMatrix<Scalar>::Zero(model.words.rows(), model.words.cols());
  gradient.docs = RowMatrix<Scalar>::Zero(model.docs.rows(), model.docs.cols());
  gradient.output = RowMatrix<Scalar>::Zero(model.output.rows(), model.output.cols());
  gradient.bias = Vector<Scalar>::Zero(model.bias.size());

  const Vector<Scalar> h = hidden_layer(model, example);
  Vector<Scalar> grad_h = Vector<Scalar>::Zero(h.size());
  std::vector<Scalar> coefficients;
  Scalar loss;
  if (objective == Objective::FullSoftmax) {
    loss = softmax_gradient<Scalar>(h, model.output, model.bias, example.target, grad_h,
                                    coefficients);
    for (Index r = 0; r < model.output.rows(); ++r) {
      gradient.output.row(r) = coefficients[static_cast<std::size_t>(r)] * h.transpose();
      gradient.bias(r) = coefficients[static_cast<std::size_t>(r)];
    }
  } else {
    std::vector<OutputTarget<Scalar>> targets{{example.target, Scalar(1)}};
    for (Index n : example.negatives) targets.push_back({n, Scalar(0)});
    loss = negative_sampling_gradient<Scalar>(h, model.output, model.bias, targets, grad_h,
                                              coefficients);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      gradient.output.row(targets[i].row) += coefficients[i] * h.transpose();
      gradient.bias(targets[i].row) += coefficients[i];
    }
  }

  const bool dm = model.mode == TrainingMode::PvDm;
  const Scalar scale = dm ? Scalar(1) / static_cast<Scalar>(1 + example.context.size()) : Scalar(1);
  gradient.docs.row(example.doc) += scale * grad_h.transpose();
  if (dm) {
    for (Index c : example.context) gradient.words.row(c) += scale * grad_h.transpose();
  }
  return loss;
}

template <typename Scalar>
Scalar apply_sgd_step(BasicEmbeddingModel<Scalar>& model, const TrainingExample& example,
                      Scalar learning_rate) {
  std::vector<OutputTarget<Scalar>> targets{{example.target, Scalar(1)}};
  for (Index n : example.negatives) targets.push_back({n, Scalar(0)});
  Workspace<Scalar> ws;
  Vector<Scalar> doc = model.docs.row(example.doc).transpose();
  const Scalar loss =
      sgd_update<Scalar>(model, &model, doc, example.context, targets, learning_rate, ws);
  model.docs.row(example.doc) = doc.transpose();
  return loss;
}

template <typename Scalar>
double corpus_loss(const BasicEmbeddingModel<Scalar>& model,
                   std::span<const TokenStream> documents) {
  double total = 0.0;
  std::uint64_t count = 0;
  const auto rows = static_cast<std::size_t>(model.docs.rows());
  for (std::size_t i = 0; i < documents.size() && i < rows; ++i) {
    const auto encoded = model.vocabulary.encode(documents[i]);
    const auto n = static_cast<std::ptrdiff_t>(encoded.size());
    for (std::ptrdiff_t pos = 0; pos < n; ++pos) {
      TrainingExample ex;
      ex.doc = static_cast<Index>(i);
      ex.target = encoded[static_cast<std::size_t>(pos)];
      if (model.mode == TrainingMode::PvDm) {
        const std::ptrdiff_t reach = model.config.window;
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, pos - reach);
             j <= std::min(n - 1, pos + reach); ++j) {
          if (j != pos) ex.context.push_back(encoded[static_cast<std::size_t>(j)]);
        }
      }
      total += static_cast<double>(example_loss(model, ex, Objective::FullSoftmax));
      ++count;
    }
  }
  return count > 0 ? total / static_cast<double>(count) : 0.0;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[8] = {'G', 'L', 'B', 'D', '2', 'V', '0', '1'};

template <typename T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void put_string(std::ostream& out, std::string_view s) {
  put(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw ArtifactError("truncated embedding model");
  }
  return value;
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  if (n > (1u << 24)) throw ArtifactError("corrupt string length in embedding model");
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw ArtifactError("truncated embedding model");
  return s;
}

template <typename Scalar>
void put_matrix(std::ostream& out, const RowMatrix<Scalar>& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(Scalar) * static_cast<std::size_t>(m.size())));
}

template <typename Derived>
void get_block(std::istream& in, Eigen::PlainObjectBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (!in.read(reinterpret_cast<char*>(m.data()),
               static_cast<std::streamsize>(sizeof(Scalar) * static_cast<std::size_t>(m.size())))) {
    throw ArtifactError("truncated embedding matrices");
  }
  if (!m.allFinite()) throw ArtifactError("embedding model contains non-finite values");
}

}  // namespace

template <typename Scalar>
void write_embedding(std::ostream& out, const BasicEmbeddingModel<Scalar>& model,
                     std::string_view fingerprint) {
  const auto& c = model.config;
  out.write(kMagic, sizeof kMagic);
  put(out, static_cast<std::uint8_t>(model.mode == TrainingMode::PvDm ? 0 : 1));
  put(out, static_cast<std::uint8_t>(sizeof(Scalar)));
  put(out, static_cast<std::uint64_t>(model.dimension()));
  put(out, static_cast<std::uint64_t>(model.vocabulary.size()));
  put(out, static_cast<std::uint64_t>(model.docs.rows()));
  put_string(out, c.fingerprint());
  put_string(out, fingerprint);

  put(out, static_cast<std::int32_t>(c.vector_size));
  put(out, c.alpha);
  put(out, c.min_alpha(TrainingMode::PvDm));
  put(out, c.min_alpha(TrainingMode::PvDbow));
  put(out, static_cast<std::int32_t>(c.window));
  put(out, static_cast<std::int32_t>(c.min_count));
  put(out, static_cast<std::int32_t>(c.negative));
  put(out, c.sample);
  put(out, static_cast<std::int32_t>(c.epochs));
  put(out, static_cast<std::int32_t>(c.infer_epochs));
  put(out, c.seed);

  for (Index i = 0; i < model.vocabulary.size(); ++i) {
    put_string(out, model.vocabulary.term(i));
    put(out, model.vocabulary.count(i));
  }
  for (const auto& id : model.doc_ids) put_string(out, id);
  put_matrix(out, model.words);
  put_matrix(out, model.docs);
  put_matrix(out, model.output);
  out.write(reinterpret_cast<const char*>(model.bias.data()),
            static_cast<std::streamsize>(sizeof(Scalar) * static_cast<std::size_t>(model.bias.size())));
  if (!out) throw ArtifactError("failed writing embedding model");
}

template <typename Scalar>
BasicEmbeddingModel<Scalar> read_embedding(std::istream& in, std::string* fingerprint) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw ArtifactError("not a globug embedding model");
  }
  BasicEmbeddingModel<Scalar> model;
  const auto mode = get<std::uint8_t>(in);
  if (mode > 1) throw ArtifactError("unknown embedding mode");
  model.mode = mode == 0 ? TrainingMode::PvDm : TrainingMode::PvDbow;
  if (get<std::uint8_t>(in) != sizeof(Scalar)) throw ArtifactError("embedding scalar type mismatch");
  const auto d = get<std::uint64_t>(in);
  const auto V = get<std::uint64_t>(in);
  const auto N = get<std::uint64_t>(in);
  if (d == 0 || d > 100000 || V > (1ull << 32) || N > (1ull << 32)) {
    throw ArtifactError("implausible embedding model dimensions");
  }
  const std::string config_hash = get_string(in);
  std::string stored = get_string(in);
  if (fingerprint) *fingerprint = stored;

  auto& c = model.config;
  c.vector_size = get<std::int32_t>(in);
  c.alpha = get<double>(in);
  c.min_alpha_dm = get<double>(in);
  c.min_alpha_dbow = get<double>(in);
  c.window = get<std::int32_t>(in);
  c.min_count = get<std::int32_t>(in);
  c.negative = get<std::int32_t>(in);
  c.sample = get<double>(in);
  c.epochs = get<std::int32_t>(in);
  c.infer_epochs = get<std::int32_t>(in);
  c.seed = get<std::uint64_t>(in);
  if (c.fingerprint() != config_hash || static_cast<std::uint64_t>(c.vector_size) != d) {
    throw ArtifactError("embedding config hash mismatch");
  }

  std::vector<std::string> terms;
  std::vector<std::uint64_t> counts;
  terms.reserve(V);
  counts.reserve(V);
  for (std::uint64_t i = 0; i < V; ++i) {
    terms.push_back(get_string(in));
    counts.push_back(get<std::uint64_t>(in));
  }
  try {
    model.vocabulary = EmbeddingVocabulary::from_counts(std::move(terms), std::move(counts));
  } catch (const ModelError& e) {
    throw ArtifactError(std::string("corrupt embedding vocabulary: ") + e.what());
  }
  for (std::uint64_t i = 0; i < N; ++i) model.doc_ids.push_back(get_string(in));

  const auto di = static_cast<Index>(d);
  model.words.resize(static_cast<Index>(V), di);
  model.docs.resize(static_cast<Index>(N), di);
  model.output.resize(static_cast<Index>(V), di);
  model.bias.resize(static_cast<Index>(V));
  get_block(in, model.words);
  get_block(in, model.docs);
  get_block(in, model.output);
  get_block(in, model.bias);
  return model;
}

#define GLOBUG_INSTANTIATE_DOC2VEC(S)                                                             \
  template BasicEmbeddingModel<S> train<S>(std::span<const TokenStream>,                          \
                                           const EmbeddingVocabulary&, const EmbeddingConfig&,    \
                                           TrainingMode, std::span<const std::string>,            \
                                           TrainingReport*);                                      \
  template BasicEmbeddingModel<S> train<S>(std::span<const TokenStream>, const EmbeddingConfig&,  \
                                           TrainingMode, TrainingReport*);                        \
  template BasicDocVector<S> infer_vector<S>(const TokenStream&, const BasicEmbeddingModel<S>&,   \
                                             const EmbeddingConfig&);                             \
  template BasicDocVector<S> combined_vector<S>(const TokenStream&, const BasicEmbeddingModel<S>&, \
                                                const BasicEmbeddingModel<S>&,                    \
                                                const EmbeddingConfig&);                          \
  template Vector<S> hidden_layer<S>(const BasicEmbeddingModel<S>&, const TrainingExample&);      \
  template S example_loss<S>(const BasicEmbeddingModel<S>&, const TrainingExample&, Objective);   \
  template S example_gradient<S>(const BasicEmbeddingModel<S>&, const TrainingExample&,           \
                                 Objective, ModelGradient<S>&);                                   \
  template S apply_sgd_step<S>(BasicEmbeddingModel<S>&, const TrainingExample&, S);          \
  template double corpus_loss<S>(const BasicEmbeddingModel<S>&, std::span<const TokenStream>);    \
  template void write_embedding<S>(std::ostream&, const BasicEmbeddingModel<S>&,                  \
                                   std::string_view);                                             \
  template BasicEmbeddingModel<S> read_embedding<S>(std::istream&, std::string*);

GLOBUG_INSTANTIATE_DOC2VEC(float)
GLOBUG_INSTANTIATE_DOC2VEC(double)

#undef GLOBUG_INSTANTIATE_DOC2VEC

}  // namespace globug
