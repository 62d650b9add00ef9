#include "globug/pipeline.hpp"

#include "globug/error.hpp"
#include "globug/hash.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace globug {

namespace fs = std::filesystem;

namespace {

void emit(const Logger& log, std::string_view message) {
  if (log) log(message);
}

std::string safe_name(std::string_view s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '.' || c == '-' || c == '_';
    out += ok ? c : '_';
  }
  return out.empty() ? "_" : out;
}

/// Writes through a temporary file renamed into place.
template <typename Writer>
void write_atomically(const fs::path& path, Writer&& writer, bool binary = false) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, binary ? std::ios::binary : std::ios::out);
    if (!out) throw ArtifactError("cannot write " + tmp.string());
    writer(out);
    out.flush();
    if (!out) throw ArtifactError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

bool is_within(const fs::path& inner, const fs::path& outer) {
  const auto a = fs::weakly_canonical(inner);
  const auto b = fs::weakly_canonical(outer);
  auto [end, _] = std::mismatch(b.begin(), b.end(), a.begin(), a.end());
  return end == b.end();
}

}  // namespace

fs::path RunConfig::effective_cache_dir() const {
  return cache_dir.empty() ? output_dir / "cache" : cache_dir;
}

void RunConfig::validate() const {
  if (benchmark.empty() || !fs::is_directory(benchmark)) {
    throw Error("usage", fmt::format("benchmark directory not found: {}", benchmark.string()));
  }
  if (methods.empty()) throw Error("usage", "no methods requested");
  for (int m : methods) {
    if (m < 1 || m > 7) throw Error("usage", fmt::format("unknown method id {} (expected 1..7)", m));
  }
  for (const auto& [a, b] : wilcoxon_pairs) {
    if (a < 1 || a > 7 || b < 1 || b > 7) {
      throw Error("usage", fmt::format("unknown method id in pair {}:{}", a, b));
    }
  }
  if (is_within(output_dir, benchmark) || is_within(effective_cache_dir(), benchmark)) {
    throw Error("usage", "output and cache directories must lie outside the benchmark");
  }
  embedding.validate();
}

std::string_view to_string(CacheStatus status) {
  switch (status) {
    case CacheStatus::Hit:
      return "hit";
    case CacheStatus::Trained:
      return "trained";
    case CacheStatus::Retrained:
      return "retrained";
  }
  return "?";
}

std::string idf_fingerprint(std::string_view corpus, const PreprocessConfig& preprocess,
                            std::string_view held_out, IdfCounting counting) {
  return Fnv1a()
      .field("idf-v1")
      .field(corpus)
      .field(preprocess.fingerprint())
      .field(held_out)
      .field(to_string(counting))
      .hex();
}

std::string embedding_fingerprint(std::string_view corpus, const PreprocessConfig& preprocess,
                                  const EmbeddingConfig& config, std::string_view held_out,
                                  TrainingMode mode) {
  return Fnv1a()
      .field("embedding-v1")
      .field(corpus)
      .field(preprocess.fingerprint())
      .field(config.fingerprint())
      .field(held_out)
      .field(to_string(mode))
      .hex();
}

// ---------------------------------------------------------------------------

ArtifactCache::ArtifactCache(fs::path root, Logger log) : root_(std::move(root)), log_(std::move(log)) {}

fs::path ArtifactCache::idf_path(std::string_view held_out) const {
  return root_ / safe_name(held_out) / "idf.txt";
}

fs::path ArtifactCache::embedding_path(std::string_view held_out, TrainingMode mode) const {
  return root_ / safe_name(held_out) /
         (mode == TrainingMode::PvDm ? "pv_dm.bin" : "pv_dbow.bin");
}

void ArtifactCache::warn(std::string_view message) const {
  emit(log_, fmt::format("warning: {}", message));
}

std::optional<Vocabulary> ArtifactCache::load_idf(std::string_view held_out,
                                                  std::string_view fingerprint) const {
  const auto path = idf_path(held_out);
  if (!fs::exists(path)) return std::nullopt;
  try {
    std::ifstream in(path);
    std::string stored;
    auto vocab = read_vocabulary(in, &stored);
    if (stored != fingerprint) {
      warn(fmt::format("{} is stale (fingerprint {} != {})", path.string(), stored, fingerprint));
      return std::nullopt;
    }
    return vocab;
  } catch (const ArtifactError& e) {
    warn(fmt::format("{} is unreadable: {}", path.string(), e.what()));
    return std::nullopt;
  }
}

std::optional<EmbeddingModel> ArtifactCache::load_embedding(std::string_view held_out,
                                                            TrainingMode mode,
                                                            std::string_view fingerprint) const {
  const auto path = embedding_path(held_out, mode);
  if (!fs::exists(path)) return std::nullopt;
  try {
    std::ifstream in(path, std::ios::binary);
    std::string stored;
    auto model = read_embedding<float>(in, &stored);
    if (stored != fingerprint) {
      warn(fmt::format("{} is stale (fingerprint {} != {})", path.string(), stored, fingerprint));
      return std::nullopt;
    }
    return model;
  } catch (const ArtifactError& e) {
    warn(fmt::format("{} is unreadable: {}", path.string(), e.what()));
    return std::nullopt;
  }
}

Vocabulary ArtifactCache::idf(const Benchmark& benchmark, std::string_view held_out,
                              IdfCounting counting, std::string_view fingerprint,
                              CacheStatus* status) const {
  const bool existed = fs::exists(idf_path(held_out));
  if (auto cached = load_idf(held_out, fingerprint)) {
    if (status) *status = CacheStatus::Hit;
    return *std::move(cached);
  }
  auto vocab = build_global_idf(benchmark, held_out, counting);
  write_atomically(idf_path(held_out),
                   [&](std::ostream& out) { write_vocabulary(out, vocab, fingerprint); });
  if (status) *status = existed ? CacheStatus::Retrained : CacheStatus::Trained;
  return vocab;
}

EmbeddingModel ArtifactCache::embedding(const Benchmark& benchmark, std::string_view held_out,
                                        TrainingMode mode, const EmbeddingConfig& config,
                                        std::string_view fingerprint, CacheStatus* status) const {
  const auto path = embedding_path(held_out, mode);
  const bool existed = fs::exists(path);
  if (auto cached = load_embedding(held_out, mode, fingerprint)) {
    if (status) *status = CacheStatus::Hit;
    return *std::move(cached);
  }
  emit(log_, fmt::format("training {} for held-out project {}", to_string(mode), held_out));
  const auto corpus = embedding_corpus(benchmark, held_out, config.min_count);
  auto model = train<float>(corpus.documents, corpus.vocabulary, config, mode, corpus.doc_ids);
  write_atomically(
      path, [&](std::ostream& out) { write_embedding(out, model, fingerprint); }, true);
  if (status) *status = existed ? CacheStatus::Retrained : CacheStatus::Trained;
  return model;
}

EmbeddingCorpus embedding_corpus(const Benchmark& benchmark, std::string_view held_out,
                                 int min_count) {
  if (!benchmark.contains(held_out)) {
    throw CorpusError(fmt::format("unknown held-out project {}", held_out));
  }
  EmbeddingCorpus corpus;
  for (const auto& p : benchmark.projects) {
    for (const auto& f : p.source_files) {
      corpus.documents.push_back(f.tokens);
      corpus.doc_ids.push_back(p.name + "/" + f.id);
    }
  }
  corpus.vocabulary = EmbeddingVocabulary::build(corpus.documents, min_count);
  for (const auto& p : benchmark.projects) {
    if (p.name == held_out) continue;
    for (const auto& b : p.bug_reports) {
      corpus.documents.push_back(b.tokens);
      corpus.doc_ids.push_back(p.name + "#" + b.id);
    }
  }
  return corpus;
}

PreparedBenchmark prepare_benchmark(const RunConfig& config, const Logger& log) {
  PreparedBenchmark prepared;
  prepared.benchmark = load_benchmark(config.benchmark, config.load);
  for (const auto& p : prepared.benchmark.projects) {
    for (const auto& w : p.warnings) emit(log, fmt::format("warning: {}: {}", p.name, w));
  }
  for (const auto& name : config.projects) {
    if (!prepared.benchmark.contains(name)) {
      throw CorpusError(fmt::format("unknown project {}", name));
    }
  }
  preprocess_benchmark(prepared.benchmark, config.preprocess);
  prepared.fingerprint = corpus_fingerprint(prepared.benchmark);
  return prepared;
}

GlobalArtifacts GlobalModels::view(const EmbeddingConfig& config) const {
  GlobalArtifacts a;
  a.idf = idf ? &*idf : nullptr;
  a.pv_dm = pv_dm ? &*pv_dm : nullptr;
  a.pv_dbow = pv_dbow ? &*pv_dbow : nullptr;
  a.embedding = config;
  return a;
}

namespace {

std::vector<std::string> selected_projects(const RunConfig& config, const Benchmark& benchmark) {
  if (!config.projects.empty()) return config.projects;
  std::vector<std::string> names;
  for (const auto& p : benchmark.projects) names.push_back(p.name);
  return names;
}

std::vector<MethodConfig> method_configs(std::span<const int> ids) {
  std::vector<MethodConfig> out;
  for (int id : ids) out.push_back(MethodConfig::for_method(id));
  return out;
}

/// Models the given methods need for one held-out project, trained on demand.
GlobalModels models_for(const RunConfig& config, const PreparedBenchmark& prepared,
                        const ArtifactCache& cache, std::string_view held_out,
                        std::span<const MethodConfig> methods, TrainEntry* entry) {
  bool need_idf = false;
  bool need_embeddings = false;
  for (const auto& m : methods) {
    need_idf = need_idf || m.needs_global_idf();
    need_embeddings = need_embeddings || m.needs_embeddings();
  }
  GlobalModels models;
  TrainEntry scratch;
  TrainEntry& e = entry ? *entry : scratch;
  if (need_idf) {
    models.idf = cache.idf(
        prepared.benchmark, held_out, config.idf_counting,
        idf_fingerprint(prepared.fingerprint, config.preprocess, held_out, config.idf_counting),
        &e.idf);
  }
  if (need_embeddings) {
    for (auto mode : {TrainingMode::PvDm, TrainingMode::PvDbow}) {
      auto model = cache.embedding(prepared.benchmark, held_out, mode, config.embedding,
                                   embedding_fingerprint(prepared.fingerprint, config.preprocess,
                                                         config.embedding, held_out, mode),
                                   mode == TrainingMode::PvDm ? &e.pv_dm : &e.pv_dbow);
      (mode == TrainingMode::PvDm ? models.pv_dm : models.pv_dbow) = std::move(model);
    }
  }
  return models;
}

}  // namespace

std::vector<TrainEntry> train_global(const RunConfig& config, const Logger& log) {
  config.validate();
  const auto prepared = prepare_benchmark(config, log);
  const ArtifactCache cache(config.effective_cache_dir(), log);
  const auto all = method_configs(std::vector<int>{1, 2, 3, 4, 5, 6, 7});
  std::vector<TrainEntry> entries;
  for (const auto& name : selected_projects(config, prepared.benchmark)) {
    TrainEntry entry;
    entry.project = name;
    models_for(config, prepared, cache, name, all, &entry);
    emit(log, fmt::format("{}: idf {}, pv-dm {}, pv-dbow {}", name, to_string(entry.idf),
                          to_string(entry.pv_dm), to_string(entry.pv_dbow)));
    entries.push_back(std::move(entry));
  }
  return entries;
}

LocalizeOutcome localize_bug(const RunConfig& config, std::string_view project,
                             std::string_view bug_id, int method_id, const Logger& log) {
  const auto method = MethodConfig::for_method(method_id);
  config.validate();
  const auto prepared = prepare_benchmark(config, log);
  const Project* target = nullptr;
  for (const auto& p : prepared.benchmark.projects) {
    if (!project.empty() && p.name != project) continue;
    if (!p.bug_index(bug_id)) continue;
    if (target) {
      throw CorpusError(fmt::format("bug id {} is ambiguous; name the project", bug_id),
                        std::string(bug_id));
    }
    target = &p;
  }
  if (!project.empty() && !prepared.benchmark.contains(project)) {
    throw CorpusError(fmt::format("unknown project {}", project));
  }
  if (!target) throw CorpusError(fmt::format("unknown bug id {}", bug_id), std::string(bug_id));

  const ArtifactCache cache(config.effective_cache_dir(), log);
  GlobalModels models;
  if (method.needs_global_idf()) {
    models.idf = cache.load_idf(target->name,
                                idf_fingerprint(prepared.fingerprint, config.preprocess,
                                                target->name, config.idf_counting));
    if (!models.idf) {
      throw ArtifactError(fmt::format(
          "global IDF model for {} missing or stale; run train-global", target->name));
    }
  }
  if (method.needs_embeddings()) {
    for (auto mode : {TrainingMode::PvDm, TrainingMode::PvDbow}) {
      auto model = cache.load_embedding(
          target->name, mode,
          embedding_fingerprint(prepared.fingerprint, config.preprocess, config.embedding,
                                target->name, mode));
      if (!model) {
        throw ArtifactError(fmt::format("{} model for {} missing or stale; run train-global",
                                        to_string(mode), target->name));
      }
      (mode == TrainingMode::PvDm ? models.pv_dm : models.pv_dbow) = std::move(model);
    }
  }

  const std::vector<MethodConfig> methods{method};
  const ProjectIndex index(*target, models.view(config.embedding), methods);
  const auto& query = target->bug_reports[*target->bug_index(bug_id)];

  LocalizeOutcome outcome;
  outcome.project = target->name;
  outcome.ranking = localize(query, index, method, config.history);
  outcome.file_paths = outcome.ranking.file_ids(*target);
  outcome.csv = config.output_dir / "rankings" /
                fmt::format("{}_{}_m{}.csv", safe_name(target->name), safe_name(bug_id), method_id);
  write_atomically(outcome.csv, [&](std::ostream& out) {
    write_ranked_list_header(out);
    write_ranked_list_rows(out, outcome.ranking, *target);
  });
  return outcome;
}

EvaluationOutcome evaluate_benchmark(const RunConfig& config, const Logger& log) {
  config.validate();
  const auto prepared = prepare_benchmark(config, log);
  const ArtifactCache cache(config.effective_cache_dir(), log);
  const auto methods = method_configs(config.methods);

  EvaluationOutcome outcome;
  std::map<int, std::vector<QueryResult>> pooled;
  for (const auto& name : selected_projects(config, prepared.benchmark)) {
    const Project& project = prepared.benchmark.project(name);
    if (!project.has_queries()) {
      emit(log, fmt::format("{}: no queries, skipped", name));
      continue;
    }
    const auto models = models_for(config, prepared, cache, name, methods, nullptr);
    const ProjectIndex index(project, models.view(config.embedding), methods);
    for (const auto& method : methods) {
      std::vector<QueryResult> results;
      std::ostringstream rankings;
      if (config.write_rankings) write_ranked_list_header(rankings);
      for (const auto& query : project.bug_reports) {
        const auto ranking = localize(query, index, method, config.history);
        if (config.write_rankings) write_ranked_list_rows(rankings, ranking, project);
        QueryResult r;
        r.bug_id = query.id;
        r.ranked_file_ids = ranking.file_ids(project);
        r.relevant_file_ids.insert(query.fixed_files.begin(), query.fixed_files.end());
        results.push_back(std::move(r));
      }
      outcome.metrics.push_back({name, method.method_id, evaluate(results)});
      auto& all = pooled[method.method_id];
      std::move(results.begin(), results.end(), std::back_inserter(all));
      if (config.write_rankings) {
        const auto path = config.output_dir / "rankings" /
                          fmt::format("{}_m{}.csv", safe_name(name), method.method_id);
        write_atomically(path, [&](std::ostream& out) { out << rankings.str(); });
        outcome.files.push_back(path);
      }
    }
    emit(log, fmt::format("{}: {} queries evaluated", name, project.bug_reports.size()));
  }
  if (pooled.empty()) throw CorpusError("no project with queries to evaluate");

  for (const auto& method : methods) {
    outcome.metrics.push_back(
        {std::string(kAggregateProject), method.method_id, evaluate(pooled[method.method_id])});
  }

  const std::set<int> ran(config.methods.begin(), config.methods.end());
  for (const auto& [a, b] : config.wilcoxon_pairs) {
    if (!ran.contains(a) || !ran.contains(b)) continue;
    const auto* ma = &outcome.metrics.back();
    const auto* mb = ma;
    for (const auto& row : outcome.metrics) {
      if (row.project != kAggregateProject) continue;
      if (row.method_id == a) ma = &row;
      if (row.method_id == b) mb = &row;
    }
    for (const std::string metric : {"RR", "AP"}) {
      std::vector<double> xa;
      std::vector<double> xb;
      for (const auto& q : ma->metrics.per_query) {
        xa.push_back(metric == "RR" ? q.reciprocal_rank : q.average_precision);
      }
      for (const auto& q : mb->metrics.per_query) {
        xb.push_back(metric == "RR" ? q.reciprocal_rank : q.average_precision);
      }
      WilcoxonRow row{a, b, metric, std::nullopt, {}};
      try {
        row.result = wilcoxon_signed_rank(xa, xb, config.wilcoxon_method);
      } catch (const Error& e) {
        row.note = e.what();
      }
      outcome.tests.push_back(std::move(row));
    }
  }

  const auto metrics_csv = config.output_dir / "metrics.csv";
  const auto metrics_json = config.output_dir / "metrics.json";
  const auto wilcoxon_csv = config.output_dir / "wilcoxon.csv";
  write_atomically(metrics_csv, [&](std::ostream& out) { write_metrics_csv(out, outcome.metrics); });
  write_atomically(metrics_json, [&](std::ostream& out) {
    write_metrics_json(out, outcome.metrics, outcome.tests);
  });
  write_atomically(wilcoxon_csv, [&](std::ostream& out) { write_wilcoxon_csv(out, outcome.tests); });
  outcome.files.insert(outcome.files.begin(), {metrics_csv, metrics_json, wilcoxon_csv});
  return outcome;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

}  // namespace

std::vector<MetricsRow> read_metrics_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "project,method,MRR,MAP,Top1,Top5,Top10") {
    throw ArtifactError(path.string() + " is not a metrics table");
  }
  std::vector<MetricsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) {
      throw ArtifactError(fmt::format("{}:{}: expected 7 fields", path.string(), line_no));
    }
    try {
      MetricsRow row;
      row.project = f[0];
      row.method_id = std::stoi(f[1]);
      row.metrics.mrr = std::stod(f[2]);
      row.metrics.map = std::stod(f[3]);
      row.metrics.top_n[1] = std::stoul(f[4]);
      row.metrics.top_n[5] = std::stoul(f[5]);
      row.metrics.top_n[10] = std::stoul(f[6]);
      rows.push_back(std::move(row));
    } catch (const std::logic_error&) {
      throw ArtifactError(fmt::format("{}:{}: malformed number", path.string(), line_no));
    }
  }
  return rows;
}

std::vector<ImprovementRow> summarize(const fs::path& metrics_csv,
                                      std::span<const std::pair<int, int>> pairs) {
  const auto rows = read_metrics_csv(metrics_csv);
  std::map<std::pair<std::string, int>, const MetricsRow*> lookup;
  std::set<std::string> projects;
  for (const auto& r : rows) {
    lookup[{r.project, r.method_id}] = &r;
    if (r.project != kAggregateProject) projects.insert(r.project);
  }
  std::vector<ImprovementRow> out;
  for (const auto& [a, b] : pairs) {
    ImprovementRow s{a, b, 0, 0.0, 0.0};
    double mrr_sum = 0.0;
    double map_sum = 0.0;
    for (const auto& p : projects) {
      const auto ia = lookup.find({p, a});
      const auto ib = lookup.find({p, b});
      if (ia == lookup.end() || ib == lookup.end()) continue;
      const auto& ma = ia->second->metrics;
      const auto& mb = ib->second->metrics;
      if (ma.mrr <= 0.0 || ma.map <= 0.0) continue;
      mrr_sum += (mb.mrr - ma.mrr) / ma.mrr;
      map_sum += (mb.map - ma.map) / ma.map;
      ++s.projects;
    }
    if (s.projects == 0) continue;
    s.mrr_improvement = mrr_sum / static_cast<double>(s.projects);
    s.map_improvement = map_sum / static_cast<double>(s.projects);
    out.push_back(s);
  }
  const auto summary = metrics_csv.parent_path() / "summary.csv";
  write_atomically(summary, [&](std::ostream& o) { write_summary_csv(o, out); });
  return out;
}

void write_summary_csv(std::ostream& out, std::span<const ImprovementRow> rows) {
  out << "method_a,method_b,projects,MRR_improvement,MAP_improvement\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{:.6f},{:.6f}\n", r.method_a, r.method_b, r.projects,
                       r.mrr_improvement, r.map_improvement);
  }
}

}  // namespace globug
