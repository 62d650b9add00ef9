#include "synthetic_benchmark.hpp"

#include "globug/preprocess.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace globug::testing {

namespace fs = std::filesystem;

namespace {

constexpr const char* kProjectNames[] = {"alpha", "beta", "gamma", "delta", "epsilon", "zeta"};

constexpr const char* kFiller[] = {
    "buffer",  "value",   "index",   "counter", "handler", "manager", "stream",  "socket",
    "parser",  "config",  "token",   "cache",   "thread",  "queue",   "render",  "layout",
    "widget",  "session", "packet",  "record",  "button",  "dialog",  "window",  "printer",
    "channel", "monitor", "filter",  "schema",  "cursor",  "matrix",  "vector",  "bitmap",
    "server",  "client",  "request", "reply",   "folder",  "memory",  "storage", "journal"};

constexpr const char* kSyllables[] = {"ka", "lo", "mi", "ru", "zo", "vi", "ta", "nu", "po",
                                      "xe", "qua", "bri", "dro", "fen", "gul", "hask"};

/// Made-up words whose stems are pairwise distinct and distinct from the
/// filler vocabulary.
class RareWords {
 public:
  explicit RareWords(std::mt19937_64& rng) : rng_(rng) {
    for (auto f : kFiller) used_.insert(stem(f));
  }

  std::string next() {
    std::uniform_int_distribution<std::size_t> pick(0, std::size(kSyllables) - 1);
    for (;;) {
      std::string w;
      for (int i = 0; i < 4; ++i) w += kSyllables[pick(rng_)];
      if (used_.insert(stem(w)).second) return w;
    }
  }

 private:
  std::mt19937_64& rng_;
  std::set<std::string> used_;
};

std::string java_file(const std::string& project, int k, const std::vector<std::string>& calls) {
  std::ostringstream out;
  out << "package org." << project << ";\n\n";
  out << "public class Component" << k << " {\n";
  out << "  public void run() {\n";
  for (const auto& c : calls) out << "    " << c << "();\n";
  out << "  }\n}\n";
  return out.str();
}

void write_bug(const fs::path& dir, const std::string& id, const std::string& summary,
               const std::string& description, const std::string& fixed, int day) {
  nlohmann::ordered_json doc;
  doc["id"] = id;
  doc["summary"] = summary;
  doc["description"] = description;
  doc["fixed_files"] = {fixed};
  doc["open_date"] = fmt::format("2020-{:02}-{:02}", 1 + day / 28, 1 + day % 28);
  write_text(dir / (id + ".json"), doc.dump(2) + "\n");
}

}  // namespace

SyntheticBenchmark write_synthetic_benchmark(const fs::path& root, const SyntheticSpec& spec) {
  if (spec.projects < 2 || spec.projects > static_cast<int>(std::size(kProjectNames))) {
    throw std::invalid_argument("synthetic benchmark needs 2..6 projects");
  }
  if (spec.files_per_project < 4 * spec.decoy_queries || spec.files_per_project < 4) {
    throw std::invalid_argument("too few files for the decoy layout");
  }

  std::mt19937_64 rng(spec.seed);
  RareWords rare(rng);
  std::uniform_int_distribution<std::size_t> filler_pick(0, std::size(kFiller) - 1);

  std::vector<std::string> decoy_terms;
  std::vector<std::string> shared_terms;
  for (int i = 0; i < spec.decoy_queries; ++i) {
    decoy_terms.push_back(rare.next());
    shared_terms.push_back(rare.next());
  }

  SyntheticBenchmark bench;
  bench.root = root;
  const int n = spec.files_per_project;
  for (int p = 0; p < spec.projects; ++p) {
    const std::string project = kProjectNames[p];
    bench.projects.push_back(project);
    const fs::path sources = root / project / "sources" / "org" / project;
    const fs::path bugs = root / project / "bugs";
    const bool home = p == 0;

    std::vector<std::vector<std::string>> calls(static_cast<std::size_t>(n));
    std::vector<std::pair<std::string, std::string>> planted(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      auto& c = calls[static_cast<std::size_t>(k)];
      auto& [r1, r2] = planted[static_cast<std::size_t>(k)];
      r1 = rare.next();
      r2 = rare.next();
      c = {r1, r2};
      for (int j = 0; j < spec.filler_per_file; ++j) c.push_back(kFiller[filler_pick(rng)]);
      if (!home) c.insert(c.end(), decoy_terms.begin(), decoy_terms.end());
    }
    if (home) {
      for (int i = 0; i < spec.decoy_queries; ++i) {
        const auto idx = [&](int block) { return static_cast<std::size_t>(block * spec.decoy_queries + i); };
        calls[idx(0)].push_back(decoy_terms[static_cast<std::size_t>(i)]);
        calls[idx(1)].push_back(shared_terms[static_cast<std::size_t>(i)]);
        calls[idx(1)].push_back(shared_terms[static_cast<std::size_t>(i)]);
        calls[idx(2)].push_back(shared_terms[static_cast<std::size_t>(i)]);
        calls[idx(3)].push_back(shared_terms[static_cast<std::size_t>(i)]);
      }
    }

    std::vector<std::string> ids;
    for (int k = 0; k < n; ++k) {
      const auto file = fmt::format("Component{}.java", k);
      write_text(sources / file, java_file(project, k, calls[static_cast<std::size_t>(k)]));
      ids.push_back(fmt::format("org/{}/{}", project, file));
    }

    // Report order differs from file order so histories mix files.
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) order[static_cast<std::size_t>(k)] = k;
    std::shuffle(order.begin(), order.end(), rng);
    int day = 0;
    for (int k : order) {
      const auto& [r1, r2] = planted[static_cast<std::size_t>(k)];
      const std::string id = fmt::format("{}-{}", project, day + 1);
      const std::string f1 = kFiller[filler_pick(rng)];
      const std::string f2 = kFiller[filler_pick(rng)];
      const std::string f3 = kFiller[filler_pick(rng)];
      write_bug(bugs, id, fmt::format("{} fails with {}", r1, f1),
                fmt::format("When the {} {} step runs, {} and {} break.", r2, r1, f2, f3),
                ids[static_cast<std::size_t>(k)], day);
      bench.queries.push_back({project, id, ids[static_cast<std::size_t>(k)], false});
      ++day;
    }
    if (home) {
      for (int i = 0; i < spec.decoy_queries; ++i) {
        const auto& d = decoy_terms[static_cast<std::size_t>(i)];
        const auto& s = shared_terms[static_cast<std::size_t>(i)];
        const std::string id = fmt::format("{}-{}", project, day + 1);
        const auto target = ids[static_cast<std::size_t>(spec.decoy_queries + i)];
        write_bug(bugs, id, fmt::format("{} {} {}", d, d, s), fmt::format("{} {}", d, s), target,
                  day);
        bench.queries.push_back({project, id, target, true});
        ++day;
      }
    }
  }
  return bench;
}

TempDir::TempDir(const std::string& prefix) {
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = fs::temp_directory_path() / fmt::format("{}-{:016x}", prefix,
                                                             (std::uint64_t{rd()} << 32) ^ rd());
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create temporary directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace globug::testing
