#include "globug/corpus.hpp"

#include "globug/error.hpp"
#include "globug/hash.hpp"

#include <json.hpp>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace globug {
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string generic_relative(const fs::path& path, const fs::path& base) {
  return fs::relative(path, base).generic_string();
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool id_less(std::string_view a, std::string_view b) {
  if (all_digits(a) && all_digits(b)) {
    const auto a0 = a.find_first_not_of('0');
    const auto b0 = b.find_first_not_of('0');
    a = a0 == std::string_view::npos ? std::string_view() : a.substr(a0);
    b = b0 == std::string_view::npos ? std::string_view() : b.substr(b0);
    if (a.size() != b.size()) return a.size() < b.size();
  }
  return a < b;
}

std::string basename_of(std::string_view path) {
  const auto slash = path.find_last_of('/');
  return std::string(slash == std::string_view::npos ? path : path.substr(slash + 1));
}

bool has_suffix(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::vector<SourceFile> load_sources(const fs::path& root) {
  const fs::path sources = root / "sources";
  if (!fs::is_directory(sources)) {
    throw CorpusError("missing sources/ directory in " + root.string());
  }
  std::vector<SourceFile> files;
  for (const auto& entry : fs::recursive_directory_iterator(sources)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".java") continue;
    SourceFile file;
    file.path = generic_relative(entry.path(), sources);
    file.id = file.path;
    file.raw_text = read_file(entry.path());
    file.degenerate = file.raw_text.empty();
    files.push_back(std::move(file));
  }
  std::sort(files.begin(), files.end(),
            [](const SourceFile& a, const SourceFile& b) { return a.path < b.path; });
  return files;
}

std::string json_string(const nlohmann::json& node, const char* key, bool required,
                        const std::string& where) {
  const auto it = node.find(key);
  if (it == node.end() || it->is_null()) {
    if (required) throw CorpusError(where + ": missing field '" + key + "'");
    return {};
  }
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw CorpusError(where + ": field '" + key + "' must be a string");
}

BugReport parse_bug_json(const fs::path& path) {
  const std::string where = path.filename().string();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw CorpusError("malformed bug report " + where + ": " + e.what());
  }
  if (!doc.is_object()) throw CorpusError("malformed bug report " + where + ": not an object");

  BugReport bug;
  bug.id = json_string(doc, "id", true, where);
  bug.summary = json_string(doc, "summary", false, where);
  bug.description = json_string(doc, "description", false, where);
  if (auto date = json_string(doc, "open_date", false, where); !date.empty()) {
    bug.timestamp = std::move(date);
  }
  const auto fixed = doc.find("fixed_files");
  if (fixed == doc.end() || !fixed->is_array()) {
    throw CorpusError("malformed bug report " + where + ": 'fixed_files' must be an array",
                      bug.id);
  }
  for (const auto& f : *fixed) {
    if (!f.is_string()) {
      throw CorpusError("malformed bug report " + where + ": fixed_files entries must be strings",
                        bug.id);
    }
    bug.fixed_files.push_back(f.get<std::string>());
  }
  return bug;
}

std::vector<BugReport> load_json_bugs(const fs::path& dir) {
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<BugReport> bugs;
  bugs.reserve(paths.size());
  for (const auto& p : paths) bugs.push_back(parse_bug_json(p));
  return bugs;
}

// Bench4BL bug repository:
//   <bugrepository><bug id=".." opendate=".."><buginformation>
//     <summary/><description/></buginformation>
//     <fixedFiles><file>org.pkg.Foo.java</file></fixedFiles></bug>...
std::vector<BugReport> load_bench4bl_bugs(const fs::path& xml_path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(read_file(xml_path));
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw CorpusError("malformed bug repository " + xml_path.string() + ": " + e.message());
  }
  const auto repo = tree.get_child_optional("bugrepository");
  if (!repo) throw CorpusError("malformed bug repository: no <bugrepository> root");

  std::vector<BugReport> bugs;
  for (const auto& [tag, node] : *repo) {
    if (tag != "bug") continue;
    BugReport bug;
    bug.id = node.get<std::string>("<xmlattr>.id", "");
    if (bug.id.empty()) throw CorpusError("malformed bug repository: <bug> without id");
    if (auto date = node.get_optional<std::string>("<xmlattr>.opendate")) bug.timestamp = *date;
    bug.summary = node.get<std::string>("buginformation.summary", "");
    bug.description = node.get<std::string>("buginformation.description", "");
    if (const auto files = node.get_child_optional("fixedFiles")) {
      for (const auto& [ftag, fnode] : *files) {
        if (ftag == "file") bug.fixed_files.push_back(fnode.get_value<std::string>());
      }
    }
    bugs.push_back(std::move(bug));
  }
  return bugs;
}

}  // namespace

std::string BugReport::text() const {
  if (description.empty()) return summary;
  if (summary.empty()) return description;
  return summary + "\n" + description;
}

std::optional<std::size_t> Project::file_index(std::string_view id) const {
  const auto it = file_lookup_.find(std::string(id));
  if (it == file_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Project::bug_index(std::string_view id) const {
  const auto it = bug_lookup_.find(std::string(id));
  if (it == bug_lookup_.end()) return std::nullopt;
  return it->second;
}

void Project::reindex() {
  file_lookup_.clear();
  bug_lookup_.clear();
  for (std::size_t i = 0; i < source_files.size(); ++i) file_lookup_[source_files[i].id] = i;
  for (std::size_t i = 0; i < bug_reports.size(); ++i) bug_lookup_[bug_reports[i].id] = i;
}

const Project& Benchmark::project(std::string_view name) const {
  for (const auto& p : projects) {
    if (p.name == name) return p;
  }
  throw CorpusError("unknown project: " + std::string(name));
}

Project& Benchmark::project(std::string_view name) {
  return const_cast<Project&>(std::as_const(*this).project(name));
}

bool Benchmark::contains(std::string_view name) const {
  return std::any_of(projects.begin(), projects.end(),
                     [&](const Project& p) { return p.name == name; });
}

bool report_precedes(const BugReport& a, const BugReport& b) {
  const std::string_view ta = a.timestamp ? std::string_view(*a.timestamp) : std::string_view();
  const std::string_view tb = b.timestamp ? std::string_view(*b.timestamp) : std::string_view();
  if (ta != tb) return ta < tb;
  return id_less(a.id, b.id);
}

std::optional<std::string> resolve_fix_link(const std::vector<std::string>& file_ids,
                                            std::string_view link,
                                            std::vector<std::string>* warnings) {
  if (link.empty()) return std::nullopt;
  if (std::binary_search(file_ids.begin(), file_ids.end(), link)) return std::string(link);

  auto unique_match = [&](auto&& pred) -> std::optional<std::string> {
    std::optional<std::string> found;
    for (const auto& id : file_ids) {
      if (!pred(id)) continue;
      if (found) return std::nullopt;  // ambiguous
      found = id;
    }
    return found;
  };

  // org.apache.commons.csv.CSVParser.java -> org/apache/commons/csv/CSVParser.java
  if (has_suffix(link, ".java") && link.find('/') == std::string_view::npos) {
    std::string dotted(link.substr(0, link.size() - 5));
    if (dotted.find('.') != std::string::npos) {
      std::replace(dotted.begin(), dotted.end(), '.', '/');
      const std::string as_path = dotted + ".java";
      if (auto hit = unique_match([&](const std::string& id) {
            return id == as_path || has_suffix(id, "/" + as_path);
          })) {
        return hit;
      }
    }
  }

  const std::string suffix = "/" + std::string(link);
  if (auto hit = unique_match([&](const std::string& id) { return has_suffix(id, suffix); })) {
    return hit;
  }

  const std::string base = basename_of(link);
  if (auto hit = unique_match([&](const std::string& id) { return basename_of(id) == base; })) {
    if (warnings) {
      warnings->push_back("fix link '" + std::string(link) + "' matched by basename to '" + *hit +
                          "'");
    }
    return hit;
  }
  return std::nullopt;
}

Project load_project(const fs::path& root, const LoadOptions& options) {
  if (!fs::is_directory(root)) throw CorpusError("missing project directory: " + root.string());

  Project project;
  project.name = root.filename().string();
  if (project.name.empty()) project.name = root.parent_path().filename().string();
  project.source_files = load_sources(root);

  bool strict = options.strict_fix_links;
  if (fs::is_directory(root / "bugs")) {
    project.bug_reports = load_json_bugs(root / "bugs");
  } else if (fs::is_regular_file(root / "bugrepo" / "repository.xml")) {
    project.bug_reports = load_bench4bl_bugs(root / "bugrepo" / "repository.xml");
    strict = false;
  } else {
    throw CorpusError("no bugs/ directory or bugrepo/repository.xml in " + root.string());
  }

  std::vector<std::string> ids;
  ids.reserve(project.source_files.size());
  for (const auto& f : project.source_files) ids.push_back(f.id);  // already sorted

  for (auto& bug : project.bug_reports) {
    std::vector<std::string> resolved;
    for (const auto& link : bug.fixed_files) {
      auto hit = resolve_fix_link(ids, link, &project.warnings);
      if (!hit) {
        if (strict) {
          throw CorpusError("bug " + bug.id + ": fix link '" + link + "' names no source file",
                            bug.id);
        }
        project.warnings.push_back("bug " + bug.id + ": dropped unresolvable fix link '" + link +
                                   "'");
        continue;
      }
      if (std::find(resolved.begin(), resolved.end(), *hit) == resolved.end()) {
        resolved.push_back(std::move(*hit));
      }
    }
    std::sort(resolved.begin(), resolved.end());
    bug.fixed_files = std::move(resolved);
  }

  std::stable_sort(project.bug_reports.begin(), project.bug_reports.end(), report_precedes);
  std::unordered_set<std::string> seen;
  for (const auto& bug : project.bug_reports) {
    if (!seen.insert(bug.id).second) throw CorpusError("duplicate bug id " + bug.id, bug.id);
  }
  project.reindex();
  return project;
}

Project validate_and_filter(Project project) {
  const auto before = project.bug_reports.size();
  std::erase_if(project.bug_reports, [&](const BugReport& bug) {
    return std::none_of(bug.fixed_files.begin(), bug.fixed_files.end(),
                        [&](const std::string& id) { return project.file_index(id).has_value(); });
  });
  project.removed_reports += before - project.bug_reports.size();
  project.reindex();
  return project;
}

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<ManifestEntry> entries;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      if (line.rfind("project", 0) == 0) continue;
    }
    std::istringstream row(line);
    ManifestEntry e;
    std::string files, bugs;
    if (!std::getline(row, e.project, ',') || !std::getline(row, files, ',') ||
        !std::getline(row, bugs, ',')) {
      throw CorpusError("malformed manifest row: " + line);
    }
    try {
      e.source_files = std::stoul(files);
      e.bug_reports = std::stoul(bugs);
    } catch (const std::exception&) {
      throw CorpusError("malformed manifest row: " + line);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

Benchmark load_benchmark(const fs::path& root, const LoadOptions& options) {
  if (!fs::is_directory(root)) throw CorpusError("missing benchmark directory: " + root.string());

  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw CorpusError("no projects found in " + root.string());

  Benchmark benchmark;
  std::string failures;
  for (const auto& dir : dirs) {
    try {
      benchmark.projects.push_back(validate_and_filter(load_project(dir, options)));
    } catch (const CorpusError& e) {
      failures += "\n  " + dir.filename().string() + ": " + e.what();
    }
  }
  if (!failures.empty()) throw CorpusError("benchmark load failed:" + failures);

  if (fs::is_regular_file(root / "manifest.csv")) {
    benchmark.manifest = load_manifest(root / "manifest.csv");
    for (const auto& e : *benchmark.manifest) {
      if (!benchmark.contains(e.project)) {
        failures += "\n  " + e.project + ": listed in manifest but not found";
        continue;
      }
      const auto& p = benchmark.project(e.project);
      if (p.source_files.size() != e.source_files || p.bug_reports.size() != e.bug_reports) {
        failures += "\n  " + e.project + ": manifest expects " + std::to_string(e.source_files) +
                    " files / " + std::to_string(e.bug_reports) + " reports, found " +
                    std::to_string(p.source_files.size()) + " / " +
                    std::to_string(p.bug_reports.size());
      }
    }
    if (!failures.empty()) throw CorpusError("manifest mismatch:" + failures);
  }
  return benchmark;
}

void preprocess_project(Project& project, const PreprocessConfig& config) {
  for (auto& f : project.source_files) {
    f.tokens = preprocess(f.raw_text, Origin::SourceFile, config);
  }
  for (auto& b : project.bug_reports) {
    b.tokens = preprocess(b.text(), Origin::BugReport, config);
  }
}

void preprocess_benchmark(Benchmark& benchmark, const PreprocessConfig& config) {
  for (auto& p : benchmark.projects) preprocess_project(p, config);
}

std::string corpus_fingerprint(const Benchmark& benchmark) {
  Fnv1a h;
  h.field("corpus-v1");
  for (const auto& p : benchmark.projects) {
    h.field(p.name);
    for (const auto& f : p.source_files) h.field(f.path).field(f.raw_text);
    for (const auto& b : p.bug_reports) {
      h.field(b.id).field(b.summary).field(b.description).field(b.timestamp.value_or(""));
      for (const auto& link : b.fixed_files) h.field(link);
    }
  }
  return h.hex();
}

}  // namespace globug
