#include "globug/preprocess.hpp"

#include "globug/hash.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace globug {

// Generated from resources/*.txt at configure time.
namespace resources {
extern const std::string_view kStopwordsEn;
extern const std::string_view kJavaKeywords;
}  // namespace resources

namespace {

bool is_ident_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || c == '$';
}

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_alpha(char c) { return is_upper(c) || is_lower(c); }

char to_lower(char c) { return is_upper(c) ? static_cast<char>(c - 'A' + 'a') : c; }

std::vector<std::string_view> sorted_view(const std::unordered_set<std::string>& set) {
  std::vector<std::string_view> out(set.begin(), set.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Stems until the term stops changing.
std::string stem_to_fixpoint(std::string term) {
  for (int i = 0; i < 8; ++i) {
    std::string next = stem(term);
    if (next == term) break;
    term = std::move(next);
  }
  return term;
}

// Parts of an identifier before lowercasing: alphabetic runs cut at
// camelCase boundaries. Digits, '_' and '$' separate parts.
std::vector<std::string> identifier_parts(std::string_view identifier) {
  std::vector<std::string> parts;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) parts.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < identifier.size(); ++i) {
    const char c = identifier[i];
    if (!is_alpha(c)) {
      flush();
      continue;
    }
    if (!current.empty() && is_upper(c)) {
      const char prev = identifier[i - 1];
      const bool next_lower = i + 1 < identifier.size() && is_lower(identifier[i + 1]);
      // fooBar -> foo|Bar, XMLParser -> XML|Parser
      if (is_lower(prev) || (is_upper(prev) && next_lower)) flush();
    }
    current.push_back(to_lower(c));
  }
  flush();
  return parts;
}

}  // namespace

std::unordered_set<std::string> parse_term_list(std::string_view text) {
  std::unordered_set<std::string> terms;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::string term = line.substr(first, last - first + 1);
    std::transform(term.begin(), term.end(), term.begin(), to_lower);
    terms.insert(std::move(term));
  }
  return terms;
}

std::unordered_set<std::string> load_term_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read term list: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_term_list(buffer.str());
}

PreprocessConfig PreprocessConfig::defaults() {
  PreprocessConfig config;
  config.stopwords = parse_term_list(resources::kStopwordsEn);
  config.keywords = parse_term_list(resources::kJavaKeywords);
  return config;
}

bool PreprocessConfig::is_filtered(std::string_view term) const {
  const std::string key(term);
  return stopwords.contains(key) || keywords.contains(key);
}

std::string PreprocessConfig::fingerprint() const {
  Fnv1a h;
  h.field("preprocess-v1");
  for (auto term : sorted_view(stopwords)) h.field(term);
  h.field("|keywords|");
  for (auto term : sorted_view(keywords)) h.field(term);
  h.field(std::to_string(min_token_length));
  h.field(split_compound_identifiers ? "split" : "nosplit");
  return h.hex();
}

std::string strip_code_noise(std::string_view src, std::vector<std::string>* warnings) {
  std::string out;
  out.reserve(src.size());
  const std::size_t n = src.size();
  std::size_t i = 0;

  // Block comments vanish, but never glue two identifiers together.
  auto join_gap = [&](std::size_t resume) {
    if (!out.empty() && is_ident_char(out.back()) && resume < n && is_ident_char(src[resume])) {
      out.push_back(' ');
    }
  };

  while (i < n) {
    const char c = src[i];
    if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      while (!out.empty() && (out.back() == ' ' || out.back() == '\t')) out.pop_back();
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      const auto end = src.find("*/", i + 2);
      if (end == std::string_view::npos) {
        if (warnings) warnings->push_back("unterminated block comment; stripped to end of file");
        break;
      }
      join_gap(end + 2);
      i = end + 2;
      continue;
    }
    if (c == '"' && src.substr(i, 3) == "\"\"\"") {
      const auto end = src.find("\"\"\"", i + 3);
      if (end == std::string_view::npos) {
        if (warnings) warnings->push_back("unterminated text block; stripped to end of file");
        break;
      }
      i = end + 3;
      continue;
    }
    if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < n && src[j] != c && src[j] != '\n') {
        j += (src[j] == '\\' && j + 1 < n) ? 2 : 1;
      }
      // An unterminated literal ends at the line break, which is kept.
      i = (j < n && src[j] == c) ? j + 1 : j;
      continue;
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

std::vector<std::string> split_identifier(std::string_view identifier,
                                          const PreprocessConfig& config) {
  std::vector<std::string> parts = identifier_parts(identifier);
  std::vector<std::string> terms;
  if (!config.split_compound_identifiers) {
    std::string joined;
    for (const auto& p : parts) joined += p;
    if (joined.size() >= config.min_token_length && !joined.empty()) terms.push_back(joined);
    return terms;
  }
  std::string compound;
  for (auto& p : parts) {
    compound += p;
    if (p.size() >= config.min_token_length) terms.push_back(p);
  }
  if (parts.size() >= 2 && compound.size() >= config.min_token_length) {
    terms.push_back(std::move(compound));
  }
  return terms;
}

TokenStream preprocess(std::string_view text, Origin origin, const PreprocessConfig& config) {
  TokenStream stream;
  stream.origin = origin;

  std::string stripped;
  if (origin == Origin::SourceFile) {
    stripped = strip_code_noise(text);
    text = stripped;
  }

  const std::size_t min_len = std::max<std::size_t>(config.min_token_length, 1);
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_ident_char(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_ident_char(text[j])) ++j;
    for (auto& term : split_identifier(text.substr(i, j - i), config)) {
      if (config.is_filtered(term)) continue;
      std::string stemmed = stem_to_fixpoint(std::move(term));
      if (stemmed.size() < min_len || config.is_filtered(stemmed)) continue;
      stream.tokens.push_back(std::move(stemmed));
    }
    i = j;
  }
  return stream;
}

}  // namespace globug
