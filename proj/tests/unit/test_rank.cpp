#include "globug/error.hpp"
#include "globug/rank.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <numeric>
#include <random>
#include <sstream>

using namespace globug;

namespace {

Project toy_project(const std::vector<std::vector<std::string>>& files,
                    const std::vector<std::pair<std::vector<std::string>, std::vector<int>>>& bugs) {
  Project p;
  p.name = "toy";
  for (std::size_t k = 0; k < files.size(); ++k) {
    SourceFile f;
    f.id = f.path = "src/F" + std::to_string(k) + ".java";
    f.tokens = {files[k], Origin::SourceFile};
    p.source_files.push_back(std::move(f));
  }
  for (std::size_t k = 0; k < bugs.size(); ++k) {
    BugReport b;
    b.id = std::to_string(k + 1);
    b.tokens = {bugs[k].first, Origin::BugReport};
    for (int f : bugs[k].second) b.fixed_files.push_back(p.source_files[static_cast<std::size_t>(f)].id);
    p.bug_reports.push_back(std::move(b));
  }
  p.reindex();
  return p;
}

BugReport query(std::vector<std::string> tokens, std::string id = "q") {
  BugReport b;
  b.id = std::move(id);
  b.tokens = {std::move(tokens), Origin::BugReport};
  return b;
}

std::vector<Index> argsort(const ScoreVector& s) {
  std::vector<Index> idx(static_cast<std::size_t>(s.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return s(a) > s(b); });
  return idx;
}

const std::vector<MethodConfig> kLocal = {MethodConfig::for_method(1), MethodConfig::for_method(3)};

}  // namespace

TEST_CASE("method table", "[rank]") {
  using R = Representation;
  const struct {
    int id;
    R direct;
    R indirect;
  } table[] = {{1, R::TfIdfLocal, R::None},
               {2, R::TfIdfGlobal, R::None},
               {3, R::TfIdfLocal, R::TfIdfLocal},
               {4, R::TfIdfGlobal, R::TfIdfGlobal},
               {5, R::Doc2VecGlobal, R::None},
               {6, R::TfIdfGlobal, R::Doc2VecGlobal},
               {7, R::TfIdfGlobalPlusDoc2VecGlobal, R::TfIdfGlobalPlusDoc2VecGlobal}};
  for (const auto& row : table) {
    const auto m = MethodConfig::for_method(row.id);
    CHECK(m.method_id == row.id);
    CHECK(m.direct == row.direct);
    CHECK(m.indirect == row.indirect);
    CHECK(m.w1 + m.w2 == Catch::Approx(1.0));
    if (row.indirect == R::None) {
      CHECK(m.w1 == 1.0);
      CHECK(m.w2 == 0.0);
    } else {
      CHECK(m.w1 == 0.8);
      CHECK(m.w2 == 0.2);
    }
  }
  CHECK_FALSE(MethodConfig::for_method(3).needs_global_idf());
  CHECK(MethodConfig::for_method(4).needs_global_idf());
  CHECK(MethodConfig::for_method(6).needs_embeddings());
  CHECK_FALSE(MethodConfig::for_method(2).needs_embeddings());
  for (int bad : {0, 8, -1}) {
    try {
      MethodConfig::for_method(bad);
      FAIL("expected usage error");
    } catch (const Error& e) {
      CHECK(e.kind() == "usage");
    }
  }
}

TEST_CASE("min-max normalization", "[rank]") {
  ScoreVector s(4);
  s << 2.0, 4.0, 3.0, 2.0;
  ScoreVector expected(4);
  expected << 0.0, 1.0, 0.5, 0.0;
  CHECK(min_max_normalize(s) == expected);
  CHECK(min_max_normalize(ScoreVector::Constant(5, 0.7)).isZero());
  CHECK(min_max_normalize(ScoreVector()).size() == 0);
}

TEST_CASE("fusion invariants on random score maps", "[rank][property]") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> size(2, 60);
  std::uniform_real_distribution<double> log_c(-6.0, 6.0);
  for (int round = 0; round < 100; ++round) {
    const auto n = static_cast<Index>(size(rng));
    ScoreVector d(n), i(n);
    for (Index k = 0; k < n; ++k) {
      d(k) = u(rng);
      i(k) = u(rng);
    }
    CHECK(argsort(fuse(d, i, 1.0, 0.0)) == argsort(d));
    const double c = std::exp(log_c(rng));
    const auto base = argsort(fuse(d, i, 0.8, 0.2));
    CHECK(argsort(fuse(c * d, i, 0.8, 0.2)) == base);
    CHECK(argsort(fuse(d, c * i, 0.8, 0.2)) == base);
    const auto f = fuse(d, i, 0.8, 0.2);
    CHECK(f.minCoeff() >= 0.0);
    CHECK(f.maxCoeff() <= 1.0 + 1e-15);
  }
  CHECK_THROWS_AS(fuse(ScoreVector::Zero(3), ScoreVector::Zero(4), 0.8, 0.2), ModelError);
}

TEST_CASE("direct relevancy equals the rVSM oracle", "[rank][oracle]") {
  const std::vector<std::vector<std::string>> files = {
      {"socket", "timeout", "retry"},
      {"socket", "buffer", "buffer"},
      {"render", "layout", "font", "glyph", "paint"},
      {"parser"}};
  const auto project = toy_project(files, {});
  const ProjectIndex index(project, {}, kLocal);
  const std::vector<std::string> q = {"socket", "timeout", "crash", "buffer"};
  const auto scores = direct_relevancy(query(q), index, Representation::TfIdfLocal);
  const auto expected = testing::brute_force_rvsm(files, q);
  for (std::size_t k = 0; k < files.size(); ++k) {
    CHECK(testing::relative_error(scores(static_cast<Index>(k)), expected[k]) <= 1e-12);
  }
  CHECK_THROWS_AS(direct_relevancy(query(q), index, Representation::TfIdfGlobal), ArtifactError);
}

TEST_CASE("indirect relevancy bridges through fixed files", "[rank]") {
  const auto project = toy_project(
      {{"socket", "alpha"}, {"timeout", "beta"}, {"retry", "gamma"}, {"render", "delta"}},
      {{{"socket", "timeout"}, {0, 1}}, {{"socket", "retry"}, {1}}, {{"render"}, {2}}});
  const ProjectIndex index(project, {}, kLocal);
  const auto q = query({"socket", "timeout", "retry"});
  const auto qv = index.represent(q);
  const double s1 = cosine(qv.local, index.represent(project.bug_reports[0]).local);
  const double s2 = cosine(qv.local, index.represent(project.bug_reports[1]).local);
  REQUIRE(s1 > 0.0);
  REQUIRE(s2 > 0.0);

  std::vector<const BugReport*> one = {&project.bug_reports[0]};
  const auto a = indirect_relevancy(q, one, index, Representation::TfIdfLocal);
  CHECK(a(0) == Catch::Approx(s1 / 2).epsilon(1e-14));
  CHECK(a(1) == Catch::Approx(s1 / 2).epsilon(1e-14));
  CHECK(a(2) == 0.0);

  std::vector<const BugReport*> all = {&project.bug_reports[0], &project.bug_reports[1],
                                       &project.bug_reports[2]};
  const auto b = indirect_relevancy(q, all, index, Representation::TfIdfLocal);
  CHECK(b(0) == Catch::Approx(s1 / 2).epsilon(1e-14));
  CHECK(b(1) == Catch::Approx(s1 / 2 + s2).epsilon(1e-14));
  CHECK(b(2) == 0.0);
  CHECK(b(3) == 0.0);

  CHECK(indirect_relevancy(q, {}, index, Representation::TfIdfLocal).isZero());
}

TEST_CASE("history policy", "[rank]") {
  const auto project = toy_project({{"a"}}, {{{"x"}, {0}}, {{"y"}, {0}}, {{"z"}, {0}}});
  const auto& second = project.bug_reports[1];
  const auto earlier = history_for(project, second, HistoryPolicy::StrictlyEarlier);
  REQUIRE(earlier.size() == 1);
  CHECK(earlier[0]->id == "1");
  const auto others = history_for(project, second, HistoryPolicy::AllOthers);
  REQUIRE(others.size() == 2);
  CHECK(others[0]->id == "1");
  CHECK(others[1]->id == "3");
  CHECK(history_for(project, project.bug_reports[0], HistoryPolicy::StrictlyEarlier).empty());
}

TEST_CASE("localize ranks every file once with ties by path", "[rank]") {
  const auto project =
      toy_project({{"zeta"}, {"socket", "retry"}, {"omega"}, {"socket"}},
                  {{{"socket", "retry"}, {1}}, {{"omega"}, {2}}});
  const ProjectIndex index(project, {}, kLocal);
  const auto q = query({"socket", "retry"}, "new");
  const auto m1 = localize(q, index, MethodConfig::for_method(1), HistoryPolicy::AllOthers);
  REQUIRE(m1.entries.size() == 4);
  CHECK(m1.query_bug_id == "new");
  CHECK(m1.method_id == 1);
  const auto ids = m1.file_ids(project);
  CHECK(ids[0] == "src/F1.java");
  CHECK(ids[1] == "src/F3.java");
  CHECK(ids[2] == "src/F0.java");  // zero scores, path order
  CHECK(ids[3] == "src/F2.java");
  for (std::size_t k = 1; k < m1.entries.size(); ++k) {
    CHECK(m1.entries[k - 1].final_score >= m1.entries[k].final_score);
  }

  // Direct-only: the final order is the direct order.
  const auto direct = direct_relevancy(q, index, Representation::TfIdfLocal);
  for (const auto& e : m1.entries) CHECK(e.direct_score == direct(static_cast<Index>(e.file)));
  for (const auto& e : m1.entries) CHECK(e.indirect_score == 0.0);

  const auto m3 = localize(q, index, MethodConfig::for_method(3), HistoryPolicy::AllOthers);
  CHECK(m3.file_ids(project)[0] == "src/F1.java");
  CHECK(m3.entries[0].final_score == Catch::Approx(1.0));
}

TEST_CASE("global representations need global models", "[rank]") {
  const auto project = toy_project({{"a"}, {"b"}}, {});
  const std::vector<MethodConfig> global = {MethodConfig::for_method(4)};
  CHECK_THROWS_AS(ProjectIndex(project, {}, global), ArtifactError);
  const std::vector<MethodConfig> embed = {MethodConfig::for_method(5)};
  CHECK_THROWS_AS(ProjectIndex(project, {}, embed), ArtifactError);
}

TEST_CASE("ranked list CSV", "[rank][io]") {
  const auto project = toy_project({{"socket"}, {"render"}}, {});
  const ProjectIndex index(project, {}, kLocal);
  const auto list = localize(query({"socket"}, "B,1"), index, MethodConfig::for_method(1),
                             std::span<const BugReport* const>{});
  std::ostringstream out;
  write_ranked_list_header(out);
  write_ranked_list_rows(out, list, project);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "bug_id,rank,file_path,final,direct,indirect");
  std::getline(in, line);
  CHECK(line.rfind("\"B,1\",1,src/F0.java,1,", 0) == 0);
  std::getline(in, line);
  CHECK(line == "\"B,1\",2,src/F1.java,0,0,0");
}
