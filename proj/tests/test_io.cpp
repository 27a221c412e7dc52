#include <gtest/gtest.h>

#include <sstream>

#include "tcens/design.hpp"
#include "tcens/simstudy.hpp"
#include "tcens/table.hpp"

using namespace tcens;

namespace {

DataTable parse(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in);
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Csv, ReadsHeaderAndRows) {
  const DataTable t = parse("\xEF\xBB\xBFy, lens ,\"x\"\r\n1.5,A,2\n\n0.61,B,3\n");
  EXPECT_EQ(t.columns, (std::vector<std::string>{"y", "lens", "x"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][1], "B");
  EXPECT_EQ(*t.find("x"), 2u);
  EXPECT_FALSE(t.find("z"));
}

TEST(Csv, Errors) {
  EXPECT_NE(error_of([] { parse("a,b\n1\n"); }).find("line 2"), std::string::npos);
  EXPECT_NE(error_of([] { parse(""); }).find("header"), std::string::npos);
  EXPECT_NE(error_of([] { parse("a\n1\n").index_of("y"); }).find("'y'"), std::string::npos);
}

TEST(Csv, NumbersParsedStrictly) {
  EXPECT_DOUBLE_EQ(parse_double(" 1.25 ", "f"), 1.25);
  EXPECT_DOUBLE_EQ(parse_double("+2e-3", "f"), 2e-3);
  EXPECT_THROW(parse_double("NA", "f"), std::invalid_argument);
  EXPECT_THROW(parse_double("", "f"), std::invalid_argument);
  EXPECT_THROW(parse_double("1,5", "f"), std::invalid_argument);
  EXPECT_THROW(parse_double("0.5x", "f"), std::invalid_argument);
}

TEST(Design, InterceptOnly) {
  const Design d = build_design(parse("y\n1\n2\n3\n"), {});
  EXPECT_EQ(d.X.cols(), 1);
  EXPECT_TRUE(d.X.isOnes());
  EXPECT_EQ(d.names, (std::vector<std::string>{"(Intercept)"}));
}

TEST(Design, BinaryGroupTreatmentCoding) {
  const DataTable t = parse("y,lens\n1,mono\n2,multi\n3,mono\n4,multi\n");
  const Design d = build_design(t, {true, "lens", {}, std::nullopt});
  ASSERT_EQ(d.X.cols(), 2);
  EXPECT_EQ(d.names[1], "lens=multi");
  EXPECT_EQ(d.levels, (std::vector<std::string>{"mono", "multi"}));
  EXPECT_EQ(d.group, (std::vector<int>{0, 1, 0, 1}));
  EXPECT_EQ(d.X(1, 1), 1.0);
  EXPECT_EQ(d.X(2, 1), 0.0);

  const Design r = build_design(t, {true, "lens", {}, "multi"});
  EXPECT_EQ(r.names[1], "lens=mono");
  EXPECT_EQ(r.group, (std::vector<int>{1, 0, 1, 0}));
  EXPECT_THROW(build_design(t, {true, "lens", {}, "toric"}), std::invalid_argument);
}

TEST(Design, CovariatesAndGroups) {
  const DataTable t = parse("y,g,x\n1,a,0.5\n2,b,1.5\n3,c,0.1\n4,a,0.7\n5,b,0.2\n");
  const Design d = build_design(t, {true, "g", {"x"}, std::nullopt});
  EXPECT_EQ(d.X.cols(), 4);
  EXPECT_EQ(d.names, (std::vector<std::string>{"(Intercept)", "g=b", "g=c", "x"}));
  EXPECT_DOUBLE_EQ(d.X(1, 3), 1.5);
}

TEST(Design, RankDeficiencyNamesColumn) {
  const DataTable t = parse("y,x,x2\n1,0.5,0.5\n2,1.5,1.5\n3,0.1,0.1\n");
  const std::string msg = error_of([&] { build_design(t, {true, std::nullopt, {"x", "x2"}, std::nullopt}); });
  EXPECT_NE(msg.find("rank deficient"), std::string::npos);
  EXPECT_NE(msg.find("'x2'"), std::string::npos);
}

TEST(Design, NonNumericCovariateNamesRow) {
  const DataTable t = parse("y,x\n1,0.5\n2,NA\n");
  const std::string msg = error_of([&] { build_design(t, {true, std::nullopt, {"x"}, std::nullopt}); });
  EXPECT_NE(msg.find("'x', row 2"), std::string::npos) << msg;
}

TEST(GridConfig, ParsesDocumentedKeys) {
  std::istringstream in(
      "# comment\nstudy = non-inferiority\nmu = 1.0, 1.1\ndelta=-0.15\nsigma = 0.4,0.45\n"
      "a = 0\nnu = 0.61\nn = 50\nB = 10\nseed = 7\nalpha = 0.05\nmargin = -0.15\nmethod = bfgs  # trailing\n");
  const ScenarioGrid g = parse_grid(in);
  EXPECT_EQ(g.study, Study::NonInferiority);
  EXPECT_EQ(g.mu, (std::vector<double>{1.0, 1.1}));
  EXPECT_EQ(g.sigma.size(), 2u);
  EXPECT_EQ(g.n, 50);
  EXPECT_EQ(g.B, 10);
  EXPECT_EQ(g.seed, 7u);
  EXPECT_EQ(g.optim.method, Method::QuasiNewton);
  EXPECT_EQ(scenarios(g).size(), 4u);
}

TEST(GridConfig, Errors) {
  auto parse_text = [](const std::string& s) {
    std::istringstream in(s);
    return parse_grid(in);
  };
  EXPECT_NE(error_of([&] { parse_text("study = single-mean\nmu = 1\nsigma = 0.4\nfoo = 1\n"); }).find("unknown key"),
            std::string::npos);
  EXPECT_NE(error_of([&] { parse_text("mu = 1\nsigma = 0.4\n"); }).find("study"), std::string::npos);
  EXPECT_NE(error_of([&] { parse_text("study = single-mean\nmu = 1\nsigma = -0.4\n"); }).find("sigma"),
            std::string::npos);
  EXPECT_NE(error_of([&] { parse_text("study = single-mean\nmu = 1\nsigma = 0.4\nnu = -1\n"); }).find("nu"),
            std::string::npos);
  EXPECT_NE(error_of([&] { parse_text("study = single-mean\nmu = x\nsigma = 0.4\n"); }).find("line 2"),
            std::string::npos);
  EXPECT_NE(error_of([&] { parse_text("study = single-mean\nmu = 1\nsigma = 0.4\nB = 0\n"); }).find("B"),
            std::string::npos);
  EXPECT_NE(error_of([&] { parse_text("study = two-population\nmu = 1\nsigma = 0.4\n"); }).find("delta"),
            std::string::npos);
}
