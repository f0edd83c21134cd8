#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "perfmap/dataset.hpp"
#include "test_support.hpp"

using namespace perfmap;

namespace {

Dataset load_text(const std::string& text, const Schema& schema) {
  std::istringstream in(text);
  return load_csv(in, schema, "inline");
}

}  // namespace

TEST_CASE("categorical codes follow lexicon order") {
  Schema s{{{"c", ColumnKind::Categorical}}, "y", Task::Classification};
  const Dataset ds = load_text("c,y\nb,0\na,1\n", s);
  REQUIRE(ds.size() == 2);
  CHECK(ds.feature_meta[0].lexicon == std::vector<std::string>{"a", "b"});
  CHECK(ds.features(0, 0) == 1.0);  // "b"
  CHECK(ds.features(1, 0) == 0.0);  // "a"
  CHECK(ds.class_labels == std::vector<std::string>{"0", "1"});
  CHECK(ds.target == std::vector<double>{0.0, 1.0});
}

TEST_CASE("rows with missing markers are dropped and counted") {
  Schema s{{{"a", ColumnKind::Real}, {"b", ColumnKind::Categorical}}, "y", Task::Classification};
  const Dataset ds = load_text("a,b,y\n1,x,p\n?,x,q\n3,,q\n4,y,q\n5,x,?\n", s);
  CHECK(ds.size() == 2);
  CHECK(ds.dropped_rows == 3);
}

TEST_CASE("load_csv error paths") {
  SUBCASE("target only") {
    Schema s{{}, "y", Task::Classification};
    CHECK_THROWS_WITH_AS(load_text("y\n0\n1\n", s), doctest::Contains("no feature columns"),
                         DatasetError);
  }
  SUBCASE("unknown column") {
    Schema s{{{"zz", ColumnKind::Real}}, "y", Task::Classification};
    CHECK_THROWS_AS(load_text("a,y\n1,0\n2,1\n", s), DatasetError);
  }
  SUBCASE("too few rows") {
    Schema s{{{"a", ColumnKind::Real}}, "y", Task::Classification};
    CHECK_THROWS_AS(load_text("a,y\n1,0\n?,1\n", s), DatasetError);
  }
  SUBCASE("non-numeric value in numeric column") {
    Schema s{{{"a", ColumnKind::Real}}, "y", Task::Classification};
    CHECK_THROWS_AS(load_text("a,y\n1,0\nabc,1\n", s), DatasetError);
  }
  SUBCASE("fractional value in integer column") {
    Schema s{{{"a", ColumnKind::Integer}}, "y", Task::Classification};
    CHECK_THROWS_AS(load_text("a,y\n1,0\n1.5,1\n", s), DatasetError);
  }
  SUBCASE("unreadable file") {
    Schema s{{{"a", ColumnKind::Real}}, "y", Task::Classification};
    CHECK_THROWS_AS(load_csv(std::filesystem::path("/nonexistent/file.csv"), s), DatasetError);
  }
}

TEST_CASE("loading the same text twice gives identical encodings") {
  Schema s{{{"a", ColumnKind::Categorical}, {"b", ColumnKind::Real}}, "y", Task::Regression};
  const std::string text = "a,b,y\nq,1.5,2\np,2.5,3\nr,0,1\n";
  const Dataset a = load_text(text, s);
  const Dataset b = load_text(text, s);
  CHECK(a.features == b.features);
  CHECK(a.target == b.target);
}

TEST_CASE("standardize") {
  SUBCASE("column [2, 4] becomes [-1, 1]") {
    Matrix m(2, 1);
    m(0, 0) = 2;
    m(1, 0) = 4;
    auto [z, stats] = standardize(m);
    CHECK(stats.mean[0] == doctest::Approx(3.0));
    CHECK(stats.stddev[0] == doctest::Approx(1.0));
    CHECK(z(0, 0) == doctest::Approx(-1.0));
    CHECK(z(1, 0) == doctest::Approx(1.0));
  }
  SUBCASE("constant column becomes zeros") {
    Matrix m(3, 1);
    for (std::size_t r = 0; r < 3; ++r) m(r, 0) = 5;
    auto [z, stats] = standardize(m);
    for (std::size_t r = 0; r < 3; ++r) CHECK(z(r, 0) == 0.0);
  }
  SUBCASE("supplied identity stats leave data unchanged") {
    Matrix m(2, 2);
    m(0, 0) = 3;
    m(0, 1) = -7;
    m(1, 0) = 0.25;
    m(1, 1) = 11;
    auto [z, stats] = standardize(m, Standardization{{0, 0}, {1, 1}});
    CHECK(z == m);
  }
  SUBCASE("dimension mismatch") {
    Matrix m(2, 2);
    CHECK_THROWS_AS(standardize(m, Standardization{{0}, {1}}), DatasetError);
  }
  SUBCASE("round trip on non-constant columns") {
    Rng rng(3);
    Matrix m(20, 3);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (double& v : m.row(r)) v = uniform_unit(rng) * 100 - 50;
    }
    auto [z, stats] = standardize(m);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) {
        const double back = z(r, c) * stats.stddev[c] + stats.mean[c];
        CHECK(std::abs(back - m(r, c)) <= 1e-9 * std::max(1.0, std::abs(m(r, c))));
      }
    }
  }
}

TEST_CASE("one-hot expansion only touches categoricals with more than two categories") {
  Schema s{{{"c3", ColumnKind::Categorical}, {"c2", ColumnKind::Categorical}, {"r", ColumnKind::Real}},
           "y",
           Task::Classification};
  const Dataset ds = load_text("c3,c2,r,y\na,u,1,0\nb,v,2,1\nc,u,3,0\n", s);
  const Dataset oh = one_hot_expand(ds);
  REQUIRE(oh.n_features() == 5);
  CHECK(oh.feature_meta[0].name == "c3=a");
  CHECK(oh.feature_meta[2].name == "c3=c");
  CHECK(oh.features(1, 1) == 1.0);  // row "b"
  CHECK(oh.features(1, 0) == 0.0);
  CHECK(oh.features(1, 3) == 1.0);  // c2 code for "v"
  CHECK(oh.features(2, 4) == 3.0);
}

TEST_CASE("make_folds") {
  SUBCASE("769 rows into 10 folds: nine of 77 and one of 76") {
    std::vector<std::vector<double>> rows(769, std::vector<double>{0.0});
    std::vector<double> y(769);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 3 == 0 ? 1.0 : 0.0;
    const Dataset ds = testing::make_dataset(rows, y, Task::Classification);
    const FoldPlan plan = make_folds(ds, 10, 42);
    std::map<std::size_t, std::size_t> sizes;
    for (auto f : plan.assignments) ++sizes[f];
    std::multiset<std::size_t> counts;
    for (auto& [f, n] : sizes) counts.insert(n);
    CHECK(sizes.size() == 10);
    CHECK(counts.count(77) == 9);
    CHECK(counts.count(76) == 1);
  }
  SUBCASE("4 instances, 2 per class, 2 folds: one of each class per fold") {
    const Dataset ds = testing::make_dataset({{0}, {1}, {2}, {3}}, {0, 1, 0, 1},
                                             Task::Classification);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const FoldPlan plan = make_folds(ds, 2, seed);
      for (std::size_t f = 0; f < 2; ++f) {
        const auto rows = plan.test_rows(f);
        REQUIRE(rows.size() == 2);
        CHECK(ds.target[rows[0]] != ds.target[rows[1]]);
      }
    }
  }
  SUBCASE("deterministic for a fixed seed") {
    const Dataset ds = testing::blobs(101, 2, 1.0, 9);
    CHECK(make_folds(ds, 7, 5).assignments == make_folds(ds, 7, 5).assignments);
    CHECK(make_folds(ds, 7, 5).assignments != make_folds(ds, 7, 6).assignments);
  }
  SUBCASE("stratification and coverage over many seeds") {
    std::vector<std::vector<double>> rows(157, std::vector<double>{0.0});
    std::vector<double> y(157);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(i % 7 == 0 ? 2 : i % 2);
    const Dataset ds = testing::make_dataset(rows, y, Task::Classification, 3);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const FoldPlan plan = make_folds(ds, 10, seed);
      plan.validate(ds.size());
      std::set<std::size_t> all;
      std::size_t lo = ds.size(), hi = 0;
      for (std::size_t f = 0; f < 10; ++f) {
        const auto test = plan.test_rows(f);
        lo = std::min(lo, test.size());
        hi = std::max(hi, test.size());
        all.insert(test.begin(), test.end());
        std::vector<double> per_class(3, 0.0);
        for (auto r : test) per_class[static_cast<std::size_t>(ds.target[r])] += 1.0;
        for (std::size_t c = 0; c < 3; ++c) {
          const double total = static_cast<double>(std::count(y.begin(), y.end(), double(c)));
          CHECK(std::abs(per_class[c] - total / 10.0) <= 1.0);
        }
        CHECK(test.size() + plan.train_rows(f).size() == ds.size());
      }
      CHECK(all.size() == ds.size());
      CHECK(hi - lo <= 1);
    }
  }
  SUBCASE("out of range fold counts") {
    const Dataset ds = testing::blobs(5, 1, 1.0, 1);
    CHECK_THROWS_AS(make_folds(ds, 1, 0), DatasetError);
    CHECK_THROWS_AS(make_folds(ds, 6, 0), DatasetError);
  }
}

TEST_CASE("stratified subsample keeps class shares") {
  const Dataset ds = testing::blobs(400, 2, 1.0, 4);
  const Dataset sub = subsample(ds, 101, 8);
  CHECK(sub.size() == 101);
  const auto ones = std::count(sub.target.begin(), sub.target.end(), 1.0);
  CHECK((ones == 50 || ones == 51));
  CHECK(subsample(ds, 101, 8).features == sub.features);
}

TEST_CASE("bundled manifest resolves every dataset") {
  const auto manifest = std::filesystem::path(PERFMAP_SOURCE_DIR) / "data" / "manifest.json";
  if (!std::filesystem::exists(manifest)) return;
  const auto sources = load_manifest(manifest);
  REQUIRE(sources.count("voting") == 1);
  const Dataset voting = sources.at("voting").load();
  CHECK(voting.task == Task::Classification);
  CHECK(voting.n_classes() == 2);
  CHECK(voting.n_features() == 16);
  CHECK(voting.size() + voting.dropped_rows == 435);
}
