#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "perfmap/crossval.hpp"
#include "perfmap/learners.hpp"
#include "test_support.hpp"

using namespace perfmap;
using testing::make_dataset;
using testing::random_classification;

namespace {

double train_accuracy(const TreeModel& m, const Dataset& ds) {
  return accuracy(ds.target, predict(m, ds.features));
}

struct NaiveSplit {
  int feature = -1;
  double threshold = 0.0;
};

// Brute force over every feature and midpoint: sum of n_child * impurity(child),
// keeping the first (lowest feature, lowest threshold) within 1e-9 of the minimum.
NaiveSplit naive_root_split(const Dataset& ds) {
  auto impurity_sum = [&](const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    const double n = static_cast<double>(idx.size());
    if (ds.task == Task::Classification) {
      std::vector<double> counts(ds.n_classes(), 0.0);
      for (auto i : idx) counts[static_cast<std::size_t>(ds.target[i])] += 1.0;
      double g = 1.0;
      for (double c : counts) g -= (c / n) * (c / n);
      return n * g;
    }
    double mean = 0.0;
    for (auto i : idx) mean += ds.target[i];
    mean /= n;
    double var = 0.0;
    for (auto i : idx) var += (ds.target[i] - mean) * (ds.target[i] - mean);
    return var;  // n * (var / n)
  };
  std::vector<std::tuple<double, int, double>> candidates;
  for (std::size_t f = 0; f < ds.n_features(); ++f) {
    std::set<double> values;
    for (std::size_t r = 0; r < ds.size(); ++r) values.insert(ds.features(r, f));
    std::vector<double> v(values.begin(), values.end());
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
      const double thr = (v[k] + v[k + 1]) / 2.0;
      std::vector<std::size_t> left, right;
      for (std::size_t r = 0; r < ds.size(); ++r) {
        (ds.features(r, f) <= thr ? left : right).push_back(r);
      }
      candidates.emplace_back(impurity_sum(left) + impurity_sum(right), static_cast<int>(f), thr);
    }
  }
  NaiveSplit best;
  if (candidates.empty()) return best;
  double lo = std::numeric_limits<double>::infinity();
  for (auto& [s, f, t] : candidates) lo = std::min(lo, s);
  for (auto& [s, f, t] : candidates) {
    if (s <= lo + 1e-9) return {f, t};
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// CART

TEST_CASE("XOR is learned exactly at depth 2") {
  const Dataset xor_ds = make_dataset({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {0, 1, 1, 0},
                                      Task::Classification);
  // Independent check that some depth-2 threshold tree separates XOR: with
  // thresholds at 0.5, split on x0 then x1 in both branches.
  int solvable = 0;
  for (int f_root = 0; f_root < 2; ++f_root) {
    const int f_child = 1 - f_root;
    int correct = 0;
    for (std::size_t r = 0; r < 4; ++r) {
      const bool a = xor_ds.features(r, static_cast<std::size_t>(f_root)) > 0.5;
      const bool b = xor_ds.features(r, static_cast<std::size_t>(f_child)) > 0.5;
      correct += (a != b) == (xor_ds.target[r] == 1.0) ? 1 : 0;
    }
    solvable += correct == 4 ? 1 : 0;
  }
  REQUIRE(solvable > 0);

  const TreeModel m = train_tree(xor_ds, DtParams{0.0, 2, 2});
  CHECK(train_accuracy(m, xor_ds) == 1.0);
  CHECK(m.depth() <= 2);
}

TEST_CASE("a 0.6 impurity-decrease floor leaves a single leaf on a balanced binary target") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Dataset ds = random_classification(60, 3, 5, seed);
    for (std::size_t i = 0; i < ds.size(); ++i) ds.target[i] = static_cast<double>(i % 2);
    const TreeModel m = train_tree(ds, DtParams{0.6, 2, kUnboundedDepth});
    CHECK(m.nodes.size() == 1);
    CHECK(m.leaf_count() == 1);
  }
}

TEST_CASE("a depth-1 stump separates a 1-D threshold problem") {
  const Dataset ds = make_dataset({{-3}, {-2}, {-0.5}, {0.5}, {1}, {4}}, {0, 0, 0, 1, 1, 1},
                                  Task::Classification);
  const TreeModel m = train_tree(ds, DtParams{0.0, 2, 1});
  CHECK(m.nodes.size() == 3);
  CHECK(m.nodes[0].feature == 0);
  CHECK(m.nodes[0].threshold == doctest::Approx(0.0));
  CHECK(train_accuracy(m, ds) == 1.0);
}

TEST_CASE("root split matches a brute-force search") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Dataset cls = random_classification(30, 3, 4, seed, seed % 3 == 0 ? 3 : 2);
    const NaiveSplit want = naive_root_split(cls);
    const TreeModel m = train_tree(cls, DtParams{0.0, 2, 1});
    if (want.feature < 0) {
      CHECK(m.nodes.size() == 1);
      continue;
    }
    if (m.nodes.size() == 1) continue;  // root already pure
    CHECK(m.nodes[0].feature == want.feature);
    CHECK(m.nodes[0].threshold == doctest::Approx(want.threshold));

    Dataset reg = cls;
    reg.task = Task::Regression;
    reg.class_labels.clear();
    Rng rng(seed + 100);
    for (auto& t : reg.target) t = std::round(uniform_unit(rng) * 8.0);
    const NaiveSplit want_reg = naive_root_split(reg);
    const TreeModel mr = train_tree(reg, DtParams{0.0, 2, 1});
    if (want_reg.feature >= 0 && mr.nodes.size() > 1) {
      CHECK(mr.nodes[0].feature == want_reg.feature);
      CHECK(mr.nodes[0].threshold == doctest::Approx(want_reg.threshold));
    }
  }
}

TEST_CASE("unbounded CART memorizes conflict-free data") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset ds = testing::deduplicate(random_classification(200, 4, 6, seed, 3));
    const TreeModel m = train_tree(ds, DtParams{0.0, 2, kUnboundedDepth});
    CHECK(train_accuracy(m, ds) == 1.0);

    Dataset reg = ds;
    reg.task = Task::Regression;
    reg.class_labels.clear();
    for (std::size_t i = 0; i < reg.size(); ++i) reg.target[i] = 0.5 * static_cast<double>(i);
    const TreeModel mr = train_tree(reg, DtParams{0.0, 2, kUnboundedDepth});
    CHECK(predict(mr, reg.features) == reg.target);
  }
}

TEST_CASE("tree structure respects its parameters") {
  const Dataset ds = random_classification(300, 3, 10, 77);
  for (double imp : {0.0, 0.001, 0.01}) {
    for (int split : {2, 12, 42}) {
      for (int depth : {1, 3, 11}) {
        const TreeModel m = train_tree(ds, DtParams{imp, split, depth});
        CHECK(m.depth() <= depth);
        for (const auto& n : m.nodes) {
          if (n.is_leaf()) continue;
          CHECK(n.samples >= static_cast<std::size_t>(split));
          CHECK(n.weighted_decrease + 1e-12 >= imp);
        }
      }
    }
  }
}

TEST_CASE("training accuracy does not increase with min_samples_split") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset ds = random_classification(250, 3, 8, seed);
    double previous = 2.0;
    for (int split = 2; split <= 152; split += 10) {
      const double acc = train_accuracy(train_tree(ds, DtParams{0.0, split, kUnboundedDepth}), ds);
      CHECK(acc <= previous);
      previous = acc;
    }
  }
}

TEST_CASE("single-leaf tree predicts its leaf value everywhere") {
  const Dataset ds = make_dataset({{0}, {1}, {2}}, {1, 1, 1}, Task::Classification);
  const TreeModel m = train_tree(ds, DtParams{});
  REQUIRE(m.nodes.size() == 1);
  Matrix probe(4, 1, 9.0);
  CHECK(predict(m, probe) == std::vector<double>(4, 1.0));
}

TEST_CASE("tree error paths") {
  const Dataset ds = make_dataset({{0}, {1}}, {0, 1}, Task::Classification);
  CHECK_THROWS_AS(train_tree(ds.select_rows(std::vector<std::size_t>{}), DtParams{}), LearnerError);
  const TreeModel m = train_tree(ds, DtParams{});
  CHECK_THROWS_AS(predict(m, Matrix(1, 2)), LearnerError);
  CHECK_THROWS_AS(train_tree(ds, DtParams{0.0, 1, 3}), LearnerError);
}

// ---------------------------------------------------------------------------
// SVM

namespace {

double dual_objective(const SvmModel& m, const Matrix& x) {
  // 0.5 a'Qa - sum(a), Q_ij = y_i y_j K_ij.
  double quad = 0.0, lin = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    lin += m.alpha[i];
    for (std::size_t j = 0; j < x.rows(); ++j) {
      quad += m.alpha[i] * m.alpha[j] * m.labels[i] * m.labels[j] *
              kernel_value(m.kernel, m.gamma, m.coef0, m.degree, x.row(i), x.row(j));
    }
  }
  return 0.5 * quad - lin;
}

// Independent solver: accelerated projected gradient on the box-and-hyperplane
// feasible set, with the projection found by bisection on the multiplier.
double oracle_dual_objective(const Matrix& x, const std::vector<double>& y, Kernel k,
                             double gamma, double c) {
  const std::size_t n = x.rows();
  std::vector<double> q(n * n);
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      q[i * n + j] = y[i] * y[j] * kernel_value(k, gamma, 0.0, 3, x.row(i), x.row(j));
    }
    trace += q[i * n + i];
  }
  auto project = [&](std::vector<double> v) {
    auto g = [&](double lam) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += y[i] * std::clamp(v[i] - lam * y[i], 0.0, c);
      return s;
    };
    double lo = -1e6, hi = 1e6;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) > 0 ? lo : hi) = mid;
    }
    const double lam = 0.5 * (lo + hi);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::clamp(v[i] - lam * y[i], 0.0, c);
    return v;
  };
  auto objective = [&](const std::vector<double>& a) {
    double quad = 0.0, lin = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      lin += a[i];
      for (std::size_t j = 0; j < n; ++j) quad += a[i] * a[j] * q[i * n + j];
    }
    return 0.5 * quad - lin;
  };
  const double step = 1.0 / std::max(trace, 1e-9);
  std::vector<double> a(n, 0.0), z = a;
  double t = 1.0;
  for (int it = 0; it < 20000; ++it) {
    std::vector<double> grad(n, -1.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) grad[i] += q[i * n + j] * z[j];
    }
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = z[i] - step * grad[i];
    next = project(next);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t i = 0; i < n; ++i) z[i] = next[i] + ((t - 1.0) / t_next) * (next[i] - a[i]);
    a = std::move(next);
    t = t_next;
  }
  return objective(a);
}

}  // namespace

TEST_CASE("gamma resolution") {
  Matrix four(3, 4);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 4; ++c) four(r, c) = static_cast<double>(r * c);
  }
  CHECK(resolve_gamma(GammaMode::Auto, four) == 0.25);

  const Dataset ten = testing::blobs(50, 10, 1.0, 6);
  const auto [z, stats] = standardize(ten.features);
  CHECK(resolve_gamma(GammaMode::Scale, z) == doctest::Approx(0.1));
  CHECK(resolve_gamma(GammaMode::Scale, Matrix(3, 2, 7.0)) == 1.0);
}

TEST_CASE("two-point linear problem matches the hand-derived dual") {
  // max 2a - 4a^2 with a1 = a2 = a gives a = 1/4, w = (1/2, 1/2), b = -1.
  const Dataset ds = make_dataset({{0, 0}, {2, 2}}, {0, 1}, Task::Classification);
  const SvmModel m = train_svm(ds, SvmParams{GammaMode::Scale, Kernel::Linear, 1.0});
  REQUIRE(m.alpha.size() == 2);
  CHECK(m.alpha[0] == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(m.alpha[1] == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(m.bias == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(accuracy(ds.target, predict(m, ds.features)) == 1.0);
}

TEST_CASE("SMO optimality on five fixtures") {
  const double tol = SmoOptions{}.tol;
  for (auto& f : testing::smo_fixtures()) {
    CAPTURE(f.name);
    const SvmModel m = train_svm(f.data, SvmParams{f.gamma, f.kernel, f.c});
    CHECK(m.converged);
    const testing::SmoAudit audit = testing::audit_smo(m, f.data.features);
    CHECK(audit.bound_violation == 0.0);
    CHECK(audit.balance <= 1e-6);
    CHECK(audit.kkt_violation <= tol + 1e-9);

    const double ours = dual_objective(m, f.data.features);
    const double oracle = oracle_dual_objective(f.data.features, m.labels, f.kernel, m.gamma, f.c);
    CHECK(ours == doctest::Approx(oracle).epsilon(1e-3));
  }
}

TEST_CASE("shrinking reaches the same optimum as the plain solver") {
  SmoOptions plain;
  plain.shrinking = false;
  std::vector<testing::SmoFixture> cases = testing::smo_fixtures();
  cases.push_back({"overlapping linear, C = 50", testing::blobs(600, 3, 0.5, 9), Kernel::Linear,
                   GammaMode::Scale, 50.0});
  for (auto& f : cases) {
    CAPTURE(f.name);
    const SvmModel shrunk = train_svm(f.data, SvmParams{f.gamma, f.kernel, f.c});
    const SvmModel full = train_svm(f.data, SvmParams{f.gamma, f.kernel, f.c}, plain);
    CHECK(shrunk.converged);
    CHECK(full.converged);
    const testing::SmoAudit audit = testing::audit_smo(shrunk, f.data.features);
    CHECK(audit.kkt_violation <= SmoOptions{}.tol + 1e-9);
    CHECK(dual_objective(shrunk, f.data.features) ==
          doctest::Approx(dual_objective(full, f.data.features)).epsilon(1e-3));
    CHECK(predict(shrunk, f.data.features) == predict(full, f.data.features));
  }
}

TEST_CASE("SVM tie rule: decision value zero maps to class 1") {
  SvmModel m;
  m.task = Task::Classification;
  m.kernel = Kernel::Linear;
  m.n_features = 2;
  m.support_vectors = Matrix(0, 2);
  m.bias = 0.0;
  CHECK(predict(m, Matrix(3, 2)) == std::vector<double>(3, 1.0));
}

TEST_CASE("epsilon-SVR fits a noiseless line inside the tube") {
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (int i = 0; i < 30; ++i) {
    const double x = -1.5 + 0.1 * i;
    rows.push_back({x});
    y.push_back(2.0 * x + 1.0);
  }
  const Dataset ds = make_dataset(rows, y, Task::Regression);
  const SvmModel m = train_svm(ds, SvmParams{GammaMode::Scale, Kernel::Linear, 100.0});
  CHECK(m.converged);
  const auto pred = predict(m, ds.features);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(pred[i] - y[i]) <= 0.1 + 1e-2);
  double balance = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) balance += m.alpha[i] - m.alpha[i + y.size()];
  CHECK(std::abs(balance) <= 1e-6);
  const testing::SmoAudit audit = testing::audit_smo(m, ds.features, y, SmoOptions{}.epsilon);
  CHECK(audit.bound_violation == 0.0);
  CHECK(audit.kkt_violation <= SmoOptions{}.tol + 1e-9);
}

TEST_CASE("SVM error paths") {
  const Dataset three = make_dataset({{0}, {1}, {2}}, {0, 1, 2}, Task::Classification, 3);
  CHECK_THROWS_AS(train_svm(three, SvmParams{}), LearnerError);
  const Dataset same = make_dataset({{1, 1}, {1, 1}}, {0, 1}, Task::Classification);
  CHECK_THROWS_AS(train_svm(same, SvmParams{}), LearnerError);
  const Dataset ok = make_dataset({{0}, {1}}, {0, 1}, Task::Classification);
  const SvmModel m = train_svm(ok, SvmParams{});
  CHECK_THROWS_AS(predict(m, Matrix(1, 3)), LearnerError);
}

TEST_CASE("SVM training is deterministic") {
  const Dataset ds = testing::blobs(40, 3, 1.0, 12);
  const SvmModel a = train_svm(ds, SvmParams{GammaMode::Scale, Kernel::Rbf, 1.0});
  const SvmModel b = train_svm(ds, SvmParams{GammaMode::Scale, Kernel::Rbf, 1.0});
  CHECK(a.alpha == b.alpha);
  CHECK(a.bias == b.bias);
}

// ---------------------------------------------------------------------------
// Cross-validation

namespace {

// Reads the answer from feature 0, so it is always right.
class EchoLearner final : public Learner {
 public:
  std::string name() const override { return "ECHO"; }
  ParamSpace default_space() const override { return ParamSpace({{"unused", {Atom{0.0}}}}); }
  std::vector<double> fit_predict(const Dataset&, const Matrix& test, const ParamSpace&,
                                  const Settings&, const Deadline&) const override {
    std::vector<double> out;
    for (std::size_t r = 0; r < test.rows(); ++r) out.push_back(test(r, 0));
    return out;
  }
};

// Predicts a huge constant.
class WildLearner final : public Learner {
 public:
  std::string name() const override { return "WILD"; }
  ParamSpace default_space() const override { return ParamSpace({{"unused", {Atom{0.0}}}}); }
  std::vector<double> fit_predict(const Dataset&, const Matrix& test, const ParamSpace&,
                                  const Settings&, const Deadline&) const override {
    return std::vector<double>(test.rows(), 1e6);
  }
};

}  // namespace

TEST_CASE("scores") {
  CHECK(r_squared(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 4}) == doctest::Approx(0.5));
  CHECK(r_squared(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 1.0);
  CHECK(accuracy(std::vector<double>{0, 1, 1, 0}, std::vector<double>{0, 1, 0, 0}) == 0.75);
}

TEST_CASE("cross_validate with a perfect learner") {
  const EchoLearner echo;
  const ParamSpace space = echo.default_space();
  const Settings s = enumerate(space)[0];

  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (int i = 0; i < 40; ++i) {
    y.push_back(i % 2);
    rows.push_back({static_cast<double>(i % 2)});
  }
  const Dataset cls = make_dataset(rows, y, Task::Classification);
  const Evaluation e = cross_validate(cls, make_folds(cls, 10, 1), echo, space, s, 40);
  CHECK(e.mean == 1.0);
  CHECK(e.std == 0.0);
  CHECK_FALSE(e.timed_out);

  for (int i = 0; i < 40; ++i) rows[static_cast<std::size_t>(i)][0] = y[static_cast<std::size_t>(i)] = 0.3 * i;
  const Dataset reg = make_dataset(rows, y, Task::Regression);
  const Evaluation r = cross_validate(reg, make_folds(reg, 5, 1), echo, space, s, 40);
  CHECK(r.mean == 1.0);
}

TEST_CASE("very negative R^2 is clamped to the sentinel and flagged") {
  const WildLearner wild;
  const ParamSpace space = wild.default_space();
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (int i = 0; i < 20; ++i) {
    rows.push_back({0.0});
    y.push_back(i);
  }
  const Dataset reg = make_dataset(rows, y, Task::Regression);
  const Evaluation e = cross_validate(reg, make_folds(reg, 4, 0), wild, space, enumerate(space)[0], 40);
  CHECK(e.mean == kTimeoutSentinel);
  CHECK(e.clamped);
  CHECK_FALSE(e.timed_out);
}

TEST_CASE("a sleeping learner past its deadline yields the timeout sentinel") {
  const SleepLearner sleepy;
  const ParamSpace space({{"sleep_seconds", {Atom{2.0}}}});
  const Dataset ds = testing::blobs(20, 1, 1.0, 3);
  const Evaluation e = cross_validate(ds, make_folds(ds, 2, 0), sleepy, space, enumerate(space)[0], 0.3);
  CHECK(e.timed_out);
  CHECK(e.mean == -0.2);
}

TEST_CASE("cross_validate rejects an inconsistent fold plan") {
  const DecisionTreeLearner dt;
  const ParamSpace space = dt.default_space();
  const Dataset ds = testing::blobs(20, 1, 1.0, 3);
  FoldPlan plan = make_folds(ds, 4, 0);
  plan.assignments.pop_back();
  CHECK_THROWS_AS(cross_validate(ds, plan, dt, space, enumerate(space)[0], 40), DatasetError);
}

TEST_CASE("learner parameter mapping") {
  const auto dt_space = builtin_space(LearnerKind::DecisionTree);
  const DtParams p = DecisionTreeLearner::params(dt_space, decode(dt_space, {1, 2, 3}));
  CHECK(p.min_impurity_decrease == 0.1);
  CHECK(p.min_samples_split == 22);
  CHECK(p.max_depth == 31);

  const auto svm_space = builtin_space(LearnerKind::Svm);
  const SvmParams q = SvmLearner::params(svm_space, decode(svm_space, {1, 3, 19}));
  CHECK(q.gamma == GammaMode::Auto);
  CHECK(q.kernel == Kernel::Sigmoid);
  CHECK(q.c_value == 182.0);

  CHECK_THROWS_AS(make_learner("KNN"), ParamSpaceError);
  CHECK_THROWS_AS(make_learner("DT")->check_space(svm_space), ParamSpaceError);
}
