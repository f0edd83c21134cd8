#include "perfmap/crossval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <thread>

namespace perfmap {

namespace {

double number_of(const ParamDomain& d, const Atom& a) {
  if (auto n = atom_number(a)) return *n;
  throw ParamSpaceError("parameter '" + d.name() + "' needs a numeric value, got " +
                        format_atom(a));
}

std::string symbol_of(const ParamDomain& d, const Atom& a) {
  if (const auto* s = std::get_if<std::string>(&a)) return *s;
  throw ParamSpaceError("parameter '" + d.name() + "' needs a symbolic value, got " +
                        format_atom(a));
}

int integer_of(const ParamDomain& d, const Atom& a) {
  const double v = number_of(d, a);
  if (v != std::floor(v) || v < 0 || v > 1e9) {
    throw ParamSpaceError("parameter '" + d.name() + "' needs an integer value, got " +
                          format_atom(a));
  }
  return static_cast<int>(v);
}

// Majority class (lowest index on ties) or mean target.
double constant_prediction(const Dataset& train) {
  if (train.task == Task::Regression) {
    double s = 0.0;
    for (double v : train.target) s += v;
    return s / static_cast<double>(train.size());
  }
  std::vector<std::size_t> counts(std::max<std::size_t>(train.n_classes(), 1));
  for (double v : train.target) ++counts[static_cast<std::size_t>(v)];
  return static_cast<double>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

}  // namespace

void Learner::check_space(const ParamSpace& space) const {
  const ParamSpace known = default_space();
  for (const auto& d : space.domains()) {
    if (!known.index_of(d.name())) {
      throw ParamSpaceError("learner " + name() + " has no parameter '" + d.name() + "'");
    }
  }
}

DtParams DecisionTreeLearner::params(const ParamSpace& space, const Settings& s) {
  validate(space, s);
  DtParams p;
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    const auto& d = space.domains()[i];
    if (d.name() == "min_impurity") {
      p.min_impurity_decrease = number_of(d, s.atoms[i]);
    } else if (d.name() == "min_samples") {
      p.min_samples_split = integer_of(d, s.atoms[i]);
    } else if (d.name() == "max_depth") {
      p.max_depth = integer_of(d, s.atoms[i]);
    } else {
      throw ParamSpaceError("learner DT has no parameter '" + d.name() + "'");
    }
  }
  return p;
}

std::vector<double> DecisionTreeLearner::fit_predict(const Dataset& train, const Matrix& test,
                                                     const ParamSpace& space, const Settings& s,
                                                     const Deadline& deadline) const {
  return predict(train_tree(train, params(space, s), deadline), test);
}

SvmParams SvmLearner::params(const ParamSpace& space, const Settings& s) {
  validate(space, s);
  SvmParams p;
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    const auto& d = space.domains()[i];
    if (d.name() == "gamma") {
      const auto g = symbol_of(d, s.atoms[i]);
      if (g == "scale") {
        p.gamma = GammaMode::Scale;
      } else if (g == "auto") {
        p.gamma = GammaMode::Auto;
      } else {
        throw ParamSpaceError("unknown gamma mode '" + g + "'");
      }
    } else if (d.name() == "kernel") {
      static const std::map<std::string, Kernel> kernels{{"linear", Kernel::Linear},
                                                         {"poly", Kernel::Poly},
                                                         {"rbf", Kernel::Rbf},
                                                         {"sigmoid", Kernel::Sigmoid}};
      const auto k = symbol_of(d, s.atoms[i]);
      auto it = kernels.find(k);
      if (it == kernels.end()) throw ParamSpaceError("unknown kernel '" + k + "'");
      p.kernel = it->second;
    } else if (d.name() == "C") {
      p.c_value = number_of(d, s.atoms[i]);
      if (!(p.c_value > 0)) throw ParamSpaceError("C must be positive");
    } else {
      throw ParamSpaceError("learner SVM has no parameter '" + d.name() + "'");
    }
  }
  return p;
}

std::vector<double> SvmLearner::fit_predict(const Dataset& train, const Matrix& test,
                                            const ParamSpace& space, const Settings& s,
                                            const Deadline& deadline) const {
  const SvmParams p = params(space, s);
  auto [scaled, stats] = standardize(train);
  const SvmModel model = train_svm(scaled, p, options_, deadline);
  return predict(model, standardize(test, stats).first);
}

ParamSpace SleepLearner::default_space() const {
  return ParamSpace({{"sleep_seconds", {Atom{0.0}, Atom{2.0}}}});
}

std::vector<double> SleepLearner::fit_predict(const Dataset& train, const Matrix& test,
                                              const ParamSpace& space, const Settings& s,
                                              const Deadline& deadline) const {
  validate(space, s);
  double seconds = 0.0;
  if (auto i = space.index_of("sleep_seconds")) {
    seconds = number_of(space.domains()[*i], s.atoms[*i]);
  }
  const auto until = std::chrono::steady_clock::now() +
                     std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                         std::chrono::duration<double>(seconds));
  while (std::chrono::steady_clock::now() < until) {
    deadline.check();
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  return std::vector<double>(test.rows(), constant_prediction(train));
}

std::shared_ptr<const Learner> make_learner(const std::string& name) {
  if (name == "DT") return std::make_shared<DecisionTreeLearner>();
  if (name == "SVM") return std::make_shared<SvmLearner>();
  if (name == "SLEEP") return std::make_shared<SleepLearner>();
  throw ParamSpaceError("unknown learner '" + name + "' (expected DT or SVM)");
}

double accuracy(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw LearnerError("accuracy: length mismatch or empty input");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double r_squared(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw LearnerError("r_squared: length mismatch or empty input");
  }
  double mean = 0.0;
  for (double v : truth) mean += v;
  mean /= static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

Evaluation cross_validate(const Dataset& data, const FoldPlan& folds, const Learner& learner,
                          const ParamSpace& space, const Settings& s, double timeout_seconds) {
  folds.validate(data.size());
  validate(space, s);
  const Deadline deadline = Deadline::after(std::chrono::duration<double>(timeout_seconds));
  std::vector<double> scores;
  scores.reserve(folds.n_folds);
  try {
    for (std::size_t f = 0; f < folds.n_folds; ++f) {
      deadline.check();
      const auto train_rows = folds.train_rows(f);
      const auto test_rows = folds.test_rows(f);
      const Dataset train = data.select_rows(train_rows);
      const Matrix test = data.features.select_rows(test_rows);
      std::vector<double> truth;
      truth.reserve(test_rows.size());
      for (auto r : test_rows) truth.push_back(data.target[r]);
      const auto pred = learner.fit_predict(train, test, space, s, deadline);
      scores.push_back(data.task == Task::Classification ? accuracy(truth, pred)
                                                         : r_squared(truth, pred));
    }
    deadline.check();
  } catch (const TimeoutError&) {
    return {kTimeoutSentinel, 0.0, true, false};
  }

  Evaluation ev;
  for (double v : scores) ev.mean += v;
  ev.mean /= static_cast<double>(scores.size());
  double ss = 0.0;
  for (double v : scores) ss += (v - ev.mean) * (v - ev.mean);
  ev.std = std::sqrt(ss / static_cast<double>(scores.size()));
  if (ev.mean < kTimeoutSentinel) {
    ev.mean = kTimeoutSentinel;
    ev.clamped = true;
  }
  return ev;
}

}  // namespace perfmap
