#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "perfmap/context.hpp"
#include "perfmap/dataset.hpp"
#include "perfmap/deadline.hpp"
#include "perfmap/learners.hpp"
#include "perfmap/paramspace.hpp"

namespace perfmap {

/// Uniform train/predict interface over the learners a context can name.
class Learner {
 public:
  virtual ~Learner() = default;

  virtual std::string name() const = 0;
  virtual ParamSpace default_space() const = 0;

  /// Throws ParamSpaceError if a domain name is not one of this learner's
  /// parameters. Parameters absent from the space keep their defaults.
  void check_space(const ParamSpace& space) const;

  /// One-off transformation of the whole dataset before folds are cut.
  virtual Dataset prepare(const Dataset& ds) const { return ds; }

  /// Trains on `train` with the given settings and predicts `test`.
  virtual std::vector<double> fit_predict(const Dataset& train, const Matrix& test,
                                          const ParamSpace& space, const Settings& s,
                                          const Deadline& deadline) const = 0;
};

class DecisionTreeLearner final : public Learner {
 public:
  std::string name() const override { return "DT"; }
  ParamSpace default_space() const override { return builtin_space(LearnerKind::DecisionTree); }
  std::vector<double> fit_predict(const Dataset& train, const Matrix& test,
                                  const ParamSpace& space, const Settings& s,
                                  const Deadline& deadline) const override;

  static DtParams params(const ParamSpace& space, const Settings& s);
};

/// Categoricals with more than two categories are one-hot expanded up front;
/// every fold is standardized with its own training statistics.
class SvmLearner final : public Learner {
 public:
  explicit SvmLearner(SmoOptions options = {}) : options_(options) {}

  std::string name() const override { return "SVM"; }
  ParamSpace default_space() const override { return builtin_space(LearnerKind::Svm); }
  Dataset prepare(const Dataset& ds) const override { return one_hot_expand(ds); }
  std::vector<double> fit_predict(const Dataset& train, const Matrix& test,
                                  const ParamSpace& space, const Settings& s,
                                  const Deadline& deadline) const override;

  static SvmParams params(const ParamSpace& space, const Settings& s);

 private:
  SmoOptions options_;
};

/// Test hook: sleeps for `sleep_seconds` (polling the deadline), then predicts
/// the majority class or mean target of the training rows.
class SleepLearner final : public Learner {
 public:
  std::string name() const override { return "SLEEP"; }
  ParamSpace default_space() const override;
  std::vector<double> fit_predict(const Dataset& train, const Matrix& test,
                                  const ParamSpace& space, const Settings& s,
                                  const Deadline& deadline) const override;
};

/// "DT", "SVM" or "SLEEP"; throws ParamSpaceError for anything else.
std::shared_ptr<const Learner> make_learner(const std::string& name);

struct Evaluation {
  double mean = 0.0;
  double std = 0.0;
  bool timed_out = false;
  bool clamped = false;  // mean was below the sentinel and raised to it

  bool operator==(const Evaluation&) const = default;
};

double accuracy(std::span<const double> truth, std::span<const double> predicted);

/// 1 - SSres/SStot. A constant truth vector scores 1 if matched exactly, else 0.
double r_squared(std::span<const double> truth, std::span<const double> predicted);

/// k-fold estimate: accuracy for classification, R^2 for regression, mean and
/// population std over folds. `data` must already be learner.prepare()d. The
/// whole estimate shares one deadline; running past it yields a timed-out
/// evaluation carrying the sentinel.
Evaluation cross_validate(const Dataset& data, const FoldPlan& folds, const Learner& learner,
                          const ParamSpace& space, const Settings& s, double timeout_seconds);

}  // namespace perfmap
