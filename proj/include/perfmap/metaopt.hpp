#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "perfmap/context.hpp"
#include "perfmap/crossval.hpp"
#include "perfmap/dataset.hpp"
#include "perfmap/paramspace.hpp"
#include "perfmap/perfmap.hpp"

namespace perfmap {

struct LearningContext {
  std::shared_ptr<const Learner> learner;
  OptimizerKind optimizer = OptimizerKind::Grid;
  SgaConfig sga;
  ParamSpace space;
  std::shared_ptr<const Dataset> dataset;
  std::size_t folds = 10;
  std::uint64_t seed = 0;  // fold assignment
  double timeout_seconds = 40.0;
  std::size_t jobs = 1;  // 1 = strict-deterministic, single-threaded
  std::optional<std::size_t> subsample;  // recorded only; rows are already reduced

  /// Throws std::invalid_argument / ParamSpaceError on an inconsistent context.
  void validate() const;
  ContextInfo describe() const;
};

/// Memo of settings key -> evaluation. The first request for a key computes
/// it; concurrent requests for the same key wait for that one computation.
class FitnessCache {
 public:
  Evaluation get_or_compute(const std::string& key, const std::function<Evaluation()>& compute);
  std::optional<Evaluation> find(const std::string& key) const;
  std::size_t size() const;
  /// Number of times `compute` has actually been invoked.
  std::size_t computations() const { return computations_.load(); }

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::shared_future<Evaluation>> entries_;
  std::atomic<std::size_t> computations_{0};
};

/// Fitness function of a context: cross-validation through a shared cache and
/// a fixed fold plan. Optimizers sharing one evaluator share its cache.
class Evaluator {
 public:
  explicit Evaluator(const LearningContext& lc);

  Evaluation evaluate(const Settings& s);
  /// Evaluates a batch, using up to lc.jobs threads for the uncached points.
  /// Results are returned in batch order and do not depend on the thread count.
  std::vector<Evaluation> evaluate_all(const std::vector<Settings>& batch);

  /// Cross-validation runs performed so far (cache misses).
  std::size_t training_runs() const { return cache_.computations(); }
  const FitnessCache& cache() const { return cache_; }
  const FoldPlan& folds() const { return folds_; }
  const LearningContext& context() const { return lc_; }

 private:
  Evaluation compute(const std::string& key, const Settings& s);

  LearningContext lc_;
  Dataset prepared_;
  FoldPlan folds_;
  FitnessCache cache_;
};

struct OptimizationResult {
  Settings best;
  double best_mean = 0.0;
  PerformanceMap map;
  std::size_t training_runs = 0;
  double wall_seconds = 0.0;  // also recorded in the map unless jobs == 1
  std::vector<double> best_by_generation;  // SGA only
};

OptimizationResult grid_search(const LearningContext& lc);
OptimizationResult grid_search(Evaluator& ev);

OptimizationResult sga(const LearningContext& lc);
OptimizationResult sga(Evaluator& ev);

/// Dispatches on lc.optimizer.
OptimizationResult run_context(const LearningContext& lc);

/// Roulette weights: fitness - min(fitness) + 1e-6.
std::vector<double> selection_weights(std::span<const double> fitness);

}  // namespace perfmap
