#include "perfmap/metaopt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>
#include <unordered_set>

#include "perfmap/rng.hpp"

namespace perfmap {

void LearningContext::validate() const {
  if (!learner) throw std::invalid_argument("context has no learner");
  if (!dataset) throw std::invalid_argument("context has no dataset");
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (!(timeout_seconds > 0.0)) throw std::invalid_argument("timeout must be > 0");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  learner->check_space(space);
  if (optimizer == OptimizerKind::Sga) sga.validate();
}

ContextInfo LearningContext::describe() const {
  ContextInfo c;
  c.learner = learner->name();
  c.optimizer = to_string(optimizer);
  c.dataset = dataset->name;
  c.task = to_string(dataset->task);
  c.rows = dataset->size();
  c.subsample = subsample;
  c.folds = folds;
  c.seed = seed;
  c.timeout = timeout_seconds;
  if (optimizer == OptimizerKind::Sga) c.sga = sga;
  c.space = space;
  return c;
}

// ---------------------------------------------------------------------------

Evaluation FitnessCache::get_or_compute(const std::string& key,
                                        const std::function<Evaluation()>& compute) {
  std::promise<Evaluation> promise;
  std::shared_future<Evaluation> pending;
  {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it != entries_.end()) {
      pending = it->second;
    } else {
      entries_.emplace(key, promise.get_future().share());
    }
  }
  if (pending.valid()) return pending.get();  // first writer wins; wait for it

  ++computations_;
  try {
    Evaluation ev = compute();
    promise.set_value(ev);
    return ev;
  } catch (...) {
    promise.set_exception(std::current_exception());
    throw;
  }
}

std::optional<Evaluation> FitnessCache::find(const std::string& key) const {
  std::shared_future<Evaluation> fut;
  {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    fut = it->second;
  }
  if (fut.wait_for(std::chrono::seconds(0)) != std::future_status::ready) return std::nullopt;
  return fut.get();
}

std::size_t FitnessCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

// ---------------------------------------------------------------------------

Evaluator::Evaluator(const LearningContext& lc) : lc_(lc) {
  lc_.validate();
  prepared_ = lc_.learner->prepare(*lc_.dataset);
  folds_ = make_folds(prepared_, lc_.folds, lc_.seed);
}

Evaluation Evaluator::compute(const std::string& key, const Settings& s) {
  return cache_.get_or_compute(key, [&] {
    return cross_validate(prepared_, folds_, *lc_.learner, lc_.space, s, lc_.timeout_seconds);
  });
}

Evaluation Evaluator::evaluate(const Settings& s) { return compute(canonical_key(lc_.space, s), s); }

std::vector<Evaluation> Evaluator::evaluate_all(const std::vector<Settings>& batch) {
  std::vector<std::string> keys;
  keys.reserve(batch.size());
  for (const auto& s : batch) keys.push_back(canonical_key(lc_.space, s));

  std::vector<std::size_t> todo;  // first occurrence of each uncached key
  std::unordered_set<std::string> queued;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!cache_.find(keys[i]) && queued.insert(keys[i]).second) todo.push_back(i);
  }

  const std::size_t n_threads = std::min(lc_.jobs, todo.size());
  if (n_threads > 1) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
      for (std::size_t t = next++; t < todo.size(); t = next++) {
        try {
          compute(keys[todo[t]], batch[todo[t]]);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<Evaluation> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) out.push_back(compute(keys[i], batch[i]));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

// Distinct settings in first-request order, with their evaluations.
class RunLog {
 public:
  explicit RunLog(const ParamSpace& space) : space_(space) {}

  void add(const Settings& s, const Evaluation& e) {
    if (!seen_.insert(canonical_key(space_, s)).second) return;
    entries_.push_back({s, e.mean, e.std, e.timed_out, e.clamped});
  }

  const std::vector<MapEntry>& entries() const { return entries_; }

 private:
  const ParamSpace& space_;
  std::unordered_set<std::string> seen_;
  std::vector<MapEntry> entries_;
};

OptimizationResult finish(const Evaluator& ev, const RunLog& log, Clock::time_point start,
                          std::size_t runs_before, OptimizerKind kind) {
  const LearningContext& lc = ev.context();
  OptimizationResult r;
  r.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  r.training_runs = ev.training_runs() - runs_before;
  LearningContext described = lc;
  described.optimizer = kind;
  r.map.context = described.describe();
  r.map.entries = log.entries();
  r.map.evaluated_points = r.map.entries.size();
  // Wall time varies between runs, so strict-deterministic maps leave it out.
  if (lc.jobs > 1) r.map.wall_time_seconds = r.wall_seconds;
  const MapEntry& top = best(r.map);
  r.best = top.settings;
  r.best_mean = top.mean;
  return r;
}

}  // namespace

OptimizationResult grid_search(Evaluator& ev) {
  const auto start = Clock::now();
  const std::size_t runs_before = ev.training_runs();
  const ParamSpace& space = ev.context().space;
  const auto points = enumerate(space);
  const auto evals = ev.evaluate_all(points);
  RunLog log(space);
  for (std::size_t i = 0; i < points.size(); ++i) log.add(points[i], evals[i]);
  return finish(ev, log, start, runs_before, OptimizerKind::Grid);
}

OptimizationResult grid_search(const LearningContext& lc) {
  Evaluator ev(lc);
  return grid_search(ev);
}

std::vector<double> selection_weights(std::span<const double> fitness) {
  constexpr double kEpsilon = 1e-6;
  if (fitness.empty()) return {};
  const double lo = *std::min_element(fitness.begin(), fitness.end());
  std::vector<double> w;
  w.reserve(fitness.size());
  for (double f : fitness) w.push_back(f - lo + kEpsilon);
  return w;
}

OptimizationResult sga(Evaluator& ev) {
  const auto start = Clock::now();
  const std::size_t runs_before = ev.training_runs();
  const LearningContext& lc = ev.context();
  const SgaConfig& cfg = lc.sga;
  cfg.validate();
  const ParamSpace& space = lc.space;
  const std::size_t n_pop = cfg.population_size;
  const std::size_t n_genes = space.dimension();

  Rng rng(cfg.seed);
  RunLog log(space);
  auto evaluate = [&](const std::vector<Genes>& group) {
    std::vector<Settings> settings;
    settings.reserve(group.size());
    for (const auto& g : group) settings.push_back(decode(space, g));
    const auto evals = ev.evaluate_all(settings);
    std::vector<double> fitness;
    for (std::size_t i = 0; i < settings.size(); ++i) {
      log.add(settings[i], evals[i]);
      fitness.push_back(evals[i].mean);
    }
    return fitness;
  };
  auto random_gene = [&](std::size_t d) { return uniform_index(rng, space.domains()[d].size()); };

  std::vector<Genes> pop(n_pop, Genes(n_genes));
  for (auto& ind : pop) {
    for (std::size_t d = 0; d < n_genes; ++d) ind[d] = random_gene(d);
  }
  std::vector<double> fitness = evaluate(pop);
  std::size_t generation = 1;
  std::vector<double> best_by_generation{*std::max_element(fitness.begin(), fitness.end())};

  // The elite is never among the replaced, hence at most n_pop - 1 offspring.
  const auto n_replace = std::min<std::size_t>(
      static_cast<std::size_t>(std::ceil(cfg.replacement_rate * static_cast<double>(n_pop) - 1e-9)),
      n_pop - 1);

  while (generation < cfg.max_generations && best_by_generation.back() < cfg.stop_fitness) {
    const auto weights = selection_weights(fitness);
    std::vector<double> cumulative(weights.size());
    std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
    auto spin = [&] {
      const double r = uniform_unit(rng) * cumulative.back();
      const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
      return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), n_pop - 1);
    };
    auto mutate = [&](Genes& g) {
      for (std::size_t d = 0; d < n_genes; ++d) {
        if (uniform_unit(rng) < cfg.mutation_rate) g[d] = random_gene(d);
      }
    };

    std::vector<Genes> offspring;
    while (offspring.size() < n_replace) {
      Genes a = pop[spin()];
      Genes b = pop[spin()];
      if (uniform_unit(rng) < cfg.crossover_rate) {
        for (std::size_t d = 0; d < n_genes; ++d) {
          if (uniform_unit(rng) < 0.5) std::swap(a[d], b[d]);
        }
      }
      mutate(a);
      mutate(b);
      offspring.push_back(std::move(a));
      if (offspring.size() < n_replace) offspring.push_back(std::move(b));
    }
    const auto child_fitness = evaluate(offspring);

    const auto elite = static_cast<std::size_t>(
        std::max_element(fitness.begin(), fitness.end()) - fitness.begin());
    std::vector<std::size_t> victims;
    for (std::size_t i = 0; i < n_pop; ++i) {
      if (i != elite) victims.push_back(i);
    }
    std::stable_sort(victims.begin(), victims.end(),
                     [&](std::size_t x, std::size_t y) { return fitness[x] < fitness[y]; });
    for (std::size_t c = 0; c < offspring.size(); ++c) {
      pop[victims[c]] = std::move(offspring[c]);
      fitness[victims[c]] = child_fitness[c];
    }
    ++generation;
    best_by_generation.push_back(*std::max_element(fitness.begin(), fitness.end()));
  }

  OptimizationResult r = finish(ev, log, start, runs_before, OptimizerKind::Sga);
  r.map.generations = generation;
  r.best_by_generation = std::move(best_by_generation);
  return r;
}

OptimizationResult sga(const LearningContext& lc) {
  Evaluator ev(lc);
  return sga(ev);
}

OptimizationResult run_context(const LearningContext& lc) {
  return lc.optimizer == OptimizerKind::Grid ? grid_search(lc) : sga(lc);
}

}  // namespace perfmap
