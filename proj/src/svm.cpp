#include <algorithm>
#include <cmath>
#include <limits>
#include <list>

#include "perfmap/learners.hpp"

namespace perfmap {

double resolve_gamma(GammaMode mode, const Matrix& x) {
  const double nf = static_cast<double>(std::max<std::size_t>(x.cols(), 1));
  if (mode == GammaMode::Auto) return 1.0 / nf;
  const auto& d = x.data();
  if (d.empty()) return 1.0;
  double sum = 0.0;
  for (double v : d) sum += v;
  const double mean = sum / static_cast<double>(d.size());
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(d.size());
  return var > 0.0 ? 1.0 / (nf * var) : 1.0;
}

namespace {

double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += u[k] * v[k];
  return s;
}

double kernel_from_dot(Kernel kernel, double gamma, double coef0, int degree, double uv,
                       double uu, double vv) {
  switch (kernel) {
    case Kernel::Linear: return uv;
    case Kernel::Poly: return std::pow(gamma * uv + coef0, degree);
    case Kernel::Rbf: return std::exp(-gamma * std::max(0.0, uu + vv - 2.0 * uv));
    case Kernel::Sigmoid: return std::tanh(gamma * uv + coef0);
  }
  return uv;
}

// LRU cache of kernel rows K(x_i, .) over the training rows.
class KernelRows {
 public:
  KernelRows(const Matrix& x, Kernel kernel, double gamma, double coef0, int degree,
             std::size_t budget_bytes)
      : x_(x), kernel_(kernel), gamma_(gamma), coef0_(coef0), degree_(degree) {
    const std::size_t n = x.rows();
    norms_.resize(n);
    diag_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      norms_[i] = dot(x.row(i), x.row(i));
      diag_[i] = kernel_from_dot(kernel, gamma, coef0, degree, norms_[i], norms_[i], norms_[i]);
    }
    capacity_ = std::max<std::size_t>(2, budget_bytes / (sizeof(double) * std::max<std::size_t>(n, 1)));
    rows_.resize(n);
    where_.resize(n);
    cached_.assign(n, false);
  }

  double diag(std::size_t i) const { return diag_[i]; }

  // The returned span stays valid until two further rows are requested.
  std::span<const double> row(std::size_t i) {
    if (cached_[i]) {
      lru_.splice(lru_.begin(), lru_, where_[i]);
      return rows_[i];
    }
    if (lru_.size() >= capacity_) {
      const std::size_t victim = lru_.back();
      lru_.pop_back();
      cached_[victim] = false;
      std::vector<double>().swap(rows_[victim]);
    }
    auto& r = rows_[i];
    r.resize(x_.rows());
    const auto xi = x_.row(i);
    for (std::size_t j = 0; j < x_.rows(); ++j) {
      r[j] = kernel_from_dot(kernel_, gamma_, coef0_, degree_, dot(xi, x_.row(j)), norms_[i],
                             norms_[j]);
    }
    lru_.push_front(i);
    where_[i] = lru_.begin();
    cached_[i] = true;
    return r;
  }

 private:
  const Matrix& x_;
  Kernel kernel_;
  double gamma_, coef0_;
  int degree_;
  std::vector<double> norms_, diag_;
  std::size_t capacity_ = 2;
  std::vector<std::vector<double>> rows_;
  std::list<std::size_t> lru_;
  std::vector<std::list<std::size_t>::iterator> where_;
  std::vector<bool> cached_;
};

struct SolverResult {
  std::vector<double> alpha;
  double rho = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Minimises 0.5 a'Qa + p'a subject to y'a = 0 and 0 <= a <= C, where
// Q_st = y_s y_t K(row_s, row_t) and variable t refers to training row
// row_of[t]. Second-order working-set selection as in Fan, Chen & Lin (2005),
// with libsvm-style shrinking: variables stuck at a bound are moved past
// `active` and their gradients rebuilt from g_bar before the final check.
SolverResult solve_dual(KernelRows& kernel, std::vector<std::size_t> row_of, std::vector<double> y,
                        std::vector<double> p, double c, const SmoOptions& opt,
                        const Deadline& deadline) {
  constexpr double kTau = 1e-12;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t l = y.size();
  std::vector<double> a(l, 0.0);
  std::vector<double> g = p;
  std::vector<double> g_bar(l, 0.0);  // sum over a_j == C of C * Q_tj
  std::vector<double> qd(l);
  std::vector<std::size_t> var(l);  // original variable index
  for (std::size_t t = 0; t < l; ++t) {
    qd[t] = kernel.diag(row_of[t]);
    var[t] = t;
  }
  const auto upper = [&](std::size_t t) { return a[t] >= c; };
  const auto lower = [&](std::size_t t) { return a[t] <= 0; };
  const auto swap_vars = [&](std::size_t s, std::size_t t) {
    std::swap(row_of[s], row_of[t]);
    std::swap(y[s], y[t]);
    std::swap(p[s], p[t]);
    std::swap(a[s], a[t]);
    std::swap(g[s], g[t]);
    std::swap(g_bar[s], g_bar[t]);
    std::swap(qd[s], qd[t]);
    std::swap(var[s], var[t]);
  };

  std::size_t active = l;
  bool unshrunk = false;
  const auto reconstruct_gradient = [&] {
    if (active == l) return;
    for (std::size_t t = active; t < l; ++t) g[t] = g_bar[t] + p[t];
    for (std::size_t j = 0; j < active; ++j) {
      if (upper(j) || lower(j)) continue;
      const auto kj = kernel.row(row_of[j]);
      for (std::size_t t = active; t < l; ++t) g[t] += a[j] * y[t] * y[j] * kj[row_of[t]];
    }
    active = l;
  };
  const auto shrink = [&] {
    double gmax1 = -kInf, gmax2 = -kInf;  // max over I_up of -yg, max over I_low of yg
    for (std::size_t t = 0; t < active; ++t) {
      if (y[t] > 0) {
        if (!upper(t)) gmax1 = std::max(gmax1, -g[t]);
        if (!lower(t)) gmax2 = std::max(gmax2, g[t]);
      } else {
        if (!upper(t)) gmax2 = std::max(gmax2, -g[t]);
        if (!lower(t)) gmax1 = std::max(gmax1, g[t]);
      }
    }
    if (!unshrunk && gmax1 + gmax2 <= opt.tol * 10) {
      unshrunk = true;
      reconstruct_gradient();
    }
    const auto removable = [&](std::size_t t) {
      if (upper(t)) return y[t] > 0 ? -g[t] > gmax1 : -g[t] > gmax2;
      if (lower(t)) return y[t] > 0 ? g[t] > gmax2 : g[t] > gmax1;
      return false;
    };
    for (std::size_t t = 0; t < active; ++t) {
      if (!removable(t)) continue;
      for (--active; active > t; --active) {
        if (!removable(active)) {
          swap_vars(t, active);
          break;
        }
      }
    }
  };

  SolverResult res;
  const std::size_t shrink_period = std::min<std::size_t>(l, 1000);
  std::size_t counter = shrink_period;
  while (res.iterations < opt.max_iterations) {
    if (res.iterations % 1000 == 0) deadline.check();
    if (--counter == 0) {
      counter = shrink_period;
      if (opt.shrinking) shrink();
    }

    double gmax = -kInf;
    std::ptrdiff_t i = -1;
    for (std::size_t t = 0; t < active; ++t) {
      if (y[t] > 0) {
        if (a[t] < c && -g[t] >= gmax) {
          gmax = -g[t];
          i = static_cast<std::ptrdiff_t>(t);
        }
      } else if (a[t] > 0 && g[t] >= gmax) {
        gmax = g[t];
        i = static_cast<std::ptrdiff_t>(t);
      }
    }
    std::ptrdiff_t j = -1;
    double gmax2 = -kInf;
    std::span<const double> ki;
    if (i >= 0) {
      const auto iu = static_cast<std::size_t>(i);
      ki = kernel.row(row_of[iu]);
      double obj_min = kInf;
      for (std::size_t t = 0; t < active; ++t) {
        const double k_it = ki[row_of[t]];  // y_i * Q_it = y_t * K_it
        if (y[t] > 0) {
          if (a[t] > 0) {
            const double grad_diff = gmax + g[t];
            gmax2 = std::max(gmax2, g[t]);
            if (grad_diff > 0) {
              double quad = qd[iu] + qd[t] - 2.0 * y[t] * k_it;
              if (quad <= 0) quad = kTau;
              const double obj = -(grad_diff * grad_diff) / quad;
              if (obj <= obj_min) {
                obj_min = obj;
                j = static_cast<std::ptrdiff_t>(t);
              }
            }
          }
        } else if (a[t] < c) {
          const double grad_diff = gmax - g[t];
          gmax2 = std::max(gmax2, -g[t]);
          if (grad_diff > 0) {
            double quad = qd[iu] + qd[t] + 2.0 * y[t] * k_it;
            if (quad <= 0) quad = kTau;
            const double obj = -(grad_diff * grad_diff) / quad;
            if (obj <= obj_min) {
              obj_min = obj;
              j = static_cast<std::ptrdiff_t>(t);
            }
          }
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < opt.tol) {
      // Optimal on the active set; confirm on every variable.
      if (active == l) {
        res.converged = true;
        break;
      }
      reconstruct_gradient();
      counter = 2;  // select on the full set before shrinking again
      continue;
    }
    const auto iu = static_cast<std::size_t>(i);
    const auto ju = static_cast<std::size_t>(j);
    const auto kj = kernel.row(row_of[ju]);
    const double yi = y[iu];
    const double yj = y[ju];
    const double q_ij = yi * yj * ki[row_of[ju]];
    const double old_ai = a[iu], old_aj = a[ju];
    const bool was_upper_i = upper(iu), was_upper_j = upper(ju);
    double ai = old_ai, aj = old_aj;

    if (yi != yj) {
      double quad = qd[iu] + qd[ju] + 2.0 * q_ij;
      if (quad <= 0) quad = kTau;
      const double delta = (-g[iu] - g[ju]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0) {
        if (aj < 0) {
          aj = 0;
          ai = diff;
        }
      } else if (ai < 0) {
        ai = 0;
        aj = -diff;
      }
      if (diff > 0) {
        if (ai > c) {
          ai = c;
          aj = c - diff;
        }
      } else if (aj > c) {
        aj = c;
        ai = c + diff;
      }
    } else {
      double quad = qd[iu] + qd[ju] - 2.0 * q_ij;
      if (quad <= 0) quad = kTau;
      const double delta = (g[iu] - g[ju]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c) {
        if (ai > c) {
          ai = c;
          aj = sum - c;
        }
      } else if (aj < 0) {
        aj = 0;
        ai = sum;
      }
      if (sum > c) {
        if (aj > c) {
          aj = c;
          ai = sum - c;
        }
      } else if (ai < 0) {
        ai = 0;
        aj = sum;
      }
    }
    a[iu] = ai;
    a[ju] = aj;

    const double di = (ai - old_ai) * yi;
    const double dj = (aj - old_aj) * yj;
    for (std::size_t t = 0; t < active; ++t) {
      g[t] += y[t] * (di * ki[row_of[t]] + dj * kj[row_of[t]]);
    }
    if (was_upper_i != upper(iu)) {
      const double s = upper(iu) ? c * yi : -c * yi;
      for (std::size_t t = 0; t < l; ++t) g_bar[t] += s * y[t] * ki[row_of[t]];
    }
    if (was_upper_j != upper(ju)) {
      const double s = upper(ju) ? c * yj : -c * yj;
      for (std::size_t t = 0; t < l; ++t) g_bar[t] += s * y[t] * kj[row_of[t]];
    }
    ++res.iterations;
  }
  reconstruct_gradient();

  double ub = kInf, lb = -kInf, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < l; ++t) {
    const double yg = y[t] * g[t];
    if (a[t] >= c) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (a[t] <= 0) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  if (n_free > 0) {
    res.rho = sum_free / static_cast<double>(n_free);
  } else if (std::isinf(ub) && std::isinf(lb)) {
    res.rho = 0.0;
  } else if (std::isinf(ub)) {
    res.rho = lb;
  } else if (std::isinf(lb)) {
    res.rho = ub;
  } else {
    res.rho = (ub + lb) / 2.0;
  }
  res.alpha.assign(l, 0.0);
  for (std::size_t t = 0; t < l; ++t) res.alpha[var[t]] = a[t];
  return res;
}

}  // namespace

double kernel_value(Kernel kernel, double gamma, double coef0, int degree,
                    std::span<const double> u, std::span<const double> v) {
  return kernel_from_dot(kernel, gamma, coef0, degree, dot(u, v), dot(u, u), dot(v, v));
}

SvmModel train_svm(const Matrix& x, std::span<const double> y, Task task, const SvmParams& params,
                   const SmoOptions& options, const Deadline& deadline) {
  const std::size_t n = x.rows();
  if (n < 2) throw LearnerError("SVM needs at least 2 training rows");
  if (y.size() != n) throw LearnerError("target length does not match rows");
  if (!(params.c_value > 0.0)) throw LearnerError("C must be positive");
  bool identical = true;
  for (std::size_t r = 1; r < n && identical; ++r) {
    identical = std::equal(x.row(r).begin(), x.row(r).end(), x.row(0).begin());
  }
  if (identical) throw LearnerError("degenerate training set: all rows identical");

  SvmModel model;
  model.task = task;
  model.kernel = params.kernel;
  model.gamma = resolve_gamma(params.gamma, x);
  model.coef0 = options.coef0;
  model.degree = options.degree;
  model.c_value = params.c_value;
  model.n_features = x.cols();

  KernelRows kernel(x, params.kernel, model.gamma, options.coef0, options.degree,
                    options.cache_bytes);
  std::vector<std::size_t> row_of;
  std::vector<double> sign, linear;
  if (task == Task::Classification) {
    for (double t : y) {
      if (t != 0.0 && t != 1.0) throw LearnerError("non-binary classification target");
    }
    row_of.resize(n);
    sign.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      row_of[i] = i;
      sign[i] = y[i] == 1.0 ? 1.0 : -1.0;
    }
    linear.assign(n, -1.0);
  } else {
    row_of.resize(2 * n);
    sign.resize(2 * n);
    linear.resize(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      row_of[i] = i;
      row_of[i + n] = i;
      sign[i] = 1.0;
      sign[i + n] = -1.0;
      linear[i] = options.epsilon - y[i];
      linear[i + n] = options.epsilon + y[i];
    }
  }

  SolverResult res = solve_dual(kernel, row_of, sign, linear, params.c_value, options, deadline);
  model.iterations = res.iterations;
  model.converged = res.converged;
  model.bias = -res.rho;

  std::vector<double> coef(n, 0.0);
  for (std::size_t t = 0; t < res.alpha.size(); ++t) coef[row_of[t]] += sign[t] * res.alpha[t];
  std::vector<std::size_t> sv;
  for (std::size_t i = 0; i < n; ++i) {
    if (coef[i] != 0.0) sv.push_back(i);
  }
  model.support_vectors = x.select_rows(sv);
  model.dual_coef.reserve(sv.size());
  for (auto i : sv) model.dual_coef.push_back(coef[i]);
  model.alpha = std::move(res.alpha);
  if (task == Task::Classification) model.labels = std::move(sign);
  return model;
}

SvmModel train_svm(const Dataset& train, const SvmParams& params, const SmoOptions& options,
                   const Deadline& deadline) {
  if (train.task == Task::Classification && train.n_classes() != 2) {
    throw LearnerError("non-binary classification target");
  }
  return train_svm(train.features, train.target, train.task, params, options, deadline);
}

std::vector<double> decision_function(const SvmModel& model, const Matrix& rows) {
  if (rows.cols() != model.n_features) {
    throw LearnerError("predict: expected " + std::to_string(model.n_features) +
                       " columns, got " + std::to_string(rows.cols()));
  }
  std::vector<double> out(rows.rows(), model.bias);
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const auto xr = rows.row(r);
    double s = 0.0;
    for (std::size_t k = 0; k < model.dual_coef.size(); ++k) {
      s += model.dual_coef[k] * kernel_value(model.kernel, model.gamma, model.coef0, model.degree,
                                             model.support_vectors.row(k), xr);
    }
    out[r] += s;
  }
  return out;
}

std::vector<double> predict(const SvmModel& model, const Matrix& rows) {
  auto out = decision_function(model, rows);
  if (model.task == Task::Classification) {
    for (double& v : out) v = v >= 0.0 ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace perfmap
