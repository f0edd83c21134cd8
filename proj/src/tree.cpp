#include <algorithm>
#include <cstdint>
#include <numeric>

#include "perfmap/learners.hpp"

namespace perfmap {

namespace {

struct NodeStats {
  double impurity = 0.0;  // Gini or variance
  double value = 0.0;
  bool pure = false;
};

struct Pending {
  int node;
  std::size_t begin;
  std::size_t end;
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double child_impurity_sum = 0.0;  // sum over children of n_child * impurity
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, Task task, std::size_t n_classes,
              const DtParams& params, const Deadline& deadline)
      : x_(x),
        y_(y),
        task_(task),
        n_classes_(std::max<std::size_t>(n_classes, 1)),
        params_(params),
        deadline_(deadline),
        n_(x.rows()),
        lists_(std::max<std::size_t>(x.cols(), 1)),
        order_(lists_ * n_),
        scratch_(n_),
        goes_left_(n_, 0) {
    if (task_ == Task::Classification) {
      labels_.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) {
        labels_[i] = static_cast<std::uint32_t>(y_[i]);
        if (labels_[i] >= n_classes_) throw LearnerError("class index out of range");
      }
      left_counts_.resize(n_classes_);
      total_counts_.resize(n_classes_);
    }
    for (std::size_t f = 0; f < lists_; ++f) {
      auto first = order_.begin() + static_cast<std::ptrdiff_t>(f * n_);
      std::iota(first, first + static_cast<std::ptrdiff_t>(n_), 0u);
      if (f < x_.cols()) {
        std::stable_sort(first, first + static_cast<std::ptrdiff_t>(n_),
                         [&](std::uint32_t a, std::uint32_t b) { return x_(a, f) < x_(b, f); });
      }
    }
  }

  TreeModel build() {
    TreeModel model;
    model.task = task_;
    model.n_features = x_.cols();
    model.nodes.emplace_back();
    std::vector<Pending> stack{{0, 0, n_}};
    while (!stack.empty()) {
      deadline_.check();
      const Pending cur = stack.back();
      stack.pop_back();
      const std::size_t m = cur.end - cur.begin;
      const NodeStats stats = node_stats(cur.begin, cur.end);
      {
        TreeNode& node = model.nodes[static_cast<std::size_t>(cur.node)];
        node.samples = m;
        node.impurity = stats.impurity;
        node.value = stats.value;
      }
      const int depth = model.nodes[static_cast<std::size_t>(cur.node)].depth;
      if (depth >= params_.max_depth || m < static_cast<std::size_t>(params_.min_samples_split) ||
          stats.pure || x_.cols() == 0) {
        continue;
      }
      const Split split = best_split(cur.begin, cur.end);
      if (split.feature < 0) continue;
      const double decrease =
          (static_cast<double>(m) * stats.impurity - split.child_impurity_sum) /
          static_cast<double>(n_);
      if (decrease + 1e-12 < params_.min_impurity_decrease) continue;

      const std::size_t n_left = partition(cur.begin, cur.end, split);
      const int left = static_cast<int>(model.nodes.size());
      const int right = left + 1;
      model.nodes.resize(model.nodes.size() + 2);
      TreeNode& node = model.nodes[static_cast<std::size_t>(cur.node)];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = left;
      node.right = right;
      node.weighted_decrease = decrease;
      model.nodes[static_cast<std::size_t>(left)].depth = depth + 1;
      model.nodes[static_cast<std::size_t>(right)].depth = depth + 1;
      stack.push_back({right, cur.begin + n_left, cur.end});
      stack.push_back({left, cur.begin, cur.begin + n_left});
    }
    return model;
  }

 private:
  std::uint32_t sample(std::size_t list, std::size_t pos) const { return order_[list * n_ + pos]; }

  NodeStats node_stats(std::size_t begin, std::size_t end) {
    NodeStats s;
    const double m = static_cast<double>(end - begin);
    if (task_ == Task::Classification) {
      std::fill(total_counts_.begin(), total_counts_.end(), 0.0);
      for (std::size_t p = begin; p < end; ++p) total_counts_[labels_[sample(0, p)]] += 1.0;
      double sq = 0.0;
      std::size_t best = 0;
      for (std::size_t c = 0; c < n_classes_; ++c) {
        sq += total_counts_[c] * total_counts_[c];
        if (total_counts_[c] > total_counts_[best]) best = c;
      }
      s.impurity = 1.0 - sq / (m * m);
      s.value = static_cast<double>(best);
      s.pure = total_counts_[best] == m;
    } else {
      double sum = 0.0, sumsq = 0.0;
      double lo = y_[sample(0, begin)], hi = lo;
      for (std::size_t p = begin; p < end; ++p) {
        const double v = y_[sample(0, p)];
        sum += v;
        sumsq += v * v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      s.value = sum / m;
      s.impurity = std::max(0.0, sumsq / m - s.value * s.value);
      s.pure = lo == hi;
      if (s.pure) s.impurity = 0.0;
    }
    return s;
  }

  Split best_split(std::size_t begin, std::size_t end) {
    Split best;
    double best_sum = std::numeric_limits<double>::infinity();
    const std::size_t m = end - begin;
    const double tie_eps = 1e-12 * static_cast<double>(m);

    double total_sum = 0.0, total_sumsq = 0.0, total_sq_counts = 0.0;
    if (task_ == Task::Classification) {
      for (double c : total_counts_) total_sq_counts += c * c;
    } else {
      for (std::size_t p = begin; p < end; ++p) {
        const double v = y_[sample(0, p)];
        total_sum += v;
        total_sumsq += v * v;
      }
    }

    for (std::size_t f = 0; f < x_.cols(); ++f) {
      if (x_(sample(f, begin), f) == x_(sample(f, end - 1), f)) continue;  // constant here
      double left_sq = 0.0, right_sq = total_sq_counts;
      double left_sum = 0.0, left_sumsq = 0.0;
      if (task_ == Task::Classification) std::fill(left_counts_.begin(), left_counts_.end(), 0.0);
      for (std::size_t p = begin; p + 1 < end; ++p) {
        const std::uint32_t s = sample(f, p);
        if (task_ == Task::Classification) {
          const auto c = labels_[s];
          const double a = left_counts_[c];
          const double b = total_counts_[c] - a;
          left_sq += 2.0 * a + 1.0;
          right_sq -= 2.0 * b - 1.0;
          left_counts_[c] = a + 1.0;
        } else {
          left_sum += y_[s];
          left_sumsq += y_[s] * y_[s];
        }
        const double xv = x_(s, f);
        const double xn = x_(sample(f, p + 1), f);
        if (!(xv < xn)) continue;

        const double nl = static_cast<double>(p + 1 - begin);
        const double nr = static_cast<double>(m) - nl;
        double child;
        if (task_ == Task::Classification) {
          child = (nl - left_sq / nl) + (nr - right_sq / nr);
        } else {
          const double right_sum = total_sum - left_sum;
          const double right_sumsq = total_sumsq - left_sumsq;
          child = std::max(0.0, left_sumsq - left_sum * left_sum / nl) +
                  std::max(0.0, right_sumsq - right_sum * right_sum / nr);
        }
        if (child < best_sum - tie_eps) {
          best_sum = child;
          best.feature = static_cast<int>(f);
          double mid = xv + (xn - xv) / 2.0;
          if (!(mid < xn)) mid = xv;
          best.threshold = mid;
        }
      }
    }
    best.child_impurity_sum = best_sum;
    return best;
  }

  // Stable partition of every feature list; returns the left child's size.
  std::size_t partition(std::size_t begin, std::size_t end, const Split& split) {
    const auto f = static_cast<std::size_t>(split.feature);
    std::size_t n_left = 0;
    for (std::size_t p = begin; p < end; ++p) {
      const std::uint32_t s = sample(0, p);
      const bool left = x_(s, f) <= split.threshold;
      goes_left_[s] = left ? 1 : 0;
      n_left += left ? 1 : 0;
    }
    for (std::size_t list = 0; list < lists_; ++list) {
      std::uint32_t* base = order_.data() + list * n_;
      std::size_t l = begin, r = 0;
      for (std::size_t p = begin; p < end; ++p) {
        const std::uint32_t s = base[p];
        if (goes_left_[s]) {
          base[l++] = s;
        } else {
          scratch_[r++] = s;
        }
      }
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r), base + l);
    }
    return n_left;
  }

  const Matrix& x_;
  std::span<const double> y_;
  Task task_;
  std::size_t n_classes_;
  DtParams params_;
  const Deadline& deadline_;
  std::size_t n_;
  std::size_t lists_;
  std::vector<std::uint32_t> order_;
  std::vector<std::uint32_t> scratch_;
  std::vector<char> goes_left_;
  std::vector<std::uint32_t> labels_;
  std::vector<double> left_counts_;
  std::vector<double> total_counts_;
};

}  // namespace

int TreeModel::depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

std::size_t TreeModel::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

TreeModel train_tree(const Matrix& x, std::span<const double> y, Task task, std::size_t n_classes,
                     const DtParams& params, const Deadline& deadline) {
  if (x.rows() == 0) throw LearnerError("empty training partition");
  if (y.size() != x.rows()) throw LearnerError("target length does not match rows");
  if (params.min_samples_split < 2) throw LearnerError("min_samples_split must be >= 2");
  if (params.max_depth < 1) throw LearnerError("max_depth must be >= 1");
  if (!(params.min_impurity_decrease >= 0.0)) {
    throw LearnerError("min_impurity_decrease must be >= 0");
  }
  return TreeBuilder(x, y, task, n_classes, params, deadline).build();
}

TreeModel train_tree(const Dataset& train, const DtParams& params, const Deadline& deadline) {
  return train_tree(train.features, train.target, train.task, train.n_classes(), params, deadline);
}

std::vector<double> predict(const TreeModel& model, const Matrix& rows) {
  if (rows.cols() != model.n_features) {
    throw LearnerError("predict: expected " + std::to_string(model.n_features) +
                       " columns, got " + std::to_string(rows.cols()));
  }
  std::vector<double> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    std::size_t i = 0;
    while (!model.nodes[i].is_leaf()) {
      const auto& n = model.nodes[i];
      i = static_cast<std::size_t>(rows(r, static_cast<std::size_t>(n.feature)) <= n.threshold
                                       ? n.left
                                       : n.right);
    }
    out[r] = model.nodes[i].value;
  }
  return out;
}

std::vector<double> predict(const TrainedModel& model, const Matrix& rows) {
  return std::visit([&](const auto& m) { return predict(m, rows); }, model);
}

}  // namespace perfmap
