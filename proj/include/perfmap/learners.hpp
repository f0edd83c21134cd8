#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "perfmap/dataset.hpp"
#include "perfmap/deadline.hpp"
#include "perfmap/matrix.hpp"

namespace perfmap {

class LearnerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// CART decision tree

inline constexpr int kUnboundedDepth = std::numeric_limits<int>::max();

struct DtParams {
  double min_impurity_decrease = 0.0;
  int min_samples_split = 2;
  int max_depth = kUnboundedDepth;
};

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;  // rows with x[feature] <= threshold go left
  int left = -1;
  int right = -1;
  double value = 0.0;  // majority class index or mean target
  std::size_t samples = 0;
  double impurity = 0.0;
  double weighted_decrease = 0.0;  // of the split taken here; 0 for leaves
  int depth = 0;

  bool is_leaf() const noexcept { return feature < 0; }
};

struct TreeModel {
  Task task = Task::Classification;
  std::size_t n_features = 0;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  int depth() const;
  std::size_t leaf_count() const;
};

/// Greedy CART: Gini impurity for classification, variance for regression.
/// The impurity decrease of a split is weighted by the node's share of the
/// training rows. Split ties go to the lowest feature, then lowest threshold.
TreeModel train_tree(const Matrix& x, std::span<const double> y, Task task,
                     std::size_t n_classes, const DtParams& params,
                     const Deadline& deadline = Deadline::never());
TreeModel train_tree(const Dataset& train, const DtParams& params,
                     const Deadline& deadline = Deadline::never());

// ---------------------------------------------------------------------------
// Support vector machine

enum class GammaMode { Scale, Auto };
enum class Kernel { Linear, Poly, Rbf, Sigmoid };

struct SvmParams {
  GammaMode gamma = GammaMode::Scale;
  Kernel kernel = Kernel::Rbf;
  double c_value = 1.0;
};

struct SmoOptions {
  double tol = 1e-3;  // stop when the maximal KKT violation is below this
  std::size_t max_iterations = 10'000'000;
  double epsilon = 0.1;  // epsilon-SVR tube half-width
  int degree = 3;
  double coef0 = 0.0;
  std::size_t cache_bytes = std::size_t{64} << 20;
  bool shrinking = true;
};

struct SvmModel {
  Task task = Task::Classification;
  Kernel kernel = Kernel::Rbf;
  double gamma = 1.0;
  double coef0 = 0.0;
  int degree = 3;
  double c_value = 1.0;
  std::size_t n_features = 0;

  Matrix support_vectors;
  std::vector<double> dual_coef;  // alpha_i*y_i, or alpha_i - alpha*_i for SVR
  double bias = 0.0;              // decision = sum dual_coef*K(sv, x) + bias

  // Full solver state, kept for inspection of the optimality conditions.
  std::vector<double> alpha;   // classification: per row; SVR: 2n (alpha then alpha*)
  std::vector<double> labels;  // classification: +1 / -1 per training row
  std::size_t iterations = 0;
  bool converged = false;
};

/// gamma = 1 / n_features (auto) or 1 / (n_features * var(x)) (scale), where
/// var is taken over every entry of the matrix. A zero variance gives 1.
double resolve_gamma(GammaMode mode, const Matrix& x);

double kernel_value(Kernel kernel, double gamma, double coef0, int degree,
                    std::span<const double> u, std::span<const double> v);

/// Classification requires a binary target (class index 1 is the +1 class)
/// and is solved as the soft-margin dual; regression as epsilon-SVR. Both use
/// SMO with second-order working-set selection.
SvmModel train_svm(const Matrix& x, std::span<const double> y, Task task,
                   const SvmParams& params, const SmoOptions& options = {},
                   const Deadline& deadline = Deadline::never());
SvmModel train_svm(const Dataset& train, const SvmParams& params,
                   const SmoOptions& options = {},
                   const Deadline& deadline = Deadline::never());

/// Raw kernel expansion sum dual_coef*K(sv, x) + bias for each row.
std::vector<double> decision_function(const SvmModel& model, const Matrix& rows);

// ---------------------------------------------------------------------------

using TrainedModel = std::variant<TreeModel, SvmModel>;

/// Tree: leaf value per row. SVM classifier: class index (0 or 1; a decision
/// value of exactly 0 maps to 1). SVM regressor: decision value.
std::vector<double> predict(const TreeModel& model, const Matrix& rows);
std::vector<double> predict(const SvmModel& model, const Matrix& rows);
std::vector<double> predict(const TrainedModel& model, const Matrix& rows);

}  // namespace perfmap
