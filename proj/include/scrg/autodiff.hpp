#ifndef SCRG_AUTODIFF_HPP
#define SCRG_AUTODIFF_HPP

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scrg/types.hpp"

// Reverse-mode differentiation over dense Eigen matrices, sized to the model
// graph: every op here is used by at least one downstream module. Nodes are
// immutable once created; gradients accumulate in a single backward sweep in
// reverse creation order, so repeated runs are bit-identical.

namespace scrg::ad {

struct Node {
  Mat value;
  Mat grad;  // allocated lazily, same shape as value
  bool requires_grad = false;
  std::uint64_t id = 0;  // creation order; parents always have smaller ids
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(const Mat& out_grad)> backward_fn;

  Mat& ensure_grad();
};

class Var {
 public:
  Var() = default;
  explicit Var(Mat value, bool requires_grad = false);

  bool valid() const { return node_ != nullptr; }
  const Mat& value() const { return node_->value; }
  const Mat& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  double scalar() const { return node_->value(0, 0); }

  std::shared_ptr<Node> node() const { return node_; }
  static Var wrap(std::shared_ptr<Node> n);

 private:
  std::shared_ptr<Node> node_;
};

Var constant(Mat value);
Var zeros(Index rows, Index cols);

// Seeds grad of `root` (must be 1x1) with 1 and propagates to every leaf.
void backward(const Var& root);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var cmul(const Var& a, const Var& b);  // elementwise
// Adds column vector `bias` (C x 1) to every row of `a` (N x C).
Var add_rowwise(const Var& a, const Var& bias);
Var scale(const Var& s, const Var& a);  // s is 1x1
Var scale(double c, const Var& a);
Var sum(const Var& a);   // 1x1
Var mean(const Var& a);  // 1x1
Var dot(const Var& a, const Var& b);  // column vectors, 1x1 result

Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var elu(const Var& a);

// Column-vector softmax. With a mask, masked entries are exactly 0 and the
// normalization runs over the unmasked support only; a fully masked or empty
// input throws "empty softmax support".
Var softmax(const Var& v);
Var softmax(const Var& v, const std::vector<bool>& mask);

Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var gather_rows(const Var& a, std::vector<Index> rows);

// Weighted multi-label BCE on logits, numerically stable log-sum form.
// labels and weights are fixed (no gradient flows into them).
Var bce_with_logits(const Var& logits, const Vec& labels, const Vec& weights);

// --- parameters ---------------------------------------------------------

class ParamStore {
 public:
  Mat& create(const std::string& name, Index rows, Index cols);
  bool has(const std::string& name) const;
  Mat& value(const std::string& name);
  const Mat& value(const std::string& name) const;
  Mat& grad(const std::string& name);
  const std::vector<std::string>& names() const { return order_; }
  void zero_grads();
  std::size_t total_entries() const;

 private:
  std::vector<std::string> order_;
  std::map<std::string, Mat> values_;
  std::map<std::string, Mat> grads_;
};

// Per-forward-pass view of a ParamStore: hands out leaf Vars and pushes
// their gradients back after backward().
class Binding {
 public:
  explicit Binding(ParamStore& store) : store_(&store) {}
  Var operator[](const std::string& name);
  void accumulate_grads();
  ParamStore& store() { return *store_; }

 private:
  ParamStore* store_;
  std::map<std::string, Var> leaves_;
};

// --- finite-difference verification --------------------------------------

struct GradCheckReport {
  bool pass = false;
  double max_rel_err = 0.0;
  std::string worst_param;
  Index worst_row = 0;
  Index worst_col = 0;
};

// Central differences against the analytic gradient for every entry of every
// parameter. `f` must rebuild its graph from the binding on each call.
GradCheckReport grad_check(ParamStore& params,
                           const std::function<Var(Binding&)>& f,
                           double eps = 1e-6, double tol = 1e-4);

}  // namespace scrg::ad

#endif
