#include "scrg/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace scrg::ad {

namespace {

std::atomic<std::uint64_t> g_next_id{1};

std::shared_ptr<Node> make_node(Mat value, std::vector<std::shared_ptr<Node>> parents) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->id = g_next_id.fetch_add(1);
  for (const auto& p : parents) {
    if (p->requires_grad) n->requires_grad = true;
  }
  n->parents = std::move(parents);
  return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.value().rows() != b.value().rows() || a.value().cols() != b.value().cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Mat& Node::ensure_grad() {
  if (grad.size() == 0) grad = Mat::Zero(value.rows(), value.cols());
  return grad;
}

Var::Var(Mat value, bool requires_grad) {
  node_ = std::make_shared<Node>();
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
  node_->id = g_next_id.fetch_add(1);
}

Var Var::wrap(std::shared_ptr<Node> n) {
  Var v;
  v.node_ = std::move(n);
  return v;
}

Var constant(Mat value) { return Var(std::move(value), false); }

Var zeros(Index rows, Index cols) { return Var(Mat::Zero(rows, cols), false); }

void backward(const Var& root) {
  if (root.value().rows() != 1 || root.value().cols() != 1) {
    throw std::invalid_argument("backward: root must be scalar");
  }
  // Collect the reachable subgraph, then sweep in reverse creation order;
  // parents always precede children, so this is a valid topological order.
  std::vector<std::shared_ptr<Node>> nodes;
  std::unordered_set<Node*> seen;
  std::vector<std::shared_ptr<Node>> stack{root.node()};
  while (!stack.empty()) {
    auto n = stack.back();
    stack.pop_back();
    if (!seen.insert(n.get()).second) continue;
    nodes.push_back(n);
    for (const auto& p : n->parents) stack.push_back(p);
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const auto& a, const auto& b) { return a->id > b->id; });
  for (const auto& n : nodes) n->ensure_grad().setZero();
  root.node()->grad(0, 0) = 1.0;
  for (const auto& n : nodes) {
    if (n->backward_fn && n->requires_grad) n->backward_fn(n->grad);
  }
}

Var matmul(const Var& a, const Var& b) {
  if (a.value().cols() != b.value().rows()) {
    throw std::invalid_argument("matmul: inner dimension mismatch");
  }
  auto n = make_node(a.value() * b.value(), {a.node(), b.node()});
  auto pa = a.node(), pb = b.node();
  if (n->requires_grad) {
    n->backward_fn = [pa, pb](const Mat& g) {
      if (pa->requires_grad) pa->ensure_grad() += g * pb->value.transpose();
      if (pb->requires_grad) pb->ensure_grad() += pa->value.transpose() * g;
    };
  }
  return Var::wrap(n);
}

Var transpose(const Var& a) {
  auto n = make_node(a.value().transpose(), {a.node()});
  auto pa = a.node();
  if (n->requires_grad) {
    n->backward_fn = [pa](const Mat& g) { pa->ensure_grad() += g.transpose(); };
  }
  return Var::wrap(n);
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  auto n = make_node(a.value() + b.value(), {a.node(), b.node()});
  auto pa = a.node(), pb = b.node();
  if (n->requires_grad) {
    n->backward_fn = [pa, pb](const Mat& g) {
      if (pa->requires_grad) pa->ensure_grad() += g;
      if (pb->requires_grad) pb->ensure_grad() += g;
    };
  }
  return Var::wrap(n);
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  auto n = make_node(a.value() - b.value(), {a.node(), b.node()});
  auto pa = a.node(), pb = b.node();
  if (n->requires_grad) {
    n->backward_fn = [pa, pb](const Mat& g) {
      if (pa->requires_grad) pa->ensure_grad() += g;
      if (pb->requires_grad) pb->ensure_grad() -= g;
    };
  }
  return Var::wrap(n);
}

Var cmul(const Var& a, const Var& b) {
  check_same_shape(a, b, "cmul");
  auto n = make_node(a.value().cwiseProduct(b.value()), {a.node(), b.node()});
  auto pa = a.node(), pb = b.node();
  if (n->requires_grad) {
    n->backward_fn = [pa, pb](const Mat& g) {
      if (pa->requires_grad) pa->ensure_grad() += g.cwiseProduct(pb->value);
      if (pb->requires_grad) pb->ensure_grad() += g.cwiseProduct(pa->value);
    };
  }
  return Var::wrap(n);
}

Var add_rowwise(const Var& a, const Var& bias) {
  if (bias.value().cols() != 1 || bias.value().rows() != a.value().cols()) {
    throw std::invalid_argument("add_rowwise: bias must be (cols x 1)");
  }
  Mat out = a.value();
  out.rowwise() += bias.value().col(0).transpose();
  auto n = make_node(std::move(out), {a.node(), bias.node()});
  auto pa = a.node(), pb = bias.node();
  if (n->requires_grad) {
    n->backward_fn = [pa, pb](const Mat& g) {
      if (pa->requires_grad) pa->ensure_grad() += g;
      if (pb->requires_grad) pb->ensure_grad() += g.colwise().sum().transpose();
    };
  }
  return Var::wrap(n);
}

Var scale(const Var& s, const Var& a) {
  if (s.value().size() != 1) throw std::invalid_argument("scale: s must be 1x1");
  auto n = make_node(s.scalar() * a.value(), {s.node(), a.node()});
  auto ps = s.node(), pa = a.node();
  if (n->requires_grad) {
    n->backward_fn = [ps, pa](const Mat& g) {
      if (ps->requires_grad) ps->ensure_grad()(0, 0) += g.cwiseProduct(pa->value).sum();
      if (pa->requires_grad) pa->ensure_grad() += ps->value(0, 0) * g;
    };
  }
  return Var::wrap(n);
}

Var scale(double c, const Var& a) {
  auto n = make_node(c * a.value(), {a.node()});
  auto pa = a.node();
  if (n->requires_grad) {
    n->backward_fn = [pa, c](const Mat& g) { pa->ensure_grad() += c * g; };
  }
  return Var::wrap(n);
}

Var sum(const Var& a) {
  Mat out(1, 1);
  out(0, 0) = a.value().sum();
  auto n = make_node(std::move(out), {a.node()});
  auto pa = a.node();
  if (n->requires_grad) {
    n->backward_fn = [pa](const Mat& g) {
      pa->ensure_grad().array() += g(0, 0);
    };
  }
  return Var::wrap(n);
}

Var mean(const Var& a) { return scale(1.0 / static_cast<double>(a.value().size()), sum(a)); }

Var dot(const Var& a, const Var& b) {
  if (a.value().cols() != 1 || b.value().cols() != 1) {
    throw std::invalid_argument("dot: column vectors expected");
  }
  return matmul(transpose(a), b);
}

namespace {

template <typename F, typename DF>
Var unary_elementwise(const Var& a, F fwd, DF dfwd) {
  auto n = make_node(a.value().unaryExpr(fwd), {a.node()});
  auto pa = a.node();
  if (n->requires_grad) {
    n->backward_fn = [pa, dfwd](const Mat& g) {
      pa->ensure_grad() += g.cwiseProduct(pa->value.unaryExpr(dfwd));
    };
  }
  return Var::wrap(n);
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var sigmoid(const Var& a) {
  return unary_elementwise(
      a, [](double x) { return stable_sigmoid(x); },
      [](double x) {
        const double s = stable_sigmoid(x);
        return s * (1.0 - s);
      });
}

Var tanh(const Var& a) {
  return unary_elementwise(
      a, [](double x) { return std::tanh(x); },
      [](double x) {
        const double t = std::tanh(x);
        return 1.0 - t * t;
      });
}

Var leaky_relu(const Var& a, double slope) {
  return unary_elementwise(
      a, [slope](double x) { return x >= 0.0 ? x : slope * x; },
      [slope](double x) { return x >= 0.0 ? 1.0 : slope; });
}

Var elu(const Var& a) {
  return unary_elementwise(
      a, [](double x) { return x >= 0.0 ? x : std::expm1(x); },
      [](double x) { return x >= 0.0 ? 1.0 : std::exp(x); });
}

Var softmax(const Var& v) {
  return softmax(v, std::vector<bool>(static_cast<std::size_t>(v.value().rows()), true));
}

Var softmax(const Var& v, const std::vector<bool>& mask) {
  if (v.value().cols() != 1) throw std::invalid_argument("softmax: column vector expected");
  const Index n_rows = v.value().rows();
  if (mask.size() != static_cast<std::size_t>(n_rows)) {
    throw std::invalid_argument("softmax: mask length mismatch");
  }
  double max_val = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n_rows; ++i) {
    if (mask[static_cast<std::size_t>(i)]) max_val = std::max(max_val, v.value()(i, 0));
  }
  if (!std::isfinite(max_val)) throw std::invalid_argument("empty softmax support");
  Mat out = Mat::Zero(n_rows, 1);
  double denom = 0.0;
  for (Index i = 0; i < n_rows; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    out(i, 0) = std::exp(v.value()(i, 0) - max_val);
    denom += out(i, 0);
  }
  out /= denom;
  auto n = make_node(std::move(out), {v.node()});
  auto pv = v.node();
  if (n->requires_grad) {
    const Mat y = n->value;
    n->backward_fn = [pv, y](const Mat& g) {
      // masked entries have y == 0, so their input grad is already 0
      const double gy = g.cwiseProduct(y).sum();
      pv->ensure_grad() += y.cwiseProduct(g) - gy * y;
    };
  }
  return Var::wrap(n);
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty input");
  const Index cols = parts.front().value().cols();
  Index rows = 0;
  std::vector<std::shared_ptr<Node>> parents;
  for (const auto& p : parts) {
    if (p.value().cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += p.value().rows();
    parents.push_back(p.node());
  }
  Mat out(rows, cols);
  Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.value().rows()) = p.value();
    at += p.value().rows();
  }
  auto n = make_node(std::move(out), parents);
  if (n->requires_grad) {
    auto ps = n->parents;
    n->backward_fn = [ps](const Mat& g) {
      Index at2 = 0;
      for (const auto& p : ps) {
        if (p->requires_grad) p->ensure_grad() += g.middleRows(at2, p->value.rows());
        at2 += p->value.rows();
      }
    };
  }
  return Var::wrap(n);
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty input");
  const Index rows = parts.front().value().rows();
  Index cols = 0;
  std::vector<std::shared_ptr<Node>> parents;
  for (const auto& p : parts) {
    if (p.value().rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.value().cols();
    parents.push_back(p.node());
  }
  Mat out(rows, cols);
  Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.value().cols()) = p.value();
    at += p.value().cols();
  }
  auto n = make_node(std::move(out), parents);
  if (n->requires_grad) {
    auto ps = n->parents;
    n->backward_fn = [ps](const Mat& g) {
      Index at2 = 0;
      for (const auto& p : ps) {
        if (p->requires_grad) p->ensure_grad() += g.middleCols(at2, p->value.cols());
        at2 += p->value.cols();
      }
    };
  }
  return Var::wrap(n);
}

Var gather_rows(const Var& a, std::vector<Index> rows) {
  Mat out(static_cast<Index>(rows.size()), a.value().cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= a.value().rows()) {
      throw std::out_of_range("gather_rows: index out of range");
    }
    out.row(static_cast<Index>(i)) = a.value().row(rows[i]);
  }
  auto n = make_node(std::move(out), {a.node()});
  auto pa = a.node();
  if (n->requires_grad) {
    n->backward_fn = [pa, rows = std::move(rows)](const Mat& g) {
      Mat& ga = pa->ensure_grad();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        ga.row(rows[i]) += g.row(static_cast<Index>(i));
      }
    };
  }
  return Var::wrap(n);
}

Var bce_with_logits(const Var& logits, const Vec& labels, const Vec& weights) {
  const Index n_cls = logits.value().rows();
  if (logits.value().cols() != 1 || labels.size() != n_cls || weights.size() != n_cls) {
    throw std::invalid_argument("bce_with_logits: shape mismatch");
  }
  double loss = 0.0;
  for (Index i = 0; i < n_cls; ++i) {
    const double x = logits.value()(i, 0);
    // -[y log s(x) + (1-y) log(1-s(x))] = max(x,0) - x y + log(1+exp(-|x|))
    loss += weights(i) * (std::max(x, 0.0) - x * labels(i) + std::log1p(std::exp(-std::abs(x))));
  }
  Mat out(1, 1);
  out(0, 0) = loss;
  auto n = make_node(std::move(out), {logits.node()});
  auto pl = logits.node();
  if (n->requires_grad) {
    n->backward_fn = [pl, labels, weights](const Mat& g) {
      Mat& gl = pl->ensure_grad();
      for (Index i = 0; i < pl->value.rows(); ++i) {
        gl(i, 0) += g(0, 0) * weights(i) * (stable_sigmoid(pl->value(i, 0)) - labels(i));
      }
    };
  }
  return Var::wrap(n);
}

// --- ParamStore -----------------------------------------------------------

Mat& ParamStore::create(const std::string& name, Index rows, Index cols) {
  if (values_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  order_.push_back(name);
  values_[name] = Mat::Zero(rows, cols);
  grads_[name] = Mat::Zero(rows, cols);
  return values_[name];
}

bool ParamStore::has(const std::string& name) const { return values_.count(name) > 0; }

Mat& ParamStore::value(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

const Mat& ParamStore::value(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

Mat& ParamStore::grad(const std::string& name) {
  auto it = grads_.find(name);
  if (it == grads_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& [name, g] : grads_) g.setZero();
}

std::size_t ParamStore::total_entries() const {
  std::size_t n = 0;
  for (const auto& [name, v] : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

Var Binding::operator[](const std::string& name) {
  auto it = leaves_.find(name);
  if (it != leaves_.end()) return it->second;
  Var leaf(store_->value(name), true);
  leaves_.emplace(name, leaf);
  return leaf;
}

void Binding::accumulate_grads() {
  for (auto& [name, leaf] : leaves_) {
    if (leaf.node()->grad.size() != 0) store_->grad(name) += leaf.node()->grad;
  }
}

// --- grad_check -----------------------------------------------------------

GradCheckReport grad_check(ParamStore& params, const std::function<Var(Binding&)>& f,
                           double eps, double tol) {
  if (!(eps > 0.0 && eps <= 1e-3)) throw std::invalid_argument("grad_check: eps out of (0, 1e-3]");
  params.zero_grads();
  Binding binding(params);
  Var loss = f(binding);
  if (!std::isfinite(loss.scalar())) {
    throw std::runtime_error("grad_check: non-finite loss at base point");
  }
  backward(loss);
  binding.accumulate_grads();

  auto eval = [&](const std::string& perturbed) {
    Binding b(params);
    const double v = f(b).scalar();
    if (!std::isfinite(v)) {
      throw std::runtime_error("grad_check: non-finite loss while perturbing " + perturbed);
    }
    return v;
  };

  GradCheckReport report;
  for (const auto& name : params.names()) {
    Mat& theta = params.value(name);
    const Mat& analytic = params.grad(name);
    for (Index c = 0; c < theta.cols(); ++c) {
      for (Index r = 0; r < theta.rows(); ++r) {
        const double orig = theta(r, c);
        theta(r, c) = orig + eps;
        const double fp = eval(name);
        theta(r, c) = orig - eps;
        const double fm = eval(name);
        theta(r, c) = orig;
        const double numeric = (fp - fm) / (2.0 * eps);
        const double a = analytic(r, c);
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
        const double rel = std::abs(a - numeric) / denom;
        if (rel > report.max_rel_err) {
          report.max_rel_err = rel;
          report.worst_param = name;
          report.worst_row = r;
          report.worst_col = c;
        }
      }
    }
  }
  report.pass = report.max_rel_err <= tol;
  return report;
}

}  // namespace scrg::ad
