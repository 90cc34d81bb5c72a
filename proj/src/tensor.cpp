#include "rcm/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace rcm {

namespace {

std::atomic<std::uint64_t> g_next_id{1};
thread_local bool g_grad = true;

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                              shape_to_string(a) + " vs " + shape_to_string(b));
}

void check_shape(const char* op, const Shape& s) {
  require(!s.empty() && s.size() <= 2,
          std::string(op) + ": rank must be 1 or 2, got " + shape_to_string(s));
  for (std::size_t d : s)
    require(d > 0, std::string(op) + ": zero dimension in " + shape_to_string(s));
}

std::shared_ptr<TensorNode> make_leaf(const char* op, Shape shape,
                                      std::vector<double> values,
                                      bool requires_grad) {
  check_shape(op, shape);
  require(values.size() == shape_numel(shape),
          std::string(op) + ": got " + std::to_string(values.size()) +
              " values for shape " + shape_to_string(shape));
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->data = std::move(values);
  n->requires_grad = requires_grad;
  n->leaf = true;
  n->op = op;
  n->id = g_next_id.fetch_add(1);
  return n;
}

// Op node; parents/backprop are recorded only when grad flows.
Tensor make_op(const char* op, Shape shape, std::vector<double> values,
               std::vector<std::shared_ptr<TensorNode>> parents,
               std::function<void(const double*, const std::vector<double*>&)>
                   backprop) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->data = std::move(values);
  n->leaf = false;
  n->op = op;
  n->id = g_next_id.fetch_add(1);
  if (g_grad) {
    bool need = false;
    for (const auto& p : parents)
      if (p->requires_grad) need = true;
    if (need) {
      n->requires_grad = true;
      n->parents = std::move(parents);
      n->backprop = std::move(backprop);
    }
  }
  return Tensor(n);
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::size_t TensorNode::numel() const { return shape_numel(shape); }

const Shape& Tensor::shape() const {
  require(defined(), "tensor: use of undefined tensor");
  return node_->shape;
}

std::size_t Tensor::numel() const { return shape().empty() ? 0 : node_->numel(); }
std::size_t Tensor::rank() const { return shape().size(); }
std::uint64_t Tensor::id() const {
  require(defined(), "tensor: use of undefined tensor");
  return node_->id;
}
bool Tensor::requires_grad() const {
  require(defined(), "tensor: use of undefined tensor");
  return node_->requires_grad;
}

std::vector<double>& Tensor::data() {
  require(defined(), "tensor: use of undefined tensor");
  return node_->data;
}
const std::vector<double>& Tensor::data() const {
  require(defined(), "tensor: use of undefined tensor");
  return node_->data;
}

std::vector<double>& Tensor::grad() {
  require(defined(), "tensor: use of undefined tensor");
  if (node_->grad.size() != node_->numel()) node_->grad.assign(node_->numel(), 0.0);
  return node_->grad;
}
const std::vector<double>& Tensor::grad() const {
  return const_cast<Tensor*>(this)->grad();
}

void Tensor::zero_grad() {
  require(defined(), "tensor: use of undefined tensor");
  node_->grad.assign(node_->numel(), 0.0);
}

double Tensor::value() const {
  require(numel() == 1, "tensor: value() needs a single element, shape " +
                            shape_to_string(shape()));
  return node_->data[0];
}

bool grad_enabled() { return g_grad; }
NoGradGuard::NoGradGuard() : prev(g_grad) { g_grad = false; }
NoGradGuard::~NoGradGuard() { g_grad = prev; }

Tensor zeros(const Shape& shape) {
  return Tensor(make_leaf("zeros", shape, std::vector<double>(shape_numel(shape), 0.0), false));
}

Tensor full(const Shape& shape, double v) {
  return Tensor(make_leaf("full", shape, std::vector<double>(shape_numel(shape), v), false));
}

Tensor from_data(const Shape& shape, std::vector<double> values) {
  return Tensor(make_leaf("from_data", shape, std::move(values), false));
}

Tensor param(const Shape& shape, std::vector<double> values) {
  return Tensor(make_leaf("param", shape, std::move(values), true));
}

Tensor constant(double v) { return from_data({1}, {v}); }

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  std::size_t n = a.numel();
  std::vector<double> out(n);
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = da[i] + db[i];
  return make_op("add", a.shape(), std::move(out), {a.node(), b.node()},
                 [n](const double* g, const std::vector<double*>& pg) {
                   for (int p = 0; p < 2; ++p)
                     if (pg[p])
                       for (std::size_t i = 0; i < n; ++i) pg[p][i] += g[i];
                 });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  std::size_t n = a.numel();
  std::vector<double> out(n);
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = da[i] * db[i];
  TensorNode* an = a.node().get();
  TensorNode* bn = b.node().get();
  return make_op("mul", a.shape(), std::move(out), {a.node(), b.node()},
                 [n, an, bn](const double* g, const std::vector<double*>& pg) {
                   if (pg[0])
                     for (std::size_t i = 0; i < n; ++i) pg[0][i] += g[i] * bn->data[i];
                   if (pg[1])
                     for (std::size_t i = 0; i < n; ++i) pg[1][i] += g[i] * an->data[i];
                 });
}

Tensor affine(const Tensor& a, double k, double c) {
  std::size_t n = a.numel();
  std::vector<double> out(n);
  const auto& da = a.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = k * da[i] + c;
  return make_op("affine", a.shape(), std::move(out), {a.node()},
                 [n, k](const double* g, const std::vector<double*>& pg) {
                   if (pg[0])
                     for (std::size_t i = 0; i < n; ++i) pg[0][i] += k * g[i];
                 });
}

Tensor smul(const Tensor& s, const Tensor& a) {
  require(s.numel() == 1, "smul: scale must have a single element, shape " +
                              shape_to_string(s.shape()));
  std::size_t n = a.numel();
  double sv = s.data()[0];
  std::vector<double> out(n);
  const auto& da = a.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = sv * da[i];
  TensorNode* an = a.node().get();
  return make_op("smul", a.shape(), std::move(out), {s.node(), a.node()},
                 [n, sv, an](const double* g, const std::vector<double*>& pg) {
                   if (pg[0]) {
                     double acc = 0.0;
                     for (std::size_t i = 0; i < n; ++i) acc += g[i] * an->data[i];
                     pg[0][0] += acc;
                   }
                   if (pg[1])
                     for (std::size_t i = 0; i < n; ++i) pg[1][i] += sv * g[i];
                 });
}

Tensor sigmoid(const Tensor& a) {
  std::size_t n = a.numel();
  std::vector<double> out(n);
  const auto& da = a.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-da[i]));
  std::vector<double> y = out;
  return make_op("sigmoid", a.shape(), std::move(out), {a.node()},
                 [n, y](const double* g, const std::vector<double*>& pg) {
                   if (pg[0])
                     for (std::size_t i = 0; i < n; ++i)
                       pg[0][i] += g[i] * y[i] * (1.0 - y[i]);
                 });
}

Tensor tanh_op(const Tensor& a) {
  std::size_t n = a.numel();
  std::vector<double> out(n);
  const auto& da = a.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(da[i]);
  std::vector<double> y = out;
  return make_op("tanh", a.shape(), std::move(out), {a.node()},
                 [n, y](const double* g, const std::vector<double*>& pg) {
                   if (pg[0])
                     for (std::size_t i = 0; i < n; ++i)
                       pg[0][i] += g[i] * (1.0 - y[i] * y[i]);
                 });
}

Tensor gelu(const Tensor& a) {
  static const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
  static const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * 3.14159265358979323846);
  std::size_t n = a.numel();
  std::vector<double> out(n);
  const auto& da = a.data();
  for (std::size_t i = 0; i < n; ++i)
    out[i] = 0.5 * da[i] * (1.0 + std::erf(da[i] * kInvSqrt2));
  TensorNode* an = a.node().get();
  return make_op("gelu", a.shape(), std::move(out), {a.node()},
                 [n, an](const double* g, const std::vector<double*>& pg) {
                   if (!pg[0]) return;
                   for (std::size_t i = 0; i < n; ++i) {
                     double x = an->data[i];
                     double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
                     double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
                     pg[0][i] += g[i] * (cdf + x * pdf);
                   }
                 });
}

Tensor log_op(const Tensor& a) {
  std::size_t n = a.numel();
  std::vector<double> out(n);
  const auto& da = a.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = std::log(da[i]);
  TensorNode* an = a.node().get();
  return make_op("log", a.shape(), std::move(out), {a.node()},
                 [n, an](const double* g, const std::vector<double*>& pg) {
                   if (pg[0])
                     for (std::size_t i = 0; i < n; ++i)
                       pg[0][i] += g[i] / an->data[i];
                 });
}

Tensor sum(const Tensor& a) {
  std::size_t n = a.numel();
  double acc = 0.0;
  const auto& da = a.data();
  for (std::size_t i = 0; i < n; ++i) acc += da[i];
  return make_op("sum", {1}, {acc}, {a.node()},
                 [n](const double* g, const std::vector<double*>& pg) {
                   if (pg[0])
                     for (std::size_t i = 0; i < n; ++i) pg[0][i] += g[0];
                 });
}

Tensor transpose(const Tensor& a) {
  require(a.rank() == 2, "transpose: needs rank 2, got " + shape_to_string(a.shape()));
  std::size_t m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(m * n);
  const auto& da = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = da[i * n + j];
  return make_op("transpose", {n, m}, std::move(out), {a.node()},
                 [m, n](const double* g, const std::vector<double*>& pg) {
                   if (!pg[0]) return;
                   for (std::size_t j = 0; j < n; ++j)
                     for (std::size_t i = 0; i < m; ++i)
                       pg[0][i * n + j] += g[j * m + i];
                 });
}

Tensor concat(const Tensor& a, const Tensor& b) {
  require(a.rank() == 1 && b.rank() == 1,
          "concat: needs rank 1, got " + shape_to_string(a.shape()) + " and " +
              shape_to_string(b.shape()));
  std::size_t p = a.numel(), q = b.numel();
  std::vector<double> out(p + q);
  std::copy(a.data().begin(), a.data().end(), out.begin());
  std::copy(b.data().begin(), b.data().end(), out.begin() + p);
  return make_op("concat", {p + q}, std::move(out), {a.node(), b.node()},
                 [p, q](const double* g, const std::vector<double*>& pg) {
                   if (pg[0])
                     for (std::size_t i = 0; i < p; ++i) pg[0][i] += g[i];
                   if (pg[1])
                     for (std::size_t i = 0; i < q; ++i) pg[1][i] += g[p + i];
                 });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2 && a.shape()[0] == b.shape()[0],
          "concat_cols: incompatible shapes " + shape_to_string(a.shape()) +
              " and " + shape_to_string(b.shape()));
  std::size_t m = a.shape()[0], p = a.shape()[1], q = b.shape()[1];
  std::vector<double> out(m * (p + q));
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    std::copy(da.begin() + i * p, da.begin() + (i + 1) * p, out.begin() + i * (p + q));
    std::copy(db.begin() + i * q, db.begin() + (i + 1) * q,
              out.begin() + i * (p + q) + p);
  }
  return make_op("concat_cols", {m, p + q}, std::move(out), {a.node(), b.node()},
                 [m, p, q](const double* g, const std::vector<double*>& pg) {
                   for (std::size_t i = 0; i < m; ++i) {
                     if (pg[0])
                       for (std::size_t j = 0; j < p; ++j)
                         pg[0][i * p + j] += g[i * (p + q) + j];
                     if (pg[1])
                       for (std::size_t j = 0; j < q; ++j)
                         pg[1][i * q + j] += g[i * (p + q) + p + j];
                   }
                 });
}

Tensor slice_cols(const Tensor& a, std::size_t off, std::size_t len) {
  require(a.rank() == 2, "slice_cols: needs rank 2, got " + shape_to_string(a.shape()));
  std::size_t m = a.shape()[0], n = a.shape()[1];
  require(len > 0 && off + len <= n,
          "slice_cols: range [" + std::to_string(off) + ", " +
              std::to_string(off + len) + ") out of " + shape_to_string(a.shape()));
  std::vector<double> out(m * len);
  const auto& da = a.data();
  for (std::size_t i = 0; i < m; ++i)
    std::copy(da.begin() + i * n + off, da.begin() + i * n + off + len,
              out.begin() + i * len);
  return make_op("slice_cols", {m, len}, std::move(out), {a.node()},
                 [m, n, off, len](const double* g, const std::vector<double*>& pg) {
                   if (!pg[0]) return;
                   for (std::size_t i = 0; i < m; ++i)
                     for (std::size_t j = 0; j < len; ++j)
                       pg[0][i * n + off + j] += g[i * len + j];
                 });
}

Tensor row(const Tensor& a, std::size_t i) {
  require(a.rank() == 2, "row: needs rank 2, got " + shape_to_string(a.shape()));
  std::size_t m = a.shape()[0], n = a.shape()[1];
  require(i < m, "row: index " + std::to_string(i) + " out of " + shape_to_string(a.shape()));
  std::vector<double> out(a.data().begin() + i * n, a.data().begin() + (i + 1) * n);
  return make_op("row", {n}, std::move(out), {a.node()},
                 [i, n](const double* g, const std::vector<double*>& pg) {
                   if (pg[0])
                     for (std::size_t j = 0; j < n; ++j) pg[0][i * n + j] += g[j];
                 });
}

Tensor pick(const Tensor& a, std::size_t i) {
  require(a.rank() == 1, "pick: needs rank 1, got " + shape_to_string(a.shape()));
  require(i < a.numel(),
          "pick: index " + std::to_string(i) + " out of " + shape_to_string(a.shape()));
  return make_op("pick", {1}, {a.data()[i]}, {a.node()},
                 [i](const double* g, const std::vector<double*>& pg) {
                   if (pg[0]) pg[0][i] += g[0];
                 });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2, "matmul: needs rank 2, got " +
                                              shape_to_string(a.shape()) + " and " +
                                              shape_to_string(b.shape()));
  if (a.shape()[1] != b.shape()[0]) shape_error("matmul", a.shape(), b.shape());
  std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<double> out(m * n, 0.0);
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      double av = da[i * k + l];
      if (av == 0.0) continue;
      const double* brow = db.data() + l * n;
      double* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  TensorNode* an = a.node().get();
  TensorNode* bn = b.node().get();
  return make_op(
      "matmul", {m, n}, std::move(out), {a.node(), b.node()},
      [m, k, n, an, bn](const double* g, const std::vector<double*>& pg) {
        if (pg[0]) {
          // dA[i,l] += sum_j G[i,j] B[l,j]
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t l = 0; l < k; ++l) {
              double acc = 0.0;
              const double* grow = g + i * n;
              const double* brow = bn->data.data() + l * n;
              for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
              pg[0][i * k + l] += acc;
            }
        }
        if (pg[1]) {
          // dB[l,j] += sum_i A[i,l] G[i,j]
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t l = 0; l < k; ++l) {
              double av = an->data[i * k + l];
              if (av == 0.0) continue;
              const double* grow = g + i * n;
              double* brow = pg[1] + l * n;
              for (std::size_t j = 0; j < n; ++j) brow[j] += av * grow[j];
            }
        }
      });
}

Tensor matvec(const Tensor& a, const Tensor& x) {
  require(a.rank() == 2 && x.rank() == 1, "matvec: needs rank 2 and rank 1, got " +
                                              shape_to_string(a.shape()) + " and " +
                                              shape_to_string(x.shape()));
  if (a.shape()[1] != x.shape()[0]) shape_error("matvec", a.shape(), x.shape());
  std::size_t m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(m, 0.0);
  const auto& da = a.data();
  const auto& dx = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    const double* arow = da.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) acc += arow[j] * dx[j];
    out[i] = acc;
  }
  TensorNode* an = a.node().get();
  TensorNode* xn = x.node().get();
  return make_op("matvec", {m}, std::move(out), {a.node(), x.node()},
                 [m, n, an, xn](const double* g, const std::vector<double*>& pg) {
                   if (pg[0])
                     for (std::size_t i = 0; i < m; ++i)
                       for (std::size_t j = 0; j < n; ++j)
                         pg[0][i * n + j] += g[i] * xn->data[j];
                   if (pg[1])
                     for (std::size_t i = 0; i < m; ++i) {
                       const double* arow = an->data.data() + i * n;
                       for (std::size_t j = 0; j < n; ++j) pg[1][j] += g[i] * arow[j];
                     }
                 });
}

Tensor add_bias(const Tensor& m, const Tensor& b) {
  require(m.rank() == 2 && b.rank() == 1 && m.shape()[1] == b.shape()[0],
          "add_bias: incompatible shapes " + shape_to_string(m.shape()) + " and " +
              shape_to_string(b.shape()));
  std::size_t r = m.shape()[0], n = m.shape()[1];
  std::vector<double> out(r * n);
  const auto& dm = m.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = dm[i * n + j] + db[j];
  return make_op("add_bias", {r, n}, std::move(out), {m.node(), b.node()},
                 [r, n](const double* g, const std::vector<double*>& pg) {
                   if (pg[0])
                     for (std::size_t i = 0; i < r * n; ++i) pg[0][i] += g[i];
                   if (pg[1])
                     for (std::size_t i = 0; i < r; ++i)
                       for (std::size_t j = 0; j < n; ++j) pg[1][j] += g[i * n + j];
                 });
}

namespace {

void softmax_row(const double* x, double* p, std::size_t n) {
  double mx = x[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = std::exp(x[i] - mx);
    s += p[i];
  }
  for (std::size_t i = 0; i < n; ++i) p[i] /= s;
}

}  // namespace

Tensor softmax_rows(const Tensor& a) {
  std::size_t rows = a.rank() == 2 ? a.shape()[0] : 1;
  std::size_t n = a.rank() == 2 ? a.shape()[1] : a.shape()[0];
  std::vector<double> out(rows * n);
  const auto& da = a.data();
  for (std::size_t r = 0; r < rows; ++r)
    softmax_row(da.data() + r * n, out.data() + r * n, n);
  std::vector<double> p = out;
  return make_op("softmax", a.shape(), std::move(out), {a.node()},
                 [rows, n, p](const double* g, const std::vector<double*>& pg) {
                   if (!pg[0]) return;
                   for (std::size_t r = 0; r < rows; ++r) {
                     const double* pr = p.data() + r * n;
                     const double* gr = g + r * n;
                     double dot = 0.0;
                     for (std::size_t i = 0; i < n; ++i) dot += gr[i] * pr[i];
                     for (std::size_t i = 0; i < n; ++i)
                       pg[0][r * n + i] += pr[i] * (gr[i] - dot);
                   }
                 });
}

Tensor masked_softmax(const Tensor& a, const std::vector<unsigned char>& mask) {
  require(a.rank() == 1, "masked_softmax: needs rank 1, got " + shape_to_string(a.shape()));
  std::size_t n = a.numel();
  require(mask.size() == n, "masked_softmax: mask size " + std::to_string(mask.size()) +
                                " vs shape " + shape_to_string(a.shape()));
  const auto& da = a.data();
  double mx = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < n; ++i)
    if (mask[i]) {
      mx = any ? std::max(mx, da[i]) : da[i];
      any = true;
    }
  require(any, "masked_softmax: all positions masked");
  std::vector<double> out(n, 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (mask[i]) {
      out[i] = std::exp(da[i] - mx);
      s += out[i];
    }
  for (std::size_t i = 0; i < n; ++i)
    if (mask[i]) out[i] /= s;
  std::vector<double> p = out;
  std::vector<unsigned char> mk = mask;
  return make_op("masked_softmax", a.shape(), std::move(out), {a.node()},
                 [n, p, mk](const double* g, const std::vector<double*>& pg) {
                   if (!pg[0]) return;
                   double dot = 0.0;
                   for (std::size_t i = 0; i < n; ++i)
                     if (mk[i]) dot += g[i] * p[i];
                   for (std::size_t i = 0; i < n; ++i)
                     if (mk[i]) pg[0][i] += p[i] * (g[i] - dot);
                 });
}

Tensor cross_entropy_pick(const Tensor& probs, std::size_t index) {
  require(probs.rank() == 1, "cross_entropy_pick: needs rank 1, got " +
                                 shape_to_string(probs.shape()));
  require(index < probs.numel(), "cross_entropy_pick: index " + std::to_string(index) +
                                     " out of " + shape_to_string(probs.shape()));
  double p = probs.data()[index];
  require(p > 0.0, "cross_entropy_pick: zero probability at index " + std::to_string(index));
  return make_op("cross_entropy_pick", {1}, {-std::log(p)}, {probs.node()},
                 [index, p](const double* g, const std::vector<double*>& pg) {
                   if (pg[0]) pg[0][index] += -g[0] / p;
                 });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  std::size_t rows = x.rank() == 2 ? x.shape()[0] : 1;
  std::size_t n = x.rank() == 2 ? x.shape()[1] : x.shape()[0];
  require(gamma.rank() == 1 && gamma.numel() == n,
          "layer_norm: gain shape " + shape_to_string(gamma.shape()) + " vs width " +
              std::to_string(n));
  if (gamma.shape() != beta.shape()) shape_error("layer_norm", gamma.shape(), beta.shape());
  const auto& dx = x.data();
  const auto& dg = gamma.data();
  const auto& db = beta.data();
  std::vector<double> out(rows * n);
  std::vector<double> mu(rows), istd(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = dx.data() + r * n;
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += xr[i];
    m /= static_cast<double>(n);
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v += (xr[i] - m) * (xr[i] - m);
    v /= static_cast<double>(n);
    mu[r] = m;
    istd[r] = 1.0 / std::sqrt(v + eps);
    for (std::size_t i = 0; i < n; ++i) {
      double xhat = (xr[i] - m) * istd[r];
      out[r * n + i] = dg[i] * xhat + db[i];
    }
  }
  TensorNode* xn = x.node().get();
  TensorNode* gn = gamma.node().get();
  return make_op(
      "layer_norm", x.shape(), std::move(out), {x.node(), gamma.node(), beta.node()},
      [rows, n, mu, istd, xn, gn](const double* g, const std::vector<double*>& pg) {
        for (std::size_t r = 0; r < rows; ++r) {
          const double* xr = xn->data.data() + r * n;
          const double* gr = g + r * n;
          double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            double xhat = (xr[i] - mu[r]) * istd[r];
            double dxhat = gr[i] * gn->data[i];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
            if (pg[1]) pg[1][i] += gr[i] * xhat;
            if (pg[2]) pg[2][i] += gr[i];
          }
          if (pg[0]) {
            double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
              double xhat = (xr[i] - mu[r]) * istd[r];
              double dxhat = gr[i] * gn->data[i];
              pg[0][r * n + i] +=
                  istd[r] * (dxhat - inv_n * (sum_dxhat + xhat * sum_dxhat_xhat));
            }
          }
        }
      });
}

Tensor embedding(const Tensor& table, const std::vector<int>& ids) {
  require(table.rank() == 2, "embedding: table needs rank 2, got " +
                                 shape_to_string(table.shape()));
  require(!ids.empty(), "embedding: empty id list");
  std::size_t v = table.shape()[0], d = table.shape()[1];
  for (int id : ids)
    require(id >= 0 && static_cast<std::size_t>(id) < v,
            "embedding: id " + std::to_string(id) + " out of table " +
                shape_to_string(table.shape()));
  std::size_t len = ids.size();
  std::vector<double> out(len * d);
  const auto& dt = table.data();
  for (std::size_t p = 0; p < len; ++p)
    std::copy(dt.begin() + static_cast<std::size_t>(ids[p]) * d,
              dt.begin() + (static_cast<std::size_t>(ids[p]) + 1) * d,
              out.begin() + p * d);
  std::vector<int> idc = ids;
  return make_op("embedding", {len, d}, std::move(out), {table.node()},
                 [d, idc](const double* g, const std::vector<double*>& pg) {
                   if (!pg[0]) return;
                   for (std::size_t p = 0; p < idc.size(); ++p) {
                     double* trow = pg[0] + static_cast<std::size_t>(idc[p]) * d;
                     const double* grow = g + p * d;
                     for (std::size_t j = 0; j < d; ++j) trow[j] += grow[j];
                   }
                 });
}

Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng) {
  require(rate >= 0.0 && rate < 1.0, "dropout: rate " + std::to_string(rate) +
                                         " outside [0, 1)");
  if (rate == 0.0 || !grad_enabled()) return a;
  std::size_t n = a.numel();
  double keep = 1.0 - rate;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> scale(n);
  for (std::size_t i = 0; i < n; ++i) scale[i] = u(rng) < keep ? 1.0 / keep : 0.0;
  std::vector<double> out(n);
  const auto& da = a.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = da[i] * scale[i];
  return make_op("dropout", a.shape(), std::move(out), {a.node()},
                 [n, scale](const double* g, const std::vector<double*>& pg) {
                   if (pg[0])
                     for (std::size_t i = 0; i < n; ++i) pg[0][i] += g[i] * scale[i];
                 });
}

Graph::Graph(const Tensor& root) {
  require(root.defined(), "graph: undefined root");
  root_ = root.node();
  if (!root_->requires_grad) return;
  // Iterative post-order over grad-requiring nodes; order_ ends topo-sorted
  // with root last.
  std::unordered_map<const TensorNode*, int> state;  // 0 new, 1 open, 2 done
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.push_back({root_.get(), 0});
  state[root_.get()] = 1;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* p = node->parents[next++].get();
      if (p->requires_grad && state[p] == 0) {
        state[p] = 1;
        stack.push_back({p, 0});
      }
    } else {
      state[node] = 2;
      order_.push_back(node);
      stack.pop_back();
    }
  }
}

void Graph::backward() {
  if (order_.empty()) return;
  require(root_->numel() == 1,
          "backward: root must be scalar, shape " + shape_to_string(root_->shape));
  std::unordered_map<const TensorNode*, std::size_t> pos;
  pos.reserve(order_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) pos[order_[i]] = i;
  std::vector<std::vector<double>> buf(order_.size());
  for (std::size_t i = 0; i < order_.size(); ++i)
    buf[i].assign(order_[i]->numel(), 0.0);
  buf.back()[0] = 1.0;  // root is last in topo order
  for (std::size_t i = order_.size(); i-- > 0;) {
    TensorNode* node = order_[i];
    if (!node->backprop) continue;
    std::vector<double*> pg(node->parents.size(), nullptr);
    for (std::size_t p = 0; p < node->parents.size(); ++p) {
      TensorNode* par = node->parents[p].get();
      if (par->requires_grad) pg[p] = buf[pos[par]].data();
    }
    node->backprop(buf[i].data(), pg);
  }
  for (std::size_t i = 0; i < order_.size(); ++i) {
    TensorNode* node = order_[i];
    if (!node->leaf || !node->requires_grad) continue;
    if (node->grad.size() != node->numel()) node->grad.assign(node->numel(), 0.0);
    for (std::size_t j = 0; j < node->numel(); ++j) node->grad[j] += buf[i][j];
  }
}

void backward(const Tensor& loss) { Graph(loss).backward(); }

double grad_check(const std::function<Tensor()>& f,
                  const std::vector<Tensor>& params, double eps) {
  if (!(eps > 0.0 && eps <= 1e-2))
    throw std::invalid_argument("grad_check: eps " + std::to_string(eps) +
                                " outside (0, 1e-2]");
  for (Tensor p : params) p.zero_grad();
  Tensor out = f();
  if (out.numel() != 1)
    throw std::invalid_argument("grad_check: f must return a scalar, got " +
                                shape_to_string(out.shape()));
  if (!std::isfinite(out.value()))
    throw std::runtime_error("grad_check: non-finite loss");
  backward(out);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const Tensor& p : params) analytic.push_back(p.grad());
  double max_err = 0.0;
  NoGradGuard ng;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor ph = params[pi];
    auto& data = ph.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      double orig = data[i];
      data[i] = orig + eps;
      double fp = f().value();
      data[i] = orig - eps;
      double fm = f().value();
      data[i] = orig;
      double central = (fp - fm) / (2.0 * eps);
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw std::runtime_error("grad_check: non-finite loss during probing");
      double err = std::abs(analytic[pi][i] - central) / std::max(1.0, std::abs(central));
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

}  // namespace rcm
