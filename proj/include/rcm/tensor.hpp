#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace rcm {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);

struct TensorNode {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // persistent; filled by backward() for leaves only
  bool requires_grad = false;
  bool leaf = true;
  const char* op = "leaf";
  std::uint64_t id = 0;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Writes d(root)/d(parent_i) contributions into pg[i]; pg[i] is null when
  // parent i needs no gradient. gout is this node's pass-local gradient.
  std::function<void(const double* gout, const std::vector<double*>& pg)> backprop;

  std::size_t numel() const;
};

// Value handle over a graph node. Copies share the node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t numel() const;
  std::size_t rank() const;
  std::uint64_t id() const;
  bool requires_grad() const;

  std::vector<double>& data();
  const std::vector<double>& data() const;
  // Persistent gradient of a leaf; sized on demand.
  std::vector<double>& grad();
  const std::vector<double>& grad() const;
  void zero_grad();

  // Value of a single-element tensor.
  double value() const;

  std::shared_ptr<TensorNode>& node() { return node_; }
  const std::shared_ptr<TensorNode>& node() const { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

// Gradient recording is on by default; NoGradGuard disables it for a scope
// (eval paths). Ops built while disabled are constants.
bool grad_enabled();
struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  bool prev;
};

// ---- construction ----
Tensor zeros(const Shape& shape);
Tensor full(const Shape& shape, double v);
Tensor from_data(const Shape& shape, std::vector<double> values);
// Trainable leaf (requires_grad = true).
Tensor param(const Shape& shape, std::vector<double> values);
Tensor constant(double v);  // shape {1}

// ---- elementwise / scalar ----
Tensor add(const Tensor& a, const Tensor& b);  // same shape
Tensor mul(const Tensor& a, const Tensor& b);  // same shape
Tensor affine(const Tensor& a, double k, double c);  // k*a + c
Tensor smul(const Tensor& s, const Tensor& a);  // s is shape {1}
Tensor sigmoid(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor gelu(const Tensor& a);  // exact erf form
Tensor log_op(const Tensor& a);
Tensor sum(const Tensor& a);  // -> {1}

// ---- shape / indexing ----
Tensor transpose(const Tensor& a);                       // {m,n} -> {n,m}
Tensor concat(const Tensor& a, const Tensor& b);         // rank-1
Tensor concat_cols(const Tensor& a, const Tensor& b);    // {m,p},{m,q} -> {m,p+q}
Tensor slice_cols(const Tensor& a, std::size_t off, std::size_t len);
Tensor row(const Tensor& a, std::size_t i);              // {m,n} -> {n}
Tensor pick(const Tensor& a, std::size_t i);             // {n} -> {1}

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);   // {m,k}x{k,n}
Tensor matvec(const Tensor& a, const Tensor& x);   // {m,n}x{n} -> {m}
Tensor add_bias(const Tensor& m, const Tensor& b); // {r,n} + {n} per row

// ---- neural ----
Tensor softmax_rows(const Tensor& a);  // rank-1 or rank-2, per row
// Softmax over unmasked entries of a rank-1 tensor; masked outputs are
// exactly 0. mask[i] != 0 means position i participates.
Tensor masked_softmax(const Tensor& a, const std::vector<unsigned char>& mask);
// -log(p[index]) for a probability row.
Tensor cross_entropy_pick(const Tensor& probs, std::size_t index);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);
Tensor embedding(const Tensor& table, const std::vector<int>& ids);
// Inverted dropout; identity when rate == 0 or grad recording is off.
Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng);

// Topologically ordered view of all nodes reachable from a root.
class Graph {
 public:
  explicit Graph(const Tensor& root);
  const std::vector<TensorNode*>& order() const { return order_; }
  // Reverse-mode sweep from a scalar root using pass-local buffers; each
  // call adds d(root)/d(leaf) into the leaves' persistent grads.
  void backward();

 private:
  std::shared_ptr<TensorNode> root_;
  std::vector<TensorNode*> order_;
};

void backward(const Tensor& loss);

// Max over all parameter entries of |analytic - central| / max(1, |central|)
// where central is the two-sided finite difference of f. f must rebuild the
// graph from the given leaves on every call. Throws on non-finite values.
double grad_check(const std::function<Tensor()>& f,
                  const std::vector<Tensor>& params, double eps = 1e-5);

}  // namespace rcm
