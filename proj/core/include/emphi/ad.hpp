#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

namespace emphi::ad {

using Mat = Eigen::MatrixXd;

/// A trainable parameter. Gradients accumulate across graphs until cleared.
struct Tensor {
  std::string name;
  Mat value;
  Mat grad;

  Tensor() = default;
  Tensor(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)) {}

  Eigen::Index size() const { return value.size(); }
  void zero_grad() { grad.setZero(); }
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape over dense double matrices. Build a graph per batch,
/// call backward on a scalar node, read parameter gradients off Tensors.
class Graph {
 public:
  Var input(Mat m);
  /// Leaf for a trainable tensor; cached, so repeated calls in a step loop
  /// reuse one node per graph.
  Var param(Tensor& t);

  const Mat& value(Var v) const;
  const Mat& grad(Var v) const;
  std::size_t node_count() const { return nodes_.size(); }

  /// Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse.
  void backward(Var loss);

  Var matmul(Var a, Var b);
  /// a * b^T
  Var matmul_nt(Var a, Var b);
  /// a^T * b
  Var matmul_tn(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var cmul(Var a, Var b);
  Var scale(Var a, double k);
  /// k*x + c elementwise.
  Var affine(Var a, double k, double c);
  Var add_const(Var a, Mat c);
  /// Adds a 1xC row vector to every row of m.
  Var add_rowvec(Var m, Var row);
  /// Scales row i of m by col(i, 0).
  Var mul_colvec(Var m, Var col);
  Var concat_cols(const std::vector<Var>& parts);
  Var concat_rows(const std::vector<Var>& parts);
  /// Embedding lookup: out.row(i) = table.row(ids[i]).
  Var gather_rows(Var table, std::vector<int> ids);
  /// Column gather: out(i, 0) = m(i, cols[i]).
  Var pick(Var m, std::vector<int> cols);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var log(Var a);
  Var clamp(Var a, double lo, double hi);
  Var softmax_rows(Var a);
  /// Masked softmax; mask entries are 0 or 1, each row needs at least one 1.
  Var softmax_rows_masked(Var a, Mat mask);
  Var log_softmax_rows(Var a);
  Var rowsum(Var a);
  Var sum_all(Var a);
  /// Row-wise KL(q || p) with constant q: out(i, 0) = sum_k q(i,k) ln(q/p).
  /// Zero-q entries contribute nothing. Computed on the ratio, so bit-equal
  /// rows give exactly zero.
  Var kl_rows(Mat q, Var p);
  /// sum(a .* mask) / sum(mask); mask is constant.
  Var masked_mean(Var a, Mat mask);

  /// Additive attention scores over `positions` encoder slots laid out as
  /// stacked blocks: proj row (t*B + b) holds U*h_t + b_a for batch row b.
  /// score(b, t) = v . tanh(proj.row(t*B+b) + query.row(b)).
  Var attention_scores(Var proj, Var query, Var v, int positions);
  /// context.row(b) = sum_t weights(b, t) * states.row(t*B + b).
  Var attention_context(Var states, Var weights);

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Graph&, Node&)> backprop;
  };

  Var emplace(Mat value, std::function<void(Graph&, Node&)> backprop);
  Node& node(Var v);
  const Node& node_c(Var v) const;
  Mat& grad_of(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
  const Mat& value_of(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, int> param_cache_;
};

}  // namespace emphi::ad
