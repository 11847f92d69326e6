#pragma once

#include <deque>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "emphi/ad.hpp"
#include "emphi/common.hpp"

namespace emphi::nn {

using ad::Graph;
using ad::Mat;
using ad::Tensor;
using ad::Var;

/// Owns tensors in creation order. Creation order fixes both the
/// initialization draws and the checkpoint layout, so construct layers in a
/// deterministic order and never conditionally skip one.
class ParamStore {
 public:
  Tensor& create(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  Tensor& by_name(const std::string& name);
  const std::vector<Tensor*>& all() { return order_; }

  std::size_t tensor_count() const { return order_.size(); }
  long long total_parameters() const;
  void zero_grads();

 private:
  std::deque<Tensor> tensors_;
  std::vector<Tensor*> order_;
  std::unordered_map<std::string, Tensor*> index_;
};

/// Glorot-uniform for matrices, zeros for 1-row tensors (biases). One draw
/// sequence over the store in creation order.
void init_params(const std::vector<Tensor*>& params, RngStream& rng);

/// Binary tensor container, native-endian doubles.
void save_tensors(const std::filesystem::path& path, const std::vector<Tensor*>& params);
/// Loads into an already-constructed store; names and shapes must match.
void load_tensors(const std::filesystem::path& path, const std::vector<Tensor*>& params);

struct Linear {
  Tensor* W = nullptr;
  Tensor* b = nullptr;

  Linear() = default;
  Linear(ParamStore& store, const std::string& name, Eigen::Index in, Eigen::Index out);
  Var apply(Graph& g, Var x) const;
};

/// Two affine layers with a ReLU between them.
struct Ffn2 {
  Linear l1;
  Linear l2;

  Ffn2() = default;
  Ffn2(ParamStore& store, const std::string& name, Eigen::Index in, Eigen::Index hidden,
       Eigen::Index out);
  Var apply(Graph& g, Var x) const;
};

struct GruCell {
  Tensor *Wr = nullptr, *Wz = nullptr, *Wn = nullptr;
  Tensor *Ur = nullptr, *Uz = nullptr, *Un = nullptr;
  Tensor *br = nullptr, *bz = nullptr, *bn = nullptr;

  GruCell() = default;
  GruCell(ParamStore& store, const std::string& name, Eigen::Index in, Eigen::Index hidden);

  /// r = sig(xWr + hUr + br); z = sig(xWz + hUz + bz);
  /// n = tanh(xWn + (r.h)Un + bn); h' = z.h + (1 - z).n
  Var step(Graph& g, Var x, Var h) const;

  /// h' where mask row is 1, previous h where it is 0. mask is Bx1.
  Var masked_step(Graph& g, Var x, Var h, Var mask_col) const;
};

class Adam {
 public:
  Adam(std::vector<Tensor*> params, double lr, double clip_norm = 5.0, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);

  /// Clips by global norm, then applies one update. Does not clear grads.
  void step();

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  long long steps_taken() const { return t_; }

 private:
  std::vector<Tensor*> params_;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
  double lr_;
  double clip_norm_;
  double beta1_;
  double beta2_;
  double eps_;
  long long t_ = 0;
};

/// Index of the row maximum; ties break toward the lower index.
int argmax_row(const Mat& m, Eigen::Index row);

}  // namespace emphi::nn
