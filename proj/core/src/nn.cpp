#include "emphi/nn.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace emphi::nn {
namespace {

constexpr char kMagic[8] = {'E', 'M', 'P', 'H', 'I', 'B', 'I', 'N'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, const T& v) {
  const char* p = reinterpret_cast<const char*>(&v);
  out.append(p, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& at) {
  if (at + sizeof(T) > in.size()) throw EmphiError("tensor file truncated");
  T v;
  std::memcpy(&v, in.data() + at, sizeof(T));
  at += sizeof(T);
  return v;
}

}  // namespace

Tensor& ParamStore::create(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  if (index_.count(name)) throw EmphiError("duplicate tensor name: " + name);
  if (rows <= 0 || cols <= 0) throw EmphiError("tensor needs positive dims: " + name);
  tensors_.emplace_back(name, rows, cols);
  Tensor* t = &tensors_.back();
  order_.push_back(t);
  index_.emplace(name, t);
  return *t;
}

Tensor& ParamStore::by_name(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw EmphiError("no tensor named " + name);
  return *it->second;
}

long long ParamStore::total_parameters() const {
  long long n = 0;
  for (const Tensor* t : order_) n += static_cast<long long>(t->size());
  return n;
}

void ParamStore::zero_grads() {
  for (Tensor* t : order_) t->zero_grad();
}

void init_params(const std::vector<Tensor*>& params, RngStream& rng) {
  for (Tensor* t : params) {
    if (t->value.rows() == 1) {
      t->value.setZero();
      continue;
    }
    double limit = std::sqrt(6.0 / static_cast<double>(t->value.rows() + t->value.cols()));
    for (Eigen::Index i = 0; i < t->value.rows(); ++i) {
      for (Eigen::Index j = 0; j < t->value.cols(); ++j) {
        t->value(i, j) = rng.uniform(-limit, limit);
      }
    }
  }
}

void save_tensors(const std::filesystem::path& path, const std::vector<Tensor*>& params) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put(out, kVersion);
  put(out, static_cast<std::uint64_t>(params.size()));
  for (const Tensor* t : params) {
    put(out, static_cast<std::uint32_t>(t->name.size()));
    out.append(t->name);
    put(out, static_cast<std::uint64_t>(t->value.rows()));
    put(out, static_cast<std::uint64_t>(t->value.cols()));
    out.append(reinterpret_cast<const char*>(t->value.data()),
               static_cast<std::size_t>(t->value.size()) * sizeof(double));
  }
  atomic_write_file(path, out);
}

void load_tensors(const std::filesystem::path& path, const std::vector<Tensor*>& params) {
  std::string in = read_text_file(path);
  std::size_t at = 0;
  if (in.size() < sizeof(kMagic) || std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0) {
    throw EmphiError("not a tensor file: " + path.string());
  }
  at = sizeof(kMagic);
  auto version = take<std::uint32_t>(in, at);
  if (version != kVersion) {
    throw EmphiError("unsupported tensor file version " + std::to_string(version));
  }
  auto count = take<std::uint64_t>(in, at);
  if (count != params.size()) {
    throw EmphiError("tensor count mismatch: file has " + std::to_string(count) + ", expected " +
                     std::to_string(params.size()));
  }
  for (Tensor* t : params) {
    auto name_len = take<std::uint32_t>(in, at);
    if (at + name_len > in.size()) throw EmphiError("tensor file truncated");
    std::string name(in.data() + at, name_len);
    at += name_len;
    if (name != t->name) {
      throw EmphiError("tensor order mismatch: file has " + name + ", expected " + t->name);
    }
    auto rows = take<std::uint64_t>(in, at);
    auto cols = take<std::uint64_t>(in, at);
    if (rows != static_cast<std::uint64_t>(t->value.rows()) ||
        cols != static_cast<std::uint64_t>(t->value.cols())) {
      throw EmphiError("tensor shape mismatch for " + name);
    }
    std::size_t bytes = static_cast<std::size_t>(rows * cols) * sizeof(double);
    if (at + bytes > in.size()) throw EmphiError("tensor file truncated");
    std::memcpy(t->value.data(), in.data() + at, bytes);
    at += bytes;
  }
  if (at != in.size()) throw EmphiError("trailing bytes in tensor file: " + path.string());
}

Linear::Linear(ParamStore& store, const std::string& name, Eigen::Index in, Eigen::Index out) {
  W = &store.create(name + ".W", in, out);
  b = &store.create(name + ".b", 1, out);
}

Var Linear::apply(Graph& g, Var x) const {
  return g.add_rowvec(g.matmul(x, g.param(*W)), g.param(*b));
}

Ffn2::Ffn2(ParamStore& store, const std::string& name, Eigen::Index in, Eigen::Index hidden,
           Eigen::Index out)
    : l1(store, name + ".l1", in, hidden), l2(store, name + ".l2", hidden, out) {}

Var Ffn2::apply(Graph& g, Var x) const { return l2.apply(g, g.relu(l1.apply(g, x))); }

GruCell::GruCell(ParamStore& store, const std::string& name, Eigen::Index in,
                 Eigen::Index hidden) {
  Wr = &store.create(name + ".Wr", in, hidden);
  Wz = &store.create(name + ".Wz", in, hidden);
  Wn = &store.create(name + ".Wn", in, hidden);
  Ur = &store.create(name + ".Ur", hidden, hidden);
  Uz = &store.create(name + ".Uz", hidden, hidden);
  Un = &store.create(name + ".Un", hidden, hidden);
  br = &store.create(name + ".br", 1, hidden);
  bz = &store.create(name + ".bz", 1, hidden);
  bn = &store.create(name + ".bn", 1, hidden);
}

Var GruCell::step(Graph& g, Var x, Var h) const {
  Var r = g.sigmoid(g.add_rowvec(g.add(g.matmul(x, g.param(*Wr)), g.matmul(h, g.param(*Ur))),
                                 g.param(*br)));
  Var z = g.sigmoid(g.add_rowvec(g.add(g.matmul(x, g.param(*Wz)), g.matmul(h, g.param(*Uz))),
                                 g.param(*bz)));
  Var n = g.tanh(g.add_rowvec(
      g.add(g.matmul(x, g.param(*Wn)), g.matmul(g.cmul(r, h), g.param(*Un))), g.param(*bn)));
  return g.add(g.cmul(z, h), g.cmul(g.affine(z, -1.0, 1.0), n));
}

Var GruCell::masked_step(Graph& g, Var x, Var h, Var mask_col) const {
  Var fresh = step(g, x, h);
  return g.add(g.mul_colvec(fresh, mask_col), g.mul_colvec(h, g.affine(mask_col, -1.0, 1.0)));
}

Adam::Adam(std::vector<Tensor*> params, double lr, double clip_norm, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), clip_norm_(clip_norm), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Tensor* t : params_) {
    m_.push_back(Mat::Zero(t->value.rows(), t->value.cols()));
    v_.push_back(Mat::Zero(t->value.rows(), t->value.cols()));
  }
}

void Adam::step() {
  double sq = 0.0;
  for (Tensor* t : params_) sq += t->grad.squaredNorm();
  double norm = std::sqrt(sq);
  double scale = (clip_norm_ > 0.0 && norm > clip_norm_) ? clip_norm_ / norm : 1.0;

  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor* t = params_[i];
    Mat grad = t->grad * scale;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad.cwiseProduct(grad);
    Mat mhat = m_[i] / bc1;
    Mat vhat = v_[i] / bc2;
    t->value.array() -= lr_ * mhat.array() / (vhat.array().sqrt() + eps_);
  }
}

int argmax_row(const Mat& m, Eigen::Index row) {
  int best = 0;
  double best_v = m(row, 0);
  for (Eigen::Index j = 1; j < m.cols(); ++j) {
    if (m(row, j) > best_v) {
      best_v = m(row, j);
      best = static_cast<int>(j);
    }
  }
  return best;
}

}  // namespace emphi::nn
