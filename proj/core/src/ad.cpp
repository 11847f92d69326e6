#include "emphi/ad.hpp"

#include <cmath>

#include "emphi/common.hpp"

namespace emphi::ad {
namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw EmphiError("graph: " + msg);
}

}  // namespace

Var Graph::emplace(Mat value, std::function<void(Graph&, Node&)> backprop) {
  Node n;
  n.value = std::move(value);
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Graph::Node& Graph::node(Var v) {
  require(v.id >= 0 && v.id < static_cast<int>(nodes_.size()), "invalid var");
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Graph::Node& Graph::node_c(Var v) const {
  require(v.id >= 0 && v.id < static_cast<int>(nodes_.size()), "invalid var");
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Mat& Graph::value(Var v) const { return node_c(v).value; }
const Mat& Graph::grad(Var v) const { return node_c(v).grad; }

Var Graph::input(Mat m) { return emplace(std::move(m), nullptr); }

Var Graph::param(Tensor& t) {
  auto it = param_cache_.find(&t);
  if (it != param_cache_.end()) return Var{it->second};
  Tensor* ptr = &t;
  Var v = emplace(t.value, [ptr](Graph&, Node& self) { ptr->grad += self.grad; });
  param_cache_.emplace(&t, v.id);
  return v;
}

void Graph::backward(Var loss) {
  Node& top = node(loss);
  require(top.value.rows() == 1 && top.value.cols() == 1, "backward needs a scalar loss");
  for (auto& n : nodes_) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  top.grad(0, 0) = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.backprop) n.backprop(*this, n);
  }
}

Var Graph::matmul(Var a, Var b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  require(A.cols() == B.rows(), "matmul shape mismatch");
  int ai = a.id, bi = b.id;
  return emplace(A * B, [ai, bi](Graph& g, Node& self) {
    g.grad_of(ai) += self.grad * g.value_of(bi).transpose();
    g.grad_of(bi) += g.value_of(ai).transpose() * self.grad;
  });
}

Var Graph::matmul_nt(Var a, Var b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  require(A.cols() == B.cols(), "matmul_nt shape mismatch");
  int ai = a.id, bi = b.id;
  return emplace(A * B.transpose(), [ai, bi](Graph& g, Node& self) {
    g.grad_of(ai) += self.grad * g.value_of(bi);
    g.grad_of(bi) += self.grad.transpose() * g.value_of(ai);
  });
}

Var Graph::matmul_tn(Var a, Var b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  require(A.rows() == B.rows(), "matmul_tn shape mismatch");
  int ai = a.id, bi = b.id;
  return emplace(A.transpose() * B, [ai, bi](Graph& g, Node& self) {
    g.grad_of(ai) += g.value_of(bi) * self.grad.transpose();
    g.grad_of(bi) += g.value_of(ai) * self.grad;
  });
}

Var Graph::add(Var a, Var b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  require(A.rows() == B.rows() && A.cols() == B.cols(), "add shape mismatch");
  int ai = a.id, bi = b.id;
  return emplace(A + B, [ai, bi](Graph& g, Node& self) {
    g.grad_of(ai) += self.grad;
    g.grad_of(bi) += self.grad;
  });
}

Var Graph::sub(Var a, Var b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  require(A.rows() == B.rows() && A.cols() == B.cols(), "sub shape mismatch");
  int ai = a.id, bi = b.id;
  return emplace(A - B, [ai, bi](Graph& g, Node& self) {
    g.grad_of(ai) += self.grad;
    g.grad_of(bi) -= self.grad;
  });
}

Var Graph::cmul(Var a, Var b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  require(A.rows() == B.rows() && A.cols() == B.cols(), "cmul shape mismatch");
  int ai = a.id, bi = b.id;
  return emplace(A.cwiseProduct(B), [ai, bi](Graph& g, Node& self) {
    g.grad_of(ai) += self.grad.cwiseProduct(g.value_of(bi));
    g.grad_of(bi) += self.grad.cwiseProduct(g.value_of(ai));
  });
}

Var Graph::scale(Var a, double k) {
  int ai = a.id;
  return emplace(value(a) * k, [ai, k](Graph& g, Node& self) { g.grad_of(ai) += k * self.grad; });
}

Var Graph::affine(Var a, double k, double c) {
  int ai = a.id;
  Mat out = (value(a).array() * k + c).matrix();
  return emplace(std::move(out),
                 [ai, k](Graph& g, Node& self) { g.grad_of(ai) += k * self.grad; });
}

Var Graph::add_const(Var a, Mat c) {
  const Mat& A = value(a);
  require(A.rows() == c.rows() && A.cols() == c.cols(), "add_const shape mismatch");
  int ai = a.id;
  return emplace(A + c, [ai](Graph& g, Node& self) { g.grad_of(ai) += self.grad; });
}

Var Graph::add_rowvec(Var m, Var row) {
  const Mat& M = value(m);
  const Mat& R = value(row);
  require(R.rows() == 1 && R.cols() == M.cols(), "add_rowvec shape mismatch");
  int mi = m.id, ri = row.id;
  Mat out = M.rowwise() + R.row(0);
  return emplace(std::move(out), [mi, ri](Graph& g, Node& self) {
    g.grad_of(mi) += self.grad;
    g.grad_of(ri) += self.grad.colwise().sum();
  });
}

Var Graph::mul_colvec(Var m, Var col) {
  const Mat& M = value(m);
  const Mat& C = value(col);
  require(C.cols() == 1 && C.rows() == M.rows(), "mul_colvec shape mismatch");
  int mi = m.id, ci = col.id;
  Mat out = C.col(0).asDiagonal() * M;
  return emplace(std::move(out), [mi, ci](Graph& g, Node& self) {
    g.grad_of(mi) += g.value_of(ci).col(0).asDiagonal() * self.grad;
    g.grad_of(ci) += self.grad.cwiseProduct(g.value_of(mi)).rowwise().sum();
  });
}

Var Graph::concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols needs at least one part");
  Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    require(value(p).rows() == rows, "concat_cols row mismatch");
    cols += value(p).cols();
  }
  Mat out(rows, cols);
  std::vector<int> ids;
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (Var p : parts) {
    const Mat& P = value(p);
    out.middleCols(at, P.cols()) = P;
    ids.push_back(p.id);
    offsets.push_back(at);
    at += P.cols();
  }
  return emplace(std::move(out), [ids, offsets](Graph& g, Node& self) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      Mat& pg = g.grad_of(ids[i]);
      pg += self.grad.middleCols(offsets[i], pg.cols());
    }
  });
}

Var Graph::concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows needs at least one part");
  Eigen::Index cols = value(parts[0]).cols();
  Eigen::Index rows = 0;
  for (Var p : parts) {
    require(value(p).cols() == cols, "concat_rows column mismatch");
    rows += value(p).rows();
  }
  Mat out(rows, cols);
  std::vector<int> ids;
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (Var p : parts) {
    const Mat& P = value(p);
    out.middleRows(at, P.rows()) = P;
    ids.push_back(p.id);
    offsets.push_back(at);
    at += P.rows();
  }
  return emplace(std::move(out), [ids, offsets](Graph& g, Node& self) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      Mat& pg = g.grad_of(ids[i]);
      pg += self.grad.middleRows(offsets[i], pg.rows());
    }
  });
}

Var Graph::gather_rows(Var table, std::vector<int> ids) {
  const Mat& T = value(table);
  Mat out(static_cast<Eigen::Index>(ids.size()), T.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] >= 0 && ids[i] < T.rows(), "gather_rows id out of range");
    out.row(static_cast<Eigen::Index>(i)) = T.row(ids[i]);
  }
  int ti = table.id;
  return emplace(std::move(out), [ti, ids = std::move(ids)](Graph& g, Node& self) {
    Mat& tg = g.grad_of(ti);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      tg.row(ids[i]) += self.grad.row(static_cast<Eigen::Index>(i));
    }
  });
}

Var Graph::pick(Var m, std::vector<int> cols) {
  const Mat& M = value(m);
  require(static_cast<Eigen::Index>(cols.size()) == M.rows(), "pick needs one column per row");
  Mat out(M.rows(), 1);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    int c = cols[static_cast<std::size_t>(i)];
    require(c >= 0 && c < M.cols(), "pick column out of range");
    out(i, 0) = M(i, c);
  }
  int mi = m.id;
  return emplace(std::move(out), [mi, cols = std::move(cols)](Graph& g, Node& self) {
    Mat& mg = g.grad_of(mi);
    for (Eigen::Index i = 0; i < self.grad.rows(); ++i) {
      mg(i, cols[static_cast<std::size_t>(i)]) += self.grad(i, 0);
    }
  });
}

Var Graph::sigmoid(Var a) {
  Mat out = (1.0 / (1.0 + (-value(a).array()).exp())).matrix();
  int ai = a.id;
  Var v = emplace(std::move(out), nullptr);
  int vi = v.id;
  node(v).backprop = [ai, vi](Graph& g, Node& self) {
    const Mat& y = g.value_of(vi);
    g.grad_of(ai) +=
        (self.grad.array() * y.array() * (1.0 - y.array())).matrix();
  };
  return v;
}

Var Graph::tanh(Var a) {
  Mat out = value(a).array().tanh().matrix();
  int ai = a.id;
  Var v = emplace(std::move(out), nullptr);
  int vi = v.id;
  node(v).backprop = [ai, vi](Graph& g, Node& self) {
    const Mat& y = g.value_of(vi);
    g.grad_of(ai) += (self.grad.array() * (1.0 - y.array().square())).matrix();
  };
  return v;
}

Var Graph::relu(Var a) {
  Mat out = value(a).cwiseMax(0.0);
  int ai = a.id;
  return emplace(std::move(out), [ai](Graph& g, Node& self) {
    const Mat& x = g.value_of(ai);
    g.grad_of(ai) += (self.grad.array() * (x.array() > 0.0).cast<double>()).matrix();
  });
}

Var Graph::log(Var a) {
  const Mat& A = value(a);
  require((A.array() > 0.0).all(), "log of non-positive value");
  int ai = a.id;
  return emplace(A.array().log().matrix(), [ai](Graph& g, Node& self) {
    g.grad_of(ai) += (self.grad.array() / g.value_of(ai).array()).matrix();
  });
}

Var Graph::clamp(Var a, double lo, double hi) {
  require(lo < hi, "clamp bounds inverted");
  const Mat& A = value(a);
  int ai = a.id;
  Mat out = A.cwiseMax(lo).cwiseMin(hi);
  return emplace(std::move(out), [ai, lo, hi](Graph& g, Node& self) {
    const Mat& x = g.value_of(ai);
    Mat inside = ((x.array() > lo) && (x.array() < hi)).cast<double>();
    g.grad_of(ai) += self.grad.cwiseProduct(inside);
  });
}

Var Graph::softmax_rows(Var a) {
  const Mat& A = value(a);
  Mat out(A.rows(), A.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    double mx = A.row(i).maxCoeff();
    Eigen::ArrayXd e = (A.row(i).array() - mx).exp();
    out.row(i) = (e / e.sum()).matrix();
  }
  int ai = a.id;
  Var v = emplace(std::move(out), nullptr);
  int vi = v.id;
  node(v).backprop = [ai, vi](Graph& g, Node& self) {
    const Mat& y = g.value_of(vi);
    Mat& ag = g.grad_of(ai);
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      double dot = self.grad.row(i).cwiseProduct(y.row(i)).sum();
      ag.row(i) += (y.row(i).array() * (self.grad.row(i).array() - dot)).matrix();
    }
  };
  return v;
}

Var Graph::softmax_rows_masked(Var a, Mat mask) {
  const Mat& A = value(a);
  require(mask.rows() == A.rows() && mask.cols() == A.cols(),
          "softmax_rows_masked mask shape mismatch");
  Mat out(A.rows(), A.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      if (mask(i, j) > 0.5 && A(i, j) > mx) mx = A(i, j);
    }
    require(std::isfinite(mx), "softmax_rows_masked: fully masked row");
    Eigen::ArrayXd e = (A.row(i).array() - mx).exp() * mask.row(i).array();
    out.row(i) = (e / e.sum()).matrix();
  }
  int ai = a.id;
  Var v = emplace(std::move(out), nullptr);
  int vi = v.id;
  node(v).backprop = [ai, vi](Graph& g, Node& self) {
    const Mat& y = g.value_of(vi);
    Mat& ag = g.grad_of(ai);
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      double dot = self.grad.row(i).cwiseProduct(y.row(i)).sum();
      ag.row(i) += (y.row(i).array() * (self.grad.row(i).array() - dot)).matrix();
    }
  };
  return v;
}

Var Graph::log_softmax_rows(Var a) {
  const Mat& A = value(a);
  Mat out(A.rows(), A.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    double mx = A.row(i).maxCoeff();
    double lse = std::log((A.row(i).array() - mx).exp().sum()) + mx;
    out.row(i) = (A.row(i).array() - lse).matrix();
  }
  int ai = a.id;
  Var v = emplace(std::move(out), nullptr);
  int vi = v.id;
  node(v).backprop = [ai, vi](Graph& g, Node& self) {
    const Mat& logy = g.value_of(vi);
    Mat& ag = g.grad_of(ai);
    for (Eigen::Index i = 0; i < logy.rows(); ++i) {
      double gsum = self.grad.row(i).sum();
      ag.row(i) +=
          (self.grad.row(i).array() - logy.row(i).array().exp() * gsum).matrix();
    }
  };
  return v;
}

Var Graph::rowsum(Var a) {
  const Mat& A = value(a);
  Mat out = A.rowwise().sum();
  int ai = a.id;
  return emplace(std::move(out), [ai](Graph& g, Node& self) {
    Mat& ag = g.grad_of(ai);
    ag += self.grad.col(0).replicate(1, ag.cols());
  });
}

Var Graph::sum_all(Var a) {
  Mat out(1, 1);
  out(0, 0) = value(a).sum();
  int ai = a.id;
  return emplace(std::move(out), [ai](Graph& g, Node& self) {
    Mat& ag = g.grad_of(ai);
    ag.array() += self.grad(0, 0);
  });
}

Var Graph::kl_rows(Mat q, Var p) {
  const Mat& P = value(p);
  require(q.rows() == P.rows() && q.cols() == P.cols(), "kl_rows shape mismatch");
  require((q.array() >= 0.0).all(), "kl_rows needs nonnegative q");
  Mat out(P.rows(), 1);
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < P.cols(); ++k) {
      double qv = q(i, k);
      if (qv <= 0.0) continue;
      double pv = std::max(P(i, k), 1e-300);
      acc += qv * std::log(qv / pv);
    }
    out(i, 0) = acc;
  }
  int pi = p.id;
  return emplace(std::move(out), [pi, q = std::move(q)](Graph& g, Node& self) {
    const Mat& P = g.value_of(pi);
    Mat& pg = g.grad_of(pi);
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      double gi = self.grad(i, 0);
      if (gi == 0.0) continue;
      for (Eigen::Index k = 0; k < P.cols(); ++k) {
        double qv = q(i, k);
        if (qv <= 0.0) continue;
        pg(i, k) -= gi * qv / std::max(P(i, k), 1e-300);
      }
    }
  });
}

Var Graph::masked_mean(Var a, Mat mask) {
  const Mat& A = value(a);
  require(mask.rows() == A.rows() && mask.cols() == A.cols(), "masked_mean shape mismatch");
  double denom = mask.sum();
  require(denom > 0.0, "masked_mean over an empty mask");
  Mat out(1, 1);
  out(0, 0) = A.cwiseProduct(mask).sum() / denom;
  int ai = a.id;
  return emplace(std::move(out), [ai, mask = std::move(mask), denom](Graph& g, Node& self) {
    g.grad_of(ai) += (self.grad(0, 0) / denom) * mask;
  });
}

Var Graph::attention_scores(Var proj, Var query, Var v, int positions) {
  const Mat& P = value(proj);
  const Mat& Q = value(query);
  const Mat& V = value(v);
  Eigen::Index B = Q.rows();
  require(positions >= 1, "attention_scores needs at least one position");
  require(P.rows() == static_cast<Eigen::Index>(positions) * B, "attention_scores proj rows");
  require(P.cols() == Q.cols(), "attention_scores width mismatch");
  require(V.cols() == 1 && V.rows() == Q.cols(), "attention_scores v shape");

  Mat out(B, positions);
  for (int t = 0; t < positions; ++t) {
    Mat th = (P.middleRows(static_cast<Eigen::Index>(t) * B, B) + Q).array().tanh().matrix();
    out.col(t) = th * V;
  }
  int pi = proj.id, qi = query.id, vi = v.id;
  return emplace(std::move(out), [pi, qi, vi, positions, B](Graph& g, Node& self) {
    const Mat& P = g.value_of(pi);
    const Mat& Q = g.value_of(qi);
    const Mat& V = g.value_of(vi);
    Mat& pg = g.grad_of(pi);
    Mat& qg = g.grad_of(qi);
    Mat& vg = g.grad_of(vi);
    for (int t = 0; t < positions; ++t) {
      Eigen::Index r0 = static_cast<Eigen::Index>(t) * B;
      Mat th = (P.middleRows(r0, B) + Q).array().tanh().matrix();
      vg += th.transpose() * self.grad.col(t);
      Mat dth = (self.grad.col(t) * V.transpose()).cwiseProduct(
          (1.0 - th.array().square()).matrix());
      pg.middleRows(r0, B) += dth;
      qg += dth;
    }
  });
}

Var Graph::attention_context(Var states, Var weights) {
  const Mat& S = value(states);
  const Mat& W = value(weights);
  Eigen::Index B = W.rows();
  Eigen::Index T = W.cols();
  require(S.rows() == T * B, "attention_context states rows");
  Mat out = Mat::Zero(B, S.cols());
  for (Eigen::Index t = 0; t < T; ++t) {
    out += W.col(t).asDiagonal() * S.middleRows(t * B, B);
  }
  int si = states.id, wi = weights.id;
  return emplace(std::move(out), [si, wi, B, T](Graph& g, Node& self) {
    const Mat& S = g.value_of(si);
    const Mat& W = g.value_of(wi);
    Mat& sg = g.grad_of(si);
    Mat& wg = g.grad_of(wi);
    for (Eigen::Index t = 0; t < T; ++t) {
      sg.middleRows(t * B, B) += W.col(t).asDiagonal() * self.grad;
      wg.col(t) += self.grad.cwiseProduct(S.middleRows(t * B, B)).rowwise().sum();
    }
  });
}

}  // namespace emphi::ad
