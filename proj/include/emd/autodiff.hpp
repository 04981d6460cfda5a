#pragma once

#include <cassert>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "emd/mat.hpp"

namespace emd {

// A named trainable tensor with its gradient buffer.
template <typename T>
struct Param {
  std::string name;
  Mat<T> val;
  Mat<T> grad;

  Param(std::string n, int rows, int cols)
      : name(std::move(n)), val(rows, cols), grad(rows, cols) {}
};

// Owns every trainable tensor of a model. Registration order is the
// canonical iteration order everywhere (optimizer, checkpoint, grad norm),
// which keeps accumulation deterministic.
template <typename T>
class ParamStore {
 public:
  Param<T>& add(const std::string& name, int rows, int cols) {
    if (by_name_.count(name)) throw std::logic_error("duplicate parameter: " + name);
    params_.push_back(std::make_unique<Param<T>>(name, rows, cols));
    by_name_[name] = params_.back().get();
    return *params_.back();
  }

  Param<T>* find(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : it->second;
  }

  const std::vector<std::unique_ptr<Param<T>>>& all() const { return params_; }

  void zero_grads() {
    for (auto& p : params_) p->grad.zero();
  }

  double grad_norm() const {
    double s = 0;
    for (const auto& p : params_)
      for (T g : p->grad.data) s += static_cast<double>(g) * static_cast<double>(g);
    return std::sqrt(s);
  }

  // Returns the name of the first tensor with a non-finite gradient, or "".
  std::string first_nonfinite_grad() const {
    for (const auto& p : params_)
      if (!p->grad.all_finite()) return p->name;
    return "";
  }

  size_t num_values() const {
    size_t n = 0;
    for (const auto& p : params_) n += p->val.size();
    return n;
  }

 private:
  std::vector<std::unique_ptr<Param<T>>> params_;
  std::map<std::string, Param<T>*> by_name_;
};

// Tape-based reverse-mode autodiff over Mat<T>. Nodes are created in forward
// order; backward() walks the tape in reverse, so gradient accumulation order
// is fixed by construction.
template <typename T>
class Graph {
 public:
  using Ref = int;

  Ref constant(Mat<T> v) { return push(std::move(v), nullptr); }

  // Leaf over a parameter tensor; backward adds straight into p.grad.
  Ref param(Param<T>& p) {
    Ref r = push(p.val, nullptr);
    Param<T>* pp = &p;
    nodes_[r].back = [r, pp](Graph& g) {
      Mat<T>& gr = g.nodes_[r].grad;
      for (size_t i = 0; i < gr.data.size(); ++i) pp->grad.data[i] += gr.data[i];
    };
    return r;
  }

  // Row gather from an embedding table without copying the table into the
  // tape. Backward scatter-adds into table.grad.
  Ref gather_rows(Param<T>& table, std::vector<int> ids) {
    Mat<T> out(static_cast<int>(ids.size()), table.val.cols);
    for (size_t i = 0; i < ids.size(); ++i) {
      assert(ids[i] >= 0 && ids[i] < table.val.rows);
      const T* src = table.val.row_ptr(ids[i]);
      std::copy(src, src + table.val.cols, out.row_ptr(static_cast<int>(i)));
    }
    Ref r = push(std::move(out), nullptr);
    Param<T>* tp = &table;
    nodes_[r].back = [r, tp, ids = std::move(ids)](Graph& g) {
      const Mat<T>& gr = g.nodes_[r].grad;
      for (size_t i = 0; i < ids.size(); ++i) {
        T* dst = tp->grad.row_ptr(ids[i]);
        const T* src = gr.row_ptr(static_cast<int>(i));
        for (int j = 0; j < gr.cols; ++j) dst[j] += src[j];
      }
    };
    return r;
  }

  Ref matmul(Ref a, Ref b, bool ta = false, bool tb = false) {
    const Mat<T>& A = val(a);
    const Mat<T>& B = val(b);
    const int m = ta ? A.cols : A.rows;
    const int n = tb ? B.rows : B.cols;
    Mat<T> out(m, n);
    gemm_acc(A, ta, B, tb, out);
    Ref r = push(std::move(out), nullptr);
    nodes_[r].back = [r, a, b, ta, tb](Graph& g) {
      const Mat<T>& gC = g.nodes_[r].grad;
      const Mat<T>& Av = g.val(a);
      const Mat<T>& Bv = g.val(b);
      Mat<T>& gA = g.nodes_[a].grad;
      Mat<T>& gB = g.nodes_[b].grad;
      if (!ta && !tb) {
        gemm_acc(gC, false, Bv, true, gA);   // dA += dC B^T
        gemm_acc(Av, true, gC, false, gB);   // dB += A^T dC
      } else if (!ta && tb) {
        gemm_acc(gC, false, Bv, false, gA);  // dA += dC B
        gemm_acc(gC, true, Av, false, gB);   // dB += dC^T A
      } else if (ta && !tb) {
        gemm_acc(Bv, false, gC, true, gA);   // dA += B dC^T
        gemm_acc(Av, false, gC, false, gB);  // dB += A dC
      } else {
        gemm_acc(Bv, true, gC, true, gA);    // dA += B^T dC^T
        gemm_acc(gC, true, Av, true, gB);    // dB += dC^T A^T
      }
    };
    return r;
  }

  Ref add(Ref a, Ref b) {
    const Mat<T>& A = val(a);
    const Mat<T>& B = val(b);
    assert(A.same_shape(B));
    Mat<T> out = A;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += B.data[i];
    Ref r = push(std::move(out), nullptr);
    nodes_[r].back = [r, a, b](Graph& g) {
      const Mat<T>& gr = g.nodes_[r].grad;
      Mat<T>& gA = g.nodes_[a].grad;
      Mat<T>& gB = g.nodes_[b].grad;
      for (size_t i = 0; i < gr.data.size(); ++i) {
        gA.data[i] += gr.data[i];
        gB.data[i] += gr.data[i];
      }
    };
    return r;
  }

  // x (n x c) + bias (1 x c) broadcast over rows.
  Ref add_row(Ref x, Ref bias) {
    const Mat<T>& X = val(x);
    const Mat<T>& Bv = val(bias);
    assert(Bv.rows == 1 && Bv.cols == X.cols);
    Mat<T> out = X;
    for (int i = 0; i < out.rows; ++i) {
      T* row = out.row_ptr(i);
      for (int j = 0; j < out.cols; ++j) row[j] += Bv.data[j];
    }
    Ref r = push(std::move(out), nullptr);
    nodes_[r].back = [r, x, bias](Graph& g) {
      const Mat<T>& gr = g.nodes_[r].grad;
      Mat<T>& gX = g.nodes_[x].grad;
      Mat<T>& gB = g.nodes_[bias].grad;
      for (size_t i = 0; i < gr.data.size(); ++i) gX.data[i] += gr.data[i];
      for (int i = 0; i < gr.rows; ++i) {
        const T* row = gr.row_ptr(i);
        for (int j = 0; j < gr.cols; ++j) gB.data[j] += row[j];
      }
    };
    return r;
  }

  Ref scale(Ref x, T s) {
    Mat<T> out = val(x);
    for (T& v : out.data) v *= s;
    Ref r = push(std::move(out), nullptr);
    nodes_[r].back = [r, x, s](Graph& g) {
      const Mat<T>& gr = g.nodes_[r].grad;
      Mat<T>& gX = g.nodes_[x].grad;
      for (size_t i = 0; i < gr.data.size(); ++i) gX.data[i] += s * gr.data[i];
    };
    return r;
  }

  // Smooth GELU (tanh approximation); smoothness keeps finite-difference
  // gradient checks clean.
  Ref gelu(Ref x) {
    const Mat<T>& X = val(x);
    Mat<T> out(X.rows, X.cols);
    for (size_t i = 0; i < X.data.size(); ++i) out.data[i] = gelu_fwd(X.data[i]);
    Ref r = push(std::move(out), nullptr);
    nodes_[r].back = [r, x](Graph& g) {
      const Mat<T>& gr = g.nodes_[r].grad;
      const Mat<T>& Xv = g.val(x);
      Mat<T>& gX = g.nodes_[x].grad;
      for (size_t i = 0; i < gr.data.size(); ++i)
        gX.data[i] += gelu_bwd(Xv.data[i]) * gr.data[i];
    };
    return r;
  }

  // Row-wise layer norm with learned gain/bias (each 1 x c).
  Ref layer_norm(Ref x, Ref gain, Ref bias) {
    const Mat<T>& X = val(x);
    const Mat<T>& G = val(gain);
    const Mat<T>& Bv = val(bias);
    assert(G.rows == 1 && G.cols == X.cols && Bv.rows == 1 && Bv.cols == X.cols);
    const int n = X.rows, c = X.cols;
    Mat<T> xhat(n, c);
    std::vector<T> inv_std(n);
    Mat<T> out(n, c);
    for (int i = 0; i < n; ++i) {
      const T* row = X.row_ptr(i);
      T mean = 0;
      for (int j = 0; j < c; ++j) mean += row[j];
      mean /= static_cast<T>(c);
      T var = 0;
      for (int j = 0; j < c; ++j) {
        T d = row[j] - mean;
        var += d * d;
      }
      var /= static_cast<T>(c);
      T is = T(1) / std::sqrt(var + kLnEps);
      inv_std[i] = is;
      T* xh = xhat.row_ptr(i);
      T* o = out.row_ptr(i);
      for (int j = 0; j < c; ++j) {
        xh[j] = (row[j] - mean) * is;
        o[j] = G.data[j] * xh[j] + Bv.data[j];
      }
    }
    Ref r = push(std::move(out), nullptr);
    nodes_[r].back = [r, x, gain, bias, xhat = std::move(xhat),
                      inv_std = std::move(inv_std)](Graph& g) {
      const Mat<T>& gr = g.nodes_[r].grad;
      const Mat<T>& G = g.val(gain);
      Mat<T>& gX = g.nodes_[x].grad;
      Mat<T>& gG = g.nodes_[gain].grad;
      Mat<T>& gB = g.nodes_[bias].grad;
      const int n = gr.rows, c = gr.cols;
      for (int i = 0; i < n; ++i) {
        const T* go = gr.row_ptr(i);
        const T* xh = xhat.row_ptr(i);
        T* gx = gX.row_ptr(i);
        T sum_dxh = 0, sum_dxh_xh = 0;
        for (int j = 0; j < c; ++j) {
          T dxh = go[j] * G.data[j];
          sum_dxh += dxh;
          sum_dxh_xh += dxh * xh[j];
          gG.data[j] += go[j] * xh[j];
          gB.data[j] += go[j];
        }
        const T inv_c = T(1) / static_cast<T>(c);
        for (int j = 0; j < c; ++j) {
          T dxh = go[j] * G.data[j];
          gx[j] += inv_std[i] * (dxh - inv_c * sum_dxh - xh[j] * inv_c * sum_dxh_xh);
        }
      }
    };
    return r;
  }

  Ref softmax_rows(Ref x) {
    const Mat<T>& X = val(x);
    Mat<T> out(X.rows, X.cols);
    for (int i = 0; i < X.rows; ++i) softmax_row(X.row_ptr(i), out.row_ptr(i), X.cols);
    Ref r = push(std::move(out), nullptr);
    nodes_[r].back = [r, x](Graph& g) {
      const Mat<T>& S = g.val(r);
      const Mat<T>& gr = g.nodes_[r].grad;
      Mat<T>& gX = g.nodes_[x].grad;
      for (int i = 0; i < S.rows; ++i) {
        const T* s = S.row_ptr(i);
        const T* go = gr.row_ptr(i);
        T* gx = gX.row_ptr(i);
        T dot = 0;
        for (int j = 0; j < S.cols; ++j) dot += s[j] * go[j];
        for (int j = 0; j < S.cols; ++j) gx[j] += s[j] * (go[j] - dot);
      }
    };
    return r;
  }

  Ref concat_cols(const std::vector<Ref>& xs) {
    assert(!xs.empty());
    const int rows = val(xs[0]).rows;
    int cols = 0;
    for (Ref x : xs) {
      assert(val(x).rows == rows);
      cols += val(x).cols;
    }
    Mat<T> out(rows, cols);
    int off = 0;
    for (Ref x : xs) {
      const Mat<T>& X = val(x);
      for (int i = 0; i < rows; ++i)
        std::copy(X.row_ptr(i), X.row_ptr(i) + X.cols, out.row_ptr(i) + off);
      off += X.cols;
    }
    Ref r = push(std::move(out), nullptr);
    nodes_[r].back = [r, xs](Graph& g) {
      const Mat<T>& gr = g.nodes_[r].grad;
      int off = 0;
      for (Ref x : xs) {
        Mat<T>& gX = g.nodes_[x].grad;
        for (int i = 0; i < gr.rows; ++i) {
          const T* src = gr.row_ptr(i) + off;
          T* dst = gX.row_ptr(i);
          for (int j = 0; j < gX.cols; ++j) dst[j] += src[j];
        }
        off += gX.cols;
      }
    };
    return r;
  }

  Ref slice_cols(Ref x, int start, int n) {
    const Mat<T>& X = val(x);
    assert(start >= 0 && start + n <= X.cols);
    Mat<T> out(X.rows, n);
    for (int i = 0; i < X.rows; ++i)
      std::copy(X.row_ptr(i) + start, X.row_ptr(i) + start + n, out.row_ptr(i));
    Ref r = push(std::move(out), nullptr);
    nodes_[r].back = [r, x, start, n](Graph& g) {
      const Mat<T>& gr = g.nodes_[r].grad;
      Mat<T>& gX = g.nodes_[x].grad;
      for (int i = 0; i < gr.rows; ++i) {
        const T* src = gr.row_ptr(i);
        T* dst = gX.row_ptr(i) + start;
        for (int j = 0; j < n; ++j) dst[j] += src[j];
      }
    };
    return r;
  }

  Ref slice_rows(Ref x, int start, int n) {
    const Mat<T>& X = val(x);
    assert(start >= 0 && start + n <= X.rows);
    Mat<T> out(n, X.cols);
    for (int i = 0; i < n; ++i)
      std::copy(X.row_ptr(start + i), X.row_ptr(start + i) + X.cols, out.row_ptr(i));
    Ref r = push(std::move(out), nullptr);
    nodes_[r].back = [r, x, start, n](Graph& g) {
      const Mat<T>& gr = g.nodes_[r].grad;
      Mat<T>& gX = g.nodes_[x].grad;
      for (int i = 0; i < n; ++i) {
        const T* src = gr.row_ptr(i);
        T* dst = gX.row_ptr(start + i);
        for (int j = 0; j < gr.cols; ++j) dst[j] += src[j];
      }
    };
    return r;
  }

  Ref sum(Ref x) {
    const Mat<T>& X = val(x);
    Mat<T> out(1, 1);
    T s = 0;
    for (T v : X.data) s += v;
    out.data[0] = s;
    Ref r = push(std::move(out), nullptr);
    nodes_[r].back = [r, x](Graph& g) {
      const T go = g.nodes_[r].grad.data[0];
      Mat<T>& gX = g.nodes_[x].grad;
      for (T& v : gX.data) v += go;
    };
    return r;
  }

  // Weighted sum of scalar (1x1) nodes.
  Ref weighted_sum(const std::vector<Ref>& xs, const std::vector<T>& ws) {
    assert(xs.size() == ws.size());
    Mat<T> out(1, 1);
    for (size_t i = 0; i < xs.size(); ++i) out.data[0] += ws[i] * val(xs[i]).data[0];
    Ref r = push(std::move(out), nullptr);
    nodes_[r].back = [r, xs, ws](Graph& g) {
      const T go = g.nodes_[r].grad.data[0];
      for (size_t i = 0; i < xs.size(); ++i) g.nodes_[xs[i]].grad.data[0] += ws[i] * go;
    };
    return r;
  }

  // Sum over rows of -log softmax(logits_i)[target_i]. Caller normalizes.
  Ref softmax_ce(Ref logits, std::vector<int> targets) {
    const Mat<T>& Z = val(logits);
    assert(static_cast<int>(targets.size()) == Z.rows);
    Mat<T> probs(Z.rows, Z.cols);
    T loss = 0;
    for (int i = 0; i < Z.rows; ++i) {
      softmax_row(Z.row_ptr(i), probs.row_ptr(i), Z.cols);
      loss -= log_softmax_at(Z.row_ptr(i), Z.cols, targets[i]);
    }
    Mat<T> out(1, 1);
    out.data[0] = loss;
    Ref r = push(std::move(out), nullptr);
    nodes_[r].back = [r, logits, probs = std::move(probs),
                      targets = std::move(targets)](Graph& g) {
      const T go = g.nodes_[r].grad.data[0];
      Mat<T>& gZ = g.nodes_[logits].grad;
      for (int i = 0; i < probs.rows; ++i) {
        const T* p = probs.row_ptr(i);
        T* gz = gZ.row_ptr(i);
        for (int j = 0; j < probs.cols; ++j) gz[j] += go * p[j];
        gz[targets[i]] -= go;
      }
    };
    return r;
  }

  // KL(target || softmax(logits)) for a single 1xK logit row. Terms with
  // target[j] == 0 contribute zero.
  Ref kl_to_softmax(std::vector<T> target, Ref logits) {
    const Mat<T>& Z = val(logits);
    assert(Z.rows == 1 && static_cast<int>(target.size()) == Z.cols);
    std::vector<T> q(Z.cols);
    softmax_row(Z.row_ptr(0), q.data(), Z.cols);
    const T lse = logsumexp_row(Z.row_ptr(0), Z.cols);
    T loss = 0;
    for (int j = 0; j < Z.cols; ++j) {
      if (target[j] > T(0))
        loss += target[j] * (std::log(target[j]) - (Z.row_ptr(0)[j] - lse));
    }
    Mat<T> out(1, 1);
    out.data[0] = loss;
    Ref r = push(std::move(out), nullptr);
    nodes_[r].back = [r, logits, q = std::move(q), target = std::move(target)](Graph& g) {
      const T go = g.nodes_[r].grad.data[0];
      Mat<T>& gZ = g.nodes_[logits].grad;
      for (size_t j = 0; j < q.size(); ++j)
        gZ.data[j] += go * (q[j] - target[j]);
    };
    return r;
  }

  // Sum of binary cross-entropy terms on sigmoid(logit). logits is n x 1.
  Ref sigmoid_bce(Ref logits, std::vector<T> labels) {
    const Mat<T>& Z = val(logits);
    assert(Z.cols == 1 && static_cast<int>(labels.size()) == Z.rows);
    T loss = 0;
    for (int i = 0; i < Z.rows; ++i) {
      const T z = Z.data[i];
      // softplus(z) - y*z, written stably.
      loss += std::max(z, T(0)) - labels[i] * z + std::log1p(std::exp(-std::abs(z)));
    }
    Mat<T> out(1, 1);
    out.data[0] = loss;
    Ref r = push(std::move(out), nullptr);
    nodes_[r].back = [r, logits, labels = std::move(labels)](Graph& g) {
      const T go = g.nodes_[r].grad.data[0];
      const Mat<T>& Z = g.val(logits);
      Mat<T>& gZ = g.nodes_[logits].grad;
      for (int i = 0; i < Z.rows; ++i)
        gZ.data[i] += go * (sigmoid(Z.data[i]) - labels[i]);
    };
    return r;
  }

  const Mat<T>& val(Ref r) const { return nodes_[r].val; }
  const Mat<T>& grad(Ref r) const { return nodes_[r].grad; }

  void backward(Ref loss) {
    assert(val(loss).rows == 1 && val(loss).cols == 1);
    nodes_[loss].grad.data[0] = T(1);
    for (int i = loss; i >= 0; --i) {
      if (nodes_[i].back) nodes_[i].back(*this);
    }
  }

  size_t size() const { return nodes_.size(); }

  static T sigmoid(T z) {
    if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
    const T e = std::exp(z);
    return e / (T(1) + e);
  }

 private:
  struct Node {
    Mat<T> val;
    Mat<T> grad;
    std::function<void(Graph&)> back;
  };

  static constexpr T kLnEps = static_cast<T>(1e-5);

  Ref push(Mat<T> v, std::function<void(Graph&)> back) {
    Node n;
    n.grad = Mat<T>(v.rows, v.cols);
    n.val = std::move(v);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Ref>(nodes_.size()) - 1;
  }

  static void softmax_row(const T* z, T* out, int n) {
    T mx = z[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, z[j]);
    T s = 0;
    for (int j = 0; j < n; ++j) {
      out[j] = std::exp(z[j] - mx);
      s += out[j];
    }
    const T inv = T(1) / s;
    for (int j = 0; j < n; ++j) out[j] *= inv;
  }

  static T logsumexp_row(const T* z, int n) {
    T mx = z[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, z[j]);
    T s = 0;
    for (int j = 0; j < n; ++j) s += std::exp(z[j] - mx);
    return mx + std::log(s);
  }

  static T log_softmax_at(const T* z, int n, int idx) {
    return z[idx] - logsumexp_row(z, n);
  }

  static T gelu_fwd(T x) {
    const T c = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
    const T u = c * (x + static_cast<T>(0.044715) * x * x * x);
    return static_cast<T>(0.5) * x * (T(1) + std::tanh(u));
  }

  static T gelu_bwd(T x) {
    const T c = static_cast<T>(0.7978845608028654);
    const T k = static_cast<T>(0.044715);
    const T u = c * (x + k * x * x * x);
    const T t = std::tanh(u);
    const T du = c * (T(1) + T(3) * k * x * x);
    return static_cast<T>(0.5) * (T(1) + t) + static_cast<T>(0.5) * x * (T(1) - t * t) * du;
  }

  std::vector<Node> nodes_;
};

}  // namespace emd
