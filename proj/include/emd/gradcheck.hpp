#pragma once

#include <map>
#include <string>
#include <vector>

#include "emd/model.hpp"
#include "emd/train.hpp"

namespace emd {

struct GradCheckEntry {
  std::string tensor;
  double max_err = 0;  // relative, denominator floored (see compare_grad_maps)
  int row = 0, col = 0;
  double analytic = 0, fd = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;  // one per tensor, registration order
  double worst = 0;
  std::string worst_tensor;

  bool pass(double tol) const { return worst < tol; }
  std::string to_string() const;
};

using GradMap = std::map<std::string, Mat<double>>;

// Reverse-mode gradients of the full weighted batch objective.
GradMap analytic_grads(Model<double>& model, const std::vector<const TurnSample*>& batch,
                       const LossWeights& w);

// Central finite differences of the identical objective, every entry of
// every tensor, at 64-bit precision.
GradMap finite_diff_grads(Model<double>& model, const std::vector<const TurnSample*>& batch,
                          const LossWeights& w, double step = 1e-5);

// err = |a - b| / max(|a|, |b|, 1e-5): relative where gradients are
// meaningful, absolute below the finite-difference noise floor.
GradCheckReport compare_grad_maps(const GradMap& analytic, const GradMap& fd);

inline GradCheckReport grad_check(Model<double>& model,
                                  const std::vector<const TurnSample*>& batch,
                                  const LossWeights& w, double step = 1e-5) {
  return compare_grad_maps(analytic_grads(model, batch, w),
                           finite_diff_grads(model, batch, w, step));
}

// --- implementation ---

inline GradMap analytic_grads(Model<double>& model, const std::vector<const TurnSample*>& batch,
                              const LossWeights& w) {
  model.store().zero_grads();
  batch_loss(model, batch, w, /*do_backward=*/true);
  GradMap out;
  for (const auto& p : model.store().all()) out[p->name] = p->grad;
  return out;
}

inline GradMap finite_diff_grads(Model<double>& model,
                                 const std::vector<const TurnSample*>& batch,
                                 const LossWeights& w, double step) {
  // The E(.) read-out is a stop-gradient: hold its constants at the
  // evaluation point so the perturbed losses differentiate the same
  // function backward() does.
  model.freeze_label_embeddings();
  GradMap out;
  for (const auto& p : model.store().all()) {
    Mat<double> g(p->val.rows, p->val.cols);
    for (size_t i = 0; i < p->val.data.size(); ++i) {
      const double orig = p->val.data[i];
      p->val.data[i] = orig + step;
      const double up = batch_loss(model, batch, w, false).weighted_total;
      p->val.data[i] = orig - step;
      const double down = batch_loss(model, batch, w, false).weighted_total;
      p->val.data[i] = orig;
      g.data[i] = (up - down) / (2.0 * step);
    }
    out[p->name] = std::move(g);
  }
  model.unfreeze_label_embeddings();
  return out;
}

inline GradCheckReport compare_grad_maps(const GradMap& analytic, const GradMap& fd) {
  GradCheckReport rep;
  for (const auto& [name, a] : analytic) {
    const Mat<double>& b = fd.at(name);
    GradCheckEntry e;
    e.tensor = name;
    for (int i = 0; i < a.rows; ++i) {
      for (int j = 0; j < a.cols; ++j) {
        const double av = a.at(i, j), bv = b.at(i, j);
        const double err =
            std::abs(av - bv) / std::max({std::abs(av), std::abs(bv), 1e-5});
        if (err > e.max_err) {
          e.max_err = err;
          e.row = i;
          e.col = j;
          e.analytic = av;
          e.fd = bv;
        }
      }
    }
    if (e.max_err > rep.worst) {
      rep.worst = e.max_err;
      rep.worst_tensor = name;
    }
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

inline std::string GradCheckReport::to_string() const {
  std::string s;
  for (const auto& e : entries) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-24s max_err=%.3e at (%d,%d) analytic=%.6e fd=%.6e\n",
                  e.tensor.c_str(), e.max_err, e.row, e.col, e.analytic, e.fd);
    s += buf;
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "worst: %.3e (%s)\n", worst, worst_tensor.c_str());
  s += buf;
  return s;
}

}  // namespace emd
