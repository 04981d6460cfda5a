#include "emd/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace emd {

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("KL: length mismatch");
  double s = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] <= 0.0) throw std::invalid_argument("KL: q must be positive where p is");
    s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

double joint_loss(double l_domain, double l_ctype, double l_tag, double l_correct,
                  double l_constraint, const LossWeights& w) {
  return w.alpha * l_domain + w.beta * l_ctype + w.gamma * l_tag + w.theta * l_correct +
         w.epsilon * l_constraint;
}

}  // namespace emd
