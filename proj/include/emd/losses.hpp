#pragma once

#include <vector>

namespace emd {

// Weights of the five-term joint objective:
// alpha * L_domain + beta * L_ctype + gamma * L_tag + theta * L_correct +
// epsilon * L_constraint.
struct LossWeights {
  double alpha = 1.0;    // domain cross-entropy
  double beta = 1.0;     // C-type cross-entropy
  double gamma = 1.0;    // tag cross-entropy
  double theta = 1.0;    // correction binary cross-entropy
  double epsilon = 1.0;  // KL(R_real || R)
};

// Sum p * ln(p/q) with 0*ln(0) := 0. q must be strictly positive wherever
// p is; softmax outputs satisfy this everywhere.
double kl_divergence(const std::vector<double>& p_target, const std::vector<double>& q_model);

// Weighted sum; heads with no instances contribute their term as 0.
double joint_loss(double l_domain, double l_ctype, double l_tag, double l_correct,
                  double l_constraint, const LossWeights& w);

}  // namespace emd
