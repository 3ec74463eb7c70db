#pragma once

#include <utility>
#include <vector>

#include "afmvc/common.hpp"
#include "afmvc/network.hpp"

namespace afmvc {

// Sigmoid ramp state for the gradient-reversal coefficient.
struct AdversarySchedule {
  double beta = 10.0;
  long total_iters = 1;
  long current_iter = 0;

  void validate() const {
    require(beta > 0.0, "AdversarySchedule: beta must be positive");
    require(total_iters >= 1, "AdversarySchedule: total_iters must be >= 1");
    require(current_iter >= 0 && current_iter <= total_iters,
            "AdversarySchedule: current_iter out of range");
  }
};

// coeff = 2 / (1 + exp(-beta * iter / n)) - 1; 0 at iter=0, monotone
// non-decreasing in iter.
double grl_coeff(const AdversarySchedule& schedule);

// Sensitive-attribute probabilities from the fused representation.
// Thin wrapper over forward() that insists on a softmax head.
Matrix discriminate(const DenseNetwork& disc, const Matrix& z, GradTape* tape = nullptr);

// Multi-class cross-entropy of the discriminator's predictions against
// the true groups; gradient is w.r.t. the pre-softmax logits.
std::pair<double, Matrix> fairness_loss(const Matrix& probs, const std::vector<int>& sensitive);

// Gradient scales for the two sides of the minimax split: the
// discriminator descends +lambda_f * dL_F, while the gradient passed
// through the reversal layer into the encoders is scaled by
// -lambda_f * coeff.
struct AdversarialSplit {
  double disc_scale = 0.0;
  double encoder_scale = 0.0;
};

AdversarialSplit adversarial_split(double coeff, double lambda_f);

}  // namespace afmvc
