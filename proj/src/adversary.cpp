#include "afmvc/adversary.hpp"

#include <cmath>

namespace afmvc {

double grl_coeff(const AdversarySchedule& schedule) {
  schedule.validate();
  const double progress =
      static_cast<double>(schedule.current_iter) / static_cast<double>(schedule.total_iters);
  return 2.0 / (1.0 + std::exp(-schedule.beta * progress)) - 1.0;
}

Matrix discriminate(const DenseNetwork& disc, const Matrix& z, GradTape* tape) {
  require(disc.role == Role::Discriminator, "discriminate: network is not a discriminator");
  require(disc.layers.back().act == Activation::Softmax,
          "discriminate: discriminator must end in softmax");
  if (z.cols() != disc.input_dim()) {
    throw std::invalid_argument("discriminate: z width " + std::to_string(z.cols()) +
                                " does not match discriminator input " +
                                std::to_string(disc.input_dim()));
  }
  return forward(disc, z, tape);
}

std::pair<double, Matrix> fairness_loss(const Matrix& probs, const std::vector<int>& sensitive) {
  return cross_entropy_loss(probs, sensitive);
}

AdversarialSplit adversarial_split(double coeff, double lambda_f) {
  require(coeff >= 0.0 && lambda_f >= 0.0, "adversarial_split: coeff and lambda_f must be >= 0");
  return {lambda_f, -lambda_f * coeff};
}

}  // namespace afmvc
