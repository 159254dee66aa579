#include "csprobe/adam.hpp"

#include <cmath>

namespace csprobe {

Adam::Adam(Eigen::Index rows, Eigen::Index cols, Options options)
    : options_(options),
      m_(Eigen::MatrixXd::Zero(rows, cols)),
      v_(Eigen::MatrixXd::Zero(rows, cols)) {}

void Adam::step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad) {
  ++t_;
  m_ = options_.beta1 * m_ + (1.0 - options_.beta1) * grad;
  v_ = options_.beta2 * v_ + (1.0 - options_.beta2) * grad.cwiseAbs2();
  if (options_.learning_rate == 0.0) return;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  param.array() -= options_.learning_rate * (m_.array() / c1) /
                   ((v_.array() / c2).sqrt() + options_.eps);
}

}  // namespace csprobe
