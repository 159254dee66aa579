#pragma once

#include <Eigen/Dense>

namespace csprobe {

// Adaptive-moment gradient descent for a single dense parameter block.
class Adam {
 public:
  struct Options {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam(Eigen::Index rows, Eigen::Index cols, Options options);

  void step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad);

  double learning_rate() const { return options_.learning_rate; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }

 private:
  Options options_;
  Eigen::MatrixXd m_;
  Eigen::MatrixXd v_;
  long t_ = 0;
};

}  // namespace csprobe
