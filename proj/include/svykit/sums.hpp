#pragma once

#include <Eigen/Core>
#include <cmath>

namespace svykit {

/// Neumaier-compensated scalar accumulator. Keeps totals accurate for long
/// sums (population totals, O(n^2) pair sums, pooled Monte Carlo moments)
/// where naive summation would lose low-order bits.
class KahanSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }

  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Componentwise compensated accumulator for fixed-dimension vectors.
class KahanVec {
 public:
  explicit KahanVec(Eigen::Index p)
      : sum_(Eigen::VectorXd::Zero(p)), comp_(Eigen::VectorXd::Zero(p)) {}

  void add(const Eigen::Ref<const Eigen::VectorXd>& v) noexcept {
    for (Eigen::Index k = 0; k < sum_.size(); ++k) add_at(k, v[k]);
  }

  void add_scaled(const Eigen::Ref<const Eigen::VectorXd>& v, double a) noexcept {
    for (Eigen::Index k = 0; k < sum_.size(); ++k) add_at(k, a * v[k]);
  }

  void add_at(Eigen::Index k, double v) noexcept {
    const double t = sum_[k] + v;
    if (std::abs(sum_[k]) >= std::abs(v)) {
      comp_[k] += (sum_[k] - t) + v;
    } else {
      comp_[k] += (v - t) + sum_[k];
    }
    sum_[k] = t;
  }

  Eigen::VectorXd value() const { return sum_ + comp_; }

 private:
  Eigen::VectorXd sum_;
  Eigen::VectorXd comp_;
};

}  // namespace svykit
