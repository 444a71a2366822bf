#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "sgdlab/problem.hpp"

namespace sgdlab {

// A quadratic observable q(x) = 1/2 x^T H x + g^T x + c with symmetric H.
// H is held as a diagonal when the statistic lives in the covariance
// eigenbasis (the default for everything the engines record, keeping
// evaluation O(d)), and dense otherwise.  Complex scalars support the
// resolvent statistic family, whose coefficients live on a contour in the
// complex plane.
template <class Scalar>
class Quadratic {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  static Quadratic diagonal(Vector hess_diag, Vector linear, Scalar constant, std::string label) {
    if (hess_diag.size() != linear.size()) {
      throw std::invalid_argument("Quadratic: hessian and linear dimensions disagree");
    }
    Quadratic q;
    q.diag_ = std::move(hess_diag);
    q.linear_ = std::move(linear);
    q.constant_ = constant;
    q.label_ = std::move(label);
    q.is_diagonal_ = true;
    return q;
  }

  static Quadratic dense(Matrix hess, Vector linear, Scalar constant, std::string label) {
    if (hess.rows() != hess.cols() || hess.rows() != linear.size()) {
      throw std::invalid_argument("Quadratic: hessian and linear dimensions disagree");
    }
    const double asym = (hess - hess.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12) throw std::invalid_argument("Quadratic: hessian is not symmetric to 1e-12");
    Quadratic q;
    q.dense_ = std::move(hess);
    q.linear_ = std::move(linear);
    q.constant_ = constant;
    q.label_ = std::move(label);
    q.is_diagonal_ = false;
    return q;
  }

  Eigen::Index dim() const { return linear_.size(); }
  bool is_diagonal() const { return is_diagonal_; }
  const std::string& label() const { return label_; }
  const Vector& linear() const { return linear_; }
  Scalar constant() const { return constant_; }

  const Vector& hess_diag() const {
    if (!is_diagonal_) throw std::logic_error("Quadratic: hessian is dense");
    return diag_;
  }

  Matrix hessian() const {
    if (is_diagonal_) return Matrix(diag_.asDiagonal());
    return dense_;
  }

  // All forms here are bilinear (transpose pairing, no conjugation), which
  // coincides with the usual inner product for real scalars.
  Scalar eval(const Vector& x) const {
    if (x.size() != dim()) throw std::invalid_argument("Quadratic::eval: dimension mismatch");
    if (is_diagonal_) {
      return Scalar(0.5) * diag_.cwiseProduct(x).cwiseProduct(x).sum() +
             linear_.cwiseProduct(x).sum() + constant_;
    }
    return Scalar(0.5) * x.cwiseProduct(dense_ * x).sum() + linear_.cwiseProduct(x).sum() +
           constant_;
  }

  Vector grad(const Vector& x) const {
    if (x.size() != dim()) throw std::invalid_argument("Quadratic::grad: dimension mismatch");
    if (is_diagonal_) return (diag_.array() * x.array()).matrix() + linear_;
    return dense_ * x + linear_;
  }

  // ||H||_op + ||g|| + |c|.  Operator norm of a dense (possibly complex
  // symmetric) H is its largest singular value.
  double c2_norm() const {
    double hess_norm = 0.0;
    if (is_diagonal_) {
      for (Eigen::Index i = 0; i < diag_.size(); ++i) {
        hess_norm = std::max(hess_norm, std::abs(diag_[i]));
      }
    } else if (dense_.size() > 0) {
      Eigen::JacobiSVD<Matrix> svd(dense_);
      hess_norm = svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
    }
    return hess_norm + linear_.norm() + std::abs(constant_);
  }

 private:
  Quadratic() = default;

  Vector diag_;
  Matrix dense_;
  Vector linear_;
  Scalar constant_ = Scalar(0);
  std::string label_;
  bool is_diagonal_ = true;
};

using QuadraticD = Quadratic<double>;
using QuadraticC = Quadratic<std::complex<double>>;

// Evaluate a complex-coefficient statistic at a real state vector.
std::complex<double> eval_at(const QuadraticC& q, const Eigen::VectorXd& x);

// --- Risk functionals (x in the standard basis, matching Dataset rows) ---

// 1/2 (x - xt)^T K (x - xt) + eta^2 / 2
double population_risk(const ProblemSpec& spec, const Eigen::VectorXd& x);

// population risk + (delta/2) ||x||^2
double regularized_risk(const ProblemSpec& spec, const Eigen::VectorXd& x);

// (1/2n) ||A x - b||^2
double empirical_risk(const Dataset& data, const Eigen::VectorXd& x);

// empirical risk + (delta/2) ||x||^2
double regularized_empirical_risk(const Dataset& data, double delta, const Eigen::VectorXd& x);

// --- Built-in recorded statistics, expressed in the covariance eigenbasis ---
// Labels: population_risk, regularized_risk, norm_sq, distance_sq_to_truth.
QuadraticD builtin_statistic(const ProblemSpec& spec, const std::string& name);
std::vector<QuadraticD> builtin_statistics(const ProblemSpec& spec,
                                           const std::vector<std::string>& names);

// The empirical risk of a fixed dataset as a recordable statistic (dense
// Hessian (1/n) A^T A in the eigenbasis frame); label "empirical_risk".
QuadraticD empirical_risk_statistic(const ProblemSpec& spec, const Dataset& data);

// --- Resolvent statistic family ---

// A point z on the spectral contour, a circle of radius max(1, 3 ||K||).
struct ContourPoint {
  std::complex<double> value;
  double radius = 1.0;
};

double contour_radius(const ProblemSpec& spec);
ContourPoint contour_point(const ProblemSpec& spec, double angle);

// Componentwise (lambda_i - z)^{-1} v_i in the eigenbasis.  Throws when z is
// within 1e-12 of the spectrum.
Eigen::VectorXcd resolvent_apply(const ProblemSpec& spec, std::complex<double> z,
                                 const Eigen::VectorXcd& v);

enum class ResolventKind { grad_x, grad_xtilde, hess_xx, hess_xxtilde };

// Rewrites the indicated resolvent functional of x as a quadratic statistic
// with complex coefficients:
//   grad_x:       (grad q(x))^T R(z) x
//   grad_xtilde:  (grad q(x))^T R(z) xt
//   hess_xx:      x^T R(y) (hess q) R(z) x
//   hess_xxtilde: x^T R(y) (hess q) R(z) xt
// y is required exactly for the hess_* kinds.  q and the result live in the
// covariance eigenbasis.
QuadraticC make_resolvent_statistic(const QuadraticD& q, const ProblemSpec& spec,
                                    ResolventKind kind, std::optional<ContourPoint> y,
                                    ContourPoint z);

}  // namespace sgdlab
