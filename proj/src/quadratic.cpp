#include "sgdlab/quadratic.hpp"

#include <cmath>
#include <stdexcept>

namespace sgdlab {

std::complex<double> eval_at(const QuadraticC& q, const Eigen::VectorXd& x) {
  return q.eval(x.cast<std::complex<double>>());
}

double population_risk(const ProblemSpec& spec, const Eigen::VectorXd& x) {
  if (x.size() != spec.d) throw std::invalid_argument("population_risk: dimension mismatch");
  const Eigen::VectorXd v = spec.to_eigenbasis(x - spec.ground_truth);
  const double quad = spec.spectrum.cwiseProduct(v).dot(v);
  return 0.5 * quad + 0.5 * spec.noise_std * spec.noise_std;
}

double regularized_risk(const ProblemSpec& spec, const Eigen::VectorXd& x) {
  return population_risk(spec, x) + 0.5 * spec.delta * x.squaredNorm();
}

double empirical_risk(const Dataset& data, const Eigen::VectorXd& x) {
  if (x.size() != data.dim()) throw std::invalid_argument("empirical_risk: dimension mismatch");
  return (data.rows * x - data.labels).squaredNorm() / (2.0 * static_cast<double>(data.n()));
}

double regularized_empirical_risk(const Dataset& data, double delta, const Eigen::VectorXd& x) {
  return empirical_risk(data, x) + 0.5 * delta * x.squaredNorm();
}

QuadraticD builtin_statistic(const ProblemSpec& spec, const std::string& name) {
  const int d = spec.d;
  const Eigen::VectorXd truth = spec.truth_in_eigenbasis();
  const double eta_sq_half = 0.5 * spec.noise_std * spec.noise_std;

  if (name == "population_risk") {
    const Eigen::VectorXd g = -spec.spectrum.cwiseProduct(truth);
    const double c = 0.5 * spec.spectrum.cwiseProduct(truth).dot(truth) + eta_sq_half;
    return QuadraticD::diagonal(spec.spectrum, g, c, name);
  }
  if (name == "regularized_risk") {
    const Eigen::VectorXd g = -spec.spectrum.cwiseProduct(truth);
    const double c = 0.5 * spec.spectrum.cwiseProduct(truth).dot(truth) + eta_sq_half;
    return QuadraticD::diagonal(Eigen::VectorXd(spec.spectrum.array() + spec.delta), g, c, name);
  }
  if (name == "norm_sq") {
    return QuadraticD::diagonal(Eigen::VectorXd::Constant(d, 2.0), Eigen::VectorXd::Zero(d), 0.0,
                                name);
  }
  if (name == "distance_sq_to_truth") {
    return QuadraticD::diagonal(Eigen::VectorXd::Constant(d, 2.0), -2.0 * truth,
                                truth.squaredNorm(), name);
  }
  throw std::invalid_argument("unknown statistic label: " + name);
}

std::vector<QuadraticD> builtin_statistics(const ProblemSpec& spec,
                                           const std::vector<std::string>& names) {
  std::vector<QuadraticD> out;
  out.reserve(names.size());
  for (const auto& name : names) out.push_back(builtin_statistic(spec, name));
  return out;
}

QuadraticD empirical_risk_statistic(const ProblemSpec& spec, const Dataset& data) {
  if (data.dim() != spec.d) {
    throw std::invalid_argument("empirical_risk_statistic: dimension mismatch");
  }
  const auto n = static_cast<double>(data.n());
  Eigen::MatrixXd hess;
  Eigen::VectorXd g;
  if (spec.has_nontrivial_basis()) {
    const Eigen::MatrixXd rows_eig = data.rows * spec.eigenbasis;
    hess = rows_eig.transpose() * rows_eig / n;
    g = -rows_eig.transpose() * data.labels / n;
  } else {
    hess = data.rows.transpose() * data.rows / n;
    g = -data.rows.transpose() * data.labels / n;
  }
  hess = 0.5 * (hess + hess.transpose());  // symmetrize roundoff
  const double c = data.labels.squaredNorm() / (2.0 * n);
  return QuadraticD::dense(std::move(hess), std::move(g), c, "empirical_risk");
}

double contour_radius(const ProblemSpec& spec) { return std::max(1.0, 3.0 * spec.operator_norm()); }

ContourPoint contour_point(const ProblemSpec& spec, double angle) {
  const double r = contour_radius(spec);
  return ContourPoint{std::polar(r, angle), r};
}

Eigen::VectorXcd resolvent_apply(const ProblemSpec& spec, std::complex<double> z,
                                 const Eigen::VectorXcd& v) {
  if (v.size() != spec.d) throw std::invalid_argument("resolvent_apply: dimension mismatch");
  Eigen::VectorXcd out(spec.d);
  for (int i = 0; i < spec.d; ++i) {
    const std::complex<double> denom = spec.spectrum[i] - z;
    if (std::abs(denom) <= 1e-12) {
      throw std::invalid_argument("resolvent_apply: z lies on the spectrum of K");
    }
    out[i] = v[i] / denom;
  }
  return out;
}

namespace {

Eigen::VectorXcd resolvent_diag(const ProblemSpec& spec, std::complex<double> z) {
  Eigen::VectorXcd r(spec.d);
  for (int i = 0; i < spec.d; ++i) {
    const std::complex<double> denom = spec.spectrum[i] - z;
    if (std::abs(denom) <= 1e-12) {
      throw std::invalid_argument("resolvent statistic: contour point lies on the spectrum");
    }
    r[i] = 1.0 / denom;
  }
  return r;
}

}  // namespace

QuadraticC make_resolvent_statistic(const QuadraticD& q, const ProblemSpec& spec,
                                    ResolventKind kind, std::optional<ContourPoint> y,
                                    ContourPoint z) {
  if (q.dim() != spec.d) throw std::invalid_argument("resolvent statistic: dimension mismatch");
  const bool needs_y = (kind == ResolventKind::hess_xx || kind == ResolventKind::hess_xxtilde);
  if (needs_y && !y) throw std::invalid_argument("resolvent statistic: y is required for hess_* kinds");

  using C = std::complex<double>;
  const Eigen::VectorXcd rz = resolvent_diag(spec, z.value);
  const Eigen::VectorXcd truth = spec.truth_in_eigenbasis().cast<C>();
  const Eigen::VectorXcd g = q.linear().cast<C>();
  const Eigen::Index d = spec.d;
  const std::string label = q.label() + "/resolvent";

  if (kind == ResolventKind::grad_x) {
    // (H x + g)^T R(z) x  =  1/2 x^T (H R + R H) x + (R g)^T x
    if (q.is_diagonal()) {
      const Eigen::VectorXcd h = q.hess_diag().cast<C>();
      return QuadraticC::diagonal(2.0 * h.cwiseProduct(rz), rz.cwiseProduct(g), C(0), label);
    }
    const Eigen::MatrixXcd H = q.hessian().cast<C>();
    const Eigen::MatrixXcd HR = H * rz.asDiagonal();
    return QuadraticC::dense(HR + HR.transpose(), rz.cwiseProduct(g), C(0), label);
  }

  if (kind == ResolventKind::grad_xtilde) {
    // (H x + g)^T R(z) xt  =  (H R xt)^T x + g^T R xt
    const Eigen::VectorXcd rzt = rz.cwiseProduct(truth);
    const C c = g.cwiseProduct(rzt).sum();
    if (q.is_diagonal()) {
      const Eigen::VectorXcd h = q.hess_diag().cast<C>();
      return QuadraticC::diagonal(Eigen::VectorXcd::Zero(d), h.cwiseProduct(rzt), c, label);
    }
    const Eigen::MatrixXcd H = q.hessian().cast<C>();
    return QuadraticC::diagonal(Eigen::VectorXcd::Zero(d), H * rzt, c, label);
  }

  const Eigen::VectorXcd ry = resolvent_diag(spec, y->value);

  if (kind == ResolventKind::hess_xx) {
    // x^T R(y) H R(z) x  =  1/2 x^T (R(y) H R(z) + R(z) H R(y)) x
    if (q.is_diagonal()) {
      const Eigen::VectorXcd h = q.hess_diag().cast<C>();
      return QuadraticC::diagonal(2.0 * ry.cwiseProduct(h).cwiseProduct(rz),
                                  Eigen::VectorXcd::Zero(d), C(0), label);
    }
    const Eigen::MatrixXcd H = q.hessian().cast<C>();
    const Eigen::MatrixXcd M = ry.asDiagonal() * H * rz.asDiagonal();
    return QuadraticC::dense(M + M.transpose(), Eigen::VectorXcd::Zero(d), C(0), label);
  }

  // hess_xxtilde: x^T R(y) H R(z) xt, linear in x.
  const Eigen::VectorXcd rzt = rz.cwiseProduct(truth);
  Eigen::VectorXcd lin;
  if (q.is_diagonal()) {
    lin = ry.cwiseProduct(q.hess_diag().cast<C>()).cwiseProduct(rzt);
  } else {
    lin = ry.asDiagonal() * (q.hessian().cast<C>() * rzt);
  }
  return QuadraticC::diagonal(Eigen::VectorXcd::Zero(d), lin, C(0), label);
}

}  // namespace sgdlab
