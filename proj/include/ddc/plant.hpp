#pragma once

/// @file plant.hpp
/// @brief Ground-truth plants used to generate data and to verify designs.
/// Synthesis never reads the fields marked as ground truth.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddc/dictionary.hpp"

namespace ddc {

/// f(x, u) = A Z(x) + B u.
struct Factorization {
  Dictionary dict;
  MatrixXd A;
  MatrixXd B;
};

/// f(x, u) = A Z(x, u) for plants that are not input-affine. The dictionary
/// acts on the stacked vector (x, u).
struct JointFactorization {
  Dictionary dict;
  MatrixXd A;
};

struct Plant {
  std::string name;
  int n = 0;
  int m = 0;
  std::function<VectorXd(const VectorXd&, const VectorXd&)> f;
  /// Disturbance channel, n x q. Zero columns means no disturbance input.
  MatrixXd E;
  std::optional<Factorization> truth;
  std::optional<JointFactorization> joint_truth;

  int q() const { return static_cast<int>(E.cols()); }

  VectorXd operator()(const VectorXd& x, const VectorXd& u) const { return f(x, u); }
};

struct ManipulatorParams {
  double Kc = 0.4;
  double J2 = 0.2;
  double Nc = 2.0;
  double J1 = 0.15;
  double mass = 0.4;
  double g = 9.8;
  double d = 0.1;
};

/// Single-link arm with a flexible joint; Z = [x; cos x1].
/// Plant given directly by a factorization f(x, u) = A Z(x) + B u; E = 0.
inline Plant FactoredPlant(const std::string& name, const Dictionary& dict, const MatrixXd& A, const MatrixXd& B) {
  if (A.rows() != dict.n() || A.cols() != dict.s() || B.rows() != dict.n())
    throw std::invalid_argument("factored plant needs A: n x s and B: n x m");
  Plant plant;
  plant.name = name;
  plant.n = dict.n();
  plant.m = static_cast<int>(B.cols());
  plant.f = [dict, A, B](const VectorXd& x, const VectorXd& u) { return VectorXd(A * dict.Eval(x) + B * u); };
  plant.E = MatrixXd::Zero(plant.n, 0);
  plant.truth = Factorization{dict, A, B};
  return plant;
}

inline Plant Manipulator(const ManipulatorParams& p = {}) {
  Plant plant;
  plant.name = "manipulator";
  plant.n = 4;
  plant.m = 1;
  const double a21 = -p.Kc / p.J2, a23 = p.Kc / (p.J2 * p.Nc), a41 = p.Kc / (p.J1 * p.Nc),
               a43 = -p.Kc / (p.J1 * p.Nc * p.Nc), c2 = -p.mass * p.g * p.d / p.J2, b4 = 1.0 / p.J1;
  plant.f = [=](const VectorXd& x, const VectorXd& u) {
    VectorXd dx(4);
    dx << x(1), a21 * x(0) + a23 * x(2) + c2 * std::cos(x(0)), x(3), a41 * x(0) + a43 * x(2) + b4 * u(0);
    return dx;
  };
  plant.E = MatrixXd::Identity(4, 4);
  MatrixXd A(4, 5);
  A << 0, 1, 0, 0, 0,
       a21, 0, a23, 0, c2,
       0, 0, 0, 1, 0,
       a41, 0, a43, 0, 0;
  MatrixXd B = MatrixXd::Zero(4, 1);
  B(3) = b4;
  plant.truth = Factorization{Dictionary(4, {BasisFunction::Cosine(0)}), A, B};
  return plant;
}

/// Jet-engine compressor surge model; Z = [x; x1^2; x1^3].
inline Plant Surge() {
  Plant plant;
  plant.name = "surge";
  plant.n = 2;
  plant.m = 1;
  plant.f = [](const VectorXd& x, const VectorXd& u) {
    VectorXd dx(2);
    dx << -x(1) - 1.5 * x(0) * x(0) - 0.5 * x(0) * x(0) * x(0), u(0);
    return dx;
  };
  plant.E = MatrixXd::Identity(2, 2);
  MatrixXd A(2, 4);
  A << 0, -1, -1.5, -0.5,
       0, 0, 0, 0;
  MatrixXd B(2, 1);
  B << 0, 1;
  plant.truth = Factorization{Dictionary(2, {BasisFunction::Monomial({2}), BasisFunction::Monomial({3})}), A, B};
  return plant;
}

/// Continuous stirred tank reactor, not affine in the input.
inline Plant Cstr() {
  Plant plant;
  plant.name = "cstr";
  plant.n = 2;
  plant.m = 1;
  plant.f = [](const VectorXd& x, const VectorXd& u) {
    VectorXd dx(2);
    dx << 4.25 * x(0) + x(1) - 0.25 * u(0) - x(0) * u(0), -6.25 * x(0) - 2.0 * x(1);
    return dx;
  };
  plant.E = MatrixXd::Identity(2, 2);
  MatrixXd A(2, 4);
  A << 4.25, 1, -0.25, -1,
       -6.25, -2, 0, 0;
  plant.joint_truth = JointFactorization{Dictionary(3, {BasisFunction::Product(0, 2)}), A};
  return plant;
}

/// Extends the plant with u' = v; the new state is (x, u) and the new input v.
inline Plant AugmentInputIntegrator(const Plant& plant) {
  Plant ext;
  ext.name = plant.name + "+integrator";
  ext.n = plant.n + plant.m;
  ext.m = plant.m;
  const int n = plant.n, m = plant.m;
  auto f = plant.f;
  ext.f = [f, n, m](const VectorXd& xi, const VectorXd& v) {
    VectorXd d(n + m);
    d << f(xi.head(n), xi.tail(m)), v;
    return d;
  };
  ext.E = MatrixXd::Zero(n + m, plant.q());
  ext.E.topRows(n) = plant.E;
  if (plant.joint_truth) {
    const auto& jt = *plant.joint_truth;
    MatrixXd A = MatrixXd::Zero(n + m, jt.A.cols());
    A.topRows(n) = jt.A;
    MatrixXd B = MatrixXd::Zero(n + m, m);
    B.bottomRows(m).setIdentity();
    ext.truth = Factorization{jt.dict, A, B};
  } else if (plant.truth) {
    const auto& t = *plant.truth;
    Dictionary lifted = t.dict.Lifted(n + m);
    const int s = t.dict.s();
    MatrixXd A = MatrixXd::Zero(n + m, lifted.s());
    A.block(0, 0, n, n) = t.A.leftCols(n);
    A.block(0, n, n, m) = t.B;
    A.block(0, n + m, n, s - n) = t.A.rightCols(s - n);
    MatrixXd B = MatrixXd::Zero(n + m, m);
    B.bottomRows(m).setIdentity();
    ext.truth = Factorization{lifted, A, B};
  }
  return ext;
}

/// Linear regulated output y = C x.
struct OutputMap {
  MatrixXd C;
  int p() const { return static_cast<int>(C.rows()); }
};

/// Appends the integrator xi' = C x - r; the new state is (x, xi) and the
/// input is unchanged. The constant disturbance d enters through E.
inline Plant AugmentOutputIntegrator(const Plant& plant, const OutputMap& out, const VectorXd& r,
                                     const VectorXd& d) {
  if (out.C.cols() != plant.n) throw std::invalid_argument("output matrix has wrong number of columns");
  if (r.size() != out.p()) throw std::invalid_argument("reference has wrong dimension");
  if (d.size() != plant.q()) throw std::invalid_argument("disturbance has wrong dimension");
  Plant aug;
  aug.name = plant.name + "+output-integrator";
  const int n = plant.n, p = out.p();
  aug.n = n + p;
  aug.m = plant.m;
  const VectorXd Ed = plant.E * d;
  auto f = plant.f;
  const MatrixXd C = out.C;
  aug.f = [f, n, p, C, r, Ed](const VectorXd& z, const VectorXd& u) {
    VectorXd dz(n + p);
    dz << f(z.head(n), u) + Ed, C * z.head(n) - r;
    return dz;
  };
  aug.E = MatrixXd::Zero(n + p, 0);
  if (plant.truth) {
    const auto& t = *plant.truth;
    const int s = t.dict.s();
    MatrixXd A = MatrixXd::Zero(n + p, s + p);
    A.block(0, 0, n, n) = t.A.leftCols(n);
    A.block(0, n + p, n, s - n) = t.A.rightCols(s - n);
    A.block(n, 0, p, n) = C;
    MatrixXd B = MatrixXd::Zero(n + p, plant.m);
    B.topRows(n) = t.B;
    aug.truth = Factorization{t.dict.Lifted(n + p), A, B};
  }
  return aug;
}

/// w' = Psi w, d = Gamma w, with Psi = blockdiag of [0 psi; -psi 0] per
/// frequency followed by zeros for constants.
struct ExoModel {
  std::vector<double> frequencies;
  int num_constants = 0;
  MatrixXd Gamma;  // q x r
  VectorXd w0;     // r

  int r() const { return 2 * static_cast<int>(frequencies.size()) + num_constants; }

  MatrixXd Psi() const {
    MatrixXd P = MatrixXd::Zero(r(), r());
    for (std::size_t k = 0; k < frequencies.size(); ++k) {
      P(2 * k, 2 * k + 1) = frequencies[k];
      P(2 * k + 1, 2 * k) = -frequencies[k];
    }
    return P;
  }

  VectorXd w(double t) const {
    VectorXd out = w0;
    for (std::size_t k = 0; k < frequencies.size(); ++k) {
      const double c = std::cos(frequencies[k] * t), s = std::sin(frequencies[k] * t);
      out(2 * k) = c * w0(2 * k) + s * w0(2 * k + 1);
      out(2 * k + 1) = -s * w0(2 * k) + c * w0(2 * k + 1);
    }
    return out;
  }

  VectorXd d(double t) const { return Gamma * w(t); }

  /// Constant disturbance d(t) = value.
  static ExoModel Constant(const VectorXd& value) {
    ExoModel e;
    e.num_constants = 1;
    e.Gamma = value;
    e.w0 = VectorXd::Ones(1);
    return e;
  }
};

/// Smooth random disturbance with |d(t)| <= delta for all t: a random
/// Fourier series per channel, projected onto the delta ball.
class BoundedNoise {
 public:
  BoundedNoise(int q, double delta, unsigned seed, int harmonics = 5, double max_freq = 20.0)
      : delta_(delta), amp_(q, harmonics), freq_(q, harmonics), phase_(q, harmonics) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < q; ++i) {
      double total = 0.0;
      for (int h = 0; h < harmonics; ++h) {
        amp_(i, h) = U(rng);
        freq_(i, h) = max_freq * U(rng);
        phase_(i, h) = 2.0 * std::numbers::pi * U(rng);
        total += amp_(i, h);
      }
      amp_.row(i) /= total;
    }
  }

  double delta() const { return delta_; }

  VectorXd operator()(double t) const {
    VectorXd d(amp_.rows());
    for (Eigen::Index i = 0; i < amp_.rows(); ++i) {
      double v = 0.0;
      for (Eigen::Index h = 0; h < amp_.cols(); ++h) v += amp_(i, h) * std::sin(freq_(i, h) * t + phase_(i, h));
      d(i) = v;
    }
    d *= delta_;
    const double nrm = d.norm();
    if (nrm > delta_) d *= delta_ / nrm;
    return d;
  }

 private:
  double delta_;
  MatrixXd amp_, freq_, phase_;
};

}  // namespace ddc
