#pragma once

/// @file dictionary.hpp
/// @brief Function dictionaries Z(x) = [x; Q(x)] with exact Jacobians and
/// diagonal bounds on dQ/dx over axis-aligned boxes.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ddc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class BasisKind { kCoordinate, kMonomial, kSine, kCosine, kProduct };

/// One entry of a dictionary. Coordinates are 0-based internally and 1-based
/// in the textual grammar ("x1" is coordinate 0).
class BasisFunction {
 public:
  static BasisFunction Coordinate(int i) { return {BasisKind::kCoordinate, i, i, {}}; }
  static BasisFunction Sine(int i) { return {BasisKind::kSine, i, i, {}}; }
  static BasisFunction Cosine(int i) { return {BasisKind::kCosine, i, i, {}}; }
  static BasisFunction Product(int i, int j) {
    if (i == j) {
      std::vector<int> a(i + 1, 0);
      a[i] = 2;
      return Monomial(a);
    }
    return {BasisKind::kProduct, std::min(i, j), std::max(i, j), {}};
  }
  /// Multi-index monomial prod_k x_k^a_k. Trailing zeros may be omitted.
  static BasisFunction Monomial(std::vector<int> exponents) {
    while (!exponents.empty() && exponents.back() == 0) exponents.pop_back();
    for (int a : exponents) {
      if (a < 0) throw std::invalid_argument("negative exponent in monomial");
    }
    if (exponents.empty()) throw std::invalid_argument("constant monomial");
    return {BasisKind::kMonomial, 0, 0, std::move(exponents)};
  }

  BasisKind kind() const { return kind_; }
  int i() const { return i_; }
  int j() const { return j_; }
  const std::vector<int>& exponents() const { return exponents_; }

  int degree() const {
    switch (kind_) {
      case BasisKind::kCoordinate: return 1;
      case BasisKind::kProduct: return 2;
      case BasisKind::kMonomial: {
        int d = 0;
        for (int a : exponents_) d += a;
        return d;
      }
      default: return -1;  // transcendental
    }
  }

  bool IsLinear() const { return degree() == 1; }

  /// Largest coordinate index this function reads, plus one.
  int MinStateDim() const {
    if (kind_ == BasisKind::kMonomial) return static_cast<int>(exponents_.size());
    return std::max(i_, j_) + 1;
  }

  /// Coordinates the function depends on.
  std::vector<int> Support() const {
    std::vector<int> out;
    if (kind_ == BasisKind::kMonomial) {
      for (int k = 0; k < static_cast<int>(exponents_.size()); ++k)
        if (exponents_[k] > 0) out.push_back(k);
    } else if (kind_ == BasisKind::kProduct) {
      out = {i_, j_};
    } else {
      out = {i_};
    }
    return out;
  }

  double Eval(const VectorXd& x) const {
    switch (kind_) {
      case BasisKind::kCoordinate: return x(i_);
      case BasisKind::kSine: return std::sin(x(i_));
      case BasisKind::kCosine: return std::cos(x(i_));
      case BasisKind::kProduct: return x(i_) * x(j_);
      case BasisKind::kMonomial: {
        double v = 1.0;
        for (int k = 0; k < static_cast<int>(exponents_.size()); ++k)
          if (exponents_[k] > 0) v *= std::pow(x(k), exponents_[k]);
        return v;
      }
    }
    return 0.0;
  }

  /// Writes the gradient into `g` (length n, zero-initialised by the caller).
  template <typename Row>
  void Gradient(const VectorXd& x, Row&& g) const {
    switch (kind_) {
      case BasisKind::kCoordinate: g(i_) = 1.0; break;
      case BasisKind::kSine: g(i_) = std::cos(x(i_)); break;
      case BasisKind::kCosine: g(i_) = -std::sin(x(i_)); break;
      case BasisKind::kProduct:
        g(i_) = x(j_);
        g(j_) = x(i_);
        break;
      case BasisKind::kMonomial:
        for (int k = 0; k < static_cast<int>(exponents_.size()); ++k) {
          if (exponents_[k] == 0) continue;
          double v = exponents_[k] * std::pow(x(k), exponents_[k] - 1);
          for (int l = 0; l < static_cast<int>(exponents_.size()); ++l)
            if (l != k && exponents_[l] > 0) v *= std::pow(x(l), exponents_[l]);
          g(k) = v;
        }
        break;
    }
  }

  std::string ToString() const {
    auto var = [](int k) { return "x" + std::to_string(k + 1); };
    switch (kind_) {
      case BasisKind::kCoordinate: return var(i_);
      case BasisKind::kSine: return "sin(" + var(i_) + ")";
      case BasisKind::kCosine: return "cos(" + var(i_) + ")";
      case BasisKind::kProduct: return var(i_) + "*" + var(j_);
      case BasisKind::kMonomial: {
        std::string s;
        for (int k = 0; k < static_cast<int>(exponents_.size()); ++k) {
          if (exponents_[k] == 0) continue;
          if (!s.empty()) s += "*";
          s += var(k);
          if (exponents_[k] > 1) s += "^" + std::to_string(exponents_[k]);
        }
        return s;
      }
    }
    return {};
  }

  /// Parses sin(xK), cos(xK), xK^p, xJ*xK and products of powers.
  static BasisFunction Parse(std::string_view text) {
    std::string t;
    for (char c : text)
      if (c != ' ') t.push_back(c);
    auto fail = [&](const std::string& why) {
      throw std::invalid_argument("cannot parse dictionary term '" + std::string(text) + "': " + why);
    };
    auto parse_var = [&](std::string_view v) -> int {
      if (v.size() < 2 || v[0] != 'x') fail("expected xK");
      int k = 0;
      for (char c : v.substr(1)) {
        if (c < '0' || c > '9') fail("bad coordinate index");
        k = 10 * k + (c - '0');
      }
      if (k < 1) fail("coordinates are 1-based");
      return k - 1;
    };
    for (auto [prefix, kind] : {std::pair{"sin(", BasisKind::kSine}, std::pair{"cos(", BasisKind::kCosine}}) {
      std::string_view p(prefix);
      if (t.rfind(p, 0) == 0) {
        if (t.back() != ')') fail("missing ')'");
        int k = parse_var(std::string_view(t).substr(p.size(), t.size() - p.size() - 1));
        return kind == BasisKind::kSine ? Sine(k) : Cosine(k);
      }
    }
    std::vector<int> a;
    std::vector<int> plain;
    std::string_view rest(t);
    while (!rest.empty()) {
      auto star = rest.find('*');
      std::string_view factor = rest.substr(0, star);
      rest = star == std::string_view::npos ? std::string_view{} : rest.substr(star + 1);
      int p = 1;
      auto caret = factor.find('^');
      if (caret != std::string_view::npos) {
        std::string pow(factor.substr(caret + 1));
        if (pow.empty() || pow.find_first_not_of("0123456789") != std::string::npos) fail("bad exponent");
        p = std::stoi(pow);
        factor = factor.substr(0, caret);
      }
      int k = parse_var(factor);
      if (static_cast<int>(a.size()) <= k) a.resize(k + 1, 0);
      a[k] += p;
      if (p == 1) plain.push_back(k);
    }
    int deg = 0, nz = 0;
    for (int v : a) {
      deg += v;
      nz += v > 0;
    }
    if (deg == 1) {
      for (int k = 0; k < static_cast<int>(a.size()); ++k)
        if (a[k] == 1) return Coordinate(k);
    }
    if (deg == 2 && nz == 2) return Product(plain[0], plain[1]);
    return Monomial(a);
  }

  bool operator==(const BasisFunction& o) const {
    return kind_ == o.kind_ && i_ == o.i_ && j_ == o.j_ && exponents_ == o.exponents_;
  }

 private:
  BasisFunction(BasisKind k, int i, int j, std::vector<int> a)
      : kind_(k), i_(i), j_(j), exponents_(std::move(a)) {}

  BasisKind kind_;
  int i_;
  int j_;
  std::vector<int> exponents_;
};

/// Z(x) = [x; Q(x)] where every entry of Q is nonlinear.
class Dictionary {
 public:
  Dictionary() = default;
  Dictionary(int n, std::vector<BasisFunction> q) : n_(n), q_(std::move(q)) {
    if (n <= 0) throw std::invalid_argument("dictionary state dimension must be positive");
    for (const auto& f : q_) {
      if (f.kind() == BasisKind::kCoordinate || f.IsLinear())
        throw std::invalid_argument("nonlinear part of the dictionary contains a linear term: " + f.ToString());
      if (f.MinStateDim() > n)
        throw std::invalid_argument("dictionary term " + f.ToString() + " exceeds state dimension");
    }
    for (std::size_t a = 0; a < q_.size(); ++a)
      for (std::size_t b = a + 1; b < q_.size(); ++b)
        if (q_[a] == q_[b]) throw std::invalid_argument("duplicate dictionary term " + q_[a].ToString());
  }

  int n() const { return n_; }
  int s() const { return n_ + static_cast<int>(q_.size()); }
  int num_nonlinear() const { return static_cast<int>(q_.size()); }
  const std::vector<BasisFunction>& nonlinear() const { return q_; }

  VectorXd EvalQ(const VectorXd& x) const {
    CheckDim(x);
    VectorXd q(q_.size());
    for (std::size_t k = 0; k < q_.size(); ++k) q(k) = q_[k].Eval(x);
    return q;
  }

  VectorXd Eval(const VectorXd& x) const {
    VectorXd z(s());
    z << x, EvalQ(x);
    return z;
  }

  /// Columnwise evaluation: X is n x T, the result s x T.
  MatrixXd EvalColumns(const MatrixXd& X) const {
    MatrixXd Z(s(), X.cols());
    for (Eigen::Index t = 0; t < X.cols(); ++t) Z.col(t) = Eval(X.col(t));
    return Z;
  }

  /// dQ/dx, (s-n) x n.
  MatrixXd JacobianQ(const VectorXd& x) const {
    CheckDim(x);
    MatrixXd J = MatrixXd::Zero(q_.size(), n_);
    for (std::size_t k = 0; k < q_.size(); ++k) q_[k].Gradient(x, J.row(k));
    return J;
  }

  /// dZ/dx, s x n.
  MatrixXd Jacobian(const VectorXd& x) const {
    MatrixXd J(s(), n_);
    J << MatrixXd::Identity(n_, n_), JacobianQ(x);
    return J;
  }

  /// Same nonlinear terms read as functions of a larger state whose first n
  /// coordinates are the original ones.
  Dictionary Lifted(int new_n) const {
    if (new_n < n_) throw std::invalid_argument("cannot lift dictionary to a smaller state");
    return Dictionary(new_n, q_);
  }

  nlohmann::json ToJson() const {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& f : q_) terms.push_back(f.ToString());
    return {{"n", n_}, {"terms", terms}};
  }

  static Dictionary FromJson(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("n")) throw std::invalid_argument("dictionary JSON needs field 'n'");
    std::vector<BasisFunction> q;
    if (j.contains("terms"))
      for (const auto& t : j.at("terms")) q.push_back(BasisFunction::Parse(t.get<std::string>()));
    return Dictionary(j.at("n").get<int>(), std::move(q));
  }

  static Dictionary Parse(std::string_view text) { return FromJson(nlohmann::json::parse(text)); }

 private:
  void CheckDim(const VectorXd& x) const {
    if (x.size() != n_)
      throw std::invalid_argument("state has dimension " + std::to_string(x.size()) + ", dictionary expects " +
                                  std::to_string(n_));
  }

  int n_ = 0;
  std::vector<BasisFunction> q_;
};

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
  double abs_sup() const { return std::max(std::abs(lo), std::abs(hi)); }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Axis-aligned set; unbounded coordinates use infinite endpoints.
class BoxSet {
 public:
  BoxSet() = default;
  explicit BoxSet(std::vector<Interval> iv) : iv_(std::move(iv)) {
    for (const auto& i : iv_)
      if (!(i.lo <= i.hi)) throw std::invalid_argument("box interval with lo > hi");
  }
  static BoxSet Full(int n) { return BoxSet(std::vector<Interval>(n)); }
  static BoxSet Cube(int n, double r) { return BoxSet(std::vector<Interval>(n, Interval{-r, r})); }

  int dim() const { return static_cast<int>(iv_.size()); }
  const Interval& operator[](int k) const { return iv_[k]; }
  Interval& operator[](int k) { return iv_[k]; }
  bool bounded() const {
    for (const auto& i : iv_)
      if (!i.bounded()) return false;
    return true;
  }
  bool contains(const VectorXd& x) const {
    for (int k = 0; k < dim(); ++k)
      if (!iv_[k].contains(x(k))) return false;
    return true;
  }
  /// Replaces unbounded endpoints by +-r.
  BoxSet Clipped(double r) const {
    BoxSet b = *this;
    for (auto& i : b.iv_) {
      if (!std::isfinite(i.lo)) i.lo = std::min(-r, i.hi);
      if (!std::isfinite(i.hi)) i.hi = std::max(r, i.lo);
    }
    return b;
  }

  nlohmann::json ToJson() const {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& i : iv_) {
      auto end = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return v > 0 ? "inf" : "-inf";
      };
      a.push_back({end(i.lo), end(i.hi)});
    }
    return a;
  }
  static BoxSet FromJson(const nlohmann::json& j) {
    std::vector<Interval> iv;
    auto end = [](const nlohmann::json& v) {
      if (v.is_number()) return v.get<double>();
      std::string s = v.get<std::string>();
      if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
      if (s == "-inf") return -std::numeric_limits<double>::infinity();
      throw std::invalid_argument("bad interval endpoint " + s);
    };
    for (const auto& p : j) iv.push_back({end(p.at(0)), end(p.at(1))});
    return BoxSet(std::move(iv));
  }

 private:
  std::vector<Interval> iv_;
};

/// Bound R_Q (n x n, diagonal) with dQ/dx^T dQ/dx <= R_Q R_Q^T on a set.
struct JacobianBound {
  MatrixXd R_Q;
};

namespace internal {

// sup over the box of |d f / d x_k|. Trig derivatives are bounded by 1.
inline double PartialSup(const BasisFunction& f, int k, const BoxSet& box) {
  auto need = [&](int c) {
    if (!box[c].bounded())
      throw std::domain_error("no finite bound on this set for d(" + f.ToString() + ")/dx" + std::to_string(k + 1) +
                              ": coordinate x" + std::to_string(c + 1) + " is unbounded");
    return box[c].abs_sup();
  };
  switch (f.kind()) {
    case BasisKind::kCoordinate: return f.i() == k ? 1.0 : 0.0;
    case BasisKind::kSine:
    case BasisKind::kCosine: return f.i() == k ? 1.0 : 0.0;
    case BasisKind::kProduct:
      if (f.i() == k) return need(f.j());
      if (f.j() == k) return need(f.i());
      return 0.0;
    case BasisKind::kMonomial: {
      const auto& a = f.exponents();
      if (k >= static_cast<int>(a.size()) || a[k] == 0) return 0.0;
      double v = a[k];
      if (a[k] > 1) v *= std::pow(need(k), a[k] - 1);
      for (int l = 0; l < static_cast<int>(a.size()); ++l)
        if (l != k && a[l] > 0) v *= std::pow(need(l), a[l]);
      return v;
    }
  }
  return 0.0;
}

}  // namespace internal

/// Diagonal bound entry_k = sqrt(sum_j c_j sup|dQ_j/dx_k|^2), with c_j the
/// number of coordinates Q_j depends on (g g^T <= c diag(g_k^2) by
/// Cauchy-Schwarz). Throws std::domain_error when a needed sup is infinite.
inline JacobianBound BoundJacobian(const Dictionary& dict, const BoxSet& box) {
  if (box.dim() != dict.n()) throw std::invalid_argument("box dimension does not match dictionary");
  VectorXd d = VectorXd::Zero(dict.n());
  for (const auto& f : dict.nonlinear()) {
    const auto support = f.Support();
    const double c = static_cast<double>(support.size());
    for (int k : support) {
      double g = internal::PartialSup(f, k, box);
      d(k) += c * g * g;
    }
  }
  return {d.cwiseSqrt().asDiagonal()};
}

}  // namespace ddc
