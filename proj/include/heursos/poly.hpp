// Sparse multivariate polynomials over real coefficients.
//
// Monomials are stored as exponent vectors and ordered graded-lexicographically
// (total degree ascending, then exponents descending lexicographically), so
// 1 < x1 < x2 < x1^2 < x1*x2 < x2^2 < ... for two variables. Gram-matrix
// indexing and serialization rely on this ordering being fixed.

#ifndef HEURSOS_POLY_HPP
#define HEURSOS_POLY_HPP

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace heursos {

class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::vector<int> exponents) : exponents_(std::move(exponents)) {
    for (int e : exponents_) {
      if (e < 0) throw std::invalid_argument("Monomial: negative exponent");
    }
  }
  Monomial(std::initializer_list<int> exponents) : Monomial(std::vector<int>(exponents)) {}

  static Monomial one(std::size_t nvars) { return Monomial(std::vector<int>(nvars, 0)); }
  static Monomial variable(std::size_t nvars, std::size_t i, int power = 1) {
    std::vector<int> e(nvars, 0);
    e.at(i) = power;
    return Monomial(std::move(e));
  }

  std::size_t nvars() const { return exponents_.size(); }
  int degree() const { return std::accumulate(exponents_.begin(), exponents_.end(), 0); }
  int operator[](std::size_t i) const { return exponents_[i]; }
  const std::vector<int>& exponents() const { return exponents_; }

  Monomial operator*(const Monomial& other) const {
    if (other.nvars() != nvars()) throw std::invalid_argument("Monomial: dimension mismatch");
    std::vector<int> e(exponents_);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] += other.exponents_[i];
    return Monomial(std::move(e));
  }

  /// Value of the monomial at `point`, by repeated multiplication.
  double eval(std::span<const double> point) const {
    double v = 1.0;
    for (std::size_t i = 0; i < exponents_.size(); ++i) {
      for (int k = 0; k < exponents_[i]; ++k) v *= point[i];
    }
    return v;
  }

  bool operator==(const Monomial&) const = default;

  /// Graded-lex: lower total degree first; ties broken so that x1 precedes x2.
  std::strong_ordering operator<=>(const Monomial& other) const {
    if (auto c = degree() <=> other.degree(); c != 0) return c;
    for (std::size_t i = 0; i < std::min(nvars(), other.nvars()); ++i) {
      if (exponents_[i] != other.exponents_[i]) {
        return other.exponents_[i] <=> exponents_[i];
      }
    }
    return nvars() <=> other.nvars();
  }

 private:
  std::vector<int> exponents_;
};

/// All monomials in `nvars` variables of total degree <= `degree`, graded-lex.
/// The count is binomial(nvars + degree, nvars).
inline std::vector<Monomial> monomials_up_to(std::size_t nvars, int degree) {
  if (nvars == 0) throw std::invalid_argument("monomials_up_to: nvars must be >= 1");
  if (degree < 0) throw std::invalid_argument("monomials_up_to: negative degree");
  std::vector<Monomial> out;
  std::vector<int> e(nvars, 0);
  for (int d = 0; d <= degree; ++d) {
    // Enumerate exponent vectors of total degree d in descending lex order.
    std::fill(e.begin(), e.end(), 0);
    e[0] = d;
    while (true) {
      out.emplace_back(e);
      // Next composition in descending lex order: find the rightmost index
      // (excluding the last) holding a positive value, move one unit right and
      // collect the tail.
      std::ptrdiff_t i = static_cast<std::ptrdiff_t>(nvars) - 2;
      while (i >= 0 && e[i] == 0) --i;
      if (i < 0) break;
      --e[i];
      int tail = e[nvars - 1] + 1;
      e[nvars - 1] = 0;
      e[i + 1] = tail;
    }
  }
  return out;
}

inline long long binomial(long long n, long long k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long r = 1;
  for (long long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

class Polynomial {
 public:
  using TermMap = std::map<Monomial, double>;

  Polynomial() : nvars_(1) {}
  explicit Polynomial(std::size_t nvars) : nvars_(nvars) {
    if (nvars == 0) throw std::invalid_argument("Polynomial: nvars must be >= 1");
  }
  Polynomial(std::size_t nvars, const TermMap& terms) : Polynomial(nvars) {
    for (const auto& [m, c] : terms) add_term(m, c);
  }

  static Polynomial constant(std::size_t nvars, double c) {
    Polynomial p(nvars);
    p.add_term(Monomial::one(nvars), c);
    return p;
  }
  static Polynomial variable(std::size_t nvars, std::size_t i) {
    Polynomial p(nvars);
    p.add_term(Monomial::variable(nvars, i), 1.0);
    return p;
  }
  static Polynomial monomial(const Monomial& m, double c = 1.0) {
    Polynomial p(m.nvars());
    p.add_term(m, c);
    return p;
  }

  std::size_t nvars() const { return nvars_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  int degree() const {
    int d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
    return d;
  }

  double coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? 0.0 : it->second;
  }

  /// Adds c * m; exact zeros are removed.
  void add_term(const Monomial& m, double c) {
    if (m.nvars() != nvars_) throw std::invalid_argument("Polynomial: monomial dimension mismatch");
    if (c == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  double eval(std::span<const double> point) const {
    if (point.size() != nvars_) throw std::invalid_argument("Polynomial::eval: dimension mismatch");
    for (double v : point) {
      if (!std::isfinite(v)) throw std::invalid_argument("Polynomial::eval: non-finite input");
    }
    double s = 0.0;
    for (const auto& [m, c] : terms_) s += c * m.eval(point);
    return s;
  }
  double operator()(std::span<const double> point) const { return eval(point); }
  double operator()(std::initializer_list<double> point) const {
    return eval(std::span<const double>(point.begin(), point.size()));
  }

  /// Partial derivative with respect to variable i.
  Polynomial derivative(std::size_t i) const {
    if (i >= nvars_) throw std::out_of_range("Polynomial::derivative: bad variable index");
    Polynomial d(nvars_);
    for (const auto& [m, c] : terms_) {
      if (m[i] == 0) continue;
      std::vector<int> e = m.exponents();
      --e[i];
      d.add_term(Monomial(std::move(e)), c * (m[i]));
    }
    return d;
  }

  /// Re-expresses the polynomial over `new_nvars` variables, old variable k
  /// becoming new variable index_map[k].
  Polynomial embed(std::size_t new_nvars, std::span<const std::size_t> index_map) const {
    if (index_map.size() != nvars_) throw std::invalid_argument("Polynomial::embed: map size mismatch");
    Polynomial out(new_nvars);
    for (const auto& [m, c] : terms_) {
      std::vector<int> e(new_nvars, 0);
      for (std::size_t k = 0; k < nvars_; ++k) {
        if (index_map[k] >= new_nvars) throw std::out_of_range("Polynomial::embed: index out of range");
        e[index_map[k]] += m[k];
      }
      out.add_term(Monomial(std::move(e)), c);
    }
    return out;
  }

  /// Largest absolute coefficient of (*this - other).
  double max_coeff_diff(const Polynomial& other) const;

  Polynomial& operator+=(const Polynomial& b) {
    check_same(b);
    for (const auto& [m, c] : b.terms_) add_term(m, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& b) {
    check_same(b);
    for (const auto& [m, c] : b.terms_) add_term(m, -c);
    return *this;
  }
  Polynomial& operator*=(double s) {
    if (s == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& [m, c] : terms_) c *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator-(Polynomial a) { return a *= -1.0; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator+(Polynomial a, double s) {
    a.add_term(Monomial::one(a.nvars()), s);
    return a;
  }
  friend Polynomial operator-(Polynomial a, double s) { return a + (-s); }
  friend Polynomial operator+(double s, Polynomial a) { return a + s; }
  friend Polynomial operator-(double s, Polynomial a) { return (-a) + s; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check_same(b);
    Polynomial r(a.nvars_);
    for (const auto& [ma, ca] : a.terms_) {
      for (const auto& [mb, cb] : b.terms_) r.add_term(ma * mb, ca * cb);
    }
    return r;
  }

  bool operator==(const Polynomial& o) const { return nvars_ == o.nvars_ && terms_ == o.terms_; }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    os.precision(6);
    bool first = true;
    for (const auto& [m, c] : terms_) {
      if (!first) os << (c < 0 ? " - " : " + ");
      else if (c < 0) os << "-";
      first = false;
      double a = std::abs(c);
      bool unit = m.degree() > 0 && a == 1.0;
      if (!unit) os << a;
      bool need_star = !unit;
      for (std::size_t i = 0; i < m.nvars(); ++i) {
        if (m[i] == 0) continue;
        if (need_star) os << "*";
        os << "x" << (i + 1);
        if (m[i] > 1) os << "^" << m[i];
        need_star = true;
      }
    }
    return os.str();
  }

 private:
  void check_same(const Polynomial& b) const {
    if (b.nvars_ != nvars_) throw std::invalid_argument("Polynomial: dimension mismatch");
  }

  std::size_t nvars_;
  TermMap terms_;
};

inline double Polynomial::max_coeff_diff(const Polynomial& other) const {
  double r = 0.0;
  const Polynomial d = *this - other;
  for (const auto& [m, c] : d.terms()) r = std::max(r, std::abs(c));
  return r;
}

inline std::ostream& operator<<(std::ostream& os, const Polynomial& p) { return os << p.to_string(); }

/// p(offset + scale .* z), expanded.
inline Polynomial affine_substitute(const Polynomial& p, std::span<const double> offset, std::span<const double> scale) {
  const std::size_t n = p.nvars();
  if (offset.size() != n || scale.size() != n) throw std::invalid_argument("affine_substitute: dimension mismatch");
  // powers[i][k] = (offset_i + scale_i z_i)^k
  std::vector<std::vector<Polynomial>> powers(n);
  for (std::size_t i = 0; i < n; ++i) {
    powers[i].push_back(Polynomial::constant(n, 1.0));
    const Polynomial lin = offset[i] + scale[i] * Polynomial::variable(n, i);
    for (int k = 1; k <= p.degree(); ++k) powers[i].push_back(powers[i].back() * lin);
  }
  Polynomial out(n);
  for (const auto& [m, c] : p.terms()) {
    Polynomial t = Polynomial::constant(n, c);
    for (std::size_t i = 0; i < n; ++i) {
      if (m[i] > 0) t = t * powers[i][m[i]];
    }
    out += t;
  }
  return out;
}

inline Polynomial add(const Polynomial& a, const Polynomial& b) { return a + b; }
inline Polynomial mul(const Polynomial& a, const Polynomial& b) { return a * b; }

/// Ordered list of polynomials sharing one variable space (a vector field or a
/// gradient).
class PolyVector {
 public:
  explicit PolyVector(std::vector<Polynomial> components) : components_(std::move(components)) {
    if (components_.empty()) throw std::invalid_argument("PolyVector: empty");
    for (const auto& p : components_) {
      if (p.nvars() != components_.front().nvars()) {
        throw std::invalid_argument("PolyVector: components must share nvars");
      }
    }
  }

  std::size_t size() const { return components_.size(); }
  std::size_t nvars() const { return components_.front().nvars(); }
  const Polynomial& operator[](std::size_t i) const { return components_[i]; }
  const std::vector<Polynomial>& components() const { return components_; }
  auto begin() const { return components_.begin(); }
  auto end() const { return components_.end(); }

  std::vector<double> eval(std::span<const double> point) const {
    std::vector<double> out;
    out.reserve(components_.size());
    for (const auto& p : components_) out.push_back(p.eval(point));
    return out;
  }

  int degree() const {
    int d = 0;
    for (const auto& p : components_) d = std::max(d, p.degree());
    return d;
  }

  /// Sum_i (*this)[i] * other[i].
  Polynomial dot(const PolyVector& other) const {
    if (other.size() != size()) throw std::invalid_argument("PolyVector::dot: length mismatch");
    Polynomial r(nvars());
    for (std::size_t i = 0; i < size(); ++i) r += components_[i] * other.components_[i];
    return r;
  }

 private:
  std::vector<Polynomial> components_;
};

inline PolyVector grad(const Polynomial& p) {
  std::vector<Polynomial> g;
  g.reserve(p.nvars());
  for (std::size_t i = 0; i < p.nvars(); ++i) g.push_back(p.derivative(i));
  return PolyVector(std::move(g));
}

}  // namespace heursos

#endif  // HEURSOS_POLY_HPP
