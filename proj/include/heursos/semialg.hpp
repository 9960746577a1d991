// Semialgebraic sets {z : h_i(z) >= 0}, goal descriptions and measures whose
// monomial moments define the synthesis objective.

#ifndef HEURSOS_SEMIALG_HPP
#define HEURSOS_SEMIALG_HPP

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "heursos/poly.hpp"

namespace heursos {

/// Axis-aligned box [lo, hi].
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const { return lo.size(); }
  bool contains(std::span<const double> z, double tol = 0.0) const {
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (z[i] < lo[i] - tol || z[i] > hi[i] + tol) return false;
    }
    return true;
  }
};

inline void validate_box(std::span<const double> lo, std::span<const double> hi) {
  if (lo.size() != hi.size() || lo.empty()) throw std::invalid_argument("box: bound length mismatch");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || !(lo[i] < hi[i])) {
      throw std::invalid_argument("box: degenerate interval on axis " + std::to_string(i));
    }
  }
}

inline constexpr double kMembershipTol = 1e-12;

class SemialgebraicSet {
 public:
  explicit SemialgebraicSet(std::size_t nvars) : nvars_(nvars) {}
  SemialgebraicSet(std::size_t nvars, std::vector<Polynomial> constraints,
                   std::optional<Box> bounds = std::nullopt)
      : nvars_(nvars), constraints_(std::move(constraints)), bounds_(std::move(bounds)) {
    for (const auto& h : constraints_) {
      if (h.nvars() != nvars_) throw std::invalid_argument("SemialgebraicSet: constraint dimension mismatch");
    }
    if (bounds_ && bounds_->dim() != nvars_) {
      throw std::invalid_argument("SemialgebraicSet: bounding box dimension mismatch");
    }
  }

  std::size_t nvars() const { return nvars_; }
  const std::vector<Polynomial>& constraints() const { return constraints_; }
  bool is_whole_space() const { return constraints_.empty(); }

  /// Bounding box, known when the set was built by `box` or supplied explicitly.
  const std::optional<Box>& bounds() const { return bounds_; }

  bool contains(std::span<const double> z) const {
    if (z.size() != nvars_) throw std::invalid_argument("SemialgebraicSet::contains: dimension mismatch");
    for (const auto& h : constraints_) {
      if (h.eval(z) < -kMembershipTol) return false;
    }
    return true;
  }

 private:
  std::size_t nvars_;
  std::vector<Polynomial> constraints_;
  std::optional<Box> bounds_;
};

/// One quadratic constraint per axis, (hi_i - x_i)(x_i - lo_i) >= 0.
inline SemialgebraicSet box(std::span<const double> lo, std::span<const double> hi) {
  validate_box(lo, hi);
  const std::size_t n = lo.size();
  std::vector<Polynomial> cons;
  for (std::size_t i = 0; i < n; ++i) {
    Polynomial x = Polynomial::variable(n, i);
    cons.push_back((hi[i] - x) * (x - lo[i]));
  }
  return SemialgebraicSet(n, std::move(cons),
                          Box{std::vector<double>(lo.begin(), lo.end()), std::vector<double>(hi.begin(), hi.end())});
}

inline SemialgebraicSet box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  return box(std::span<const double>(lo.begin(), lo.size()), std::span<const double>(hi.begin(), hi.size()));
}

struct DiscreteMeasure {
  struct Atom {
    std::vector<double> point;
    double weight;
  };
  std::vector<Atom> atoms;
};

struct BoxLebesgue {
  std::vector<double> lo;
  std::vector<double> hi;
};

class Measure {
 public:
  using Variant = std::variant<DiscreteMeasure, BoxLebesgue>;

  static Measure discrete(std::vector<DiscreteMeasure::Atom> atoms) {
    if (atoms.empty()) throw std::invalid_argument("Measure: discrete measure needs atoms");
    const std::size_t n = atoms.front().point.size();
    for (const auto& a : atoms) {
      if (a.point.size() != n) throw std::invalid_argument("Measure: atom dimension mismatch");
      if (!(a.weight > 0.0)) throw std::invalid_argument("Measure: atom weights must be positive");
    }
    return Measure(n, DiscreteMeasure{std::move(atoms)});
  }
  static Measure lebesgue(std::vector<double> lo, std::vector<double> hi) {
    validate_box(lo, hi);
    const std::size_t n = lo.size();
    return Measure(n, BoxLebesgue{std::move(lo), std::move(hi)});
  }

  std::size_t nvars() const { return nvars_; }
  const Variant& data() const { return data_; }

  /// Smallest box containing the support.
  Box support_bounds() const {
    if (const auto* b = std::get_if<BoxLebesgue>(&data_)) return Box{b->lo, b->hi};
    const auto& atoms = std::get<DiscreteMeasure>(data_).atoms;
    Box bb{atoms.front().point, atoms.front().point};
    for (const auto& a : atoms) {
      for (std::size_t i = 0; i < nvars_; ++i) {
        bb.lo[i] = std::min(bb.lo[i], a.point[i]);
        bb.hi[i] = std::max(bb.hi[i], a.point[i]);
      }
    }
    return bb;
  }

 private:
  Measure(std::size_t n, Variant v) : nvars_(n), data_(std::move(v)) {}

  std::size_t nvars_;
  Variant data_;
};

inline double moment(const Measure& m, const Monomial& mono) {
  if (mono.nvars() != m.nvars()) throw std::invalid_argument("moment: dimension mismatch");
  if (const auto* d = std::get_if<DiscreteMeasure>(&m.data())) {
    double s = 0.0;
    for (const auto& a : d->atoms) s += a.weight * mono.eval(a.point);
    return s;
  }
  const auto& b = std::get<BoxLebesgue>(m.data());
  double v = 1.0;
  for (std::size_t i = 0; i < b.lo.size(); ++i) {
    const int p = mono[i] + 1;
    v *= (std::pow(b.hi[i], p) - std::pow(b.lo[i], p)) / p;
  }
  return v;
}

inline std::vector<double> objective_vector(const Measure& m, std::span<const Monomial> basis) {
  std::vector<double> out;
  out.reserve(basis.size());
  for (const auto& mono : basis) out.push_back(moment(m, mono));
  return out;
}

/// Integral of p against m.
inline double integrate(const Measure& m, const Polynomial& p) {
  double s = 0.0;
  for (const auto& [mono, c] : p.terms()) s += c * moment(m, mono);
  return s;
}

struct PointGoal {
  std::vector<double> point;
};

struct SetGoal {
  SemialgebraicSet set;
  /// Points where H = 0 is imposed in addition to the SOS condition on the set.
  std::vector<std::vector<double>> samples;
};

class GoalSpec {
 public:
  using Variant = std::variant<PointGoal, SetGoal>;

  static GoalSpec point(std::vector<double> z) {
    if (z.empty()) throw std::invalid_argument("GoalSpec: empty goal point");
    return GoalSpec(PointGoal{std::move(z)});
  }
  static GoalSpec set(SemialgebraicSet s, std::vector<std::vector<double>> samples = {}) {
    for (const auto& z : samples) {
      if (z.size() != s.nvars()) throw std::invalid_argument("GoalSpec: sample dimension mismatch");
    }
    return GoalSpec(SetGoal{std::move(s), std::move(samples)});
  }

  std::size_t nvars() const {
    if (const auto* p = std::get_if<PointGoal>(&data_)) return p->point.size();
    return std::get<SetGoal>(data_).set.nvars();
  }
  bool is_point() const { return std::holds_alternative<PointGoal>(data_); }
  const PointGoal& as_point() const { return std::get<PointGoal>(data_); }
  const SetGoal& as_set() const { return std::get<SetGoal>(data_); }
  const Variant& data() const { return data_; }

  bool contains(std::span<const double> z) const {
    if (const auto* p = std::get_if<PointGoal>(&data_)) {
      for (std::size_t i = 0; i < z.size(); ++i) {
        if (std::abs(z[i] - p->point[i]) > kMembershipTol) return false;
      }
      return true;
    }
    return std::get<SetGoal>(data_).set.contains(z);
  }

 private:
  explicit GoalSpec(Variant v) : data_(std::move(v)) {}
  Variant data_;
};

}  // namespace heursos

#endif  // HEURSOS_SEMIALG_HPP
