#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace stratprof {

/// A point of a stratified group in exponential coordinates of the first kind,
/// grouped by stratum (V1 coordinates first, then V2, ...).
struct Point {
  std::vector<double> coords;

  Point() = default;
  explicit Point(std::size_t n) : coords(n, 0.0) {}
  Point(std::initializer_list<double> c) : coords(c) {}
  explicit Point(std::vector<double> c) : coords(std::move(c)) {}

  std::size_t size() const { return coords.size(); }
  double& operator[](std::size_t i) { return coords[i]; }
  double operator[](std::size_t i) const { return coords[i]; }
  bool operator==(const Point&) const = default;
};

double max_abs_diff(const Point& a, const Point& b);

enum class LawKind { Abelian, Heisenberg, Custom };

enum class NormKind {
  Euclidean,  // abelian groups only
  Koranyi,    // Heisenberg groups: ((|x|^2+|y|^2)^2 + 16 t^2)^{1/4}
  Gauge,      // any step m: (sum_k |x^(k)|^{2r/k})^{1/(2r)}, r = m!
};

/// One monomial of a polynomial group law:
/// (x.y)_target += coefficient * prod_i x_i^x_powers[i] * prod_i y_i^y_powers[i].
struct LawTerm {
  int target = 0;
  double coefficient = 0.0;
  std::vector<int> x_powers;
  std::vector<int> y_powers;
};

/// Worst-case errors of the group axioms measured on random samples.
struct LawValidation {
  double associativity = 0.0;
  double identity = 0.0;
  double inverse = 0.0;
  double dilation = 0.0;
  bool ok = false;
};

/// A stratified Lie group: strata dimensions, polynomial law, dilations and a
/// homogeneous norm. Immutable after construction.
class GroupSpec {
 public:
  static GroupSpec abelian(int d);
  static GroupSpec heisenberg(int d);
  /// Throws DomainError when the law fails homogeneity or the axiom fuzzing.
  static GroupSpec custom(std::vector<int> strata_dims, std::vector<LawTerm> terms,
                          NormKind norm = NormKind::Gauge);

  GroupSpec with_norm(NormKind kind) const;

  LawKind law_kind() const { return law_; }
  NormKind norm_kind() const { return norm_; }
  std::span<const int> strata_dims() const { return strata_; }
  /// Stratum index (1-based) of each coordinate; the dilation exponent.
  std::span<const int> weights() const { return weights_; }
  std::span<const LawTerm> terms() const { return terms_; }
  int step() const { return static_cast<int>(strata_.size()); }
  int dimension() const { return static_cast<int>(weights_.size()); }
  /// d for Abelian(d) / Heisenberg(d), 0 for custom laws.
  int preset_d() const { return preset_d_; }
  bool is_preset() const { return law_ != LawKind::Custom; }

  int homogeneous_dimension() const { return q_; }

  Point identity() const { return Point(weights_.size()); }
  Point multiply(const Point& x, const Point& y) const;
  Point inverse(const Point& x) const;
  Point dilate(double alpha, const Point& x) const;
  double norm(const Point& x) const;
  /// Homogeneous norm of a raw coordinate vector (no allocation).
  double norm(std::span<const double> x) const;

  void check_layout(const Point& x) const;

  bool operator==(const GroupSpec& o) const;

  std::string name() const;

 private:
  GroupSpec() = default;
  void finalize();

  LawKind law_ = LawKind::Abelian;
  NormKind norm_ = NormKind::Euclidean;
  int preset_d_ = 0;
  int q_ = 0;
  std::vector<int> strata_;
  std::vector<int> weights_;
  std::vector<LawTerm> terms_;
};

/// p = 1/(1/2 - s/Q), the Lebesgue exponent scaling like H^s. Requires 0 < s < Q/2.
double critical_exponent(const GroupSpec& g, double s);

/// Fuzzes associativity, identity, inverse-by-negation and dilation-automorphism
/// on `samples` random points with coordinates in [-1, 1].
LawValidation validate_law(const GroupSpec& g, int samples, std::uint64_t seed,
                           double tolerance = 1e-9);

/// Measured c' in |x.y| <= c' (|x| + |y|) over random pairs.
double measure_quasi_triangle_constant(const GroupSpec& g, int pairs, std::uint64_t seed,
                                       double scale = 4.0);

/// Volume of the homogeneous-norm unit ball (presets only).
double unit_ball_volume(const GroupSpec& g);

void to_json(nlohmann::json& j, const GroupSpec& g);
GroupSpec group_from_json(const nlohmann::json& j);

}  // namespace stratprof
