#include "stratprof/group.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "stratprof/errors.hpp"

namespace stratprof {

double max_abs_diff(const Point& a, const Point& b) {
  if (a.size() != b.size()) throw LayoutError("max_abs_diff: size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

namespace {

double ipow(double v, int e) {
  double r = 1.0;
  for (int k = 0; k < e; ++k) r *= v;
  return r;
}

int factorial(int m) {
  int r = 1;
  for (int k = 2; k <= m; ++k) r *= k;
  return r;
}

}  // namespace

void GroupSpec::finalize() {
  weights_.clear();
  q_ = 0;
  for (std::size_t k = 0; k < strata_.size(); ++k) {
    if (strata_[k] <= 0) throw DomainError("strata dimensions must be positive");
    for (int i = 0; i < strata_[k]; ++i) weights_.push_back(static_cast<int>(k) + 1);
    q_ += static_cast<int>(k + 1) * strata_[k];
  }
}

GroupSpec GroupSpec::abelian(int d) {
  if (d <= 0) throw DomainError("Abelian(d) needs d >= 1");
  GroupSpec g;
  g.law_ = LawKind::Abelian;
  g.norm_ = NormKind::Euclidean;
  g.preset_d_ = d;
  g.strata_ = {d};
  g.finalize();
  return g;
}

GroupSpec GroupSpec::heisenberg(int d) {
  if (d <= 0) throw DomainError("Heisenberg(d) needs d >= 1");
  GroupSpec g;
  g.law_ = LawKind::Heisenberg;
  g.norm_ = NormKind::Koranyi;
  g.preset_d_ = d;
  g.strata_ = {2 * d, 1};
  g.finalize();
  return g;
}

GroupSpec GroupSpec::custom(std::vector<int> strata_dims, std::vector<LawTerm> terms,
                            NormKind norm) {
  if (strata_dims.empty()) throw DomainError("custom group needs at least one stratum");
  GroupSpec g;
  g.law_ = LawKind::Custom;
  g.norm_ = norm;
  g.strata_ = std::move(strata_dims);
  g.finalize();
  const int n = g.dimension();
  for (const auto& t : terms) {
    if (t.target < 0 || t.target >= n) throw LayoutError("law term target out of range");
    if (static_cast<int>(t.x_powers.size()) != n || static_cast<int>(t.y_powers.size()) != n)
      throw LayoutError("law term exponent vectors must match the group dimension");
    int degree = 0;
    bool has_x = false, has_y = false;
    for (int i = 0; i < n; ++i) {
      if (t.x_powers[i] < 0 || t.y_powers[i] < 0) throw DomainError("negative exponent in law term");
      degree += g.weights_[i] * (t.x_powers[i] + t.y_powers[i]);
      has_x |= t.x_powers[i] > 0;
      has_y |= t.y_powers[i] > 0;
    }
    if (degree != g.weights_[t.target])
      throw DomainError("law term is not homogeneous of the target stratum's degree");
    if (!has_x || !has_y) throw DomainError("law term must mix both factors");
  }
  g.terms_ = std::move(terms);
  if (norm == NormKind::Euclidean && g.step() > 1)
    throw DomainError("Euclidean norm is not homogeneous on a step > 1 group");
  if (norm == NormKind::Koranyi) throw DomainError("Koranyi norm is reserved for Heisenberg presets");
  const LawValidation v = validate_law(g, 200, 0x5eed);
  if (!v.ok) {
    std::ostringstream os;
    os << "custom law failed validation (assoc " << v.associativity << ", identity " << v.identity
       << ", inverse " << v.inverse << ", dilation " << v.dilation << ")";
    throw DomainError(os.str());
  }
  return g;
}

GroupSpec GroupSpec::with_norm(NormKind kind) const {
  if (kind == NormKind::Euclidean && step() > 1)
    throw DomainError("Euclidean norm is not homogeneous on a step > 1 group");
  if (kind == NormKind::Koranyi && law_ != LawKind::Heisenberg)
    throw DomainError("Koranyi norm is only defined for Heisenberg groups");
  GroupSpec g = *this;
  g.norm_ = kind;
  return g;
}

void GroupSpec::check_layout(const Point& x) const {
  if (x.size() != weights_.size()) {
    throw LayoutError("point has " + std::to_string(x.size()) + " coordinates, " + name() +
                      " expects " + std::to_string(weights_.size()));
  }
}

Point GroupSpec::multiply(const Point& x, const Point& y) const {
  check_layout(x);
  check_layout(y);
  Point r(weights_.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = x[i] + y[i];
  switch (law_) {
    case LawKind::Abelian:
      break;
    case LawKind::Heisenberg: {
      const int d = preset_d_;
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += x[i] * y[d + i] - x[d + i] * y[i];
      r[2 * d] += 0.5 * s;
      break;
    }
    case LawKind::Custom:
      for (const auto& t : terms_) {
        double v = t.coefficient;
        for (std::size_t i = 0; i < r.size(); ++i) {
          v *= ipow(x[i], t.x_powers[i]) * ipow(y[i], t.y_powers[i]);
        }
        r[t.target] += v;
      }
      break;
  }
  return r;
}

Point GroupSpec::inverse(const Point& x) const {
  check_layout(x);
  Point r = x;
  for (auto& c : r.coords) c = -c;
  return r;
}

Point GroupSpec::dilate(double alpha, const Point& x) const {
  if (!(alpha > 0.0)) throw DomainError("dilation factor must be positive");
  check_layout(x);
  Point r = x;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] *= std::pow(alpha, weights_[i]);
  return r;
}

double GroupSpec::norm(const Point& x) const {
  check_layout(x);
  return norm(std::span<const double>(x.coords));
}

double GroupSpec::norm(std::span<const double> x) const {
  switch (norm_) {
    case NormKind::Euclidean: {
      double s = 0.0;
      for (double c : x) s += c * c;
      return std::sqrt(s);
    }
    case NormKind::Koranyi: {
      const int d = preset_d_;
      double h = 0.0;
      for (int i = 0; i < 2 * d; ++i) h += x[i] * x[i];
      const double t = x[2 * d];
      return std::pow(h * h + 16.0 * t * t, 0.25);
    }
    case NormKind::Gauge: {
      const int r = factorial(step());
      double total = 0.0;
      std::size_t offset = 0;
      for (std::size_t k = 0; k < strata_.size(); ++k) {
        double sq = 0.0;
        for (int i = 0; i < strata_[k]; ++i, ++offset) sq += x[offset] * x[offset];
        // |x^(k)|^{2r/k} = (|x^(k)|^2)^{r/k}, r/k integral
        total += ipow(sq, r / static_cast<int>(k + 1));
      }
      return std::pow(total, 1.0 / (2.0 * r));
    }
  }
  return 0.0;
}

bool GroupSpec::operator==(const GroupSpec& o) const {
  if (law_ != o.law_ || norm_ != o.norm_ || strata_ != o.strata_ || preset_d_ != o.preset_d_)
    return false;
  if (terms_.size() != o.terms_.size()) return false;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto &a = terms_[i], &b = o.terms_[i];
    if (a.target != b.target || a.coefficient != b.coefficient || a.x_powers != b.x_powers ||
        a.y_powers != b.y_powers)
      return false;
  }
  return true;
}

std::string GroupSpec::name() const {
  switch (law_) {
    case LawKind::Abelian:
      return "Abelian(" + std::to_string(preset_d_) + ")";
    case LawKind::Heisenberg:
      return "Heisenberg(" + std::to_string(preset_d_) + ")";
    case LawKind::Custom:
      break;
  }
  std::string s = "Custom(";
  for (std::size_t k = 0; k < strata_.size(); ++k) s += (k ? "," : "") + std::to_string(strata_[k]);
  return s + ")";
}

double critical_exponent(const GroupSpec& g, double s) {
  const double q = g.homogeneous_dimension();
  if (!(s > 0.0 && s < q / 2.0)) throw DomainError("critical_exponent needs 0 < s < Q/2");
  return 1.0 / (0.5 - s / q);
}

LawValidation validate_law(const GroupSpec& g, int samples, std::uint64_t seed, double tolerance) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> a(0.5, 2.0);
  const std::size_t n = static_cast<std::size_t>(g.dimension());
  auto draw = [&] {
    Point p(n);
    for (auto& c : p.coords) c = u(rng);
    return p;
  };
  LawValidation v;
  const Point e = g.identity();
  for (int k = 0; k < samples; ++k) {
    const Point x = draw(), y = draw(), z = draw();
    v.associativity = std::max(
        v.associativity,
        max_abs_diff(g.multiply(g.multiply(x, y), z), g.multiply(x, g.multiply(y, z))));
    v.identity = std::max({v.identity, max_abs_diff(g.multiply(e, x), x),
                           max_abs_diff(g.multiply(x, e), x)});
    v.inverse = std::max({v.inverse, max_abs_diff(g.multiply(x, g.inverse(x)), e),
                          max_abs_diff(g.multiply(g.inverse(x), x), e)});
    const double al = a(rng);
    v.dilation = std::max(v.dilation, max_abs_diff(g.dilate(al, g.multiply(x, y)),
                                                   g.multiply(g.dilate(al, x), g.dilate(al, y))));
  }
  v.ok = v.associativity <= tolerance && v.identity <= tolerance && v.inverse <= tolerance &&
         v.dilation <= tolerance;
  return v;
}

double measure_quasi_triangle_constant(const GroupSpec& g, int pairs, std::uint64_t seed,
                                       double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  const std::size_t n = static_cast<std::size_t>(g.dimension());
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    Point x(n), y(n);
    for (auto& c : x.coords) c = u(rng);
    for (auto& c : y.coords) c = u(rng);
    const double denom = g.norm(x) + g.norm(y);
    if (denom > 0.0) worst = std::max(worst, g.norm(g.multiply(x, y)) / denom);
  }
  return worst;
}

double unit_ball_volume(const GroupSpec& g) {
  switch (g.norm_kind()) {
    case NormKind::Euclidean: {
      const double d = g.dimension();
      return std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
    }
    case NormKind::Koranyi: {
      // pi^d B(d/2, 3/2) / (4 Gamma(d)); pi^2/8 for d = 1
      const double d = g.preset_d();
      const double beta = std::tgamma(d / 2.0) * std::tgamma(1.5) / std::tgamma(d / 2.0 + 1.5);
      return std::pow(M_PI, d) * beta / (4.0 * std::tgamma(d));
    }
    case NormKind::Gauge:
      break;
  }
  throw UnsupportedError("unit ball volume is only tabulated for Euclidean and Koranyi norms");
}

namespace {

std::string norm_name(NormKind k) {
  switch (k) {
    case NormKind::Euclidean:
      return "euclidean";
    case NormKind::Koranyi:
      return "koranyi";
    case NormKind::Gauge:
      return "gauge";
  }
  return "gauge";
}

NormKind norm_from_name(const std::string& s) {
  if (s == "euclidean") return NormKind::Euclidean;
  if (s == "koranyi") return NormKind::Koranyi;
  if (s == "gauge") return NormKind::Gauge;
  throw FormatError("unknown norm kind '" + s + "'");
}

}  // namespace

void to_json(nlohmann::json& j, const GroupSpec& g) {
  if (g.is_preset()) {
    j = {{"kind", g.law_kind() == LawKind::Abelian ? "abelian" : "heisenberg"},
         {"d", g.preset_d()},
         {"norm", norm_name(g.norm_kind())}};
    return;
  }
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : g.terms()) {
    terms.push_back({{"target", t.target},
                     {"coeff", t.coefficient},
                     {"x_powers", t.x_powers},
                     {"y_powers", t.y_powers}});
  }
  j = {{"strata_dims", std::vector<int>(g.strata_dims().begin(), g.strata_dims().end())},
       {"law", "custom"},
       {"coefficients", terms},
       {"norm", norm_name(g.norm_kind())}};
}

GroupSpec group_from_json(const nlohmann::json& j) {
  try {
    if (j.contains("kind")) {
      const auto kind = j.at("kind").get<std::string>();
      const int d = j.at("d").get<int>();
      GroupSpec g = kind == "abelian"      ? GroupSpec::abelian(d)
                    : kind == "heisenberg" ? GroupSpec::heisenberg(d)
                                           : throw FormatError("unknown group kind '" + kind + "'");
      if (j.contains("norm")) g = g.with_norm(norm_from_name(j.at("norm").get<std::string>()));
      return g;
    }
    if (j.value("law", std::string{}) != "custom")
      throw FormatError("group JSON needs either {kind, d} or {strata_dims, law:\"custom\", coefficients}");
    std::vector<LawTerm> terms;
    for (const auto& t : j.at("coefficients")) {
      terms.push_back({t.at("target").get<int>(), t.at("coeff").get<double>(),
                       t.at("x_powers").get<std::vector<int>>(),
                       t.at("y_powers").get<std::vector<int>>()});
    }
    const NormKind norm = norm_from_name(j.value("norm", std::string("gauge")));
    return GroupSpec::custom(j.at("strata_dims").get<std::vector<int>>(), std::move(terms), norm);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("group JSON: ") + e.what());
  }
}

}  // namespace stratprof
