#include "stratprof/coeff_space.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "stratprof/errors.hpp"
#include "stratprof/reference.hpp"

namespace stratprof {

Normalization Normalization::lp(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw DomainError("Lp normalization needs 1 <= p < inf");
  return {Kind::Lp, p};
}

std::string Normalization::describe() const {
  if (kind == Kind::L1) return "L1_atoms";
  std::ostringstream os;
  os << "Lp_atoms(" << p << ")";
  return os.str();
}

CoefficientField::CoefficientField(SamplingSet gs, Normalization norm) : gs_(std::move(gs)), norm_(norm) {}

void CoefficientField::insert(const AtomIndex& idx, Complex d) {
  if (!std::isfinite(d.real()) || !std::isfinite(d.imag())) throw DomainError("non-finite coefficient");
  if (static_cast<int>(idx.gamma.size()) != group().dimension())
    throw LayoutError("atom index does not match the group dimension");
  if (!entries_.emplace(idx, d).second) throw DomainError("duplicate atom index");
}

void CoefficientField::set(const AtomIndex& idx, Complex d) {
  if (!std::isfinite(d.real()) || !std::isfinite(d.imag())) throw DomainError("non-finite coefficient");
  if (static_cast<int>(idx.gamma.size()) != group().dimension())
    throw LayoutError("atom index does not match the group dimension");
  entries_[idx] = d;
}

void CoefficientField::add(const AtomIndex& idx, Complex d) {
  if (static_cast<int>(idx.gamma.size()) != group().dimension())
    throw LayoutError("atom index does not match the group dimension");
  auto [it, fresh] = entries_.emplace(idx, d);
  if (!fresh) {
    it->second += d;
    if (it->second == Complex{}) entries_.erase(it);
  }
}

std::optional<Complex> CoefficientField::get(const AtomIndex& idx) const {
  auto it = entries_.find(idx);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

Complex CoefficientField::value(const AtomIndex& idx) const { return get(idx).value_or(Complex{}); }

double CoefficientField::max_modulus() const {
  double m = 0.0;
  for (const auto& [k, v] : entries_) m = std::max(m, std::abs(v));
  return m;
}

void CoefficientField::apply_floor(double rel) {
  const double cut = rel * max_modulus();
  std::erase_if(entries_, [cut](const auto& kv) { return std::abs(kv.second) < cut || kv.second == Complex{}; });
}

CoefficientField CoefficientField::scaled(Complex alpha) const {
  CoefficientField r(gs_, norm_);
  r.log_ = log_;
  if (alpha == Complex{}) return r;
  for (const auto& [k, v] : entries_) r.entries_.emplace_hint(r.entries_.end(), k, alpha * v);
  return r;
}

void CoefficientField::check_compatible(const CoefficientField& o) const {
  if (!(gs_ == o.gs_)) throw PreconditionError("coefficient fields live on different sampling sets");
  if (!(norm_ == o.norm_))
    throw PreconditionError("normalization mismatch: " + norm_.describe() + " vs " + o.norm_.describe() +
                            "; convert explicitly first");
}

CoefficientField CoefficientField::minus(const CoefficientField& o) const {
  check_compatible(o);
  CoefficientField r = *this;
  for (const auto& [k, v] : o.entries_) r.add(k, -v);
  return r;
}

CoefficientField CoefficientField::plus(const CoefficientField& o) const {
  check_compatible(o);
  CoefficientField r = *this;
  for (const auto& [k, v] : o.entries_) r.add(k, v);
  return r;
}

CoefficientField CoefficientField::to_l1() const {
  if (norm_.kind == Normalization::Kind::L1) return *this;
  CoefficientField r(gs_, Normalization::l1());
  r.log_ = log_;
  r.log_.push_back(norm_.describe() + " -> L1_atoms");
  const double q = group().homogeneous_dimension();
  for (const auto& [k, v] : entries_)
    r.entries_.emplace_hint(r.entries_.end(), k, v * std::exp2(k.j * q / norm_.p));
  return r;
}

CoefficientField CoefficientField::to_lp(double p) const {
  const Normalization target = Normalization::lp(p);
  if (norm_ == target) return *this;
  const CoefficientField base = to_l1();
  CoefficientField r(gs_, target);
  r.log_ = base.log_;
  r.log_.push_back("L1_atoms -> " + target.describe());
  const double q = group().homogeneous_dimension();
  for (const auto& [k, v] : base.entries_)
    r.entries_.emplace_hint(r.entries_.end(), k, v * std::exp2(-k.j * q / p));
  return r;
}

NormParams NormParams::critical(const GroupSpec& g, double s) {
  const double p = critical_exponent(g, s);
  return {s, p, p};
}

bool NormParams::is_critical(const GroupSpec& g, double tol) const {
  return std::abs(s / g.homogeneous_dimension() + 1.0 / p - 0.5) <= tol;
}

namespace {

void check_finite_exponents(const NormParams& np) {
  if (!std::isfinite(np.p) || !std::isfinite(np.q))
    throw UnsupportedError("p = inf or q = inf is outside the supported range");
  if (!(np.p >= 1.0 && np.q >= 1.0)) throw DomainError("norm exponents must satisfy p, q >= 1");
}

double sum_pow(const std::vector<double>& v, double p, Exec exec) {
  auto f = [&](std::size_t i) { return p == 2.0 ? v[i] * v[i] : std::pow(v[i], p); };
  return exec == Exec::Parallel ? kernels::chunked_sum(v.size(), f) : reference::serial_sum(v.size(), f);
}

}  // namespace

double discrete_besov_norm(const CoefficientField& c, const NormParams& np, Exec exec) {
  check_finite_exponents(np);
  if (c.empty()) return 0.0;
  const CoefficientField l1 = c.to_l1();
  const double q = c.group().homogeneous_dimension();
  // entries are ordered by j first, so each scale is a contiguous run
  double outer = 0.0;
  std::vector<double> layer;
  auto flush = [&](int j) {
    if (layer.empty()) return;
    const double inner = std::pow(sum_pow(layer, np.p, exec), 1.0 / np.p);
    outer += std::pow(std::exp2(j * (np.s - q / np.p)) * inner, np.q);
    layer.clear();
  };
  int current = l1.entries().begin()->first.j;
  for (const auto& [k, v] : l1.entries()) {
    if (k.j != current) {
      flush(current);
      current = k.j;
    }
    layer.push_back(std::abs(v));
  }
  flush(current);
  return std::pow(outer, 1.0 / np.q);
}

double sobolev_seq_norm(const CoefficientField& c, Exec exec) {
  if (c.normalization().kind != Normalization::Kind::Lp)
    throw PreconditionError("sobolev_seq_norm needs Lp_atoms coefficients; convert with to_lp(p) first");
  std::vector<double> m;
  m.reserve(c.size());
  for (const auto& [k, v] : c.entries()) m.push_back(std::abs(v));
  return std::sqrt(sum_pow(m, 2.0, exec));
}

double lp_proxy_norm(const CoefficientField& c, double p, Exec exec) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw DomainError("lp_proxy_norm needs 1 <= p < inf");
  const CoefficientField d = c.to_lp(p);
  std::vector<double> m;
  m.reserve(d.size());
  for (const auto& [k, v] : d.entries()) m.push_back(std::abs(v));
  return std::pow(sum_pow(m, p, exec), 1.0 / p);
}

std::vector<RankedEntry> reorder(const CoefficientField& c) {
  std::vector<RankedEntry> out;
  out.reserve(c.size());
  for (const auto& [k, v] : c.entries()) out.push_back({0, k, v});
  // map order is (j, gamma) ascending, so a stable sort on modulus gives the tie-break
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedEntry& a, const RankedEntry& b) { return std::abs(a.d) > std::abs(b.d); });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i) + 1;
  return out;
}

Projection q_m(const CoefficientField& c, int M) {
  if (M < 1) throw DomainError("q_m needs M >= 1");
  Projection r{CoefficientField(c.sampling(), c.normalization()), {}};
  for (const auto& e : reorder(c)) {
    if (e.rank > M) break;
    r.kept.insert(e.index, e.d);
    r.e_m.push_back(e.index);
  }
  return r;
}

std::vector<CurvePoint> mterm_error_curve(const CoefficientField& c, const NormParams& np,
                                          const std::vector<int>& M_list) {
  check_finite_exponents(np);
  for (int M : M_list)
    if (M < 1) throw DomainError("mterm_error_curve: M must be >= 1");
  const auto ranked = reorder(c);
  const CoefficientField l1 = c.to_l1();
  const double Q = c.group().homogeneous_dimension();

  // Tails grow by one entry per step from the back, so per-scale p-sums only ever
  // gain nonnegative terms and the curve is monotone without cancellation.
  const std::size_t n = ranked.size();
  std::vector<double> at(n + 1, 0.0);
  std::map<int, double> layer;
  auto norm = [&] {
    double outer = 0.0;
    for (const auto& [j, sum] : layer)
      outer += std::pow(std::exp2(j * (np.s - Q / np.p)) * std::pow(sum, 1.0 / np.p), np.q);
    return std::pow(outer, 1.0 / np.q);
  };
  std::vector<char> wanted(n + 1, 0);
  for (int M : M_list) wanted[std::min<std::size_t>(M, n)] = 1;
  for (std::size_t i = n; i-- > 0;) {
    const double m = std::abs(l1.value(ranked[i].index));
    layer[ranked[i].index.j] += np.p == 2.0 ? m * m : std::pow(m, np.p);
    if (wanted[i]) at[i] = norm();
  }
  std::vector<CurvePoint> out;
  for (int M : M_list) out.push_back({M, at[std::min<std::size_t>(M, n)]});
  return out;
}

double unconditionality_ratio(const CoefficientField& c_small, const CoefficientField& c_big,
                              const NormParams& np) {
  if (!(c_small.sampling() == c_big.sampling()) || !(c_small.normalization() == c_big.normalization()))
    throw PreconditionError("unconditionality_ratio: fields must share sampling set and normalization");
  for (const auto& [k, v] : c_small.entries()) {
    const auto big = c_big.get(k);
    if (!big) throw PreconditionError("unconditionality_ratio: c_small has an index outside supp c_big");
    if (std::abs(v) > std::abs(*big) * (1.0 + 1e-15))
      throw PreconditionError("unconditionality_ratio: |c_small| <= |c_big| violated");
  }
  const double denom = discrete_besov_norm(c_big, np);
  if (denom == 0.0) return 0.0;
  return discrete_besov_norm(c_small, np) / denom;
}

void to_json(nlohmann::json& j, const Normalization& n) {
  if (n.kind == Normalization::Kind::L1)
    j = {{"kind", "L1"}};
  else
    j = {{"kind", "Lp"}, {"p", n.p}};
}

Normalization normalization_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "L1") return Normalization::l1();
  if (kind == "Lp") return Normalization::lp(j.at("p").get<double>());
  throw FormatError("unknown normalization kind '" + kind + "'");
}

void write_field_jsonl(std::ostream& os, const CoefficientField& c) {
  nlohmann::json header, norm, gs;
  to_json(norm, c.normalization());
  to_json(gs, c.sampling());
  header = {{"format", "coefficient-field"}, {"version", 1}, {"normalization", norm}, {"sampling", gs}};
  os << header.dump() << '\n';
  for (const auto& [k, v] : c.entries()) {
    nlohmann::json line = {{"j", k.j}, {"gamma", k.gamma}, {"re", v.real()}, {"im", v.imag()}};
    os << line.dump() << '\n';
  }
}

namespace {

nlohmann::json parse_line(const std::string& text, std::size_t line) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what(), line);
  }
}

}  // namespace

CoefficientField read_field_jsonl(std::istream& is) {
  std::string text;
  std::size_t line = 0;
  if (!std::getline(is, text)) throw FormatError("empty coefficient file", 1);
  ++line;
  const auto header = parse_line(text, line);
  if (!header.is_object() || header.value("format", std::string{}) != "coefficient-field") {
    if (header.is_object() && header.contains("j"))
      throw FormatError("missing header: legacy coefficient files without a normalization tag are not accepted; "
                        "prepend {\"format\":\"coefficient-field\",\"version\":1,\"normalization\":{...},"
                        "\"sampling\":{...}}",
                        line);
    throw FormatError("bad header: expected format \"coefficient-field\"", line);
  }
  if (!header.contains("normalization"))
    throw FormatError("header lacks a normalization tag (legacy format); add \"normalization\": "
                      "{\"kind\":\"L1\"} or {\"kind\":\"Lp\",\"p\":...}",
                      line);
  if (header.value("version", 0) != 1) throw FormatError("unsupported coefficient-field version", line);
  std::optional<CoefficientField> field;
  try {
    field.emplace(sampling_from_json(header.at("sampling")), normalization_from_json(header.at("normalization")));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad header: ") + e.what(), line);
  } catch (const FormatError& e) {
    throw FormatError(e.what(), line);
  }
  while (std::getline(is, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto obj = parse_line(text, line);
    try {
      const AtomIndex idx{obj.at("j").get<int>(), obj.at("gamma").get<LatticeCoords>()};
      // NaN is not valid JSON; a null in its place is reported as non-finite
      if (obj.at("re").is_null() || obj.at("im").is_null()) throw DomainError("non-finite coefficient");
      field->insert(idx, {obj.at("re").get<double>(), obj.at("im").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad entry: ") + e.what(), line);
    } catch (const Error& e) {
      throw FormatError(e.what(), line);
    }
  }
  field->apply_floor();
  return *field;
}

}  // namespace stratprof
