#include "stratprof/sampling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "stratprof/errors.hpp"
#include "stratprof/reference.hpp"

namespace stratprof {

bool Box::contains(const Point& x) const {
  if (x.size() != lo.size()) throw LayoutError("box/point dimension mismatch");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!(x[i] >= lo[i] && x[i] < hi[i])) return false;
  return true;
}

bool Box::empty() const {
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!(hi[i] > lo[i])) return true;
  return lo.empty();
}

double Box::volume() const {
  if (empty()) return 0.0;
  double v = 1.0;
  for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
  return v;
}

namespace {

Box preset_tile(const GroupSpec& g, double beta) {
  Box b;
  const int n = g.dimension();
  b.lo.assign(n, 0.0);
  b.hi.assign(n, beta);
  if (g.law_kind() == LawKind::Heisenberg) b.hi[n - 1] = beta * beta / 2.0;
  return b;
}

std::int64_t floor_i(double v) { return static_cast<std::int64_t>(std::floor(v)); }

}  // namespace

SamplingSet::SamplingSet(GroupSpec g, double beta, Box tile)
    : group_(std::move(g)), beta_(beta), tile_(std::move(tile)) {
  if (!group_.is_preset())
    throw UnsupportedError("no preset lattice for custom groups; supply one and check it with verify_tiling");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("lattice density beta must be positive");
  const int n = group_.dimension();
  if (static_cast<int>(tile_.lo.size()) != n || static_cast<int>(tile_.hi.size()) != n)
    throw LayoutError("tile dimension does not match the group");
  unit_.assign(n, beta);
  if (group_.law_kind() == LawKind::Heisenberg) unit_[n - 1] = beta * beta / 2.0;
}

SamplingSet SamplingSet::preset(const GroupSpec& g, double beta) {
  if (!g.is_preset()) throw UnsupportedError("preset sampling sets exist only for Abelian(d) and Heisenberg(d)");
  return SamplingSet(g, beta, preset_tile(g, beta));
}

SamplingSet SamplingSet::with_tile(const GroupSpec& g, double beta, Box tile) {
  return SamplingSet(g, beta, std::move(tile));
}

void SamplingSet::check_coords(const LatticeCoords& a) const {
  if (static_cast<int>(a.size()) != group_.dimension())
    throw LayoutError("lattice coordinates have " + std::to_string(a.size()) + " entries, " +
                      group_.name() + " expects " + std::to_string(group_.dimension()));
}

Point SamplingSet::decode(const LatticeCoords& gamma) const {
  check_coords(gamma);
  Point p(gamma.size());
  for (std::size_t i = 0; i < gamma.size(); ++i) p[i] = unit_[i] * static_cast<double>(gamma[i]);
  return p;
}

std::optional<LatticeCoords> SamplingSet::encode(const Point& x, double tol) const {
  group_.check_layout(x);
  LatticeCoords a(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i] / unit_[i];
    const double r = std::round(v);
    if (std::abs(v - r) > tol) return std::nullopt;
    a[i] = static_cast<std::int64_t>(r);
  }
  return a;
}

LatticeCoords SamplingSet::multiply(const LatticeCoords& a, const LatticeCoords& b) const {
  check_coords(a);
  check_coords(b);
  LatticeCoords r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  if (group_.law_kind() == LawKind::Heisenberg) {
    const std::size_t d = static_cast<std::size_t>(group_.preset_d());
    std::int64_t s = 0;
    for (std::size_t i = 0; i < d; ++i) s += a[i] * b[d + i] - a[d + i] * b[i];
    r[2 * d] += s;
  }
  return r;
}

LatticeCoords SamplingSet::inverse(const LatticeCoords& a) const {
  check_coords(a);
  LatticeCoords r(a);
  for (auto& v : r) v = -v;
  return r;
}

LatticeCoords SamplingSet::dilate2(const LatticeCoords& a, int k) const {
  check_coords(a);
  if (k < 0) throw DomainError("dilate2 needs k >= 0: the lattice is not invariant under contraction");
  LatticeCoords r(a);
  const auto w = group_.weights();
  for (std::size_t i = 0; i < r.size(); ++i) r[i] <<= static_cast<std::int64_t>(k) * w[i];
  return r;
}

Point SamplingSet::position(const AtomIndex& idx) const {
  return group_.dilate(std::ldexp(1.0, -idx.j), decode(idx.gamma));
}

std::vector<LatticeCoords> SamplingSet::covering(const Point& x) const {
  group_.check_layout(x);
  const int n = group_.dimension();
  const bool heis = group_.law_kind() == LawKind::Heisenberg;
  const int n1 = heis ? n - 1 : n;

  // Stratum-1 candidates: x_i - beta a_i in [lo_i, hi_i), widened by one step for round-off.
  std::vector<std::int64_t> amin(n1), amax(n1);
  for (int i = 0; i < n1; ++i) {
    amin[i] = floor_i((x[i] - tile_.hi[i]) / beta_);
    amax[i] = floor_i((x[i] - tile_.lo[i]) / beta_) + 1;
  }
  std::vector<LatticeCoords> out;
  LatticeCoords a(amin.begin(), amin.end());
  if (heis) a.push_back(0);
  const double half = unit_[n - 1];
  const int d = group_.preset_d();
  for (;;) {
    std::int64_t cmin = 0, cmax = 0;
    if (heis) {
      // (gamma^{-1} x)_t = t - beta^2 c / 2 + (beta/2) sum(b_i x_i - a_i y_i)
      double s = 0.0;
      for (int i = 0; i < d; ++i)
        s += static_cast<double>(a[d + i]) * x[i] - static_cast<double>(a[i]) * x[d + i];
      const double shift = x[n - 1] + 0.5 * beta_ * s;
      cmin = floor_i((shift - tile_.hi[n - 1]) / half);
      cmax = floor_i((shift - tile_.lo[n - 1]) / half) + 1;
    }
    for (std::int64_t c = cmin; c <= cmax; ++c) {
      if (heis) a[n - 1] = c;
      const Point y = group_.multiply(decode(inverse(a)), x);
      if (tile_.contains(y)) out.push_back(a);
    }
    int k = n1 - 1;
    while (k >= 0 && a[k] == amax[k]) {
      a[k] = amin[k];
      --k;
    }
    if (k < 0) break;
    ++a[k];
  }
  return out;
}

std::pair<LatticeCoords, Point> SamplingSet::reduce(const Point& x) const {
  const auto cover = covering(x);
  if (cover.empty()) throw RangeError("point is not covered by any lattice translate of the tile");
  return {cover.front(), group_.multiply(decode(inverse(cover.front())), x)};
}

bool SamplingSet::operator==(const SamplingSet& o) const {
  return group_ == o.group_ && beta_ == o.beta_ && tile_.lo == o.tile_.lo && tile_.hi == o.tile_.hi;
}

std::vector<AtomIndex> enumerate(const SamplingSet& gs, int j, const Box& box) {
  const int n = gs.group().dimension();
  if (static_cast<int>(box.lo.size()) != n || static_cast<int>(box.hi.size()) != n)
    throw LayoutError("enumerate: box dimension does not match the group");
  if (box.empty()) return {};
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(box.lo[i]) || !std::isfinite(box.hi[i]))
      throw DomainError("enumerate needs a bounded box");
  const auto w = gs.group().weights();
  std::vector<std::int64_t> lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    const double step = std::ldexp(gs.unit()[i], -j * w[i]);
    lo[i] = floor_i(box.lo[i] / step) - 1;
    hi[i] = floor_i(box.hi[i] / step) + 1;
  }
  std::vector<AtomIndex> out;
  AtomIndex idx{j, LatticeCoords(lo.begin(), lo.end())};
  for (;;) {
    if (box.contains(gs.position(idx))) out.push_back(idx);
    int k = n - 1;
    while (k >= 0 && idx.gamma[k] == hi[k]) {
      idx.gamma[k] = lo[k];
      --k;
    }
    if (k < 0) break;
    ++idx.gamma[k];
  }
  return out;
}

TilingReport verify_tiling(const SamplingSet& gs, const Box& test_box, int grid_res, Exec exec) {
  if (grid_res < 2) throw DomainError("verify_tiling needs grid_res >= 2");
  const int n = gs.group().dimension();
  if (static_cast<int>(test_box.lo.size()) != n) throw LayoutError("test box dimension mismatch");
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(grid_res);

  std::vector<std::uint32_t> counts(total, 0);
  auto count_at = [&](std::size_t idx) {
    Point x(n);
    std::size_t rem = idx;
    for (int i = n - 1; i >= 0; --i) {
      const std::size_t k = rem % grid_res;
      rem /= grid_res;
      const double h = (test_box.hi[i] - test_box.lo[i]) / grid_res;
      x[i] = test_box.lo[i] + (static_cast<double>(k) + 0.5) * h;
    }
    counts[idx] = static_cast<std::uint32_t>(gs.covering(x).size());
  };
  if (exec == Exec::Parallel)
    kernels::parallel_for(total, count_at);
  else
    for (std::size_t i = 0; i < total; ++i) count_at(i);

  auto sum = [&](auto&& f) {
    return exec == Exec::Parallel ? kernels::chunked_sum(total, f) : reference::serial_sum(total, f);
  };
  const double covered = sum([&](std::size_t i) { return static_cast<double>(counts[i]); });
  const double excess = sum([&](std::size_t i) { return counts[i] > 1 ? counts[i] - 1.0 : 0.0; });
  const double holes = sum([&](std::size_t i) { return counts[i] == 0 ? 1.0 : 0.0; });

  TilingReport r;
  r.samples = total;
  r.max_overlap_fraction = covered > 0.0 ? excess / covered : 0.0;
  r.uncovered_fraction = holes / static_cast<double>(total);
  return r;
}

namespace {

double binomial(int m, int i) {
  double r = 1.0;
  for (int k = 1; k <= i; ++k) r = r * (m - i + k) / k;
  return r;
}

// int_{r0}^inf r^{Q-1} (1+r)^{-n} dr = int_0^{v1} (1-v)^{Q-1} v^{n-Q-1} dv, v1 = 1/(1+r0).
double radial_tail(int q, int n, double r0) {
  const double v1 = 1.0 / (1.0 + r0);
  const int m = n - q - 1;
  double s = 0.0;
  for (int i = 0; i <= q - 1; ++i) {
    const double e = m + i + 1;
    s += (i % 2 ? -1.0 : 1.0) * binomial(q - 1, i) * std::pow(v1, e) / e;
  }
  return std::max(s, 0.0);
}

constexpr std::size_t kMaxDim = 16;

}  // namespace

DecayCertificate column_decay_certificate(const SamplingSet& gs, int eta, int j, int n,
                                          const Point& x, Exec exec, std::size_t budget) {
  const GroupSpec& g = gs.group();
  g.check_layout(x);
  if (eta > j) throw DomainError("column decay certificate needs eta <= j");
  const int q = g.homogeneous_dimension();
  const int dim = g.dimension();
  if (static_cast<std::size_t>(dim) > kMaxDim) throw UnsupportedError("group dimension too large");

  DecayCertificate cert;
  if (n <= q) {
    cert.hypothesis_ok = false;
    cert.warning = "n <= Q: the lattice sum diverges";
    cert.value = std::numeric_limits<double>::infinity();
    cert.partial_sum = cert.value;
    cert.tail_estimate = cert.value;
    return cert;
  }

  // Recentre: |(2^{-j}.gamma)^{-1} x| = 2^{-j} |gamma^{-1} (2^j.x)|; write 2^j.x = gamma_c z, z in W.
  const auto [gc, z] = gs.reduce(g.dilate(std::ldexp(1.0, j), x));
  (void)gc;
  const int k = j - eta;
  const double scale = std::ldexp(1.0, -k);
  const bool heis = g.law_kind() == LawKind::Heisenberg;
  const int d = g.preset_d();
  const double beta = gs.beta();
  const auto& unit = gs.unit();
  const double zr = g.norm(z);
  const double prefactor = q * unit_ball_volume(g) / gs.tile_volume();

  auto box_extent = [&](double r, std::vector<std::int64_t>& ext) {
    ext.assign(dim, 0);
    std::size_t count = 1;
    for (int i = 0; i < dim; ++i) {
      const bool centre = heis && i == dim - 1;
      // Koranyi: |delta| <= r gives |a|,|b| <= r/beta and |c| <= r^2 / (2 beta^2)
      const double bound = centre ? r * r / (2.0 * beta * beta) : r / beta;
      ext[i] = static_cast<std::int64_t>(std::ceil(bound));
      count *= static_cast<std::size_t>(2 * ext[i] + 1);
      if (count > budget * 64) return count;
    }
    return count;
  };

  double rho_prev = -1.0;
  double rho = 4.0;
  double partial = 0.0;
  std::vector<std::int64_t> ext;
  for (;;) {
    const std::size_t count = box_extent(zr + rho, ext);
    if (count > budget) break;

    std::vector<std::size_t> sizes(dim);
    for (int i = 0; i < dim; ++i) sizes[i] = static_cast<std::size_t>(2 * ext[i] + 1);
    const double lo_r = rho_prev, hi_r = rho;
    auto term = [&](std::size_t idx) {
      std::array<double, kMaxDim> w{};
      std::size_t rem = idx;
      for (int i = dim - 1; i >= 0; --i) {
        const auto c = static_cast<std::int64_t>(rem % sizes[i]) - ext[i];
        rem /= sizes[i];
        w[i] = z[i] - unit[i] * static_cast<double>(c);  // delta^{-1} z, stratum 1 and centre base
      }
      if (heis) {
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += (z[i] - w[i]) * z[d + i] - (z[d + i] - w[d + i]) * z[i];
        // (-delta) . z adds (1/2) sum((-a) y - (-b) x) with a = z - w on stratum 1
        w[dim - 1] -= 0.5 * s;
      }
      const double r = g.norm(std::span<const double>(w.data(), dim));
      if (!(r > lo_r && r <= hi_r)) return 0.0;
      return std::pow(1.0 + scale * r, -static_cast<double>(n));
    };
    partial += exec == Exec::Parallel ? kernels::chunked_sum(count, term)
                                      : reference::serial_sum(count, term);
    auto in_shell = [&](std::size_t idx) { return term(idx) > 0.0 ? 1.0 : 0.0; };
    cert.terms += static_cast<std::size_t>(exec == Exec::Parallel ? kernels::chunked_sum(count, in_shell)
                                                                  : reference::serial_sum(count, in_shell));
    cert.radius = rho;
    // value units: the 2^{kQ} Jacobian of r -> 2^{-k} r cancels the 2^{-kQ} prefactor
    const double tail = prefactor * radial_tail(q, n, scale * rho);
    cert.tail_estimate = tail;
    if (tail <= 1e-14 * std::ldexp(partial, -k * q)) {
      cert.converged = true;
      break;
    }
    rho_prev = rho;
    rho *= 2.0;
  }
  cert.partial_sum = std::ldexp(partial, -k * q);
  cert.value = cert.partial_sum + cert.tail_estimate;
  if (!cert.converged && cert.warning.empty())
    cert.warning = "point budget exhausted before the tail fell below 1e-14 of the partial sum";
  return cert;
}

void to_json(nlohmann::json& j, const Box& b) { j = {{"lo", b.lo}, {"hi", b.hi}}; }

Box box_from_json(const nlohmann::json& j) {
  try {
    Box b{j.at("lo").get<std::vector<double>>(), j.at("hi").get<std::vector<double>>()};
    if (b.lo.size() != b.hi.size()) throw FormatError("box lo/hi length mismatch");
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("box JSON: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const SamplingSet& gs) {
  nlohmann::json g, t;
  to_json(g, gs.group());
  to_json(t, gs.tile());
  j = {{"group", g}, {"beta", gs.beta()}, {"tile", t}};
}

SamplingSet sampling_from_json(const nlohmann::json& j) {
  try {
    const GroupSpec g = group_from_json(j.at("group"));
    const double beta = j.at("beta").get<double>();
    if (!j.contains("tile")) return SamplingSet::preset(g, beta);
    return SamplingSet::with_tile(g, beta, box_from_json(j.at("tile")));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("sampling JSON: ") + e.what());
  }
}

}  // namespace stratprof
