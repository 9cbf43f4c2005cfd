#include <doctest.h>

#include <cmath>
#include <random>

#include "stratprof/errors.hpp"
#include "stratprof/sampling.hpp"

using namespace stratprof;

namespace {

// brute force sum over |gamma| <= K of 1/(1+|gamma|)^n, plus the integral tail 2/(n-1)(1+K)^{1-n}
double brute_1d(int n, std::int64_t K) {
  double s = 1.0;
  for (std::int64_t g = K; g >= 1; --g) s += 2.0 / std::pow(1.0 + static_cast<double>(g), n);
  return s;
}

}  // namespace

TEST_CASE("preset lattices") {
  const auto a1 = SamplingSet::preset(GroupSpec::abelian(1), 1.0);
  CHECK(a1.tile().lo == std::vector<double>{0.0});
  CHECK(a1.tile().hi == std::vector<double>{1.0});
  CHECK(a1.decode({3}) == Point{3.0});

  const auto h = SamplingSet::preset(GroupSpec::heisenberg(1), 1.0);
  // (1,0,0).(0,1,0) = (1,1,1/2), lattice coordinates (1,1,1)
  const auto prod = h.multiply({1, 0, 0}, {0, 1, 0});
  CHECK(prod == LatticeCoords{1, 1, 1});
  CHECK(h.decode(prod) == Point{1, 1, 0.5});
  // delta_2 (1,1,1/2) = (2,2,2)
  CHECK(h.decode(h.dilate2(prod, 1)) == Point{2, 2, 2});
  CHECK(h.encode(Point{2, 2, 2}) == LatticeCoords{2, 2, 4});
  CHECK_FALSE(h.encode(Point{0.5, 0, 0}).has_value());

  std::vector<LawTerm> terms{{2, 0.5, {1, 0, 0}, {0, 1, 0}}, {2, -0.5, {0, 1, 0}, {1, 0, 0}}};
  CHECK_THROWS_AS(SamplingSet::preset(GroupSpec::custom({2, 1}, terms), 1.0), UnsupportedError);
}

TEST_CASE("lattice closure is exact") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::int64_t> u(-50, 50);
  for (double beta : {1.0, 0.5, 0.75}) {
    const auto gs = SamplingSet::preset(GroupSpec::heisenberg(1), beta);
    const auto& g = gs.group();
    for (int i = 0; i < 100; ++i) {
      LatticeCoords a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)};
      const Point prod = g.multiply(gs.decode(a), gs.decode(b));
      const auto enc = gs.encode(prod);
      REQUIRE(enc.has_value());
      CHECK(*enc == gs.multiply(a, b));
      const auto d2 = gs.encode(g.dilate(2.0, gs.decode(a)));
      REQUIRE(d2.has_value());
      CHECK(*d2 == gs.dilate2(a, 1));
      CHECK(gs.multiply(a, gs.inverse(a)) == LatticeCoords{0, 0, 0});
    }
  }
}

TEST_CASE("enumerate") {
  const auto a1 = SamplingSet::preset(GroupSpec::abelian(1), 1.0);
  auto got = enumerate(a1, 0, Box{{0.0}, {3.0}});
  REQUIRE(got.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(got[i].gamma == LatticeCoords{i});
  got = enumerate(a1, 1, Box{{0.0}, {1.0}});
  REQUIRE(got.size() == 2);
  CHECK(a1.position(got[1]) == Point{0.5});
  CHECK(enumerate(a1, 0, Box{{1.0}, {1.0}}).empty());

  const auto h = SamplingSet::preset(GroupSpec::heisenberg(1), 1.0);
  const Box box{{-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}};
  const auto e1 = enumerate(h, 1, box), e2 = enumerate(h, 1, box);
  CHECK(e1 == e2);
  // 4 x 4 x 16 lattice points at scale 1/2 in the box
  CHECK(e1.size() == 4 * 4 * 16);
  CHECK(std::is_sorted(e1.begin(), e1.end()));
}

TEST_CASE("reduce lands in the tile") {
  const auto h = SamplingSet::preset(GroupSpec::heisenberg(1), 0.5);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-7, 7);
  for (int i = 0; i < 500; ++i) {
    const Point x{u(rng), u(rng), u(rng)};
    const auto [gamma, w] = h.reduce(x);
    CHECK(h.tile().contains(w));
    CHECK(max_abs_diff(h.group().multiply(h.decode(gamma), w), x) <= 1e-12);
  }
}

TEST_CASE("tiling reports") {
  const auto a2 = SamplingSet::preset(GroupSpec::abelian(2), 1.0);
  auto r = verify_tiling(a2, Box{{-2, -2}, {2, 2}}, 32);
  CHECK(r.max_overlap_fraction == 0.0);
  CHECK(r.uncovered_fraction == 0.0);

  const auto h = SamplingSet::preset(GroupSpec::heisenberg(1), 1.0);
  r = verify_tiling(h, Box{{-2, -2, -2}, {2, 2, 2}}, 64);
  CHECK(r.samples == 64u * 64u * 64u);
  CHECK(r.max_overlap_fraction == 0.0);
  CHECK(r.uncovered_fraction == 0.0);
  const auto rs = verify_tiling(h, Box{{-2, -2, -2}, {2, 2, 2}}, 16, Exec::Serial);
  const auto rp = verify_tiling(h, Box{{-2, -2, -2}, {2, 2, 2}}, 16, Exec::Parallel);
  CHECK(rs.max_overlap_fraction == rp.max_overlap_fraction);

  // doubled along one axis: every point lies in two translates
  const auto doubled = SamplingSet::with_tile(GroupSpec::abelian(2), 1.0, Box{{0, 0}, {2, 1}});
  r = verify_tiling(doubled, Box{{-2, -2}, {2, 2}}, 32);
  CHECK(r.max_overlap_fraction == doctest::Approx(0.5));
  CHECK(r.uncovered_fraction == 0.0);
  // halved: half the samples uncovered
  const auto halved = SamplingSet::with_tile(GroupSpec::abelian(2), 1.0, Box{{0, 0}, {0.5, 1}});
  r = verify_tiling(halved, Box{{-2, -2}, {2, 2}}, 32);
  CHECK(r.uncovered_fraction == doctest::Approx(0.5));
}

TEST_CASE("column decay certificate") {
  const auto a1 = SamplingSet::preset(GroupSpec::abelian(1), 1.0);
  const auto c = column_decay_certificate(a1, 0, 0, 2, Point{0.0});
  CHECK(c.hypothesis_ok);
  // n = 2 decays too slowly for the 1e-14 tail criterion; the integral tail carries the rest
  CHECK(c.tail_estimate > 0.0);
  const double closed = 2.0 * M_PI * M_PI / 6.0 - 1.0;
  CHECK(std::abs(c.value - closed) <= 1e-9 * closed);
  CHECK(std::abs(brute_1d(2, 2'000'000) + 2.0 / 2'000'001.0 - closed) <= 1e-9);

  // lattice translation invariance at eta = j
  const auto shifted = column_decay_certificate(a1, 0, 0, 2, Point{3.0});
  CHECK(std::abs(shifted.value - c.value) <= 1e-12 * c.value);

  const auto h = SamplingSet::preset(GroupSpec::heisenberg(1), 1.0);
  const Point x{0.3, -0.2, 0.1};
  const auto top = column_decay_certificate(h, 2, 2, 5, x);
  CHECK(top.hypothesis_ok);
  double lo = top.value, hi = top.value;
  for (int eta = -3; eta <= 2; ++eta) {
    const auto r = column_decay_certificate(h, eta, 2, 5, x);
    CHECK(std::isfinite(r.value));
    lo = std::min(lo, r.value);
    hi = std::max(hi, r.value);
  }
  CHECK(hi / lo < 100.0);

  const auto bad = column_decay_certificate(h, 0, 0, 4, x);
  CHECK_FALSE(bad.hypothesis_ok);
  CHECK_FALSE(bad.warning.empty());
  CHECK_THROWS_AS(column_decay_certificate(h, 3, 2, 5, x), DomainError);

  const auto ser = column_decay_certificate(h, 0, 1, 5, x, Exec::Serial);
  const auto par = column_decay_certificate(h, 0, 1, 5, x, Exec::Parallel);
  CHECK(std::abs(ser.value - par.value) <= 1e-12 * ser.value);
}

TEST_CASE("sampling JSON round trip") {
  const auto h = SamplingSet::preset(GroupSpec::heisenberg(1), 0.5);
  nlohmann::json j = h;
  CHECK(sampling_from_json(j) == h);
}
