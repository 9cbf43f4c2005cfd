#include "stratprof/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stratprof/errors.hpp"

namespace stratprof {

SequenceSnapshots::SequenceSnapshots(SamplingSet gs, std::vector<int> n, std::vector<CoefficientField> f)
    : sampling(std::move(gs)), n_values(std::move(n)), fields(std::move(f)) {
  validate();
  for (const auto& c : fields) K_bound = std::max(K_bound, sobolev_seq_norm(c));
  if (!std::isfinite(K_bound)) throw PreconditionError("sequence norm is not bounded");
}

void SequenceSnapshots::validate() const {
  if (fields.empty()) throw PreconditionError("sequence has no snapshots");
  if (n_values.size() != fields.size()) throw PreconditionError("n_values and fields differ in length");
  for (std::size_t i = 1; i < n_values.size(); ++i)
    if (n_values[i] <= n_values[i - 1]) throw PreconditionError("n_values must be strictly increasing");
  const Normalization norm = fields.front().normalization();
  if (norm.kind != Normalization::Kind::Lp) throw PreconditionError("snapshots must use Lp_atoms coefficients");
  for (const auto& c : fields) {
    if (!(c.normalization() == norm)) throw PreconditionError("snapshots mix normalizations");
    if (!(c.sampling() == sampling)) throw PreconditionError("snapshots mix sampling sets");
  }
}

ScaleCorePair track_pair(const SamplingSet& gs, const std::vector<AtomIndex>& track) {
  ScaleCorePair p;
  for (const auto& idx : track) {
    p.h.push_back(std::ldexp(1.0, -idx.j));
    p.kappa.push_back(gs.position(idx));
  }
  return p;
}

ScaleCorePair static_pair(const GroupSpec& g, std::size_t length) {
  return {std::vector<double>(length, 1.0), std::vector<Point>(length, g.identity())};
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::ScaleOrthogonal:
      return "ScaleOrthogonal";
    case Verdict::CoreOrthogonal:
      return "CoreOrthogonal";
    case Verdict::NotOrthogonal:
      return "NotOrthogonal";
    case Verdict::Undecided:
      return "Undecided";
  }
  return "Undecided";
}

namespace {

bool nondecreasing_and_growing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[i - 1]) return false;
  return v.back() > v.front();
}

}  // namespace

Classification classify_pair(const GroupSpec& g, const ScaleCorePair& a, const ScaleCorePair& b,
                             const ClassifyParams& params) {
  if (a.size() != b.size() || a.kappa.size() != a.size() || b.kappa.size() != b.size())
    throw PreconditionError("classify_pair: tracks have different lengths");
  if (params.tail < 2 || a.size() < params.tail)
    throw PreconditionError("classify_pair: horizon " + std::to_string(a.size()) + " is shorter than tail " +
                            std::to_string(params.tail));
  const std::size_t t0 = a.size() - params.tail;
  std::vector<double> gap, core;
  std::vector<Point> rel;
  for (std::size_t t = t0; t < a.size(); ++t) {
    gap.push_back(std::log2(a.h[t] / b.h[t]));
    const Point diff = g.multiply(g.inverse(a.kappa[t]), b.kappa[t]);
    rel.push_back(g.dilate(1.0 / b.h[t], diff));
    core.push_back(g.norm(diff) / std::min(a.h[t], b.h[t]));
  }
  Classification c;
  c.final_gap = gap.back();
  c.final_core_distance = core.back();
  const auto [gmin, gmax] = std::minmax_element(gap.begin(), gap.end());
  const bool gap_constant = *gmax - *gmin <= params.eps_stable;
  double rel_spread = 0.0;
  for (const auto& r : rel) rel_spread = std::max(rel_spread, max_abs_diff(r, rel.back()));

  if (gap_constant && rel_spread <= params.eps_stable) {
    c.verdict = Verdict::NotOrthogonal;
    c.j_tilde = static_cast<int>(std::lround(gap.back()));
    c.gamma_tilde = rel.back();
    return c;
  }
  std::vector<double> abs_gap(gap.size());
  std::transform(gap.begin(), gap.end(), abs_gap.begin(), [](double v) { return std::abs(v); });
  if (nondecreasing_and_growing(abs_gap) && abs_gap.back() > params.T_div) {
    c.verdict = Verdict::ScaleOrthogonal;
    return c;
  }
  if (gap_constant && nondecreasing_and_growing(core) && core.back() > params.T_div) {
    c.verdict = Verdict::CoreOrthogonal;
    return c;
  }
  c.verdict = Verdict::Undecided;
  return c;
}

void to_json(nlohmann::json& j, const ExtractParams& p) {
  j = {{"M_max", p.M_max},       {"L_max", p.L_max},           {"eps_conv", p.eps_conv}, {"T_div", p.T_div},
       {"eps_stable", p.eps_stable}, {"tail", p.tail}, {"mode", p.strict ? "strict" : "exploratory"}};
}

ExtractParams extract_params_from_json(const nlohmann::json& j) {
  try {
    ExtractParams p;
    p.M_max = j.value("M_max", p.M_max);
    p.L_max = j.value("L_max", p.L_max);
    p.eps_conv = j.value("eps_conv", p.eps_conv);
    p.T_div = j.value("T_div", p.T_div);
    p.eps_stable = j.value("eps_stable", p.eps_stable);
    p.tail = j.value("tail", p.tail);
    const auto mode = j.value("mode", std::string("strict"));
    if (mode != "strict" && mode != "exploratory") throw FormatError("mode must be strict or exploratory");
    p.strict = mode == "strict";
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("params JSON: ") + e.what());
  }
}

double Profile::energy() const {
  double s = 0.0;
  for (const auto& a : atoms) s += std::norm(a.d);
  return s;
}

namespace {

// Index of atom (j~, gamma~) placed relative to the core lambda = (j, gamma).
std::optional<AtomIndex> place(const SamplingSet& gs, const AtomIndex& core, const ProfileAtom& a) {
  if (a.j_tilde >= 0 && a.gamma_tilde_lattice)
    return AtomIndex{core.j + a.j_tilde, gs.multiply(gs.dilate2(core.gamma, a.j_tilde), *a.gamma_tilde_lattice)};
  const GroupSpec& g = gs.group();
  const Point x = g.multiply(g.dilate(std::ldexp(1.0, a.j_tilde), gs.decode(core.gamma)), a.gamma_tilde);
  const auto lat = gs.encode(x);
  if (!lat) return std::nullopt;
  return AtomIndex{core.j + a.j_tilde, *lat};
}

CoefficientField placed_profile(const ProfileDecomposition& d, const SequenceSnapshots& s, std::size_t t, int l,
                                int M) {
  CoefficientField f(s.sampling, s.fields[t].normalization());
  const Profile& p = d.profiles[l];
  for (const auto& a : p.atoms) {
    if (a.rank > M) continue;
    if (auto idx = place(s.sampling, p.core_track[t], a)) f.add(*idx, a.d);
  }
  return f;
}

CoefficientField observed_bundle(const ProfileDecomposition& d, const std::vector<RankedEntry>& ranked,
                                 const SequenceSnapshots& s, std::size_t t, int l, int M) {
  CoefficientField f(s.sampling, s.fields[t].normalization());
  for (int m : ranks_of(d, l, M)) f.add(ranked[m - 1].index, ranked[m - 1].d);
  return f;
}

double l2(const CoefficientField& c) { return sobolev_seq_norm(c, Exec::Serial); }

}  // namespace

std::vector<int> ranks_of(const ProfileDecomposition& d, int profile, int M) {
  std::vector<int> out;
  for (int m = 1; m <= std::min<int>(M, static_cast<int>(d.owner.size())); ++m)
    if (d.owner[m - 1] == profile) out.push_back(m);
  return out;
}

CoefficientField remainder_field(const ProfileDecomposition& d, const SequenceSnapshots& s, std::size_t t, int L) {
  CoefficientField r = s.fields.at(t);
  for (int l = 0; l < L; ++l) r = r.minus(placed_profile(d, s, t, l, d.params.M_max));
  return r;
}

namespace {

std::pair<CoefficientField, CoefficientField> split_fields(const ProfileDecomposition& d, const SequenceSnapshots& s,
                                                           std::size_t t, int L, int M) {
  if (L < 0 || L > static_cast<int>(d.profiles.size())) throw RangeError("remainder split: L out of range");
  if (M < L || M > d.params.M_max) throw RangeError("remainder split needs L <= M <= M_max");
  const auto ranked = reorder(s.fields.at(t));
  const Normalization norm = s.fields[t].normalization();
  CoefficientField r1(s.sampling, norm), r2(s.sampling, norm);
  for (int l = 0; l < static_cast<int>(d.profiles.size()); ++l) {
    const CoefficientField bundle = observed_bundle(d, ranked, s, t, l, M);
    if (l < L) {
      // (P^M_l - P_l) + (observed bundle - P^M_l)
      r1 = r1.plus(placed_profile(d, s, t, l, M).minus(placed_profile(d, s, t, l, d.params.M_max)));
      r1 = r1.plus(bundle.minus(placed_profile(d, s, t, l, M)));
    } else {
      r2 = r2.plus(bundle);
    }
  }
  CoefficientField tail(s.sampling, norm);
  for (std::size_t i = static_cast<std::size_t>(M); i < ranked.size(); ++i) tail.add(ranked[i].index, ranked[i].d);
  r2 = r2.plus(tail);
  return {r1, r2};
}

}  // namespace

CoefficientField remainder_total(const ProfileDecomposition& d, const SequenceSnapshots& s, std::size_t t, int L,
                                 int M) {
  auto [r1, r2] = split_fields(d, s, t, L, M);
  return r1.plus(r2);
}

RemainderSplit remainder_split(const ProfileDecomposition& d, const SequenceSnapshots& s, std::size_t t, int L,
                               int M) {
  auto [r1, r2] = split_fields(d, s, t, L, M);
  RemainderSplit out;
  out.r1_norm_Hs = l2(r1);
  out.r2_norm_Hs = l2(r2);
  out.r2_norm_Lp_proxy = lp_proxy_norm(r2, s.p(), Exec::Serial);
  const CoefficientField r = remainder_field(d, s, t, L);
  out.reconstruction_error = l2(r1.plus(r2).minus(r));
  const double scale = std::max(1.0, l2(s.fields[t]));
  if (out.reconstruction_error > 1e-10 * scale)
    throw InternalError("r1 + r2 does not reconstruct r_{n,L} (error " + std::to_string(out.reconstruction_error) +
                        ")");
  return out;
}

std::vector<double> energy_check(const ProfileDecomposition& d, const SequenceSnapshots& s, int L) {
  if (L < 0 || L > static_cast<int>(d.profiles.size())) throw RangeError("energy_check: L exceeds the profile count");
  double prof = 0.0;
  for (int l = 0; l < L; ++l) prof += d.profiles[l].energy();
  std::vector<double> out;
  for (std::size_t t = 0; t < s.horizon(); ++t) {
    const double u = std::pow(l2(s.fields[t]), 2);
    const double r = std::pow(l2(remainder_field(d, s, t, L)), 2);
    out.push_back(std::abs(u - prof - r));
  }
  return out;
}

ProfileDecomposition extract(const SequenceSnapshots& s, const ExtractParams& params) {
  s.validate();
  const GroupSpec& g = s.sampling.group();
  const std::size_t H = s.horizon();
  if (params.M_max < 1) throw PreconditionError("M_max must be >= 1");
  if (params.tail < 2 || params.tail > H)
    throw PreconditionError("tail must lie in [2, horizon]; horizon is " + std::to_string(H));
  std::size_t min_card = s.fields.front().size();
  for (const auto& f : s.fields) min_card = std::min(min_card, f.size());
  if (static_cast<std::size_t>(params.M_max) > min_card)
    throw PreconditionError("M_max = " + std::to_string(params.M_max) + " exceeds the smallest snapshot size " +
                            std::to_string(min_card));

  ProfileDecomposition d;
  d.params = params;
  d.K_bound = s.K_bound;
  const int M = params.M_max;

  std::vector<std::vector<RankedEntry>> ranked(H);
  for (std::size_t t = 0; t < H; ++t) ranked[t] = reorder(s.fields[t]);

  // limits d_m: tail mean with a Cauchy radius check
  for (int m = 1; m <= M; ++m) {
    std::complex<double> mean{};
    for (std::size_t t = H - params.tail; t < H; ++t) mean += ranked[t][m - 1].d;
    mean /= static_cast<double>(params.tail);
    double radius = 0.0;
    for (std::size_t t = H - params.tail; t < H; ++t) radius = std::max(radius, std::abs(ranked[t][m - 1].d - mean));
    if (radius > params.eps_conv)
      throw NonconvergentCoefficient("coefficient of rank " + std::to_string(m) + " does not settle over the tail (radius " +
                                         std::to_string(radius) + ")",
                                     m);
    d.limits.push_back(mean);
    d.limit_radius.push_back(radius);
  }

  auto track_of = [&](int m) {
    std::vector<AtomIndex> tr(H);
    for (std::size_t t = 0; t < H; ++t) tr[t] = ranked[t][m - 1].index;
    return tr;
  };
  std::vector<ScaleCorePair> core_pairs;

  auto open_profile = [&](int m, bool flagged) {
    Profile p;
    p.core_track = track_of(m);
    ProfileAtom a;
    a.rank = m;
    a.gamma_tilde = g.identity();
    a.gamma_tilde_lattice = LatticeCoords(g.dimension(), 0);
    a.d = d.limits[m - 1];
    p.atoms.push_back(std::move(a));
    p.ranks.push_back(m);
    p.flagged = flagged;
    core_pairs.push_back(track_pair(s.sampling, p.core_track));
    d.profiles.push_back(std::move(p));
    d.owner.push_back(static_cast<int>(d.profiles.size()) - 1);
  };

  open_profile(1, false);
  d.log.push_back({1, {}, 0, true, false});
  d.nu.push_back(1);

  const ClassifyParams cp = params.classify();
  for (int i = 2; i <= M; ++i) {
    const auto tr = track_of(i);
    const ScaleCorePair pair = track_pair(s.sampling, tr);
    RankLog entry;
    entry.rank = i;
    int absorb = -1;
    bool all_orthogonal = true;
    int undecided_with = -1;
    for (std::size_t l = 0; l < d.profiles.size(); ++l) {
      const Classification c = classify_pair(g, core_pairs[l], pair, cp);
      entry.against.push_back(c);
      if (c.verdict == Verdict::NotOrthogonal && absorb < 0) absorb = static_cast<int>(l);
      if (c.verdict == Verdict::Undecided) {
        all_orthogonal = false;
        if (undecided_with < 0) undecided_with = static_cast<int>(l);
      }
      if (c.verdict == Verdict::NotOrthogonal) all_orthogonal = false;
    }
    if (absorb >= 0) {
      const Classification& c = entry.against[absorb];
      Profile& p = d.profiles[absorb];
      ProfileAtom a;
      a.rank = i;
      a.j_tilde = c.j_tilde;
      a.gamma_tilde = c.gamma_tilde;
      if (c.j_tilde >= 0) {
        const AtomIndex& core = p.core_track.back();
        a.gamma_tilde_lattice = s.sampling.multiply(s.sampling.inverse(s.sampling.dilate2(core.gamma, c.j_tilde)),
                                                    tr.back().gamma);
      } else {
        a.gamma_tilde_lattice = s.sampling.encode(c.gamma_tilde);
      }
      a.d = d.limits[i - 1];
      p.atoms.push_back(std::move(a));
      p.ranks.push_back(i);
      d.owner.push_back(absorb);
      entry.assigned = absorb;
    } else if (all_orthogonal) {
      open_profile(i, false);
      entry.assigned = static_cast<int>(d.profiles.size()) - 1;
      entry.opened = true;
    } else {
      if (params.strict) {
        throw UndecidableOrthogonality("rank " + std::to_string(i) + " is undecided against profile " +
                                           std::to_string(undecided_with + 1) + " (final gap " +
                                           std::to_string(entry.against[undecided_with].final_gap) +
                                           ", core distance " +
                                           std::to_string(entry.against[undecided_with].final_core_distance) + ")",
                                       i, undecided_with + 1);
      }
      open_profile(i, true);
      entry.assigned = static_cast<int>(d.profiles.size()) - 1;
      entry.opened = true;
      entry.flagged = true;
      d.diagnostics.push_back("rank " + std::to_string(i) + " opened a flagged profile after an undecided verdict");
    }
    d.log.push_back(std::move(entry));
    d.nu.push_back(static_cast<int>(d.profiles.size()));
  }

  const ScaleCorePair still = static_pair(g, H);
  for (std::size_t l = 0; l < d.profiles.size(); ++l) {
    auto& p = d.profiles[l];
    p.escape = classify_pair(g, still, core_pairs[l], cp).verdict;
    for (const auto& a : p.atoms) {
      if (!a.gamma_tilde_lattice)
        d.diagnostics.push_back("profile " + std::to_string(l + 1) + ": atom of rank " + std::to_string(a.rank) +
                                " has no lattice placement; it is carried by the drift term");
    }
  }

  const int L_top = std::min<int>(params.L_max, static_cast<int>(d.profiles.size()));
  for (std::size_t t = 0; t < H; ++t) {
    const double u = std::pow(l2(s.fields[t]), 2);
    double prof = 0.0;
    for (int L = 0; L <= L_top; ++L) {
      if (L > 0) prof += d.profiles[L - 1].energy();
      const double r = std::pow(l2(remainder_field(d, s, t, L)), 2);
      const double defect = std::abs(u - prof - r);
      d.energy.push_back({s.n_values[t], L, u, prof, r, defect});
      if (L == L_top) d.max_defect = std::max(d.max_defect, defect);
      if (L <= M) d.remainders.push_back({s.n_values[t], L, M, remainder_split(d, s, t, L, M)});
    }
  }
  return d;
}

BookkeepingReport check_bookkeeping(const ProfileDecomposition& d) {
  BookkeepingReport r;
  const int M = static_cast<int>(d.owner.size());
  const int P = static_cast<int>(d.profiles.size());
  for (int m = 1; m <= M; ++m) {
    std::vector<int> seen(m, 0);
    for (int l = 0; l < P; ++l)
      for (int k : ranks_of(d, l, m)) {
        if (k < 1 || k > m) {
          r.partition_ok = false;
          r.failures.push_back("E(l, M) has a rank outside [1, M]");
        } else {
          ++seen[k - 1];
        }
      }
    for (int k = 0; k < m; ++k)
      if (seen[k] != 1) {
        r.partition_ok = false;
        r.failures.push_back("rank " + std::to_string(k + 1) + " is owned " + std::to_string(seen[k]) +
                             " times at M = " + std::to_string(m));
      }
    if (m < M) {
      for (int l = 0; l < P; ++l) {
        const auto a = ranks_of(d, l, m), b = ranks_of(d, l, m + 1);
        if (!std::includes(b.begin(), b.end(), a.begin(), a.end())) {
          r.nested_ok = false;
          r.failures.push_back("E(l, M) is not contained in E(l, M+1)");
        }
      }
    }
  }
  for (std::size_t i = 1; i < d.nu.size(); ++i) {
    const int step = d.nu[i] - d.nu[i - 1];
    if (step != 0 && step != 1) {
      r.nu_steps_ok = false;
      r.failures.push_back("nu jumps by " + std::to_string(step));
    }
  }
  // profile ranks and owner agree
  for (int l = 0; l < P; ++l)
    if (ranks_of(d, l, M) != d.profiles[l].ranks) {
      r.partition_ok = false;
      r.failures.push_back("profile " + std::to_string(l + 1) + " rank list disagrees with the owner table");
    }
  return r;
}

void to_json(nlohmann::json& j, const Classification& c) {
  j = {{"verdict", to_string(c.verdict)}, {"final_gap", c.final_gap}, {"final_core_distance", c.final_core_distance}};
  if (c.verdict == Verdict::NotOrthogonal) {
    j["j_tilde"] = c.j_tilde;
    j["gamma_tilde"] = c.gamma_tilde.coords;
  }
}

namespace {

nlohmann::json complex_json(std::complex<double> z) { return {{"re", z.real()}, {"im", z.imag()}}; }

}  // namespace

void to_json(nlohmann::json& j, const ProfileDecomposition& d) {
  nlohmann::json params;
  to_json(params, d.params);
  nlohmann::json profiles = nlohmann::json::array();
  for (const auto& p : d.profiles) {
    nlohmann::json atoms = nlohmann::json::array();
    for (const auto& a : p.atoms) {
      nlohmann::json o = {{"rank", a.rank}, {"j_tilde", a.j_tilde}, {"gamma_tilde", a.gamma_tilde.coords},
                          {"d", complex_json(a.d)}};
      if (a.gamma_tilde_lattice) o["gamma_tilde_lattice"] = *a.gamma_tilde_lattice;
      atoms.push_back(std::move(o));
    }
    nlohmann::json track = nlohmann::json::array();
    for (const auto& idx : p.core_track) track.push_back({{"j", idx.j}, {"gamma", idx.gamma}});
    profiles.push_back({{"atoms", atoms},
                        {"core_track", track},
                        {"ranks", p.ranks},
                        {"energy", p.energy()},
                        {"escape", to_string(p.escape)},
                        {"flagged", p.flagged}});
  }
  nlohmann::json limits = nlohmann::json::array();
  for (std::size_t m = 0; m < d.limits.size(); ++m) {
    auto o = complex_json(d.limits[m]);
    o["rank"] = m + 1;
    o["radius"] = d.limit_radius[m];
    limits.push_back(std::move(o));
  }
  nlohmann::json log = nlohmann::json::array();
  for (const auto& e : d.log) {
    nlohmann::json against = nlohmann::json::array();
    for (const auto& c : e.against) {
      nlohmann::json cj;
      to_json(cj, c);
      against.push_back(std::move(cj));
    }
    log.push_back({{"rank", e.rank}, {"assigned", e.assigned + 1}, {"opened", e.opened}, {"flagged", e.flagged},
                   {"against", against}});
  }
  nlohmann::json energy = nlohmann::json::array();
  for (const auto& e : d.energy)
    energy.push_back({{"n", e.n}, {"L", e.L}, {"u_sq", e.u_sq}, {"profiles_sq", e.profiles_sq},
                      {"remainder_sq", e.remainder_sq}, {"defect", e.defect}});
  nlohmann::json rem = nlohmann::json::array();
  for (const auto& r : d.remainders)
    rem.push_back({{"n", r.n}, {"L", r.L}, {"M", r.M}, {"r1_norm_Hs", r.split.r1_norm_Hs},
                   {"r2_norm_Lp_proxy", r.split.r2_norm_Lp_proxy}, {"r2_norm_Hs", r.split.r2_norm_Hs},
                   {"reconstruction_error", r.split.reconstruction_error}});
  j = {{"parameters", params},
       {"profile_count", d.profiles.size()},
       {"profiles", profiles},
       {"limits", limits},
       {"nu", d.nu},
       {"classification_log", log},
       {"energy_ledger", energy},
       {"remainder_ledger", rem},
       {"diagnostics", {{"K_bound", d.K_bound}, {"max_energy_defect", d.max_defect}, {"notes", d.diagnostics}}}};
}

}  // namespace stratprof
