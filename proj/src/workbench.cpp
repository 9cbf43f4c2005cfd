#include "stratprof/workbench.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "stratprof/errors.hpp"

namespace stratprof {

std::string to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::Translating:
      return "translating";
    case GeneratorKind::Concentrating:
      return "concentrating";
    case GeneratorKind::Spreading:
      return "spreading";
    case GeneratorKind::Compact:
      return "compact";
    case GeneratorKind::Mixture:
      return "mixture";
  }
  return "compact";
}

GeneratorKind generator_kind_from_string(const std::string& s) {
  if (s == "translating") return GeneratorKind::Translating;
  if (s == "concentrating") return GeneratorKind::Concentrating;
  if (s == "spreading") return GeneratorKind::Spreading;
  if (s == "compact") return GeneratorKind::Compact;
  if (s == "mixture") return GeneratorKind::Mixture;
  throw FormatError("unknown generator kind '" + s + "'");
}

AtomIndex Track::at(int n) const {
  AtomIndex idx{j0 + j1 * n, LatticeCoords(g0.size())};
  for (std::size_t i = 0; i < g0.size(); ++i) idx.gamma[i] = g0[i] + (i < g1.size() ? g1[i] : 0) * n;
  return idx;
}

std::vector<BundleAtom> default_bundle(const GroupSpec& g, int size, double top, double ratio) {
  if (size < 1) throw GeneratorError("bundle size must be >= 1");
  if (!(ratio > 0.0 && ratio < 1.0)) throw GeneratorError("bundle ratio must lie in (0, 1)");
  std::vector<BundleAtom> b;
  for (int k = 0; k < size; ++k) {
    BundleAtom a;
    a.j_tilde = k % 3;
    a.gamma_tilde.assign(g.dimension(), 0);
    a.gamma_tilde[0] = k / 3;
    if (g.dimension() > 1) a.gamma_tilde[1] = k % 2;
    a.d = std::polar(top * std::pow(ratio, k), 0.3 * k);
    b.push_back(std::move(a));
  }
  return b;
}

Track default_track(GeneratorKind kind, const GroupSpec& g) {
  Track t;
  t.g0.assign(g.dimension(), 0);
  t.g1.assign(g.dimension(), 0);
  switch (kind) {
    case GeneratorKind::Translating:
      t.g1[0] = 4;
      break;
    case GeneratorKind::Concentrating:
      t.j1 = 1;
      break;
    case GeneratorKind::Spreading:
      t.j1 = -1;
      break;
    case GeneratorKind::Compact:
    case GeneratorKind::Mixture:
      break;
  }
  return t;
}

GeneratedSequence generate(const GeneratorSpec& spec, const SamplingSet& gs) {
  const GroupSpec& g = gs.group();
  if (spec.horizon < 2) throw GeneratorError("horizon must be >= 2");
  if (spec.components.empty()) throw GeneratorError("generator has no components");
  if (spec.kind != GeneratorKind::Mixture && spec.components.size() != 1)
    throw GeneratorError("only mixtures may have more than one component");
  for (const auto& c : spec.components) {
    if (static_cast<int>(c.track.g0.size()) != g.dimension() || static_cast<int>(c.track.g1.size()) != g.dimension())
      throw GeneratorError("track dimension does not match the group");
    std::set<std::pair<int, LatticeCoords>> seen;
    for (const auto& a : c.bundle) {
      if (a.j_tilde < 0) throw GeneratorError("bundle atoms need j~ >= 0 for exact lattice placement");
      if (static_cast<int>(a.gamma_tilde.size()) != g.dimension())
        throw GeneratorError("bundle atom dimension does not match the group");
      if (!seen.insert({a.j_tilde, a.gamma_tilde}).second) throw GeneratorError("bundle repeats a relative index");
    }
  }
  const Normalization norm = Normalization::lp(spec.p);
  std::vector<int> n_values;
  std::vector<CoefficientField> fields;
  std::vector<std::vector<AtomIndex>> tracks(spec.components.size());
  for (int t = 0; t < spec.horizon; ++t) {
    const int n = spec.n0 + t;
    n_values.push_back(n);
    CoefficientField f(gs, norm);
    for (std::size_t c = 0; c < spec.components.size(); ++c) {
      const auto& comp = spec.components[c];
      const AtomIndex core = comp.track.at(n);
      tracks[c].push_back(core);
      for (const auto& a : comp.bundle) {
        const AtomIndex idx{core.j + a.j_tilde, gs.multiply(gs.dilate2(core.gamma, a.j_tilde), a.gamma_tilde)};
        if (f.get(idx)) {
          if (!spec.allow_overlap)
            throw GeneratorError("track collision at n = " + std::to_string(n) + ", j = " + std::to_string(idx.j));
          f.add(idx, a.d);
        } else {
          f.insert(idx, a.d);
        }
      }
    }
    if (spec.noise.count > 0 && spec.noise.floor > 0.0) {
      std::mt19937_64 rng(spec.noise.seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(n + 1)));
      std::uniform_int_distribution<int> jd(-2, 2);
      std::uniform_int_distribution<std::int64_t> gd(-64, 64);
      std::uniform_real_distribution<double> mod(0.5, 1.0), ph(0.0, 2.0 * M_PI);
      int placed = 0;
      for (int attempt = 0; placed < spec.noise.count && attempt < 64 * spec.noise.count; ++attempt) {
        AtomIndex idx{jd(rng), LatticeCoords(g.dimension())};
        for (auto& v : idx.gamma) v = gd(rng);
        const std::complex<double> d = std::polar(spec.noise.floor * mod(rng), ph(rng));
        if (f.get(idx)) continue;
        f.insert(idx, d);
        ++placed;
      }
    }
    fields.push_back(std::move(f));
  }

  GeneratedSequence out{SequenceSnapshots(gs, n_values, fields), tracks, {}, 0.0};
  double lo = 1e300, hi = 0.0;
  for (const auto& f : out.snapshots.fields) {
    const double v = sobolev_seq_norm(f);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  out.norm_spread = hi - lo;

  if (spec.kind == GeneratorKind::Mixture) {
    ClassifyParams cp = spec.check;
    cp.tail = std::min<std::size_t>(cp.tail, static_cast<std::size_t>(spec.horizon));
    for (std::size_t a = 0; a < tracks.size(); ++a)
      for (std::size_t b = a + 1; b < tracks.size(); ++b) {
        const Classification c = classify_pair(g, track_pair(gs, tracks[a]), track_pair(gs, tracks[b]), cp);
        out.pairwise.push_back(c);
        if (c.verdict != Verdict::ScaleOrthogonal && c.verdict != Verdict::CoreOrthogonal)
          throw GeneratorError("mixture components " + std::to_string(a + 1) + " and " + std::to_string(b + 1) +
                               " are not orthogonal over the tail (" + to_string(c.verdict) + ")");
      }
  }
  return out;
}

namespace {

Track track_from_json(const nlohmann::json& j, GeneratorKind kind, const GroupSpec& g) {
  Track t = default_track(kind, g);
  t.j0 = j.value("j0", t.j0);
  t.j1 = j.value("j1", t.j1);
  if (j.contains("g0")) t.g0 = j.at("g0").get<LatticeCoords>();
  if (j.contains("g1")) t.g1 = j.at("g1").get<LatticeCoords>();
  return t;
}

Component component_from_json(const nlohmann::json& j, GeneratorKind fallback, const GroupSpec& g) {
  Component c;
  c.kind = j.contains("kind") ? generator_kind_from_string(j.at("kind").get<std::string>()) : fallback;
  if (c.kind == GeneratorKind::Mixture) throw FormatError("a mixture component cannot itself be a mixture");
  if (j.contains("bundle")) {
    for (const auto& a : j.at("bundle"))
      c.bundle.push_back({a.at("j_tilde").get<int>(), a.at("gamma_tilde").get<LatticeCoords>(),
                          {a.at("re").get<double>(), a.value("im", 0.0)}});
  } else {
    const auto shape = j.value("shape", nlohmann::json::object());
    c.bundle = default_bundle(g, shape.value("size", 8), shape.value("top", 1.0), shape.value("ratio", 0.9));
  }
  c.track = j.contains("track") ? track_from_json(j.at("track"), c.kind, g) : default_track(c.kind, g);
  return c;
}

}  // namespace

GeneratorSpec generator_spec_from_json(const nlohmann::json& j, const GroupSpec& g) {
  try {
    GeneratorSpec s;
    s.kind = generator_kind_from_string(j.at("kind").get<std::string>());
    s.horizon = j.value("horizon", s.horizon);
    s.n0 = j.value("n0", s.n0);
    s.p = j.value("p", s.p);
    s.allow_overlap = j.value("allow_overlap", false);
    if (j.contains("noise")) {
      const auto& nz = j.at("noise");
      s.noise = {nz.value("floor", 0.0), nz.value("count", 0), nz.value("seed", std::uint64_t{0})};
    }
    if (j.contains("check")) {
      const auto& c = j.at("check");
      s.check = {c.value("tail", s.check.tail), c.value("T_div", s.check.T_div),
                 c.value("eps_stable", s.check.eps_stable)};
    }
    if (j.contains("components")) {
      for (const auto& c : j.at("components")) s.components.push_back(component_from_json(c, s.kind, g));
    } else {
      if (s.kind == GeneratorKind::Mixture) throw FormatError("a mixture needs a components list");
      s.components.push_back(component_from_json(j, s.kind, g));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("generator spec: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const GeneratorSpec& s) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : s.components) {
    nlohmann::json bundle = nlohmann::json::array();
    for (const auto& a : c.bundle)
      bundle.push_back({{"j_tilde", a.j_tilde}, {"gamma_tilde", a.gamma_tilde}, {"re", a.d.real()}, {"im", a.d.imag()}});
    comps.push_back({{"kind", to_string(c.kind)},
                     {"bundle", bundle},
                     {"track", {{"j0", c.track.j0}, {"j1", c.track.j1}, {"g0", c.track.g0}, {"g1", c.track.g1}}}});
  }
  j = {{"kind", to_string(s.kind)},
       {"horizon", s.horizon},
       {"n0", s.n0},
       {"p", s.p},
       {"allow_overlap", s.allow_overlap},
       {"noise", {{"floor", s.noise.floor}, {"count", s.noise.count}, {"seed", s.noise.seed}}},
       {"check", {{"tail", s.check.tail}, {"T_div", s.check.T_div}, {"eps_stable", s.check.eps_stable}}},
       {"components", comps}};
}

void write_snapshots_jsonl(std::ostream& os, const SequenceSnapshots& s) {
  nlohmann::json norm, gs;
  to_json(norm, s.fields.front().normalization());
  to_json(gs, s.sampling);
  os << nlohmann::json{{"format", "snapshots"}, {"version", 1}, {"normalization", norm}, {"sampling", gs},
                       {"n_values", s.n_values}}
            .dump()
     << '\n';
  for (std::size_t t = 0; t < s.horizon(); ++t)
    for (const auto& [k, v] : s.fields[t].entries())
      os << nlohmann::json{{"n", s.n_values[t]}, {"j", k.j}, {"gamma", k.gamma}, {"re", v.real()}, {"im", v.imag()}}
                .dump()
         << '\n';
}

SequenceSnapshots read_snapshots_jsonl(std::istream& is) {
  std::string text;
  std::size_t line = 1;
  if (!std::getline(is, text)) throw FormatError("empty snapshot file", 1);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what(), 1);
  }
  if (!header.is_object() || header.value("format", std::string{}) != "snapshots")
    throw FormatError("bad header: expected format \"snapshots\"", 1);
  if (!header.contains("normalization"))
    throw FormatError("header lacks a normalization tag (legacy format); add \"normalization\": {\"kind\":\"Lp\",\"p\":...}",
                      1);
  std::optional<SamplingSet> gs;
  Normalization norm;
  std::vector<int> n_values;
  try {
    if (header.value("version", 0) != 1) throw FormatError("unsupported snapshot version", 1);
    gs.emplace(sampling_from_json(header.at("sampling")));
    norm = normalization_from_json(header.at("normalization"));
    n_values = header.at("n_values").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad header: ") + e.what(), 1);
  } catch (const FormatError& e) {
    throw FormatError(e.what(), 1);
  } catch (const Error& e) {
    throw FormatError(std::string("bad header: ") + e.what(), 1);
  }
  std::vector<CoefficientField> fields(n_values.size(), CoefficientField(*gs, norm));
  std::map<int, std::size_t> slot;
  for (std::size_t i = 0; i < n_values.size(); ++i) slot[n_values[i]] = i;
  while (std::getline(is, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto o = nlohmann::json::parse(text);
      const int n = o.at("n").get<int>();
      auto it = slot.find(n);
      if (it == slot.end()) throw FormatError("n = " + std::to_string(n) + " is not listed in the header", line);
      if (o.at("re").is_null() || o.at("im").is_null()) throw FormatError("non-finite coefficient", line);
      fields[it->second].insert({o.at("j").get<int>(), o.at("gamma").get<LatticeCoords>()},
                                {o.at("re").get<double>(), o.at("im").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad entry: ") + e.what(), line);
    } catch (const FormatError&) {
      throw;
    } catch (const Error& e) {
      throw FormatError(e.what(), line);
    }
  }
  for (auto& f : fields) f.apply_floor();
  try {
    return SequenceSnapshots(*gs, n_values, fields);
  } catch (const Error& e) {
    throw FormatError(std::string("invalid snapshot sequence: ") + e.what());
  }
}

std::pair<GroupSpec, ScaleCorePair> read_pair_json(const nlohmann::json& j) {
  try {
    if (j.contains("track")) {
      const SamplingSet gs = sampling_from_json(j.at("sampling"));
      std::vector<AtomIndex> tr;
      for (const auto& e : j.at("track")) tr.push_back({e.at("j").get<int>(), e.at("gamma").get<LatticeCoords>()});
      return {gs.group(), track_pair(gs, tr)};
    }
    const GroupSpec g = group_from_json(j.at("group"));
    ScaleCorePair p;
    p.h = j.at("h").get<std::vector<double>>();
    for (const auto& k : j.at("kappa")) {
      Point x(k.get<std::vector<double>>());
      g.check_layout(x);
      p.kappa.push_back(std::move(x));
    }
    if (p.h.size() != p.kappa.size()) throw FormatError("h and kappa differ in length");
    for (double h : p.h)
      if (!(h > 0.0) || !std::isfinite(h)) throw FormatError("scales must be positive and finite");
    return {g, p};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("pair JSON: ") + e.what());
  } catch (const LayoutError& e) {
    throw FormatError(std::string("pair JSON: ") + e.what());
  }
}

namespace {

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

}  // namespace

SequenceSnapshots ingest_snapshots(const std::string& path) {
  auto in = open_in(path);
  return read_snapshots_jsonl(in);
}

CoefficientField ingest_field(const std::string& path) {
  auto in = open_in(path);
  return read_field_jsonl(in);
}

GridFunction ingest_grid(const std::string& path) {
  if (path.size() > 6 && path.substr(path.size() - 6) == ".jsonl") {
    auto in = open_in(path);
    return read_grid_jsonl(in);
  }
  auto in = open_in(path, true);
  return read_grid_binary(in);
}

std::string sha256_bytes(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string sha256_file(const std::string& path) {
  auto in = open_in(path, true);
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_bytes(ss.str());
}

nlohmann::json make_report(const std::string& command, const nlohmann::json& parameters,
                           const std::vector<std::pair<std::string, std::string>>& input_files,
                           const nlohmann::json& body) {
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& [role, path] : input_files)
    inputs[role] = {{"file", std::filesystem::path(path).filename().string()}, {"sha256", sha256_file(path)}};
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ts;
  ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return {{"tool", "stratprof"},
          {"command", command},
          {"format_version", 1},
          {"parameters", parameters},
          {"inputs", inputs},
          {"result", body},
          {"timestamp", ts.str()}};
}

nlohmann::json strip_timestamp(nlohmann::json report) {
  report.erase("timestamp");
  return report;
}

}  // namespace stratprof
