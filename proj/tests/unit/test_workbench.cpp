#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stratprof/errors.hpp"
#include "stratprof/workbench.hpp"

using namespace stratprof;

namespace {

std::vector<double> moduli(const CoefficientField& f) {
  std::vector<double> m;
  for (const auto& [k, v] : f.entries()) m.push_back(std::abs(v));
  std::sort(m.begin(), m.end());
  return m;
}

GeneratorSpec single(GeneratorKind kind, const GroupSpec& g, int size = 6) {
  GeneratorSpec s;
  s.kind = kind;
  s.components.push_back({kind, default_bundle(g, size), default_track(kind, g)});
  return s;
}

}  // namespace

TEST_CASE("translating generator on the line") {
  const auto gs = SamplingSet::preset(GroupSpec::abelian(1), 1.0);
  const auto out = generate(single(GeneratorKind::Translating, gs.group()), gs);
  REQUIRE(out.snapshots.horizon() == 16);
  const auto ref = moduli(out.snapshots.fields[0]);
  for (std::size_t t = 0; t < 16; ++t) {
    const int n = out.snapshots.n_values[t];
    CHECK(out.component_tracks[0][t].gamma == LatticeCoords{4 * n});
    CHECK(moduli(out.snapshots.fields[t]) == ref);
    // the top atom sits on the core
    CHECK(out.snapshots.fields[t].get({0, {4 * n}}).has_value());
  }
  CHECK(out.norm_spread <= 1e-14);
}

TEST_CASE("compact and concentrating generators") {
  const auto gs = SamplingSet::preset(GroupSpec::heisenberg(1), 1.0);
  const auto c = generate(single(GeneratorKind::Compact, gs.group()), gs);
  for (const auto& f : c.snapshots.fields) CHECK(f.entries() == c.snapshots.fields[0].entries());

  const auto k = generate(single(GeneratorKind::Concentrating, gs.group()), gs);
  for (std::size_t t = 0; t < k.snapshots.horizon(); ++t) CHECK(k.component_tracks[0][t].j == k.snapshots.n_values[t]);
  CHECK(k.norm_spread <= 1e-12);
}

TEST_CASE("mixture checks orthogonality of its components") {
  const auto gs = SamplingSet::preset(GroupSpec::heisenberg(1), 1.0);
  const auto& g = gs.group();
  GeneratorSpec s;
  s.kind = GeneratorKind::Mixture;
  s.components.push_back({GeneratorKind::Compact, default_bundle(g, 4), default_track(GeneratorKind::Compact, g)});
  Track up = default_track(GeneratorKind::Concentrating, g);
  up.j0 = 3;
  s.components.push_back({GeneratorKind::Concentrating, default_bundle(g, 4, 0.5), up});
  const auto out = generate(s, gs);
  REQUIRE(out.pairwise.size() == 1);
  CHECK(out.pairwise[0].verdict == Verdict::ScaleOrthogonal);

  // identical tracks collide
  GeneratorSpec clash = s;
  clash.components[1].track = clash.components[0].track;
  CHECK_THROWS_AS(generate(clash, gs), GeneratorError);
  // overlapping but same-track: coefficients add, orthogonality check fails
  clash.allow_overlap = true;
  CHECK_THROWS_AS(generate(clash, gs), GeneratorError);

  CHECK_THROWS_AS(default_bundle(g, 0), GeneratorError);
  CHECK_THROWS_AS(default_bundle(g, 3, 1.0, 1.5), GeneratorError);
}

TEST_CASE("noise is seeded") {
  const auto gs = SamplingSet::preset(GroupSpec::abelian(2), 1.0);
  auto s = single(GeneratorKind::Translating, gs.group());
  s.noise = {1e-3, 5, 42};
  const auto a = generate(s, gs), b = generate(s, gs);
  for (std::size_t t = 0; t < a.snapshots.horizon(); ++t) {
    CHECK(a.snapshots.fields[t].entries() == b.snapshots.fields[t].entries());
    CHECK(a.snapshots.fields[t].size() == 11);
  }
  s.noise.seed = 43;
  CHECK(generate(s, gs).snapshots.fields[0].entries() != a.snapshots.fields[0].entries());
}

TEST_CASE("generator spec JSON") {
  const auto g = GroupSpec::heisenberg(1);
  const auto j = nlohmann::json::parse(R"({"kind":"translating","horizon":10,"shape":{"size":5,"top":2.0}})");
  const auto s = generator_spec_from_json(j, g);
  CHECK(s.horizon == 10);
  REQUIRE(s.components.size() == 1);
  CHECK(s.components[0].bundle.size() == 5);
  CHECK(std::abs(s.components[0].bundle[0].d) == doctest::Approx(2.0));
  nlohmann::json back = s;
  const auto again = generator_spec_from_json(back, g);
  CHECK(again.components[0].track.g1 == s.components[0].track.g1);
  CHECK(again.components[0].bundle.size() == 5);
  CHECK_THROWS_AS(generator_spec_from_json({{"kind", "wandering"}}, g), FormatError);
  CHECK_THROWS_AS(generator_spec_from_json({{"kind", "mixture"}}, g), FormatError);
}

TEST_CASE("snapshot files") {
  const auto gs = SamplingSet::preset(GroupSpec::heisenberg(1), 0.5);
  const auto out = generate(single(GeneratorKind::Translating, gs.group()), gs);
  std::stringstream ss;
  write_snapshots_jsonl(ss, out.snapshots);
  const auto back = read_snapshots_jsonl(ss);
  CHECK(back.n_values == out.snapshots.n_values);
  for (std::size_t t = 0; t < back.horizon(); ++t) CHECK(back.fields[t].entries() == out.snapshots.fields[t].entries());

  std::stringstream src;
  write_snapshots_jsonl(src, out.snapshots);
  std::string header;
  std::getline(src, header);

  // a NaN written by a careless producer is not JSON; the error names the line
  std::stringstream bad(header + "\n" + R"({"n":1,"j":0,"gamma":[0,0,0],"re":1.0,"im":0.0})" + "\n" +
                        R"({"n":1,"j":0,"gamma":[1,0,0],"re":NaN,"im":0.0})" + "\n");
  try {
    read_snapshots_jsonl(bad);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 3);
  }
  std::stringstream nulls(header + "\n" + R"({"n":1,"j":0,"gamma":[0,0,0],"re":null,"im":0.0})" + "\n");
  CHECK_THROWS_AS(read_snapshots_jsonl(nulls), FormatError);

  auto legacy = nlohmann::json::parse(header);
  legacy.erase("normalization");
  std::stringstream old(legacy.dump() + "\n");
  try {
    read_snapshots_jsonl(old);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("normalization") != std::string::npos);
  }
  CHECK_THROWS_AS(ingest_snapshots("/nonexistent/seq.jsonl"), IoError);
}

TEST_CASE("pair JSON") {
  const auto j = nlohmann::json::parse(R"({"group":{"kind":"abelian","d":1},"h":[1,0.5],"kappa":[[0],[1]]})");
  const auto [g, p] = read_pair_json(j);
  CHECK(g.dimension() == 1);
  CHECK(p.h.size() == 2);
  CHECK_THROWS_AS(read_pair_json(nlohmann::json::parse(R"({"group":{"kind":"abelian","d":1},"h":[1],"kappa":[[0,1]]})")),
                  FormatError);
  CHECK_THROWS_AS(read_pair_json(nlohmann::json::parse(R"({"group":{"kind":"abelian","d":1},"h":[-1],"kappa":[[0]]})")),
                  FormatError);
}

TEST_CASE("digests and reports") {
  CHECK(sha256_bytes("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const auto path = std::filesystem::temp_directory_path() / "stratprof_digest_test.txt";
  {
    std::ofstream(path) << "abc";
  }
  CHECK(sha256_file(path.string()) == sha256_bytes("abc"));
  const auto r = make_report("norms", {{"s", 0.5}}, {{"in", path.string()}}, {{"value", 1.0}});
  CHECK(r.at("command") == "norms");
  CHECK(r.at("inputs").at("in").at("sha256") == sha256_bytes("abc"));
  CHECK(r.at("inputs").at("in").at("file") == "stratprof_digest_test.txt");
  CHECK(r.contains("timestamp"));
  const auto s = strip_timestamp(r);
  CHECK_FALSE(s.contains("timestamp"));
  CHECK(s.at("result") == r.at("result"));
  std::filesystem::remove(path);
}
