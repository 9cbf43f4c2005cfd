#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stratprof/coeff_space.hpp"
#include "stratprof/errors.hpp"
#include "stratprof/grid.hpp"
#include "stratprof/profiler.hpp"
#include "stratprof/sampling.hpp"

namespace stratprof {

class GeneratorError : public Error {
 public:
  using Error::Error;
};

enum class GeneratorKind { Translating, Concentrating, Spreading, Compact, Mixture };
std::string to_string(GeneratorKind k);
GeneratorKind generator_kind_from_string(const std::string& s);

/// One atom of a bundle, relative to the bundle's core: index (j + j~, (2^{j~} . gamma) gamma~).
struct BundleAtom {
  int j_tilde = 0;
  LatticeCoords gamma_tilde;
  std::complex<double> d;
};

/// j(n) = j0 + j1 n, gamma(n) = g0 + g1 n in lattice coordinates.
struct Track {
  int j0 = 0;
  int j1 = 0;
  LatticeCoords g0;
  LatticeCoords g1;

  AtomIndex at(int n) const;
};

struct Component {
  GeneratorKind kind = GeneratorKind::Translating;
  std::vector<BundleAtom> bundle;
  Track track;
};

struct NoiseSpec {
  double floor = 0.0;  // noise moduli lie in [floor/2, floor]
  int count = 0;       // noise atoms per snapshot
  std::uint64_t seed = 0;
};

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::Translating;
  std::vector<Component> components;
  int horizon = 16;
  int n0 = 1;
  double p = 2.0;
  NoiseSpec noise;
  /// Mixture components may share indices; coinciding coefficients add up.
  bool allow_overlap = false;
  ClassifyParams check{8, 4.0, 1e-9};
};

/// Named bundle: `size` atoms with distinct, decreasing moduli; the top atom is (0, e).
std::vector<BundleAtom> default_bundle(const GroupSpec& g, int size, double top = 1.0, double ratio = 0.9);

/// Default track for a kind: translating moves gamma by 4 along the first axis per step,
/// concentrating raises j by one per step, spreading lowers it, compact stays.
Track default_track(GeneratorKind kind, const GroupSpec& g);

struct GeneratedSequence {
  SequenceSnapshots snapshots;
  std::vector<std::vector<AtomIndex>> component_tracks;  // core track per component
  std::vector<Classification> pairwise;                  // component pairs (i < k), row-major
  double norm_spread = 0.0;                              // max - min sequence norm over n
};

GeneratedSequence generate(const GeneratorSpec& spec, const SamplingSet& gs);

GeneratorSpec generator_spec_from_json(const nlohmann::json& j, const GroupSpec& g);
void to_json(nlohmann::json& j, const GeneratorSpec& s);

/// JSON-lines: header {format:"snapshots", version, normalization, sampling, n_values},
/// then {n, j, gamma, re, im} per entry.
void write_snapshots_jsonl(std::ostream& os, const SequenceSnapshots& s);
SequenceSnapshots read_snapshots_jsonl(std::istream& is);

/// {h:[...], kappa:[[...]]} or {sampling, track:[{j, gamma}]}; the group comes from
/// "group" or "sampling.group".
std::pair<GroupSpec, ScaleCorePair> read_pair_json(const nlohmann::json& j);

/// File readers; format errors carry line numbers where applicable, open failures raise IoError.
SequenceSnapshots ingest_snapshots(const std::string& path);
CoefficientField ingest_field(const std::string& path);
GridFunction ingest_grid(const std::string& path);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);
std::string sha256_bytes(const std::string& bytes);

/// Report envelope: tool, parameters, input digests and a timestamp field; all keys sorted.
nlohmann::json make_report(const std::string& command, const nlohmann::json& parameters,
                           const std::vector<std::pair<std::string, std::string>>& input_files,
                           const nlohmann::json& body);
/// Same report with the timestamp removed, for determinism checks.
nlohmann::json strip_timestamp(nlohmann::json report);

}  // namespace stratprof
