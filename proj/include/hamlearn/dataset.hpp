// Copyright 2026 The hamlearn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cinttypes>
#include <cstdio>
#include <istream>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hamlearn/common.hpp"
#include "hamlearn/dynamics.hpp"
#include "hamlearn/hamiltonian.hpp"
#include "hamlearn/rng.hpp"
#include "hamlearn/statevector.hpp"

namespace hamlearn {

/// Measurement protocol: L initial basis states, J timestamps, K random
/// Pauli bases, M shots each, so the record count is exactly L*J*K*M.
struct DatasetSpec {
  int num_sites = 3;
  Family family = Family::Heisenberg;
  std::vector<double> truth_params;
  int num_states = 5;                                    // L
  std::vector<double> timestamps = {0.2, 0.4, 0.6, 0.8, 1.0};  // J
  int num_bases = 200;                                   // K
  int shots = 100;                                       // M
  std::uint64_t seed = 0;

  void validate() const {
    if (num_sites < 1) throw std::invalid_argument("bad num_sites");
    if (num_states < 1 || num_bases < 1 || shots < 1)
      throw std::invalid_argument("L, K and M must all be at least 1");
    if (timestamps.empty()) throw std::invalid_argument("need timestamps");
    double prev = 0.0;
    for (double t : timestamps) {
      if (!(t > prev))
        throw std::invalid_argument("timestamps must ascend and be positive");
      prev = t;
    }
    if (truth_params.size() !=
        static_cast<std::size_t>(family_param_count(family, num_sites)))
      throw std::invalid_argument("truth parameter count mismatch");
  }

  std::size_t cardinality() const {
    return static_cast<std::size_t>(num_states) * timestamps.size() *
           static_cast<std::size_t>(num_bases) *
           static_cast<std::size_t>(shots);
  }
};

/// Ground-truth coefficients ~ U[-1, 1] per parameter, seeded.
inline std::vector<double> sample_truth(Family family, int n,
                                        std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> out(
      static_cast<std::size_t>(family_param_count(family, n)));
  for (double& c : out) c = rng.uniform(-1.0, 1.0);
  return out;
}

struct MeasurementRecord {
  std::uint32_t state_id;
  std::uint32_t t_idx;
  std::uint32_t basis_idx;
  std::uint64_t bits;
};

/// Immutable measurement dataset: header tables plus one record per shot,
/// with a per-key outcome histogram index for O(2^N) loss evaluation.
/// The ground-truth parameters are never stored here; they live in a
/// separate sidecar so blind training runs cannot see the answer.
class Dataset {
 public:
  Dataset(int num_sites, std::optional<Family> family,
          std::vector<double> timestamps, std::vector<std::uint64_t> states,
          std::vector<PauliBasis> bases, int shots, std::uint64_t seed,
          std::vector<MeasurementRecord> records)
      : num_sites_(num_sites),
        family_(family),
        timestamps_(std::move(timestamps)),
        state_table_(std::move(states)),
        basis_table_(std::move(bases)),
        shots_(shots),
        seed_(seed),
        records_(std::move(records)) {
    build_histograms();
  }

  int num_sites() const { return num_sites_; }
  std::optional<Family> family() const { return family_; }
  const std::vector<double>& timestamps() const { return timestamps_; }
  const std::vector<std::uint64_t>& state_table() const { return state_table_; }
  const std::vector<PauliBasis>& basis_table() const { return basis_table_; }
  int shots() const { return shots_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<MeasurementRecord>& records() const { return records_; }
  std::size_t total_records() const { return records_.size(); }

  std::size_t num_keys() const {
    return state_table_.size() * timestamps_.size() * basis_table_.size();
  }

  /// Outcome counts (length 2^N, as doubles) for one (state, time, basis)
  /// key. Record multiplicity enters the loss through these counts.
  std::span<const double> histogram(std::size_t state_id, std::size_t t_idx,
                                    std::size_t basis_idx) const {
    const std::size_t dim = std::size_t{1} << num_sites_;
    std::size_t key =
        (state_id * timestamps_.size() + t_idx) * basis_table_.size() +
        basis_idx;
    return std::span<const double>(histograms_).subspan(key * dim, dim);
  }

  struct Subset {
    std::vector<std::uint64_t> bitstrings;
    bool known_key = false;
  };

  /// All bitstrings recorded for one (input state, timestamp, basis) key.
  /// Keys are matched against the header tables; unknown keys yield an empty,
  /// flagged subset.
  Subset split_subset(std::uint32_t state_id, double timestamp,
                      const PauliBasis& basis) const {
    Subset out;
    if (state_id >= state_table_.size()) return out;
    std::size_t t_idx = timestamps_.size();
    for (std::size_t j = 0; j < timestamps_.size(); ++j)
      if (timestamps_[j] == timestamp) t_idx = j;
    if (t_idx == timestamps_.size()) return out;
    std::size_t basis_idx = basis_table_.size();
    for (std::size_t k = 0; k < basis_table_.size(); ++k)
      if (basis_table_[k] == basis) basis_idx = k;
    if (basis_idx == basis_table_.size()) return out;
    out.known_key = true;
    for (const auto& r : records_)
      if (r.state_id == state_id && r.t_idx == t_idx &&
          r.basis_idx == basis_idx)
        out.bitstrings.push_back(r.bits);
    return out;
  }

 private:
  void build_histograms() {
    const std::size_t dim = std::size_t{1} << num_sites_;
    histograms_.assign(num_keys() * dim, 0.0);
    for (const auto& r : records_) {
      if (r.state_id >= state_table_.size() ||
          r.t_idx >= timestamps_.size() ||
          r.basis_idx >= basis_table_.size() || r.bits >= dim)
        throw std::invalid_argument("record references unknown key");
      std::size_t key =
          (r.state_id * timestamps_.size() + r.t_idx) * basis_table_.size() +
          r.basis_idx;
      histograms_[key * dim + r.bits] += 1.0;
    }
  }

  int num_sites_;
  std::optional<Family> family_;
  std::vector<double> timestamps_;
  std::vector<std::uint64_t> state_table_;
  std::vector<PauliBasis> basis_table_;
  int shots_;
  std::uint64_t seed_;
  std::vector<MeasurementRecord> records_;
  std::vector<double> histograms_;
};

/// Simulates the measurement protocol exactly: distinct initial basis states
/// and random bases are drawn from dedicated seed streams, then each
/// (state, time) pair samples its shots from an independently derived stream
/// so generation may parallelize over pairs while the output stays canonical.
inline Dataset generate_dataset(const DatasetSpec& spec, unsigned jobs = 1) {
  spec.validate();
  const std::uint64_t dim = std::uint64_t{1} << spec.num_sites;
  if (static_cast<std::uint64_t>(spec.num_states) > dim)
    throw std::invalid_argument("more initial states requested than 2^N");

  // Stream 0: distinct initial computational basis states.
  SplitMix64 state_rng(derive_seed(spec.seed, 0));
  std::vector<std::uint64_t> states;
  while (states.size() < static_cast<std::size_t>(spec.num_states)) {
    std::uint64_t s = state_rng.next_index(dim);
    bool dup = false;
    for (std::uint64_t seen : states) dup = dup || (seen == s);
    if (!dup) states.push_back(s);
  }

  // Stream 1: measurement bases, one letter per site uniform over {X,Y,Z}.
  SplitMix64 basis_rng(derive_seed(spec.seed, 1));
  std::vector<PauliBasis> bases;
  bases.reserve(static_cast<std::size_t>(spec.num_bases));
  for (int k = 0; k < spec.num_bases; ++k)
    bases.push_back(PauliBasis::random(spec.num_sites, basis_rng));

  PauliSumHamiltonian truth =
      build_hamiltonian(spec.family, spec.num_sites, spec.truth_params);
  ExactPropagator propagator(truth);

  const std::size_t num_pairs =
      states.size() * spec.timestamps.size();
  const std::size_t per_pair = static_cast<std::size_t>(spec.num_bases) *
                               static_cast<std::size_t>(spec.shots);
  std::vector<MeasurementRecord> records(num_pairs * per_pair);

  parallel_for(num_pairs, jobs, [&](std::size_t pair) {
    const std::size_t l = pair / spec.timestamps.size();
    const std::size_t j = pair % spec.timestamps.size();
    SplitMix64 rng(derive_seed(spec.seed, 2 + pair));
    StateVector psi = propagator.propagate(
        basis_state(spec.num_sites, states[l]), spec.timestamps[j]);
    MeasurementRecord* slot = records.data() + pair * per_pair;
    for (std::size_t k = 0; k < bases.size(); ++k) {
      auto outcomes = sample_bitstrings(
          psi, bases[k], static_cast<std::size_t>(spec.shots), rng);
      for (std::uint64_t bits : outcomes) {
        *slot++ = MeasurementRecord{static_cast<std::uint32_t>(l),
                                    static_cast<std::uint32_t>(j),
                                    static_cast<std::uint32_t>(k), bits};
      }
    }
  });

  return Dataset(spec.num_sites, spec.family, spec.timestamps,
                 std::move(states), std::move(bases), spec.shots, spec.seed,
                 std::move(records));
}

// ---------------------------------------------------------------------------
// File format: one JSON header line, then one compact record per line:
//   state_id timestamp_idx basis_idx bitstring_hex
// ---------------------------------------------------------------------------

inline void save_dataset(const Dataset& ds, std::ostream& out) {
  nlohmann::json header;
  header["format_version"] = 1;
  header["num_sites"] = ds.num_sites();
  if (ds.family()) header["family"] = family_name(*ds.family());
  header["timestamps"] = ds.timestamps();
  header["state_table"] = ds.state_table();
  nlohmann::json basis_table = nlohmann::json::array();
  for (const auto& b : ds.basis_table()) basis_table.push_back(b.str());
  header["basis_table"] = basis_table;
  header["shots"] = ds.shots();
  header["seed"] = ds.seed();
  header["num_records"] = ds.total_records();
  out << header.dump() << '\n';
  char line[80];
  for (const auto& r : ds.records()) {
    std::snprintf(line, sizeof line, "%" PRIu32 " %" PRIu32 " %" PRIu32 " %" PRIx64 "\n",
                  r.state_id, r.t_idx, r.basis_idx, r.bits);
    out << line;
  }
}

inline Dataset load_dataset(std::istream& in) {
  std::string header_line;
  if (!std::getline(in, header_line))
    throw std::runtime_error("empty dataset file");
  nlohmann::json header = nlohmann::json::parse(header_line);
  int n = header.at("num_sites").get<int>();
  std::optional<Family> family;
  if (header.contains("family"))
    family = family_from_name(header.at("family").get<std::string>());
  auto timestamps = header.at("timestamps").get<std::vector<double>>();
  auto state_table =
      header.at("state_table").get<std::vector<std::uint64_t>>();
  std::vector<PauliBasis> basis_table;
  for (const auto& s : header.at("basis_table"))
    basis_table.emplace_back(s.get<std::string>());
  int shots = header.at("shots").get<int>();
  std::uint64_t seed = header.at("seed").get<std::uint64_t>();
  std::size_t num_records = header.at("num_records").get<std::size_t>();
  std::vector<MeasurementRecord> records;
  records.reserve(num_records);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    MeasurementRecord r;
    if (std::sscanf(line.c_str(), "%" SCNu32 " %" SCNu32 " %" SCNu32 " %" SCNx64,
                    &r.state_id, &r.t_idx, &r.basis_idx, &r.bits) != 4)
      throw std::runtime_error("malformed dataset record: " + line);
    records.push_back(r);
  }
  if (records.size() != num_records)
    throw std::runtime_error("dataset record count differs from header");
  return Dataset(n, family, std::move(timestamps), std::move(state_table),
                 std::move(basis_table), shots, seed, std::move(records));
}

/// Sidecar schema for the redacted ground truth.
inline nlohmann::json truth_to_json(Family family, int n,
                                    std::span<const double> params) {
  return nlohmann::json{
      {"family", family_name(family)},
      {"num_sites", n},
      {"params", std::vector<double>(params.begin(), params.end())}};
}

struct TruthInfo {
  Family family;
  int num_sites;
  std::vector<double> params;
};

inline TruthInfo truth_from_json(const nlohmann::json& j) {
  return TruthInfo{family_from_name(j.at("family").get<std::string>()),
                   j.at("num_sites").get<int>(),
                   j.at("params").get<std::vector<double>>()};
}

}  // namespace hamlearn
