#pragma once
// Observation simulator: sample a topology and modem allocation, inject one
// event edge per time chunk, and synthesize per-modem AR(2) series whose
// innovation mean is shifted while an event covers the modem.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "netpars/matrix.hpp"
#include "netpars/rng.hpp"
#include "netpars/topology.hpp"

namespace netpars {

struct SimConfig {
  int n_observations = 1000;
  int series_len = 4000;
  int n_chunks = 40;  // 0 disables events
  int modem_min = 50;
  int modem_max = 100;
  double event_shift = 3.0;
  double noise_std = 0.5;
  double ar_phi1 = 0.6;
  double ar_phi2 = -0.5;
  int num_internal = 4;  // root plus splitters
  std::uint64_t seed = 1;

  int chunk_len() const { return n_chunks > 0 ? series_len / n_chunks : 0; }
  void validate() const;
};

struct EventRecord {
  int chunk = 0;
  InternalEdge edge;
  bool operator==(const EventRecord&) const = default;
};

struct Observation {
  int id = 0;
  int topology_id = 0;  // index in canonical enumeration order
  NetworkInstance instance;
  Matrix<double> series;      // m x t
  EventMatrix truth_events;   // m x t, 1 iff the modem is covered by a logged event
  std::vector<EventRecord> event_log;
};

// AR(2) recursion x_t = phi1 x_{t-1} + phi2 x_{t-2} + eps_t with
// x_0 = x_1 = 0 and eps_t ~ N(mu_t, noise_std^2) drawn for t >= 2.
std::vector<double> generate_ar2(int length, std::span<const double> mu, double noise_std, double phi1, double phi2,
                                 Rng& rng);

struct InjectedEvents {
  Matrix<double> mu;        // m x t innovation means
  EventMatrix truth;        // indicator of event coverage
  std::vector<EventRecord> log;
};

// One uniformly drawn internal edge per chunk; affected modems get
// mu = event_shift over the chunk's half-open range.
InjectedEvents inject_events(const NetworkInstance& instance, const SimConfig& config, Rng& rng);

// Fully determined by (config.seed, obs_index): topology, modem allocation
// and event placement use substreams independent of the noise stream.
Observation simulate_observation(const SimConfig& config, const std::vector<Topology>& candidates, int obs_index);

struct SplitCounts {
  int train = 0;
  int test = 0;
};

// Streams observations as JSON lines: the first ceil(n*(1-split)) go to the
// train sink, the rest to the test sink.
SplitCounts generate_dataset(const SimConfig& config, double split_fraction, std::ostream& train_out,
                             std::ostream& test_out);
SplitCounts generate_dataset(const SimConfig& config, double split_fraction, const std::string& train_path,
                             const std::string& test_path);

nlohmann::ordered_json observation_to_json(const Observation& obs);
Observation observation_from_json(const nlohmann::json& j);

// Streaming JSONL reader; the callback sees observations in file order.
void for_each_observation(const std::string& path, const std::function<void(Observation&&)>& fn);
std::vector<Observation> load_dataset(const std::string& path);

}  // namespace netpars
