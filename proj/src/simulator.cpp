#include "netpars/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

namespace netpars {

namespace {

// Substream tags per observation (D9: event and noise streams independent).
enum StreamTag : std::uint64_t { kAlloc = 0, kEvents = 1, kNoise = 2 };

std::vector<NodeId> draw_modem_allocation(const Topology& topo, int m, Rng& rng) {
  const auto& splitters = topo.splitter_ids();
  const int s = static_cast<int>(splitters.size());
  // Each modem picks a splitter uniformly; redraw the whole allocation until
  // no splitter is empty.
  for (int attempt = 0; attempt < 100000; ++attempt) {
    std::vector<NodeId> parents(m);
    std::vector<int> load(s, 0);
    for (int i = 0; i < m; ++i) {
      const int k = static_cast<int>(rng.next_below(s));
      parents[i] = splitters[k];
      ++load[k];
    }
    bool ok = true;
    for (int k = 0; k < s; ++k) ok = ok && load[k] > 0;
    if (ok) return parents;
  }
  throw std::runtime_error("simulate_observation: modem allocation kept leaving a splitter empty");
}

}  // namespace

void SimConfig::validate() const {
  if (n_observations < 1) throw std::invalid_argument("SimConfig: n_observations must be >= 1");
  if (series_len < 2) throw std::invalid_argument("SimConfig: series_len must be >= 2");
  if (n_chunks < 0) throw std::invalid_argument("SimConfig: n_chunks must be >= 0");
  if (n_chunks > 0 && series_len % n_chunks != 0)
    throw std::invalid_argument("SimConfig: series_len must be divisible by n_chunks");
  if (num_internal < 2 || num_internal > 8) throw std::invalid_argument("SimConfig: num_internal must be in [2, 8]");
  const int splitters = num_internal - 1;
  if (modem_min < splitters)
    throw std::invalid_argument("SimConfig: modem_min must be >= splitter count so every splitter gets a modem");
  if (modem_max < modem_min) throw std::invalid_argument("SimConfig: modem_max must be >= modem_min");
  if (noise_std <= 0) throw std::invalid_argument("SimConfig: noise_std must be positive");
}

std::vector<double> generate_ar2(int length, std::span<const double> mu, double noise_std, double phi1, double phi2,
                                 Rng& rng) {
  if (length < 2) throw std::invalid_argument("generate_ar2: length must be >= 2");
  if (!mu.empty() && static_cast<int>(mu.size()) != length)
    throw std::invalid_argument("generate_ar2: mu length mismatch");

  std::vector<double> x(length, 0.0);
  for (int t = 2; t < length; ++t) {
    const double mean = mu.empty() ? 0.0 : mu[t];
    const double eps = mean + noise_std * rng.next_normal();
    x[t] = phi1 * x[t - 1] + phi2 * x[t - 2] + eps;
  }
  return x;
}

InjectedEvents inject_events(const NetworkInstance& instance, const SimConfig& config, Rng& rng) {
  const int m = instance.modem_count();
  const int t = config.series_len;
  InjectedEvents out{Matrix<double>(m, t, 0.0), EventMatrix(m, t, 0), {}};
  if (config.n_chunks == 0) return out;

  const auto edges = instance.topology().internal_edges();
  const int tau = config.chunk_len();
  for (int chunk = 0; chunk < config.n_chunks; ++chunk) {
    const InternalEdge edge = edges[rng.next_below(edges.size())];
    out.log.push_back({chunk, edge});
    const int begin = chunk * tau;
    const int end = begin + tau;
    for (int modem : affected_modems(instance, edge)) {
      for (int j = begin; j < end; ++j) {
        out.mu(modem, j) = config.event_shift;
        out.truth(modem, j) = 1;
      }
    }
  }
  return out;
}

Observation simulate_observation(const SimConfig& config, const std::vector<Topology>& candidates, int obs_index) {
  config.validate();
  if (candidates.empty()) throw std::invalid_argument("simulate_observation: empty candidate list");

  const std::uint64_t idx = static_cast<std::uint64_t>(obs_index);
  Rng alloc_rng = Rng::substream(config.seed, idx, kAlloc);
  Rng event_rng = Rng::substream(config.seed, idx, kEvents);
  Rng noise_rng = Rng::substream(config.seed, idx, kNoise);

  const int topology_id = static_cast<int>(alloc_rng.next_below(candidates.size()));
  const Topology& topo = candidates[topology_id];
  const int m = static_cast<int>(alloc_rng.next_int(config.modem_min, config.modem_max));
  NetworkInstance instance(topo, draw_modem_allocation(topo, m, alloc_rng));

  InjectedEvents events = inject_events(instance, config, event_rng);

  Matrix<double> series(m, config.series_len, 0.0);
  for (int row = 0; row < m; ++row) {
    const auto x =
        generate_ar2(config.series_len, events.mu.row(row), config.noise_std, config.ar_phi1, config.ar_phi2, noise_rng);
    std::copy(x.begin(), x.end(), series.row(row).begin());
  }

  return Observation{obs_index, topology_id, std::move(instance), std::move(series), std::move(events.truth),
                     std::move(events.log)};
}

nlohmann::ordered_json observation_to_json(const Observation& obs) {
  nlohmann::ordered_json j;
  j["id"] = obs.id;
  j["topology_id"] = obs.topology_id;
  j["parents"] = obs.instance.topology().to_json()["parents"];
  j["modem_parent"] = obs.instance.modem_parent();
  j["series"] = obs.series.data();
  std::vector<int> bits(obs.truth_events.data().begin(), obs.truth_events.data().end());
  j["truth_events"] = bits;
  nlohmann::ordered_json log = nlohmann::ordered_json::array();
  for (const EventRecord& e : obs.event_log) log.push_back({e.chunk, e.edge.parent, e.edge.child});
  j["event_log"] = log;
  return j;
}

Observation observation_from_json(const nlohmann::json& j) {
  std::map<NodeId, NodeId> parents;
  for (const auto& [key, value] : j.at("parents").items()) parents[std::stoi(key)] = value.get<NodeId>();
  // The root is the referenced node that is not itself a splitter.
  NodeId root = -1;
  for (const auto& [child, parent] : parents) {
    if (!parents.contains(parent)) {
      if (root != -1 && root != parent) throw std::invalid_argument("observation_from_json: ambiguous root");
      root = parent;
    }
  }
  if (root == -1) throw std::invalid_argument("observation_from_json: no root found");

  NetworkInstance instance(Topology(root, parents), j.at("modem_parent").get<std::vector<NodeId>>());
  const int m = instance.modem_count();

  auto series_values = j.at("series").get<std::vector<double>>();
  if (series_values.empty() || series_values.size() % m != 0)
    throw std::invalid_argument("observation_from_json: series size is not a multiple of the modem count");
  const int t = static_cast<int>(series_values.size() / m);
  Matrix<double> series(m, t, std::move(series_values));

  auto bit_values = j.at("truth_events").get<std::vector<int>>();
  if (bit_values.size() != static_cast<std::size_t>(m) * t)
    throw std::invalid_argument("observation_from_json: truth_events size mismatch");
  EventMatrix truth(m, t, 0);
  for (std::size_t i = 0; i < bit_values.size(); ++i) {
    if (bit_values[i] != 0 && bit_values[i] != 1)
      throw std::invalid_argument("observation_from_json: truth_events entries must be 0 or 1");
    truth.data()[i] = static_cast<std::uint8_t>(bit_values[i]);
  }

  std::vector<EventRecord> log;
  for (const auto& entry : j.at("event_log")) {
    if (entry.size() != 3) throw std::invalid_argument("observation_from_json: malformed event_log entry");
    log.push_back({entry[0].get<int>(), {entry[1].get<NodeId>(), entry[2].get<NodeId>()}});
  }

  return Observation{j.at("id").get<int>(), j.at("topology_id").get<int>(), std::move(instance), std::move(series),
                     std::move(truth), std::move(log)};
}

SplitCounts generate_dataset(const SimConfig& config, double split_fraction, std::ostream& train_out,
                             std::ostream& test_out) {
  config.validate();
  if (!(split_fraction > 0.0 && split_fraction < 1.0))
    throw std::invalid_argument("generate_dataset: split_fraction must be in (0, 1)");

  const auto candidates = enumerate_topologies(config.num_internal);
  const int n = config.n_observations;
  const int n_train = static_cast<int>(std::ceil(n * (1.0 - split_fraction)));

  SplitCounts counts;
  for (int i = 0; i < n; ++i) {
    const Observation obs = simulate_observation(config, candidates, i);
    std::ostream& out = i < n_train ? train_out : test_out;
    out << observation_to_json(obs).dump() << '\n';
    (i < n_train ? counts.train : counts.test) += 1;
  }
  train_out.flush();
  test_out.flush();
  return counts;
}

SplitCounts generate_dataset(const SimConfig& config, double split_fraction, const std::string& train_path,
                             const std::string& test_path) {
  std::ofstream train_out(train_path);
  if (!train_out) throw std::runtime_error("generate_dataset: cannot open " + train_path + " for writing");
  std::ofstream test_out(test_path);
  if (!test_out) throw std::runtime_error("generate_dataset: cannot open " + test_path + " for writing");
  SplitCounts counts = generate_dataset(config, split_fraction, train_out, test_out);
  if (!train_out || !test_out)
    throw std::runtime_error("generate_dataset: write failed for " + train_path + " or " + test_path);
  return counts;
}

void for_each_observation(const std::string& path, const std::function<void(Observation&&)>& fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("for_each_observation: cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      fn(observation_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::vector<Observation> load_dataset(const std::string& path) {
  std::vector<Observation> result;
  for_each_observation(path, [&](Observation&& obs) { result.push_back(std::move(obs)); });
  return result;
}

}  // namespace netpars
