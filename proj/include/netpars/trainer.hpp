#pragma once
// Training loop: per observation, encode all modem rows, score the true and
// negative topologies with the soft parsimony relaxation, apply the
// contrastive loss, backpropagate to the encoder parameters and take one
// adaptive-moment step.  Deterministic given (seed, data, configs).

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "netpars/encoder.hpp"
#include "netpars/simulator.hpp"
#include "netpars/topology.hpp"

namespace netpars {

struct TrainConfig {
  int epochs = 20;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double softmin_beta = 5.0;
  double alpha = 2.0;
  int num_negatives = -1;  // -1: all non-true topologies, resampled fresh otherwise
  std::uint64_t seed = 1;
  std::string checkpoint_dir;  // empty: no per-epoch checkpoints
  bool standardize_inputs = true;

  void validate() const;
};

struct StepRecord {
  int step = 0;
  int epoch = 0;
  int obs_id = 0;
  double loss = 0;
  double term1 = 0;
  double term2 = 0;
  double seconds = 0;
};

struct TrainHistory {
  std::vector<StepRecord> steps;
};

void save_history_csv(const TrainHistory& history, const std::string& path);

struct TrainResult {
  EncoderParams params;
  TrainHistory history;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int step, int obs_id)
      : std::runtime_error("training diverged: non-finite loss at step " + std::to_string(step) + ", observation " +
                           std::to_string(obs_id)),
        step(step),
        obs_id(obs_id) {}
  int step;
  int obs_id;
};

// Per-row standardization: subtract the row mean, divide by the population
// standard deviation (rows with std < 1e-8 are only centered).
Matrix<double> standardize(const Matrix<double>& series);

// Loss and full-pipeline parameter gradient for one observation.
// negative_ids index into `candidates`; an empty list is allowed only with
// alpha == 0 and reduces the loss to the summed positive parsimony.
struct StepEval {
  double loss = 0;
  double term1 = 0;
  double term2 = 0;
  std::vector<double> param_grads;
};

StepEval evaluate_step(const Observation& obs, const EncoderParams& params, const std::vector<Topology>& candidates,
                       const std::vector<int>& negative_ids, double softmin_beta, double alpha,
                       bool standardize_inputs);

TrainResult train(const std::vector<Observation>& train_set, const EncoderConfig& encoder_config,
                  const TrainConfig& config, const std::vector<Topology>& candidates,
                  const std::optional<EncoderParams>& warm_start = std::nullopt);

}  // namespace netpars
