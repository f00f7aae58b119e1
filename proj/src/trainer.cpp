#include "netpars/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "netpars/loss.hpp"
#include "netpars/parsimony.hpp"

namespace netpars {

namespace {

enum TrainStream : std::uint64_t { kInit = 0, kNegatives = 1 };

class Adam {
 public:
  Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
      params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (learning_rate < 0) throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
  if (adam_beta1 < 0 || adam_beta1 >= 1 || adam_beta2 < 0 || adam_beta2 >= 1)
    throw std::invalid_argument("TrainConfig: adam decay rates must lie in [0, 1)");
  if (adam_epsilon <= 0) throw std::invalid_argument("TrainConfig: adam_epsilon must be positive");
  if (softmin_beta <= 0) throw std::invalid_argument("TrainConfig: softmin_beta must be positive");
  if (alpha < 0) throw std::invalid_argument("TrainConfig: alpha must be >= 0");
  if (num_negatives < -1) throw std::invalid_argument("TrainConfig: num_negatives must be >= 0 or -1");
  if (num_negatives == 0 && alpha != 0)
    throw std::invalid_argument("TrainConfig: num_negatives == 0 requires alpha == 0");
}

Matrix<double> standardize(const Matrix<double>& series) {
  if (series.cols() < 2) throw std::invalid_argument("standardize: need at least 2 timepoints per row");
  Matrix<double> out(series.rows(), series.cols(), 0.0);
  const int t = series.cols();
  for (int r = 0; r < series.rows(); ++r) {
    const auto row = series.row(r);
    double mean = 0.0;
    for (double x : row) mean += x;
    mean /= t;
    double var = 0.0;
    for (double x : row) var += (x - mean) * (x - mean);
    var /= t;
    const double std_dev = std::sqrt(var);
    const double scale = std_dev < 1e-8 ? 1.0 : 1.0 / std_dev;
    auto out_row = out.row(r);
    for (int j = 0; j < t; ++j) out_row[j] = (row[j] - mean) * scale;
  }
  return out;
}

StepEval evaluate_step(const Observation& obs, const EncoderParams& params, const std::vector<Topology>& candidates,
                       const std::vector<int>& negative_ids, double softmin_beta, double alpha,
                       bool standardize_inputs) {
  if (obs.topology_id < 0 || obs.topology_id >= static_cast<int>(candidates.size()))
    throw std::invalid_argument("evaluate_step: observation topology_id outside candidate list");

  GradientTape tape;
  const ProbMatrix probs = standardize_inputs ? encode(standardize(obs.series), params, &tape)
                                              : encode(obs.series, params, &tape);

  const SoftParsimony pos(obs.instance, probs, softmin_beta);

  std::vector<SoftParsimony> negs;
  std::vector<std::vector<double>> neg_scores;
  negs.reserve(negative_ids.size());
  for (int g : negative_ids) {
    if (g == obs.topology_id) throw std::invalid_argument("evaluate_step: negative equals the true topology");
    NetworkInstance neg_instance(candidates[g], obs.instance.modem_parent());
    negs.emplace_back(neg_instance, probs, softmin_beta);
    neg_scores.push_back(negs.back().scores());
  }

  StepEval out;
  Matrix<double> dprobs;
  if (negs.empty()) {
    // Positive term only (alpha == 0 regime).
    out.term1 = 0;
    for (double s : pos.scores()) out.term1 += s;
    out.term2 = 0;
    out.loss = out.term1;
    dprobs = pos.backward(std::vector<double>(pos.scores().size(), 1.0));
  } else {
    const ContrastiveLoss cl = contrastive_loss(pos.scores(), neg_scores, alpha);
    out.loss = cl.value;
    out.term1 = cl.term1;
    out.term2 = cl.term2;
    dprobs = pos.backward(cl.grad_pos);
    for (std::size_t k = 0; k < negs.size(); ++k) {
      const Matrix<double> dk = negs[k].backward(cl.grad_negs[k]);
      for (std::size_t i = 0; i < dprobs.data().size(); ++i) dprobs.data()[i] += dk.data()[i];
    }
  }
  out.param_grads = encode_backward(tape, params, dprobs);
  return out;
}

TrainResult train(const std::vector<Observation>& train_set, const EncoderConfig& encoder_config,
                  const TrainConfig& config, const std::vector<Topology>& candidates,
                  const std::optional<EncoderParams>& warm_start) {
  config.validate();
  encoder_config.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (candidates.empty()) throw std::invalid_argument("train: empty candidate list");
  for (const Observation& obs : train_set) {
    if (obs.topology_id < 0 || obs.topology_id >= static_cast<int>(candidates.size()) ||
        !(candidates[obs.topology_id] == obs.instance.topology()))
      throw std::invalid_argument("train: observation " + std::to_string(obs.id) +
                                  " does not match the candidate topologies");
  }

  const int num_candidates = static_cast<int>(candidates.size());
  const int k = config.num_negatives == -1 ? num_candidates - 1 : config.num_negatives;
  if (k > num_candidates - 1) throw std::invalid_argument("train: num_negatives exceeds candidates - 1");

  Rng init_rng = Rng::substream(config.seed, kInit);
  Rng neg_rng = Rng::substream(config.seed, kNegatives);
  EncoderParams params = warm_start ? *warm_start : init_params(encoder_config, init_rng);

  Adam optimizer(params.size(), config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_epsilon);

  if (!config.checkpoint_dir.empty()) std::filesystem::create_directories(config.checkpoint_dir);

  TrainResult result;
  int step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (const Observation& obs : train_set) {
      ++step;
      const auto started = std::chrono::steady_clock::now();

      std::vector<int> negative_ids;
      if (k == num_candidates - 1) {
        for (int g = 0; g < num_candidates; ++g)
          if (g != obs.topology_id) negative_ids.push_back(g);
      } else if (k > 0) {
        negative_ids = sample_negatives(num_candidates, obs.topology_id, k, neg_rng);
      }

      StepEval eval = evaluate_step(obs, params, candidates, negative_ids, config.softmin_beta, config.alpha,
                                    config.standardize_inputs);
      if (!std::isfinite(eval.loss)) throw TrainingDiverged(step, obs.id);

      optimizer.step(params.flat(), eval.param_grads);

      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      result.history.steps.push_back({step, epoch, obs.id, eval.loss, eval.term1, eval.term2, seconds});
    }
    if (!config.checkpoint_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%04d.json", epoch);
      save_checkpoint({encoder_config, params, config.standardize_inputs},
                      (std::filesystem::path(config.checkpoint_dir) / name).string());
    }
  }
  result.params = std::move(params);
  return result;
}

void save_history_csv(const TrainHistory& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_history_csv: cannot open " + path + " for writing");
  out << "step,epoch,obs_id,loss,term1,term2,seconds\n";
  out.precision(17);
  for (const StepRecord& s : history.steps)
    out << s.step << ',' << s.epoch << ',' << s.obs_id << ',' << s.loss << ',' << s.term1 << ',' << s.term2 << ','
        << s.seconds << '\n';
  if (!out) throw std::runtime_error("save_history_csv: write failed for " + path);
}

}  // namespace netpars
