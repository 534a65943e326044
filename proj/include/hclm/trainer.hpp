#pragma once

#include <vector>

#include "hclm/checkpoint.hpp"
#include "hclm/corpus.hpp"
#include "hclm/scorer.hpp"

namespace hclm {

// Adam with bias correction; beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
class Adam {
 public:
  Adam(std::vector<NamedTensor> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  // Applies one update from the accumulated gradients. Throws NumericError
  // naming the parameter on a non-finite gradient.
  void step();

  int steps_taken() const { return t_; }
  double lr() const { return lr_; }

 private:
  std::vector<NamedTensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
};

// Scales all gradients by max_norm/g when the global L2 norm g exceeds
// max_norm; returns the pre-clip norm.
double clip_gradients(const std::vector<NamedTensor>& params, double max_norm);

struct EpochLog {
  int epoch = 0;
  double train_bpc = 0.0;
  double dev_bpc = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_dev_bpc = 0.0;
};

// Builds the vocabulary from the training documents, initializes the model
// from config.seed (uniform [-0.08, 0.08]), and runs truncated-BPTT epochs of
// summed segment NLL -> backward -> clip -> Adam over the batch plan. Dropout
// applies to non-recurrent connections during training only. Dev bpc is
// evaluated after each epoch; the best-dev parameters are returned.
TrainResult train(const TrainConfig& config, const std::vector<Document>& train_docs,
                  const std::vector<Document>& dev_docs);

}  // namespace hclm
