#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bfseg/checkpoint.hpp"
#include "bfseg/data.hpp"
#include "bfseg/losses.hpp"
#include "bfseg/metrics.hpp"
#include "bfseg/model.hpp"

namespace bfseg {

struct AdamWConfig {
  double weight_decay = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment optimiser with decoupled weight decay:
///   theta <- theta - lr * wd * theta, then the bias-corrected Adam step.
class AdamW {
 public:
  AdamW(const ParameterSet& params, AdamWConfig config);

  void step(ParameterSet& params, const Gradients& grads, double lr);
  long steps() const { return step_; }

 private:
  AdamWConfig config_;
  Gradients m_;
  Gradients v_;
  long step_ = 0;
};

struct TrainConfig {
  double initial_lr = 1e-3;
  double lr_decay_factor = 0.7;
  int patience_epochs = 3;
  AdamWConfig optimizer;
  int epochs = 20;
  int batch_size = 8;
  std::uint64_t seed = 0;
  SupervisionMode mode;
  bool augment = true;
  AugmentPolicy augment_policy;
  ModelConfig model;

  void validate() const;
};

/// Plateau rule: once `epochs_without_improvement` reaches `patience`, the rate
/// becomes factor * current_lr; otherwise it is unchanged.
double lr_step(double current_lr, int epochs_without_improvement, double factor = 0.7, int patience = 3);

/// Tracks the monitored metric and applies lr_step, resetting the counter on
/// strict improvement or after a decay.
class PlateauScheduler {
 public:
  PlateauScheduler(double initial_lr, double factor, int patience);

  /// Returns true when `metric` strictly improves on the best value so far.
  bool observe(double metric);

  double lr() const { return lr_; }
  int stale_epochs() const { return stale_; }

 private:
  double lr_;
  double factor_;
  int patience_;
  int stale_ = 0;
  double best_;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;  // rate used during this epoch
  LossBreakdown train_loss;  // mean over the epoch's samples
  ConfusionCounts val_counts;
  MetricsReport val;
  bool improved = false;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

struct TrainResult {
  Checkpoint best;  // best validation IoU; the initial model when no epoch ran
  Checkpoint last;
  TrainHistory history;
};

struct EvalResult {
  ConfusionCounts counts;
  MetricsReport report;
};

/// Loss and parameter gradients for one sample at fixed weights.
struct SampleStep {
  LossBreakdown loss;
  Gradients grads;
};

SampleStep sample_gradients(const Model& model, const Sample& sample, const SupervisionMode& mode);

/// Runs `config.epochs` epochs of AdamW on the total objective. `on_epoch` is invoked
/// after each epoch's validation. Throws TrainingDiverged on a non-finite loss.
TrainResult train(const TrainConfig& config, const std::vector<Sample>& train_set, const std::vector<Sample>& val_set,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Global confusion over all pixels of `samples`, no augmentation.
EvalResult evaluate(const Model& model, const std::vector<Sample>& samples);
EvalResult evaluate(const Checkpoint& ckpt, const std::vector<Sample>& samples);

/// One `key=value` line per epoch; doubles use shortest round-trip formatting.
std::string format_epoch_record(const EpochRecord& r);
EpochRecord parse_epoch_record(const std::string& line);
std::vector<EpochRecord> parse_training_log(const std::string& text);

/// Replays recorded validation IoUs through the plateau rule and returns the
/// lr sequence it implies (one entry per epoch).
std::vector<double> replay_lr_schedule(const std::vector<EpochRecord>& records, double initial_lr,
                                       double factor = 0.7, int patience = 3);

}  // namespace bfseg
