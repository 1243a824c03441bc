#include "bfseg/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "bfseg/errors.hpp"
#include "bfseg/label_pyramid.hpp"

namespace bfseg {

AdamW::AdamW(const ParameterSet& params, AdamWConfig config)
    : config_(config), m_(Gradients::zeros_like(params)), v_(Gradients::zeros_like(params)) {}

void AdamW::step(ParameterSet& params, const Gradients& grads, double lr) {
  ++step_;
  const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& theta = params[i].values;
    auto& m = m_.values[i];
    auto& v = v_.values[i];
    const auto& g = grads.values[i];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      theta[j] -= lr * config_.weight_decay * theta[j];
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g[j];
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      theta[j] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

void TrainConfig::validate() const {
  if (!(initial_lr > 0.0)) throw ConfigError("initial learning rate must be positive");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor < 1.0)) throw ConfigError("lr decay factor must lie in (0,1)");
  if (patience_epochs < 1) throw ConfigError("patience must be at least one epoch");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (optimizer.weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
  mode.validate();
  model.validate();
}

double lr_step(double current_lr, int epochs_without_improvement, double factor, int patience) {
  return epochs_without_improvement >= patience ? current_lr * factor : current_lr;
}

PlateauScheduler::PlateauScheduler(double initial_lr, double factor, int patience)
    : lr_(initial_lr), factor_(factor), patience_(patience), best_(-std::numeric_limits<double>::infinity()) {}

bool PlateauScheduler::observe(double metric) {
  if (metric > best_) {
    best_ = metric;
    stale_ = 0;
    return true;
  }
  ++stale_;
  if (stale_ >= patience_) {
    lr_ = lr_step(lr_, stale_, factor_, patience_);
    stale_ = 0;
  }
  return false;
}

SampleStep sample_gradients(const Model& model, const Sample& sample, const SupervisionMode& mode) {
  ForwardTape tape;
  const PredictionPyramid preds = model.forward(sample.image, &tape);
  const MaskPyramid masks = build_mask_pyramid(sample.label);
  PredictionGradients g;
  SampleStep out;
  out.loss = total_loss(preds, masks, sample.label, mode, &g);
  out.grads = model.backward(tape, g);
  return out;
}

EvalResult evaluate(const Model& model, const std::vector<Sample>& samples) {
  if (samples.empty()) throw ConfigError("no samples");
  EvalResult out;
  for (const auto& s : samples) {
    const PredictionPyramid preds = model.forward(s.image);
    out.counts = accumulate(binarize(preds.final_logits), s.label, out.counts);
  }
  out.report = compute_metrics(out.counts);
  return out;
}

EvalResult evaluate(const Checkpoint& ckpt, const std::vector<Sample>& samples) {
  return evaluate(ckpt.to_model(), samples);
}

TrainResult train(const TrainConfig& config, const std::vector<Sample>& train_set, const std::vector<Sample>& val_set,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  if (train_set.empty() || val_set.empty()) throw ConfigError("no samples");
  if (config.augment) {
    for (const auto& s : train_set) config.augment_policy.validate(s.image.height, s.image.width);
  }

  Model model(config.model);
  TrainResult result;
  result.best = Checkpoint::from_model(model, 0);

  AdamW optimizer(model.parameters(), config.optimizer);
  PlateauScheduler scheduler(config.initial_lr, config.lr_decay_factor, config.patience_epochs);
  std::mt19937_64 shuffle_rng(mix_seed(config.seed, 1));
  std::mt19937_64 augment_rng(mix_seed(config.seed, 2));

  std::vector<std::size_t> order(train_set.size());
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = scheduler.lr();

    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    LossBreakdown sum;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      Gradients batch = Gradients::zeros_like(model.parameters());
      for (std::size_t k = start; k < stop; ++k) {
        const Sample& raw = train_set[order[k]];
        const Sample sample = config.augment ? augment(raw, augment_rng, config.augment_policy) : raw;
        SampleStep step = sample_gradients(model, sample, config.mode);
        if (!std::isfinite(step.loss.total)) {
          throw TrainingDiverged(fmt::format("non-finite loss at epoch {} on sample {} (final_ce={})", epoch,
                                             raw.id, step.loss.final_ce));
        }
        batch.add(step.grads);
        sum.final_ce += step.loss.final_ce;
        for (int i = 0; i < 4; ++i) {
          sum.lenient_per_scale[i] += step.loss.lenient_per_scale[i];
          sum.distill_per_scale[i] += step.loss.distill_per_scale[i];
        }
      }
      batch.scale(1.0 / static_cast<double>(stop - start));
      optimizer.step(model.parameters(), batch, rec.lr);
    }

    const double inv = 1.0 / static_cast<double>(train_set.size());
    rec.train_loss.final_ce = sum.final_ce * inv;
    for (int i = 0; i < 4; ++i) {
      rec.train_loss.lenient_per_scale[i] = sum.lenient_per_scale[i] * inv;
      rec.train_loss.distill_per_scale[i] = sum.distill_per_scale[i] * inv;
    }
    rec.train_loss.total = sum_terms(rec.train_loss);

    const EvalResult val = evaluate(model, val_set);
    rec.val_counts = val.counts;
    rec.val = val.report;
    rec.improved = scheduler.observe(rec.val.iou);
    if (rec.improved) result.best = Checkpoint::from_model(model, epoch);

    result.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  result.last = Checkpoint::from_model(model, config.epochs);
  return result;
}

std::string format_epoch_record(const EpochRecord& r) {
  const auto& l = r.train_loss;
  std::string out = fmt::format("epoch={} lr={} total={} final_ce={}", r.epoch, r.lr, l.total, l.final_ce);
  for (std::size_t i = 0; i < kStrides.size(); ++i) out += fmt::format(" lenient_s{}={}", kStrides[i], l.lenient_per_scale[i]);
  for (std::size_t i = 0; i < kStrides.size(); ++i) out += fmt::format(" distill_s{}={}", kStrides[i], l.distill_per_scale[i]);
  out += fmt::format(" val_iou={} val_precision={} val_recall={} val_f1={} val_tp={} val_tn={} val_fp={} val_fn={} improved={}",
                     r.val.iou, r.val.precision, r.val.recall, r.val.f1, r.val_counts.tp, r.val_counts.tn,
                     r.val_counts.fp, r.val_counts.fn, r.improved ? 1 : 0);
  return out;
}

EpochRecord parse_epoch_record(const std::string& line) {
  std::map<std::string, std::string> kv;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed log token '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("training log record lacks '" + key + "'");
    return it->second;
  };
  EpochRecord r;
  r.epoch = std::stoi(get("epoch"));
  r.lr = std::stod(get("lr"));
  r.train_loss.total = std::stod(get("total"));
  r.train_loss.final_ce = std::stod(get("final_ce"));
  for (std::size_t i = 0; i < kStrides.size(); ++i) {
    r.train_loss.lenient_per_scale[i] = std::stod(get(fmt::format("lenient_s{}", kStrides[i])));
    r.train_loss.distill_per_scale[i] = std::stod(get(fmt::format("distill_s{}", kStrides[i])));
  }
  r.val.iou = std::stod(get("val_iou"));
  r.val.precision = std::stod(get("val_precision"));
  r.val.recall = std::stod(get("val_recall"));
  r.val.f1 = std::stod(get("val_f1"));
  r.val_counts = {std::stoull(get("val_tp")), std::stoull(get("val_tn")), std::stoull(get("val_fp")),
                  std::stoull(get("val_fn"))};
  r.improved = get("improved") == "1";
  return r;
}

std::vector<EpochRecord> parse_training_log(const std::string& text) {
  std::vector<EpochRecord> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_epoch_record(line));
  }
  return out;
}

std::vector<double> replay_lr_schedule(const std::vector<EpochRecord>& records, double initial_lr, double factor,
                                       int patience) {
  PlateauScheduler scheduler(initial_lr, factor, patience);
  std::vector<double> lrs;
  lrs.reserve(records.size());
  for (const auto& r : records) {
    lrs.push_back(scheduler.lr());
    scheduler.observe(r.val.iou);
  }
  return lrs;
}

}  // namespace bfseg
