#include "hclm/trainer.hpp"

#include <chrono>
#include <cmath>

#include "hclm/evaluator.hpp"

namespace hclm {

Adam::Adam(std::vector<NamedTensor> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.size(), 0.0);
    v_.emplace_back(p.tensor.size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    Tensor& t = params_[pi].tensor;
    t.ensure_grad();
    const std::vector<double>& g = t.grad();
    std::vector<double>& value = t.mutable_values();
    std::vector<double>& m = m_[pi];
    std::vector<double>& v = v_[pi];
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i]))
        throw NumericError("adam: non-finite gradient in " + params_[pi].name + "[" +
                           std::to_string(i) + "]");
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      value[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

double clip_gradients(const std::vector<NamedTensor>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    p.tensor.ensure_grad();
    for (double g : p.tensor.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (const auto& p : params) {
      auto& grad = p.tensor.node()->grad;
      for (double& g : grad) g *= s;
    }
  }
  return norm;
}

TrainResult train(const TrainConfig& config, const std::vector<Document>& train_docs,
                  const std::vector<Document>& dev_docs) {
  if (config.d <= 0) throw ConfigError("d must be positive");
  if (config.epochs <= 0) throw ConfigError("epochs must be positive");
  if (config.dropout < 0.0 || config.dropout >= 1.0)
    throw ConfigError("dropout must be in [0,1)");
  if (train_docs.empty()) throw ContractViolation("train: no training documents");

  const ModelKind kind = model_kind_from_string(config.model);
  Vocabulary vocab = build_char_vocab(train_docs, config.min_count);

  Rng init_rng = Rng::derive(config.seed, 0);
  Rng dropout_rng = Rng::derive(config.seed, 1);
  Model model = Model::create(kind, vocab, config.d,
                              static_cast<std::size_t>(config.cache_size),
                              Initializer::uniform(-0.08, 0.08), &init_rng);

  const BatchPlan plan =
      make_batches(train_docs, config.batch, static_cast<std::size_t>(config.trunc));
  std::size_t max_segments = 0;
  for (const auto& stream : plan.streams) max_segments = std::max(max_segments, stream.size());

  auto params = model.named_params();
  Adam adam(params, config.lr);
  DropoutCtx drop{config.dropout, config.dropout > 0.0 ? &dropout_rng : nullptr};

  std::vector<std::unique_ptr<WordScorer>> scorers;
  for (int s = 0; s < config.batch; ++s) scorers.push_back(make_scorer(model, drop));

  TrainResult result;
  result.best_dev_bpc = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double epoch_nll = 0.0;
    std::size_t epoch_chars = 0;

    for (std::size_t step = 0; step < max_segments; ++step) {
      Tape tape;
      bool any = false;
      std::vector<Tensor> losses;
      for (std::size_t s = 0; s < plan.streams.size(); ++s) {
        const auto& stream = plan.streams[s];
        if (step >= stream.size()) continue;
        const Segment& seg = stream[step];
        WordScorer& scorer = *scorers[s];
        if (!seg.carry_in) scorer.reset_document();
        const auto& tokens = train_docs[static_cast<std::size_t>(seg.doc)].tokens;
        SegmentScore score = score_segment(
            scorer, std::span<const std::string>(tokens.data() + seg.begin, seg.len), false);
        losses.push_back(score.loss);
        epoch_nll += score.nll;
        epoch_chars += score.chars;
        any = true;
      }
      if (!any) break;
      Tensor total = losses.size() == 1 ? losses.front() : sum(concat(losses));
      tape.backward(total);
      clip_gradients(params, config.clip);
      adam.step();
      model.zero_grads();
      for (auto& scorer : scorers) scorer->detach_state();
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_bpc = epoch_chars == 0
                        ? 0.0
                        : epoch_nll / (std::log(2.0) * static_cast<double>(epoch_chars));
    if (!dev_docs.empty()) {
      EvalOptions opts;
      opts.threads = config.threads;
      log.dev_bpc = evaluate(model, dev_docs, opts).report.bpc;
    } else {
      log.dev_bpc = log.train_bpc;
    }
    log.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(log);

    if (log.dev_bpc < result.best_dev_bpc) {
      result.best_dev_bpc = log.dev_bpc;
      result.best_epoch = epoch;
      // Snapshot the parameter values.
      Checkpoint ckpt;
      ckpt.config = config;
      ckpt.model = Model::create(kind, vocab, config.d,
                                 static_cast<std::size_t>(config.cache_size),
                                 Initializer::zeros(), nullptr);
      auto dst = ckpt.model.named_params();
      for (std::size_t i = 0; i < params.size(); ++i)
        dst[i].tensor.mutable_values() = params[i].tensor.values();
      result.best = std::move(ckpt);
    }
  }
  return result;
}

}  // namespace hclm
