#include <cmath>
#include <numeric>
#include <set>

#include "lrmt/error.hpp"
#include "lrmt/nmt/seq2seq.hpp"

namespace lrmt::nmt {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0)) throw UsageError("learning rate must be non-negative");
  if (!(teacher_forcing_ratio >= 0 && teacher_forcing_ratio <= 1))
    throw UsageError("teacher forcing ratio must be in [0, 1]");
  if (!(grad_clip_norm > 0)) throw UsageError("gradient clip norm must be positive");
}

namespace {

double global_norm(const Parameters& grads) {
  double s = 0;
  for (const auto& t : grads.tensors())
    for (double g : t.data) s += g * g;
  return std::sqrt(s);
}

void zero(Parameters& p) {
  for (auto& t : p.tensors()) std::fill(t.data.begin(), t.data.end(), 0.0);
}

}  // namespace

double evaluate_loss(const Seq2SeqModel& model, const std::vector<SequencePair>& pairs) {
  if (pairs.empty()) return 0;
  double total = 0;
  for (const auto& pair : pairs) total += loss_and_gradients(model, pair, {1.0, false}, nullptr, nullptr).loss;
  return total / static_cast<double>(pairs.size());
}

TrainHistory train(Seq2SeqModel& model, const std::vector<SequencePair>& pairs, const TrainConfig& config,
                   const std::vector<SequencePair>* validation, const EpochCallback& on_epoch) {
  config.validate();
  if (pairs.empty()) throw UsageError("training needs at least one pair");
  Rng rng(config.seed);
  TrainHistory history;
  Parameters grads = Parameters::zeros(model.config);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  const LossOptions options{config.teacher_forcing_ratio, true};

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) rng.shuffle(order);
    double total = 0;
    for (std::size_t i : order) {
      zero(grads);
      auto r = loss_and_gradients(model, pairs[i], options, &rng, &grads);
      if (!std::isfinite(r.loss))
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", pair " + std::to_string(i));
      total += r.loss;
      double norm = global_norm(grads);
      if (!std::isfinite(norm))
        throw NumericalError("non-finite gradient at epoch " + std::to_string(epoch) + ", pair " + std::to_string(i));
      const double scale = norm > config.grad_clip_norm ? config.grad_clip_norm / norm : 1.0;
      auto params = model.params.tensors();
      auto grad_views = grads.tensors();
      for (std::size_t t = 0; t < params.size(); ++t) {
        auto& dst = params[t].data;
        const auto& g = grad_views[t].data;
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] -= config.learning_rate * scale * g[k];
      }
    }
    history.train_loss.push_back(total / static_cast<double>(pairs.size()));
    std::optional<double> val;
    if (validation && !validation->empty()) {
      val = evaluate_loss(model, *validation);
      history.validation_loss.push_back(*val);
    }
    if (on_epoch) on_epoch(epoch, history.train_loss.back(), val);
  }
  return history;
}

GradientCheckResult gradient_check(const Seq2SeqModel& model, const SequencePair& pair,
                                   const GradientCheckOptions& options) {
  const LossOptions deterministic{1.0, false};
  Parameters grads = Parameters::zeros(model.config);
  loss_and_gradients(model, pair, deterministic, nullptr, &grads);

  Seq2SeqModel probe = model;
  auto params = probe.params.tensors();
  auto analytic = grads.tensors();
  if (!options.corrupt_tensor.empty()) {
    bool found = false;
    for (auto& t : analytic)
      if (t.name == options.corrupt_tensor) {
        for (auto& g : t.data) g = -g;
        found = true;
      }
    if (!found) throw UsageError("unknown tensor '" + options.corrupt_tensor + "'");
  }

  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& t : params) {
    offsets.push_back(total);
    total += t.data.size();
  }
  std::set<std::size_t> chosen;
  Rng rng(options.seed);
  if (options.samples >= total) {
    for (std::size_t i = 0; i < total; ++i) chosen.insert(i);
  } else {
    while (chosen.size() < options.samples) chosen.insert(static_cast<std::size_t>(rng.uniform_below(total)));
  }

  GradientCheckResult result;
  std::size_t t = 0;
  for (std::size_t flat : chosen) {
    while (t + 1 < offsets.size() && offsets[t + 1] <= flat) ++t;
    double& x = params[t].data[flat - offsets[t]];
    const double g_a = analytic[t].data[flat - offsets[t]];
    const double orig = x;
    x = orig + options.epsilon;
    const double plus = loss_and_gradients(probe, pair, deterministic, nullptr, nullptr).loss;
    x = orig - options.epsilon;
    const double minus = loss_and_gradients(probe, pair, deterministic, nullptr, nullptr).loss;
    x = orig;
    const double g_n = (plus - minus) / (2 * options.epsilon);
    const double err = std::abs(g_a - g_n) / std::max({std::abs(g_a), std::abs(g_n), 1e-12});
    if (result.checked == 0 || err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_tensor = params[t].name;
      result.worst_analytic = g_a;
      result.worst_numeric = g_n;
    }
    ++result.checked;
  }
  return result;
}

void write_loss_csv(const TrainHistory& history, std::ostream& out) {
  out << "epoch,mean_loss\n";
  out.precision(17);
  for (std::size_t i = 0; i < history.train_loss.size(); ++i) out << i + 1 << ',' << history.train_loss[i] << '\n';
}

}  // namespace lrmt::nmt
