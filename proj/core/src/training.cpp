#include "hashgen/training.hpp"

#include <algorithm>
#include <cmath>

namespace hashgen {

double clip_global_norm(GradMap& grads, double threshold) {
    double sq = 0.0;
    for (const auto& [name, g] : grads) {
        for (double v : g.data) {
            if (!std::isfinite(v))
                throw numeric_error("clip_global_norm: non-finite gradient in parameter '" + name + "'");
            sq += v * v;
        }
    }
    double norm = std::sqrt(sq);
    if (norm > threshold) {
        double factor = threshold / norm;
        for (auto& [name, g] : grads) g.scale_inplace(factor);
    }
    return norm;
}

void adam_step(Parameters& params, const GradMap& grads, AdamState& opt) {
    if (opt.lr <= 0.0) throw config_error("adam_step: learning rate must be positive");
    ++opt.step;
    double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));

    for (auto& [name, p] : params) {
        auto git = grads.find(name);
        if (git == grads.end()) continue; // unreachable parameter this step
        const Tensor& g = git->second;
        if (g.shape != p.shape)
            throw shape_error("adam_step: gradient shape " + shape_str(g.shape) +
                              " does not match parameter '" + name + "' " + shape_str(p.shape));
        auto mit = opt.m.find(name);
        if (mit == opt.m.end()) mit = opt.m.emplace(name, Tensor::zeros(p.shape)).first;
        auto uit = opt.u.find(name);
        if (uit == opt.u.end()) uit = opt.u.emplace(name, Tensor::zeros(p.shape)).first;
        Tensor& m = mit->second;
        Tensor& u = uit->second;
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            double gv = g.data[i];
            m.data[i] = opt.beta1 * m.data[i] + (1.0 - opt.beta1) * gv;
            u.data[i] = opt.beta2 * u.data[i] + (1.0 - opt.beta2) * gv * gv;
            double m_hat = m.data[i] / bc1;
            double u_hat = u.data[i] / bc2;
            p.data[i] -= opt.lr * m_hat / (std::sqrt(u_hat) + opt.eps);
        }
    }
}

Schedule::Action Schedule::observe(double dev_loss) {
    if (!has_best || dev_loss < best_dev) {
        best_dev = dev_loss;
        has_best = true;
        epochs_since_improvement = 0;
        consecutive_bad_decays = 0;
        return Action::improved;
    }
    ++epochs_since_improvement;
    if (epochs_since_improvement < patience) return Action::kept;
    lr *= decay;
    epochs_since_improvement = 0;
    ++consecutive_bad_decays;
    if (lr < floor) return Action::stop;
    if (max_bad_decays > 0 && consecutive_bad_decays >= max_bad_decays) return Action::stop;
    return Action::halved;
}

double mean_nll(const std::vector<TrainingExample>& examples, const ModelConfig& cfg,
                const Parameters& params) {
    if (examples.empty()) throw contract_error("mean_nll: empty example list");
    double total = 0.0;
    std::int64_t tokens = 0;
    Tape tape;
    ModelSession session(tape, cfg, params, /*trainable=*/false);
    for (const auto& ex : examples) {
        NllResult r = session.forward_nll(ex);
        total += tape.value(r.loss).data[0];
        tokens += r.tokens;
    }
    return total / static_cast<double>(tokens);
}

FitResult fit(const std::vector<TrainingExample>& train, const std::vector<TrainingExample>& dev,
              const ModelConfig& model_cfg, const RunConfig& run, const Parameters* warm_start) {
    if (train.empty() || dev.empty()) throw contract_error("fit: train and dev splits must be nonempty");
    if (run.batch < 1) throw config_error("fit: batch size must be >= 1");
    if (run.max_epochs < 1) throw config_error("fit: max_epochs must be >= 1");

    Rng init_rng = Rng::child(run.seed, "init");
    Rng shuffle_rng = Rng::child(run.seed, "shuffle");
    Rng dropout_rng = Rng::child(run.seed, "dropout");

    Parameters params = warm_start ? *warm_start : init_params(model_cfg, init_rng);
    AdamState opt;
    opt.lr = run.lr;

    Schedule schedule;
    schedule.lr = run.lr;
    schedule.decay = run.lr_decay;
    schedule.floor = run.lr_floor;
    schedule.patience = run.patience;
    schedule.max_bad_decays = run.max_bad_decays;

    FitResult result;
    result.best_params = params;
    result.best_dev_loss = mean_nll(dev, model_cfg, params);
    result.best_epoch = 0;
    schedule.observe(result.best_dev_loss);

    auto total_len = [](const TrainingExample& ex) {
        return ex.post_ids.size() + ex.conv_ids.size() + ex.target_ids.size();
    };

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= run.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        // Group similar lengths inside windows of batch x 20 shuffled
        // examples so batches stay length-homogeneous without fixing the
        // epoch-level order.
        std::size_t window = static_cast<std::size_t>(run.batch) * 20;
        for (std::size_t begin = 0; begin < order.size(); begin += window) {
            std::size_t end = std::min(order.size(), begin + window);
            std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(begin),
                             order.begin() + static_cast<std::ptrdiff_t>(end),
                             [&](std::size_t a, std::size_t b) { return total_len(train[a]) < total_len(train[b]); });
        }

        double epoch_nll = 0.0;
        std::int64_t epoch_tokens = 0;
        bool numeric_failure = false;

        for (std::size_t begin = 0; begin < order.size() && !numeric_failure;
             begin += static_cast<std::size_t>(run.batch)) {
            std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(run.batch));
            Tape tape;
            ModelSession session(tape, model_cfg, params, /*trainable=*/true, /*training=*/true,
                                 &dropout_rng);
            Var batch_sum;
            std::int64_t batch_tokens = 0;
            for (std::size_t i = begin; i < end; ++i) {
                NllResult r = session.forward_nll(train[order[i]]);
                batch_sum = batch_sum.valid() ? tape.add(batch_sum, r.loss) : r.loss;
                batch_tokens += r.tokens;
            }
            Var batch_loss = tape.scale(batch_sum, 1.0 / static_cast<double>(batch_tokens));
            double loss_value = tape.value(batch_loss).data[0];
            if (!std::isfinite(loss_value)) {
                numeric_failure = true;
                break;
            }
            epoch_nll += tape.value(batch_sum).data[0];
            epoch_tokens += batch_tokens;

            try {
                tape.backward(batch_loss);
                GradMap grads = tape.gradients();
                clip_global_norm(grads, run.clip_threshold);
                opt.lr = schedule.lr;
                adam_step(params, grads, opt);
            } catch (const numeric_error&) {
                numeric_failure = true;
            }
        }

        if (numeric_failure) {
            result.diverged = true;
            return result;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_nll / static_cast<double>(epoch_tokens);
        stats.dev_loss = mean_nll(dev, model_cfg, params);
        stats.lr = schedule.lr;
        result.history.push_back(stats);

        Schedule::Action action = schedule.observe(stats.dev_loss);
        if (action == Schedule::Action::improved) {
            result.best_params = params;
            result.best_dev_loss = stats.dev_loss;
            result.best_epoch = epoch;
        }
        if (action == Schedule::Action::stop) break;
    }
    return result;
}

} // namespace hashgen
