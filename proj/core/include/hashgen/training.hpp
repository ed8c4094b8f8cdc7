#pragma once

#include <cstdint>
#include <vector>

#include "hashgen/corpus.hpp"
#include "hashgen/gradcheck.hpp"
#include "hashgen/model.hpp"

namespace hashgen {

// Rescales all gradients by threshold/norm when the global L2 norm exceeds
// the threshold. Returns the pre-clip norm. Non-finite gradients abort with
// the offending parameter named.
double clip_global_norm(GradMap& grads, double threshold = 1.0);

// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8). Moment
// tensors mirror parameter shapes and are allocated on first use.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    GradMap m;
    GradMap u;
};

void adam_step(Parameters& params, const GradMap& grads, AdamState& opt);

// Early-stop learning-rate schedule: halve after `patience` epochs without
// dev improvement; stop once lr falls below the floor or after
// `max_bad_decays` consecutive halvings without improvement (0 disables that
// clause).
struct Schedule {
    double lr = 1e-3;
    double decay = 0.5;
    double floor = 1e-6;
    int patience = 1;
    int max_bad_decays = 3;

    double best_dev = 0.0;
    bool has_best = false;
    int epochs_since_improvement = 0;
    int consecutive_bad_decays = 0;

    enum class Action { improved, kept, halved, stop };
    Action observe(double dev_loss);
};

struct RunConfig {
    int batch = 64;
    std::uint64_t seed = 0;
    int max_epochs = 100;
    double lr = 1e-3;
    double clip_threshold = 1.0;
    double lr_decay = 0.5;
    double lr_floor = 1e-6;
    int patience = 1;
    int max_bad_decays = 3;
};

struct EpochStats {
    int epoch = 0;       // 1-based
    double train_loss = 0.0; // mean nats per target token
    double dev_loss = 0.0;
    double lr = 0.0; // rate in effect during the epoch
};

struct FitResult {
    Parameters best_params;
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_dev_loss = 0.0;
    bool diverged = false;
};

// Seeded shuffle, length-grouped batches, per-token mean loss, clip, Adam,
// dev evaluation and lr halving per epoch. Returns the parameters of the
// epoch with the lowest dev loss; on numeric divergence returns the last
// good checkpoint with `diverged` set. warm_start, when given, replaces the
// seeded initialization.
FitResult fit(const std::vector<TrainingExample>& train, const std::vector<TrainingExample>& dev,
              const ModelConfig& model_cfg, const RunConfig& run,
              const Parameters* warm_start = nullptr);

// Mean teacher-forced NLL per target token, dropout off.
double mean_nll(const std::vector<TrainingExample>& examples, const ModelConfig& cfg,
                const Parameters& params);

} // namespace hashgen
