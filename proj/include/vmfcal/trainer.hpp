#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "vmfcal/losses.hpp"
#include "vmfcal/synth.hpp"

namespace vmfcal {

enum class LrSchedule { constant, cosine };

LrSchedule lr_schedule_from_string(const std::string& s);
std::string to_string(LrSchedule s);

struct TrainConfig {
    int epochs = 30;
    int batch_size = 64;
    double lr = 0.05;
    LrSchedule lr_schedule = LrSchedule::cosine;
    double momentum = 0.9;
    double kappa_init = 16.0;
    double lambda = 0.2;
    uint64_t seed = 0;
    double kappa_floor = 1e-3;
    bool freeze_kappa = false;
    // stability knob: per-step clip on |dL/dkappa|
    double kappa_grad_clip = 10.0;
    bool enable_icd = true;
    bool enable_cfc = true;
    bool train_feature_map = false;
    int feature_map_in = 0;   // raw feature width, used when the map is on
    int feature_map_out = 0;  // classifier dimension
    int checkpoint_every = 0;  // epochs; 0 disables
    std::string checkpoint_dir;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double perf = 0.0;
    double icd = 0.0;
    double cfc = 0.0;
    double total = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
    double kappa_min = 0.0;
    double kappa_max = 0.0;
    double mean_overlap = 0.0;
};

struct TrainState {
    VmfClassifier clf;
    Eigen::MatrixXd feature_map;  // d_in x d; empty when the map is off
    long step = 0;
    Eigen::VectorXd vel_kappa;
    Eigen::MatrixXd vel_mu;
    Eigen::MatrixXd vel_map;
    std::vector<EpochRecord> metrics;
};

// Group accuracies; a group with no test samples is reported absent.
struct EvalMetrics {
    double overall = 0.0;
    double mean_per_class = 0.0;
    bool has_many = false, has_medium = false, has_few = false;
    double many = 0.0, medium = 0.0, few = 0.0;
};

// kappa_i = kappa_init for all classes, orientations uniform on the sphere.
VmfClassifier init_classifier(int num_classes, int dim, double kappa_init,
                              const Eigen::VectorXd& prior, uint64_t seed);

TrainState init_state(const SynthDataset& ds, const TrainConfig& cfg);

// One SGD step at the given learning rate: tangent-projected mu updates with
// renormalization, clipped kappa updates clamped at kappa_floor.
void sgd_step(TrainState& state, const FeatureBatch& batch, const TrainConfig& cfg,
              double lr);

// Learning rate for a given epoch under the configured schedule.
double epoch_lr(const TrainConfig& cfg, int epoch);

// Deterministic epoch-wise-shuffled mini-batch SGD with per-epoch metrics.
TrainState train(const SynthDataset& ds, const TrainConfig& cfg);

EvalMetrics evaluate(const VmfClassifier& clf, const FeatureBatch& batch,
                     const std::vector<Group>& groups);

// One structured-text line per epoch record.
std::string format_epoch_record(const EpochRecord& r);

}  // namespace vmfcal
