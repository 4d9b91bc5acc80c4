#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "vmfcal/classifier.hpp"

namespace vmfcal {

// Synthetic long-tailed dataset description. Class counts follow a Pareto
// power profile; group cutoffs are declared configuration, reported in
// outputs.
struct SynthSpec {
    int num_classes = 50;
    int dim = 32;
    int max_per_class = 500;
    double pareto_power = 6.0;
    double class_kappa = 16.0;  // shared generation compactness
    std::vector<double> per_class_kappa;  // optional override, length C
    uint64_t seed = 0;
    int test_per_class = 20;
    int many_min = 100;  // Many: n_i >= many_min
    int few_max = 20;    // Few:  n_i <= few_max

    void validate() const;
};

enum class Group { many = 0, medium = 1, few = 2 };

struct SynthDataset {
    FeatureBatch train;
    FeatureBatch test;  // balanced across classes
    std::vector<VmfParams> true_params;
    std::vector<int> counts;
    std::vector<Group> groups;
};

// n unit vectors from vMF(kappa, mu) via the Wood rejection sampler in the
// tangent-normal decomposition. Deterministic given the seed.
Eigen::MatrixXd sample_vmf(const VmfParams& params, int n, uint64_t seed);

// Non-increasing class counts n_i = max(1, round(n_max * u_i^power)) with
// u_i = (C - i)/(C - 1) for i = 1..C, so n_1 = n_max.
std::vector<int> pareto_counts(int num_classes, int n_max, double power);

SynthDataset make_dataset(const SynthSpec& spec);

// CSV export/import: one row per sample (label, d feature values), plus a
// sidecar metadata document echoing the spec, counts and group assignment.
void export_dataset(const SynthDataset& ds, const SynthSpec& spec,
                    const std::string& dir);
SynthDataset import_dataset(const std::string& dir);

}  // namespace vmfcal
