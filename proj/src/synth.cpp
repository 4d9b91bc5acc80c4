#include "vmfcal/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vmfcal/io.hpp"
#include "vmfcal/rng.hpp"
#include "vmfcal/specfn.hpp"

namespace vmfcal {

namespace {

constexpr int kMaxRejectionIters = 1000;

// One draw of the marginal W = <x, mu> by Wood's envelope rejection.
double sample_w(Rng& rng, int d, double kappa) {
    const double dm1 = d - 1.0;
    const double b = (-2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1)) / dm1;
    const double x0 = (1.0 - b) / (1.0 + b);
    const double c = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);
    for (int it = 0; it < kMaxRejectionIters; ++it) {
        const double z = rng.beta(0.5 * dm1, 0.5 * dm1);
        const double u = rng.uniform_pos();
        const double w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) return w;
    }
    throw NumericalError("vMF rejection sampler exceeded its iteration cap");
}

}  // namespace

void SynthSpec::validate() const {
    if (num_classes < 2) throw std::domain_error("num_classes must be >= 2");
    if (dim < 2) throw std::domain_error("dim must be >= 2");
    if (max_per_class < num_classes)
        throw std::domain_error("max_per_class must be >= num_classes");
    if (pareto_power <= 0.0) throw std::domain_error("pareto_power must be positive");
    if (class_kappa <= 0.0) throw std::domain_error("class_kappa must be positive");
    if (!per_class_kappa.empty() &&
        static_cast<int>(per_class_kappa.size()) != num_classes)
        throw std::domain_error("per_class_kappa length must equal num_classes");
    if (test_per_class < 1) throw std::domain_error("test_per_class must be >= 1");
}

Eigen::MatrixXd sample_vmf(const VmfParams& params, int n, uint64_t seed) {
    if (n < 1) throw std::domain_error("sample count must be >= 1");
    params.validate();
    const int d = params.dim();
    Rng rng(seed);

    // Householder reflection mapping e1 onto mu
    Eigen::VectorXd u = Eigen::VectorXd::Unit(d, 0) - params.mu;
    const double u_norm = u.norm();
    const bool reflect = u_norm > 1e-12;
    if (reflect) u /= u_norm;

    Eigen::MatrixXd out(n, d);
    for (int s = 0; s < n; ++s) {
        const double w = sample_w(rng, d, params.kappa);
        Eigen::VectorXd x(d);
        x[0] = w;
        if (d > 1) {
            const Eigen::VectorXd v = rng.unit_vector(d - 1);
            x.tail(d - 1) = std::sqrt(std::max(0.0, 1.0 - w * w)) * v;
        }
        if (reflect) x -= 2.0 * u.dot(x) * u;
        out.row(s) = x / x.norm();
    }
    return out;
}

std::vector<int> pareto_counts(int num_classes, int n_max, double power) {
    if (num_classes < 2) throw std::domain_error("num_classes must be >= 2");
    if (n_max < num_classes)
        throw std::domain_error("n_max too small for the requested class count");
    std::vector<int> counts(num_classes);
    for (int i = 1; i <= num_classes; ++i) {
        const double u = static_cast<double>(num_classes - i) / (num_classes - 1);
        counts[i - 1] = std::max(1, static_cast<int>(std::lround(n_max * std::pow(u, power))));
    }
    counts[0] = n_max;
    return counts;
}

SynthDataset make_dataset(const SynthSpec& spec) {
    spec.validate();
    SynthDataset ds;
    ds.counts = pareto_counts(spec.num_classes, spec.max_per_class, spec.pareto_power);

    int n_train = 0;
    for (int c : ds.counts) n_train += c;
    const int n_test = spec.num_classes * spec.test_per_class;

    ds.train.features.resize(n_train, spec.dim);
    ds.train.labels.resize(n_train);
    ds.test.features.resize(n_test, spec.dim);
    ds.test.labels.resize(n_test);

    // substream 0: class directions; substream i+1: class i's draws
    Rng dir_rng(substream_seed(spec.seed, 0));
    for (int i = 0; i < spec.num_classes; ++i) {
        VmfParams p;
        p.kappa = spec.per_class_kappa.empty() ? spec.class_kappa
                                               : spec.per_class_kappa[i];
        p.mu = dir_rng.unit_vector(spec.dim);
        ds.true_params.push_back(p);
    }

    int train_row = 0, test_row = 0;
    for (int i = 0; i < spec.num_classes; ++i) {
        const int n_i = ds.counts[i] + spec.test_per_class;
        const Eigen::MatrixXd dirs =
            sample_vmf(ds.true_params[i], n_i, substream_seed(spec.seed, i + 1));
        // per-sample log-normal magnitude exercises the projection path
        Rng mag_rng(substream_seed(spec.seed, 1000003ull + i));
        for (int s = 0; s < n_i; ++s) {
            const double mag = std::exp(0.25 * mag_rng.normal());
            if (s < ds.counts[i]) {
                ds.train.features.row(train_row) = mag * dirs.row(s);
                ds.train.labels[train_row++] = i;
            } else {
                ds.test.features.row(test_row) = mag * dirs.row(s);
                ds.test.labels[test_row++] = i;
            }
        }
        const Group g = ds.counts[i] >= spec.many_min  ? Group::many
                        : ds.counts[i] <= spec.few_max ? Group::few
                                                       : Group::medium;
        ds.groups.push_back(g);
    }
    return ds;
}

namespace {

void write_batch_csv(const FeatureBatch& b, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "label,features...\n";
    for (int l = 0; l < b.size(); ++l) {
        out << b.labels[l];
        for (int j = 0; j < b.features.cols(); ++j)
            out << ',' << format_double(b.features(l, j));
        out << "\n";
    }
}

FeatureBatch read_batch_csv(const std::string& path, int dim) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<int> labels;
    std::vector<double> values;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');
        labels.push_back(std::stoi(field));
        while (std::getline(ss, field, ',')) values.push_back(parse_double(field));
    }
    const int n = static_cast<int>(labels.size());
    if (static_cast<int>(values.size()) != n * dim)
        throw std::runtime_error("feature column count mismatch in " + path);
    FeatureBatch b;
    b.features.resize(n, dim);
    b.labels.resize(n);
    for (int l = 0; l < n; ++l) {
        b.labels[l] = labels[l];
        for (int j = 0; j < dim; ++j) b.features(l, j) = values[l * dim + j];
    }
    return b;
}

}  // namespace

void export_dataset(const SynthDataset& ds, const SynthSpec& spec,
                    const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_batch_csv(ds.train, dir + "/train.csv");
    write_batch_csv(ds.test, dir + "/test.csv");

    std::ofstream meta(dir + "/meta.txt");
    if (!meta) throw std::runtime_error("cannot write dataset metadata");
    meta << "vmf-dataset v1\n";
    meta << "num_classes " << spec.num_classes << "\n";
    meta << "dim " << spec.dim << "\n";
    meta << "max_per_class " << spec.max_per_class << "\n";
    meta << "pareto_power " << format_double(spec.pareto_power) << "\n";
    meta << "class_kappa " << format_double(spec.class_kappa) << "\n";
    meta << "seed " << spec.seed << "\n";
    meta << "test_per_class " << spec.test_per_class << "\n";
    meta << "many_min " << spec.many_min << "\n";
    meta << "few_max " << spec.few_max << "\n";
    meta << "counts";
    for (int c : ds.counts) meta << ' ' << c;
    meta << "\ngroups";
    for (Group g : ds.groups) meta << ' ' << static_cast<int>(g);
    meta << "\n";
    for (size_t i = 0; i < ds.true_params.size(); ++i) {
        meta << "true_class " << i << " kappa "
             << format_double_hex(ds.true_params[i].kappa) << " mu";
        for (int j = 0; j < spec.dim; ++j)
            meta << ' ' << format_double_hex(ds.true_params[i].mu[j]);
        meta << "\n";
    }
}

SynthDataset import_dataset(const std::string& dir) {
    std::ifstream meta(dir + "/meta.txt");
    if (!meta) throw std::runtime_error("cannot read dataset metadata in " + dir);
    std::string line, word;
    std::getline(meta, line);
    if (line != "vmf-dataset v1") throw std::runtime_error("bad dataset metadata header");
    SynthSpec spec;
    SynthDataset ds;
    meta >> word >> spec.num_classes >> word >> spec.dim >> word >> spec.max_per_class;
    meta >> word;
    meta >> word;
    spec.pareto_power = parse_double(word);
    meta >> word >> word;
    spec.class_kappa = parse_double(word);
    meta >> word >> spec.seed >> word >> spec.test_per_class;
    meta >> word >> spec.many_min >> word >> spec.few_max;
    meta >> word;
    ds.counts.resize(spec.num_classes);
    for (int& c : ds.counts) meta >> c;
    meta >> word;
    ds.groups.resize(spec.num_classes);
    for (Group& g : ds.groups) {
        int v;
        meta >> v;
        g = static_cast<Group>(v);
    }
    for (int i = 0; i < spec.num_classes; ++i) {
        int idx;
        meta >> word >> idx >> word >> word;
        VmfParams p;
        p.kappa = parse_double(word);
        meta >> word;
        p.mu.resize(spec.dim);
        for (int j = 0; j < spec.dim; ++j) {
            meta >> word;
            p.mu[j] = parse_double(word);
        }
        ds.true_params.push_back(p);
    }
    if (!meta) throw std::runtime_error("truncated dataset metadata");
    ds.train = read_batch_csv(dir + "/train.csv", spec.dim);
    ds.test = read_batch_csv(dir + "/test.csv", spec.dim);
    return ds;
}

}  // namespace vmfcal
