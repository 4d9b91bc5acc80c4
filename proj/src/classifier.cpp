#include "vmfcal/classifier.hpp"

#include <cassert>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "vmfcal/io.hpp"

namespace vmfcal {

namespace {

constexpr double kUnitNormTol = 1e-6;

Eigen::VectorXd ensure_on_sphere(const Eigen::VectorXd& x) {
    const double norm = x.norm();
    if (!std::isfinite(norm) || norm == 0.0)
        throw std::domain_error("input vector is zero or non-finite");
    if (std::abs(norm - 1.0) > kUnitNormTol)
        throw std::domain_error("input vector is not unit norm");
    assert(std::abs(norm - 1.0) <= kUnitNormTol);
    // training arithmetic drifts norms; re-project silently inside tolerance
    return x / norm;
}

}  // namespace

void VmfParams::validate() const {
    if (!std::isfinite(kappa) || kappa <= 0.0)
        throw std::domain_error("kappa must be positive and finite");
    if (std::abs(mu.norm() - 1.0) > 1e-9)
        throw std::domain_error("orientation vector must be unit norm");
}

void VmfClassifier::validate() const {
    if (classes.empty()) throw std::domain_error("classifier has no classes");
    if (prior.size() != num_classes())
        throw std::domain_error("prior length does not match class count");
    if (prior.minCoeff() < 0.0 || std::abs(prior.sum() - 1.0) > 1e-9)
        throw std::domain_error("prior must be a probability vector");
    for (const auto& c : classes) {
        if (c.dim() != dim) throw std::domain_error("class dimension mismatch");
        c.validate();
    }
}

void FeatureBatch::validate(int num_classes) const {
    if (size() == 0) throw std::domain_error("empty batch");
    if (labels.size() != size())
        throw std::domain_error("labels length does not match feature count");
    for (int l = 0; l < size(); ++l) {
        if (labels[l] < 0 || labels[l] >= num_classes)
            throw std::domain_error("label out of range");
        if (features.row(l).norm() == 0.0)
            throw std::domain_error("zero feature vector at row " + std::to_string(l));
    }
}

Eigen::VectorXd project_to_sphere(const Eigen::VectorXd& x) {
    const double norm = x.norm();
    if (!std::isfinite(norm) || norm == 0.0)
        throw std::domain_error("cannot project zero or non-finite vector");
    return x / norm;
}

double log_pdf(const VmfParams& params, const Eigen::VectorXd& x_tilde) {
    const Eigen::VectorXd x = ensure_on_sphere(x_tilde);
    return log_norm_const(params.dim(), params.kappa) + params.kappa * x.dot(params.mu);
}

Eigen::VectorXd logits(const VmfClassifier& clf, const Eigen::VectorXd& x_tilde) {
    const Eigen::VectorXd x = ensure_on_sphere(x_tilde);
    const int c = clf.num_classes();
    Eigen::VectorXd out(c);
    for (int i = 0; i < c; ++i) {
        const double log_prior = clf.prior[i] > 0.0
                                     ? std::log(clf.prior[i])
                                     : -std::numeric_limits<double>::infinity();
        out[i] = log_prior + log_norm_const(clf.dim, clf.classes[i].kappa) +
                 clf.classes[i].kappa * x.dot(clf.classes[i].mu);
    }
    return out;
}

Eigen::VectorXd log_posterior(const VmfClassifier& clf, const Eigen::VectorXd& x_tilde) {
    Eigen::VectorXd z = logits(clf, x_tilde);
    const double zmax = z.maxCoeff();
    if (!std::isfinite(zmax)) throw std::domain_error("no prior mass on the support");
    double sum = 0.0;
    for (int i = 0; i < z.size(); ++i) sum += std::exp(z[i] - zmax);
    const double lse = zmax + std::log(sum);
    return (z.array() - lse).matrix();
}

Eigen::VectorXd posterior(const VmfClassifier& clf, const Eigen::VectorXd& x_tilde) {
    return log_posterior(clf, x_tilde).array().exp().matrix();
}

double performance_loss(const VmfClassifier& clf, const FeatureBatch& batch) {
    batch.validate(clf.num_classes());
    double sum = 0.0;
    for (int l = 0; l < batch.size(); ++l) {
        const Eigen::VectorXd x = project_to_sphere(batch.features.row(l));
        sum -= log_posterior(clf, x)[batch.labels[l]];
    }
    return sum / batch.size();
}

void save_checkpoint(const VmfClassifier& clf, std::ostream& out) {
    out << "vmf-checkpoint v1\n";
    out << "dim " << clf.dim << "\n";
    out << "classes " << clf.num_classes() << "\n";
    out << "prior";
    for (int i = 0; i < clf.prior.size(); ++i)
        out << ' ' << format_double_hex(clf.prior[i]);
    out << "\n";
    for (int i = 0; i < clf.num_classes(); ++i) {
        const auto& c = clf.classes[i];
        out << "class " << i << " kappa " << format_double_hex(c.kappa) << " mu";
        for (int j = 0; j < c.mu.size(); ++j) out << ' ' << format_double_hex(c.mu[j]);
        out << "\n";
    }
}

void save_checkpoint(const VmfClassifier& clf, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    save_checkpoint(clf, out);
}

VmfClassifier load_checkpoint(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "vmf-checkpoint v1")
        throw std::runtime_error("bad checkpoint header");
    VmfClassifier clf;
    std::string word;
    int num_classes = 0;
    in >> word >> clf.dim;
    if (word != "dim") throw std::runtime_error("bad checkpoint: expected dim");
    in >> word >> num_classes;
    if (word != "classes") throw std::runtime_error("bad checkpoint: expected classes");
    in >> word;
    if (word != "prior") throw std::runtime_error("bad checkpoint: expected prior");
    clf.prior.resize(num_classes);
    for (int i = 0; i < num_classes; ++i) {
        in >> word;
        clf.prior[i] = parse_double(word);
    }
    clf.classes.resize(num_classes);
    for (int i = 0; i < num_classes; ++i) {
        int idx = 0;
        in >> word >> idx;
        if (word != "class" || idx != i)
            throw std::runtime_error("bad checkpoint: expected class " + std::to_string(i));
        in >> word;
        if (word != "kappa") throw std::runtime_error("bad checkpoint: expected kappa");
        in >> word;
        clf.classes[i].kappa = parse_double(word);
        in >> word;
        if (word != "mu") throw std::runtime_error("bad checkpoint: expected mu");
        clf.classes[i].mu.resize(clf.dim);
        for (int j = 0; j < clf.dim; ++j) {
            in >> word;
            clf.classes[i].mu[j] = parse_double(word);
        }
    }
    if (!in) throw std::runtime_error("truncated checkpoint");
    clf.validate();
    return clf;
}

VmfClassifier load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    return load_checkpoint(in);
}

}  // namespace vmfcal
