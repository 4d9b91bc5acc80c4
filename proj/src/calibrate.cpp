#include "vmfcal/calibrate.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "vmfcal/io.hpp"
#include "vmfcal/overlap.hpp"

namespace vmfcal {

ClassifierKind classifier_kind_from_string(const std::string& s) {
    if (s == "vmf") return ClassifierKind::vmf;
    if (s == "linear") return ClassifierKind::linear;
    if (s == "tau_norm") return ClassifierKind::tau_norm;
    if (s == "causal") return ClassifierKind::causal;
    throw std::domain_error("unknown classifier kind: " + s);
}

std::string to_string(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::vmf: return "vmf";
        case ClassifierKind::linear: return "linear";
        case ClassifierKind::tau_norm: return "tau_norm";
        case ClassifierKind::causal: return "causal";
    }
    throw std::logic_error("unreachable");
}

void CalibrationConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::domain_error("alpha must be in [0, 1]");
    if (source_kind == ClassifierKind::causal && gamma <= 0.0)
        throw std::domain_error("gamma must be positive");
}

VmfClassifier to_vmf(const GenericClassifierWeights& gw, const CalibrationConfig& cfg,
                     const Eigen::VectorXd& prior) {
    cfg.validate();
    if (gw.kind == ClassifierKind::vmf) return gw.clf;

    const int c = static_cast<int>(gw.weights.rows());
    const int d = static_cast<int>(gw.weights.cols());
    VmfClassifier clf;
    clf.dim = d;
    clf.prior = prior;
    for (int i = 0; i < c; ++i) {
        const double norm = gw.weights.row(i).norm();
        if (norm == 0.0)
            throw std::domain_error("zero-norm weight row for class " + std::to_string(i));
        VmfParams p;
        p.mu = gw.weights.row(i).transpose() / norm;
        switch (gw.kind) {
            case ClassifierKind::linear: p.kappa = norm; break;
            case ClassifierKind::tau_norm: p.kappa = std::pow(norm, 1.0 - cfg.tau); break;
            case ClassifierKind::causal: p.kappa = norm / (norm + cfg.gamma); break;
            case ClassifierKind::vmf: break;
        }
        clf.classes.push_back(p);
    }
    clf.validate();
    return clf;
}

Eigen::VectorXd normalize_overlaps(const Eigen::VectorXd& overlaps,
                                   const Eigen::VectorXd& kappas) {
    if (overlaps.size() < 2 || overlaps.size() != kappas.size())
        throw std::domain_error("normalize_overlaps needs matching vectors, C >= 2");
    const double o_min = overlaps.minCoeff(), o_max = overlaps.maxCoeff();
    const double k_min = kappas.minCoeff(), k_max = kappas.maxCoeff();
    if (o_max == o_min || k_max == k_min) {
        log_message(LogLevel::warn,
                    "degenerate overlap/kappa range; calibration falls back to identity");
        return kappas;
    }
    return ((overlaps.array() - o_min) / (o_max - o_min) * (k_max - k_min) + k_min)
        .matrix();
}

VmfClassifier calibrate(const VmfClassifier& clf, const CalibrationConfig& cfg,
                        const Eigen::VectorXd& test_prior) {
    cfg.validate();
    clf.validate();
    const int c = clf.num_classes();
    if (test_prior.size() != c)
        throw std::domain_error("test prior length does not match class count");

    const OverlapMatrix om = overlap_matrix(clf);
    Eigen::VectorXd kappas(c);
    for (int i = 0; i < c; ++i) kappas[i] = clf.classes[i].kappa;
    const Eigen::VectorXd o_hat = normalize_overlaps(om.row_avg, kappas);
    if (o_hat.minCoeff() <= 0.0)
        throw std::domain_error("normalized overlaps must be positive for geometric interpolation");

    VmfClassifier out = clf;
    out.prior = test_prior;
    for (int i = 0; i < c; ++i) {
        if (cfg.alpha == 1.0)
            out.classes[i].kappa = kappas[i];
        else if (cfg.alpha == 0.0)
            out.classes[i].kappa = o_hat[i];
        else
            out.classes[i].kappa =
                std::pow(kappas[i], cfg.alpha) * std::pow(o_hat[i], 1.0 - cfg.alpha);
    }
    return out;
}

GenericClassifierWeights calibrate_generic(const GenericClassifierWeights& gw,
                                           const CalibrationConfig& cfg,
                                           const Eigen::VectorXd& test_prior) {
    const VmfClassifier as_vmf = to_vmf(gw, cfg, test_prior);
    const VmfClassifier calibrated = calibrate(as_vmf, cfg, test_prior);
    GenericClassifierWeights out;
    out.kind = gw.kind;
    if (gw.kind == ClassifierKind::vmf) {
        out.clf = calibrated;
        return out;
    }
    const int c = calibrated.num_classes();
    out.weights.resize(c, calibrated.dim);
    for (int i = 0; i < c; ++i) {
        const double k_hat = calibrated.classes[i].kappa;
        double norm = 0.0;
        switch (gw.kind) {
            case ClassifierKind::linear: norm = k_hat; break;
            case ClassifierKind::tau_norm: norm = std::pow(k_hat, 1.0 / (1.0 - cfg.tau)); break;
            case ClassifierKind::causal:
                // kappa = n/(n+gamma) inverts only inside (0,1)
                if (k_hat <= 0.0 || k_hat >= 1.0)
                    throw std::domain_error(
                        "calibrated kappa outside (0,1) cannot be mapped back to a "
                        "causal weight norm");
                norm = cfg.gamma * k_hat / (1.0 - k_hat);
                break;
            case ClassifierKind::vmf: break;
        }
        out.weights.row(i) = norm * calibrated.classes[i].mu.transpose();
    }
    return out;
}

void save_weights_csv(const GenericClassifierWeights& gw, const CalibrationConfig& cfg,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "# kind=" << to_string(gw.kind) << " tau=" << format_double(cfg.tau)
        << " gamma=" << format_double(cfg.gamma) << "\n";
    for (int i = 0; i < gw.weights.rows(); ++i) {
        for (int j = 0; j < gw.weights.cols(); ++j) {
            if (j) out << ',';
            out << format_double(gw.weights(i, j));
        }
        out << "\n";
    }
}

GenericClassifierWeights load_weights_csv(const std::string& path,
                                          CalibrationConfig& cfg_out) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# kind=", 0) != 0)
        throw std::runtime_error("weight CSV must start with '# kind=...' header");
    GenericClassifierWeights gw;
    {
        std::stringstream ss(line.substr(2));
        std::string field;
        while (ss >> field) {
            const auto eq = field.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
            if (key == "kind") gw.kind = classifier_kind_from_string(val);
            else if (key == "tau") cfg_out.tau = parse_double(val);
            else if (key == "gamma") cfg_out.gamma = parse_double(val);
        }
    }
    cfg_out.source_kind = gw.kind;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) row.push_back(parse_double(field));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("weight CSV has no rows");
    gw.weights.resize(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size())
            throw std::runtime_error("ragged weight CSV");
        for (size_t j = 0; j < rows[i].size(); ++j)
            gw.weights(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    }
    return gw;
}

}  // namespace vmfcal
