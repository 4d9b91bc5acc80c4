#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vmfcal/calibrate.hpp"
#include "vmfcal/classifier.hpp"
#include "vmfcal/losses.hpp"
#include "vmfcal/overlap.hpp"
#include "vmfcal/selfcheck.hpp"
#include "vmfcal/specfn.hpp"
#include "vmfcal/synth.hpp"
#include "vmfcal/trainer.hpp"

namespace py = pybind11;
using namespace vmfcal;

PYBIND11_MODULE(_vmfcal, m) {
    m.doc() = "von Mises-Fisher mixture classifiers with overlap-based "
              "compactness losses and post-training calibration";

    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    // ---- special functions -------------------------------------------------
    m.def("bessel_ratio",
          [](int dim, double kappa) { return bessel_ratio(dim, kappa); },
          py::arg("dim"), py::arg("kappa"),
          "A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa)");
    m.def("bessel_ratio_deriv",
          [](int dim, double kappa) { return bessel_ratio_deriv(dim, kappa); },
          py::arg("dim"), py::arg("kappa"));
    m.def("log_bessel_i",
          [](double order, double x) { return log_bessel_i(order, x); },
          py::arg("order"), py::arg("x"));
    m.def("log_norm_const",
          [](int dim, double kappa) { return log_norm_const(dim, kappa); },
          py::arg("dim"), py::arg("kappa"),
          "log C_d(kappa), the log normalizing constant");

    // ---- classifier --------------------------------------------------------
    py::class_<VmfParams>(m, "VmfParams")
        .def(py::init<>())
        .def(py::init([](double kappa, const Eigen::VectorXd& mu) {
                 VmfParams p{kappa, mu};
                 p.validate();
                 return p;
             }),
             py::arg("kappa"), py::arg("mu"))
        .def_readwrite("kappa", &VmfParams::kappa)
        .def_readwrite("mu", &VmfParams::mu)
        .def_property_readonly("dim", &VmfParams::dim)
        .def("__repr__", [](const VmfParams& p) {
            return "VmfParams(kappa=" + std::to_string(p.kappa) +
                   ", dim=" + std::to_string(p.dim()) + ")";
        });

    py::class_<VmfClassifier>(m, "VmfClassifier")
        .def(py::init<>())
        .def_readwrite("dim", &VmfClassifier::dim)
        .def_readwrite("classes", &VmfClassifier::classes)
        .def_readwrite("prior", &VmfClassifier::prior)
        .def_property_readonly("num_classes", &VmfClassifier::num_classes)
        .def("validate", &VmfClassifier::validate);

    py::class_<FeatureBatch>(m, "FeatureBatch")
        .def(py::init<>())
        .def(py::init([](const Eigen::MatrixXd& f, const Eigen::VectorXi& l) {
                 FeatureBatch b;
                 b.features = f;
                 b.labels = l;
                 return b;
             }),
             py::arg("features"), py::arg("labels"))
        .def_readwrite("features", &FeatureBatch::features)
        .def_readwrite("labels", &FeatureBatch::labels)
        .def_property_readonly("size", &FeatureBatch::size);

    m.def("project_to_sphere", &project_to_sphere, py::arg("x"));
    m.def("log_pdf", &log_pdf, py::arg("params"), py::arg("x"));
    m.def("logits", &logits, py::arg("clf"), py::arg("x"));
    m.def("posterior", &posterior, py::arg("clf"), py::arg("x"));
    m.def("log_posterior", &log_posterior, py::arg("clf"), py::arg("x"));
    m.def("performance_loss", &performance_loss, py::arg("clf"), py::arg("batch"));
    m.def("save_checkpoint",
          [](const VmfClassifier& clf, const std::string& path) {
              save_checkpoint(clf, path);
          },
          py::arg("clf"), py::arg("path"));
    m.def("load_checkpoint",
          [](const std::string& path) { return load_checkpoint(path); },
          py::arg("path"));

    // ---- overlap -----------------------------------------------------------
    m.def("kl_vmf", &kl_vmf, py::arg("p_i"), py::arg("p_j"),
          "Directed KL divergence between two vMF distributions");
    m.def("overlap_coeff", &overlap_coeff, py::arg("p_i"), py::arg("p_j"),
          "o = 1 / (1 + KL), in (0, 1]");

    py::class_<OverlapMatrix>(m, "OverlapMatrix")
        .def_readonly("values", &OverlapMatrix::values)
        .def_readonly("row_avg", &OverlapMatrix::row_avg);
    m.def("overlap_matrix", &overlap_matrix, py::arg("clf"));

    // ---- losses ------------------------------------------------------------
    py::class_<LossConfig>(m, "LossConfig")
        .def(py::init<>())
        .def_readwrite("lambda_", &LossConfig::lambda)
        .def_readwrite("enable_icd", &LossConfig::enable_icd)
        .def_readwrite("enable_cfc", &LossConfig::enable_cfc)
        .def_readwrite("project_features", &LossConfig::project_features);

    py::class_<LossReport>(m, "LossReport")
        .def_readonly("perf", &LossReport::perf)
        .def_readonly("icd", &LossReport::icd)
        .def_readonly("cfc", &LossReport::cfc)
        .def_readonly("total", &LossReport::total)
        .def_property_readonly("dkappa",
                               [](const LossReport& r) { return r.grads.dkappa; })
        .def_property_readonly("dmu",
                               [](const LossReport& r) { return r.grads.dmu; })
        .def_readonly("dfeatures", &LossReport::dfeatures);

    m.def("icd_loss", &icd_loss, py::arg("clf"));
    m.def("cfc_loss", &cfc_loss, py::arg("clf"), py::arg("batch"),
          py::arg("project_features") = false);
    m.def("total_loss", &total_loss, py::arg("clf"), py::arg("batch"),
          py::arg("config") = LossConfig{});

    // ---- calibration -------------------------------------------------------
    py::enum_<ClassifierKind>(m, "ClassifierKind")
        .value("vmf", ClassifierKind::vmf)
        .value("linear", ClassifierKind::linear)
        .value("tau_norm", ClassifierKind::tau_norm)
        .value("causal", ClassifierKind::causal);

    py::class_<CalibrationConfig>(m, "CalibrationConfig")
        .def(py::init<>())
        .def_readwrite("alpha", &CalibrationConfig::alpha)
        .def_readwrite("source_kind", &CalibrationConfig::source_kind)
        .def_readwrite("tau", &CalibrationConfig::tau)
        .def_readwrite("gamma", &CalibrationConfig::gamma);

    py::class_<GenericClassifierWeights>(m, "GenericClassifierWeights")
        .def(py::init<>())
        .def_readwrite("kind", &GenericClassifierWeights::kind)
        .def_readwrite("weights", &GenericClassifierWeights::weights)
        .def_readwrite("clf", &GenericClassifierWeights::clf);

    m.def("to_vmf", &to_vmf, py::arg("weights"), py::arg("config"), py::arg("prior"));
    m.def("normalize_overlaps", &normalize_overlaps, py::arg("overlaps"),
          py::arg("kappas"));
    m.def("calibrate", &calibrate, py::arg("clf"), py::arg("config"),
          py::arg("test_prior"),
          "kappa_hat_i = kappa_i^alpha * o_hat_i^(1-alpha)");
    m.def("calibrate_generic", &calibrate_generic, py::arg("weights"),
          py::arg("config"), py::arg("test_prior"));

    // ---- synthetic data ----------------------------------------------------
    py::enum_<Group>(m, "Group")
        .value("many", Group::many)
        .value("medium", Group::medium)
        .value("few", Group::few);

    py::class_<SynthSpec>(m, "SynthSpec")
        .def(py::init<>())
        .def_readwrite("num_classes", &SynthSpec::num_classes)
        .def_readwrite("dim", &SynthSpec::dim)
        .def_readwrite("max_per_class", &SynthSpec::max_per_class)
        .def_readwrite("pareto_power", &SynthSpec::pareto_power)
        .def_readwrite("class_kappa", &SynthSpec::class_kappa)
        .def_readwrite("per_class_kappa", &SynthSpec::per_class_kappa)
        .def_readwrite("seed", &SynthSpec::seed)
        .def_readwrite("test_per_class", &SynthSpec::test_per_class)
        .def_readwrite("many_min", &SynthSpec::many_min)
        .def_readwrite("few_max", &SynthSpec::few_max);

    py::class_<SynthDataset>(m, "SynthDataset")
        .def_readonly("train", &SynthDataset::train)
        .def_readonly("test", &SynthDataset::test)
        .def_readonly("true_params", &SynthDataset::true_params)
        .def_readonly("counts", &SynthDataset::counts)
        .def_readonly("groups", &SynthDataset::groups);

    m.def("sample_vmf", &sample_vmf, py::arg("params"), py::arg("n"),
          py::arg("seed"), "Wood rejection sampler on the unit sphere");
    m.def("pareto_counts", &pareto_counts, py::arg("num_classes"),
          py::arg("n_max"), py::arg("power"));
    m.def("make_dataset", &make_dataset, py::arg("spec"));
    m.def("export_dataset", &export_dataset, py::arg("dataset"), py::arg("spec"),
          py::arg("dir"));
    m.def("import_dataset", &import_dataset, py::arg("dir"));

    // ---- training ----------------------------------------------------------
    py::enum_<LrSchedule>(m, "LrSchedule")
        .value("constant", LrSchedule::constant)
        .value("cosine", LrSchedule::cosine);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("lr", &TrainConfig::lr)
        .def_readwrite("lr_schedule", &TrainConfig::lr_schedule)
        .def_readwrite("momentum", &TrainConfig::momentum)
        .def_readwrite("kappa_init", &TrainConfig::kappa_init)
        .def_readwrite("lambda_", &TrainConfig::lambda)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("kappa_floor", &TrainConfig::kappa_floor)
        .def_readwrite("freeze_kappa", &TrainConfig::freeze_kappa)
        .def_readwrite("kappa_grad_clip", &TrainConfig::kappa_grad_clip)
        .def_readwrite("enable_icd", &TrainConfig::enable_icd)
        .def_readwrite("enable_cfc", &TrainConfig::enable_cfc)
        .def_readwrite("train_feature_map", &TrainConfig::train_feature_map)
        .def_readwrite("feature_map_in", &TrainConfig::feature_map_in)
        .def_readwrite("feature_map_out", &TrainConfig::feature_map_out)
        .def_readwrite("checkpoint_every", &TrainConfig::checkpoint_every)
        .def_readwrite("checkpoint_dir", &TrainConfig::checkpoint_dir);

    py::class_<EpochRecord>(m, "EpochRecord")
        .def_readonly("epoch", &EpochRecord::epoch)
        .def_readonly("perf", &EpochRecord::perf)
        .def_readonly("icd", &EpochRecord::icd)
        .def_readonly("cfc", &EpochRecord::cfc)
        .def_readonly("total", &EpochRecord::total)
        .def_readonly("train_acc", &EpochRecord::train_acc)
        .def_readonly("test_acc", &EpochRecord::test_acc)
        .def_readonly("kappa_min", &EpochRecord::kappa_min)
        .def_readonly("kappa_max", &EpochRecord::kappa_max)
        .def_readonly("mean_overlap", &EpochRecord::mean_overlap);

    py::class_<TrainState>(m, "TrainState")
        .def_readonly("clf", &TrainState::clf)
        .def_readonly("feature_map", &TrainState::feature_map)
        .def_readonly("step", &TrainState::step)
        .def_readonly("metrics", &TrainState::metrics);

    py::class_<EvalMetrics>(m, "EvalMetrics")
        .def_readonly("overall", &EvalMetrics::overall)
        .def_readonly("mean_per_class", &EvalMetrics::mean_per_class)
        .def_readonly("has_many", &EvalMetrics::has_many)
        .def_readonly("has_medium", &EvalMetrics::has_medium)
        .def_readonly("has_few", &EvalMetrics::has_few)
        .def_readonly("many", &EvalMetrics::many)
        .def_readonly("medium", &EvalMetrics::medium)
        .def_readonly("few", &EvalMetrics::few);

    m.def("init_classifier", &init_classifier, py::arg("num_classes"),
          py::arg("dim"), py::arg("kappa_init"), py::arg("prior"), py::arg("seed"));
    m.def("train", &train, py::arg("dataset"), py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("evaluate", &evaluate, py::arg("clf"), py::arg("batch"),
          py::arg("groups"));

    // ---- numerical self-checks ---------------------------------------------
    py::class_<CheckResult>(m, "CheckResult")
        .def_readonly("name", &CheckResult::name)
        .def_readonly("passed", &CheckResult::passed)
        .def_readonly("detail", &CheckResult::detail);
    m.def("run_selfchecks", &run_selfchecks, py::arg("seed") = 0,
          py::call_guard<py::gil_scoped_release>());
}
