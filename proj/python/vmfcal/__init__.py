"""von Mises-Fisher mixture classifiers on the unit hyper-sphere.

Thin Python layer over the C++ core: log-domain Bessel special functions,
vMF mixture posteriors, the distribution overlap coefficient o = 1/(1+KL),
the inter-class discrepancy and class-feature consistency losses with
analytic gradients, Wood rejection sampling, a deterministic SGD trainer,
and post-training compactness calibration.
"""

try:
    from . import _vmfcal as _impl  # packaged layout: vmfcal/_vmfcal.so
except ImportError:
    import _vmfcal as _impl  # build-tree layout: extension on sys.path

import sys as _sys

_sys.modules[__name__ + "._vmfcal"] = _impl

from ._vmfcal import (  # noqa: F401,E402
    CalibrationConfig,
    CheckResult,
    ClassifierKind,
    EpochRecord,
    EvalMetrics,
    FeatureBatch,
    GenericClassifierWeights,
    Group,
    LossConfig,
    LossReport,
    LrSchedule,
    NumericalError,
    OverlapMatrix,
    SynthDataset,
    SynthSpec,
    TrainConfig,
    TrainState,
    VmfClassifier,
    VmfParams,
    bessel_ratio,
    bessel_ratio_deriv,
    calibrate,
    calibrate_generic,
    cfc_loss,
    evaluate,
    export_dataset,
    icd_loss,
    import_dataset,
    init_classifier,
    kl_vmf,
    load_checkpoint,
    log_bessel_i,
    log_norm_const,
    log_pdf,
    log_posterior,
    logits,
    make_dataset,
    normalize_overlaps,
    overlap_coeff,
    overlap_matrix,
    pareto_counts,
    performance_loss,
    posterior,
    project_to_sphere,
    run_selfchecks,
    sample_vmf,
    save_checkpoint,
    to_vmf,
    total_loss,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
