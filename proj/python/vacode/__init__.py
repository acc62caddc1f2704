"""Verbal autopsy cause-of-death coding: InterVA, NBC, Tariff and InSilicoVA."""

from ._core import (
    VaError,
    __version__,
    csmf_accuracy,
    data_check,
    data_dir,
    interva_posterior,
    interva_postprocess,
    nbc_posterior,
    run,
    sha256_hex,
    tariff_matrix,
)

__all__ = [
    "VaError",
    "__version__",
    "csmf_accuracy",
    "data_check",
    "data_dir",
    "interva_posterior",
    "interva_postprocess",
    "nbc_posterior",
    "run",
    "sha256_hex",
    "tariff_matrix",
]
