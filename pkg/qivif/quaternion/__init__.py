from qivif.quaternion.algebra import (
    Quaternion,
    QuaternionMatrix,
    matmul,
    qmul,
    solve_left,
    solve_right,
)
from qivif.quaternion.qsvd import QsvdResult, qsvd
from qivif.quaternion.spectral import (
    FILTERS,
    apply_filter,
    filter_spectrum,
    gradient,
    gram_spectrum,
    qfft,
)

__all__ = [
    "FILTERS",
    "Quaternion",
    "QuaternionMatrix",
    "QsvdResult",
    "apply_filter",
    "filter_spectrum",
    "gradient",
    "gram_spectrum",
    "matmul",
    "qfft",
    "qmul",
    "qsvd",
    "solve_left",
    "solve_right",
]
