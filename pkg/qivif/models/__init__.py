from qivif.models.params import PipelineParams, QaumMode, QhbfParams, QlrdParams, QlsParams
from qivif.models.trace import SolverTrace

__all__ = [
    "PipelineParams",
    "QaumMode",
    "QhbfParams",
    "QlrdParams",
    "QlsParams",
    "SolverTrace",
]
