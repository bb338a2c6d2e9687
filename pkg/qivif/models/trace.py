import csv
import math
from dataclasses import dataclass, field
from typing import List

from qivif.utils.atomic import atomic_write

TRACE_COLUMNS = ("iteration", "relative_change", "residual", "objective", "penalty")


@dataclass
class SolverTrace:
    """Per-iteration record of an iterative solver."""

    solver: str
    relative_change: List[float] = field(default_factory=list)
    residual: List[float] = field(default_factory=list)
    objective: List[float] = field(default_factory=list)
    penalty: List[float] = field(default_factory=list)
    converged: bool = False

    def record(self, relative_change, residual=math.nan, objective=math.nan, penalty=math.nan):
        self.relative_change.append(float(relative_change))
        self.residual.append(float(residual))
        self.objective.append(float(objective))
        self.penalty.append(float(penalty))

    @property
    def iterations(self) -> int:
        return len(self.relative_change)

    def rows(self):
        for t in range(self.iterations):
            yield (
                t + 1,
                self.relative_change[t],
                self.residual[t],
                self.objective[t],
                self.penalty[t],
            )

    def to_csv(self, path) -> None:
        def _write(fh):
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for row in self.rows():
                writer.writerow([row[0]] + [f"{v:.10g}" for v in row[1:]])

        atomic_write(path, _write)


def relative_change(new, old) -> float:
    """Max-modulus change of `new` against `old`, relative to the max modulus of `new`."""
    diff = (new - old).norm("max")
    if diff == 0.0:
        return 0.0
    return diff / max(new.norm("max"), 1e-12)
