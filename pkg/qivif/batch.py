"""
Batch fusion over a manifest of visible/infrared pairs.

Manifest: one pair per line, `visible<TAB>infrared`, paths relative to the
manifest's directory; blank lines and `#` comments are skipped.
"""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from tqdm import tqdm

from qivif.config import Config, RunConfig
from qivif.exceptions import InvalidConfigError, QivifError
from qivif.fusion import FUSED_NAME, JOURNAL_NAME, fuse_images, pair_id
from qivif.imgcodec import read_png, write_png
from qivif.journal import RunJournal
from qivif.metrics import MetricReport, compute_metrics, write_metrics_csv
from qivif.utils.style import ANSI_RED, ANSI_RESET

config = Config()


@dataclass(frozen=True)
class PairOutcome:
    pair_id: str
    report: Optional[MetricReport] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class BatchReport:
    outcomes: List[PairOutcome] = field(default_factory=list)

    @property
    def failures(self) -> List[PairOutcome]:
        return [o for o in self.outcomes if not o.ok]

    @property
    def exit_code(self) -> int:
        return 1 if self.failures else 0


def read_manifest(path) -> List[Tuple[str, str]]:
    base = os.path.dirname(os.path.abspath(path))
    pairs = []
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as exc:
        raise InvalidConfigError("could not read manifest", f"{path} ({exc})") from exc
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split("\t")
        if len(parts) != 2:
            raise InvalidConfigError("manifest line must hold two tab-separated paths", f"{path}:{number}")
        pairs.append(tuple(os.path.join(base, p.strip()) for p in parts))
    return pairs


def _unique_ids(pairs) -> List[str]:
    seen = {}
    ids = []
    for vis, _ in pairs:
        name = pair_id(vis)
        count = seen.get(name, 0)
        seen[name] = count + 1
        ids.append(name if count == 0 else f"{name}_{count}")
    return ids


def fuse_pair(visible_path, infrared_path, out_dir, run: RunConfig, label: str) -> PairOutcome:
    """Fuse one manifest pair into `out_dir`, capturing per-pair failures."""
    try:
        visible = read_png(visible_path, mode="rgb")
        infrared = read_png(infrared_path, mode="gray")
        result = fuse_images(visible, infrared, run, label=label)
        write_png(result.fused, os.path.join(out_dir, FUSED_NAME))
        return PairOutcome(label, report=compute_metrics(result.fused, visible, infrared))
    except QivifError as exc:
        return PairOutcome(label, error=str(exc))
    except ValueError as exc:
        return PairOutcome(label, error=f"{type(exc).__name__}: {exc}")


def run_batch(manifest, out_dir, run: RunConfig = RunConfig()) -> BatchReport:
    pairs = read_manifest(manifest)
    ids = _unique_ids(pairs)
    os.makedirs(out_dir, exist_ok=True)
    journal = RunJournal(os.path.join(out_dir, JOURNAL_NAME))
    journal.record({"type": "inputs", "manifest": os.fspath(manifest), "pairs": len(pairs), "config_sha256": run.digest()})

    jobs = [
        (vis, ir, os.path.join(out_dir, label), label) for (vis, ir), label in zip(pairs, ids)
    ]
    journal.start_stage("fuse_pairs", workers=run.pipeline.workers)
    with ThreadPoolExecutor(max_workers=run.pipeline.workers) as pool:
        futures = [pool.submit(fuse_pair, vis, ir, target, run, label) for vis, ir, target, label in jobs]
        outcomes = [f.result() for f in tqdm(futures, desc="fusing", unit="pair", disable=not pairs)]
    journal.end_stage("fuse_pairs", failed=sum(not o.ok for o in outcomes))

    report = BatchReport(outcomes)
    for outcome in report.failures:
        print(f"{ANSI_RED}[BATCH] {outcome.pair_id} failed:{ANSI_RESET} {outcome.error}")

    metrics_path = os.path.join(out_dir, "metrics.csv")
    write_metrics_csv(metrics_path, [(o.pair_id, o.report) for o in outcomes if o.ok])
    journal.artifact(metrics_path, kind="metrics")
    for outcome, (_, _, target, _) in zip(outcomes, jobs):
        if outcome.ok:
            journal.artifact(os.path.join(target, FUSED_NAME), kind="fused")
    journal.seal(reason="completed" if report.exit_code == 0 else "completed_with_failures")
    config.log("BATCH", f"{len(outcomes) - len(report.failures)}/{len(outcomes)} pairs fused")
    return report
