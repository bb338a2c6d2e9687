"""
Fusion pipeline: per-modality lighting suppression and decomposition,
detail enhancement, Bayesian fusion, decoding, and the artefacts a run
writes to its output directory.
"""
import contextlib
import os
import time
from dataclasses import dataclass
from typing import List, Optional

from qivif.config import Config, RunConfig, render_config
from qivif.imgcodec import (
    RasterImage,
    check_pair,
    decode,
    encode_infrared,
    encode_visible,
    read_png,
    signed_visual,
    write_png,
)
from qivif.journal import RunJournal
from qivif.metrics import compute_metrics, write_metrics_csv
from qivif.models.qaum import enhance
from qivif.models.qhbf import QhbfResult, run_qhbf
from qivif.models.qlrd import QlvflResult, run_qlvfl
from qivif.models.trace import SolverTrace
from qivif.quaternion.algebra import QuaternionMatrix
from qivif.utils.atomic import atomic_write
from qivif.utils.plots import plot_traces
from qivif.utils.style import ANSI_GREEN, ANSI_RESET

config = Config()

FUSED_NAME = "fused.png"
METRICS_NAME = "metrics.csv"
JOURNAL_NAME = "run_journal.jsonl"


@dataclass(frozen=True)
class FusionResult:
    fused: RasterImage
    F: QuaternionMatrix
    encoded_visible: QuaternionMatrix
    encoded_infrared: QuaternionMatrix
    visible: QlvflResult
    infrared: QlvflResult
    enhanced: QuaternionMatrix
    qhbf: Optional[QhbfResult] = None

    @property
    def traces(self) -> List[SolverTrace]:
        out = []
        for branch in (self.visible, self.infrared):
            if branch.qls is not None:
                out.append(branch.qls.trace)
            out.append(branch.decomposition.trace)
        if self.qhbf is not None:
            out.append(self.qhbf.trace)
        return out


@contextlib.contextmanager
def _stage(journal: Optional[RunJournal], name: str):
    started = time.perf_counter()
    if journal is not None:
        journal.start_stage(name)
    try:
        yield
    except BaseException as e:
        if journal is not None:
            journal.end_stage(name, status="failed", error=str(e))
        raise
    elapsed = time.perf_counter() - started
    config.log("QIVIF", f"{name} done in {elapsed:.2f}s")
    if journal is not None:
        journal.end_stage(name, status="ok", seconds=round(elapsed, 4))


def fuse_images(
    visible: RasterImage,
    infrared: RasterImage,
    run: RunConfig = RunConfig(),
    label: str = "pair",
    journal: Optional[RunJournal] = None,
) -> FusionResult:
    check_pair(visible, infrared)
    L_v = encode_visible(visible)
    L_f = encode_infrared(infrared)
    pipeline = run.pipeline

    with _stage(journal, "decompose_visible"):
        vis = run_qlvfl(
            L_v, run.qls_visible, run.qlrd_visible, label=f"{label}/visible", suppress_lighting=pipeline.use_qls
        )
    with _stage(journal, "decompose_infrared"):
        ir = run_qlvfl(
            L_f, run.qls_infrared, run.qlrd_infrared, label=f"{label}/infrared", suppress_lighting=pipeline.use_qls
        )

    with _stage(journal, "enhance"):
        if pipeline.use_qaum:
            enhanced = enhance(vis.I, ir.decomposition.D, vis.decomposition.D, run.qaum)
        else:
            enhanced = vis.I

    qhbf = None
    with _stage(journal, "fuse"):
        if pipeline.fusion_rule == "qhbf":
            qhbf = run_qhbf(enhanced, ir.I, run.qhbf)
            F = qhbf.F
        else:
            F = (enhanced + ir.I) * 0.5

    return FusionResult(
        fused=decode(F),
        F=F,
        encoded_visible=L_v,
        encoded_infrared=L_f,
        visible=vis,
        infrared=ir,
        enhanced=enhanced,
        qhbf=qhbf,
    )


def dump_intermediates(result: FusionResult, out_dir, journal: Optional[RunJournal] = None) -> List[str]:
    """Write per-stage layers, solver traces and the convergence plot."""
    written = []

    def _png(img: RasterImage, name: str):
        path = os.path.join(out_dir, name)
        write_png(img, path)
        written.append(path)

    for modality, branch, L in (
        ("visible", result.visible, result.encoded_visible),
        ("infrared", result.infrared, result.encoded_infrared),
    ):
        _png(decode(branch.I), f"suppressed_{modality}.png")
        if branch.qls is not None:
            _png(decode(L - branch.qls.unnormalized), f"glow_{modality}.png")
        _png(decode(branch.decomposition.Z), f"structure_{modality}.png")
        _png(signed_visual(branch.decomposition.D), f"detail_{modality}.png")
    _png(decode(result.enhanced), "enhanced_visible.png")

    for trace in result.traces:
        name = trace.solver.replace("/", "_").replace("[", "_").replace("]", "")
        path = os.path.join(out_dir, f"trace_{name}.csv")
        trace.to_csv(path)
        written.append(path)

    plot_path = os.path.join(out_dir, "convergence.png")
    plot_traces(result.traces, plot_path)
    written.append(plot_path)

    if journal is not None:
        for path in written:
            journal.artifact(path, kind="intermediate")
    return written


def pair_id(visible_path) -> str:
    return os.path.splitext(os.path.basename(os.fspath(visible_path)))[0]


def run_fuse(
    visible_path,
    infrared_path,
    out_dir,
    run: RunConfig = RunConfig(),
    dump: bool = False,
    with_metrics: bool = False,
) -> tuple:
    """Fuse one pair from disk; returns (FusionResult, MetricReport or None)."""
    os.makedirs(out_dir, exist_ok=True)
    journal = RunJournal(os.path.join(out_dir, JOURNAL_NAME))
    journal.record(
        {
            "type": "inputs",
            "visible": os.fspath(visible_path),
            "infrared": os.fspath(infrared_path),
            "config_sha256": run.digest(),
        }
    )
    try:
        with _stage(journal, "read"):
            visible = read_png(visible_path, mode="rgb")
            infrared = read_png(infrared_path, mode="gray")
        result = fuse_images(visible, infrared, run, label=pair_id(visible_path), journal=journal)

        fused_path = os.path.join(out_dir, FUSED_NAME)
        write_png(result.fused, fused_path)
        journal.artifact(fused_path, kind="fused")

        report = None
        if with_metrics:
            with _stage(journal, "metrics"):
                report = compute_metrics(result.fused, visible, infrared)
            metrics_path = os.path.join(out_dir, METRICS_NAME)
            write_metrics_csv(metrics_path, [(pair_id(visible_path), report)], mean_row=False)
            journal.artifact(metrics_path, kind="metrics")

        if dump:
            config_path = os.path.join(out_dir, "config.env")
            atomic_write(config_path, lambda fh: fh.write(render_config(run)))
            dump_intermediates(result, out_dir, journal)
    except BaseException as e:
        journal.seal(reason=f"failed: {type(e).__name__}")
        raise

    journal.seal()
    print(f"{ANSI_GREEN}[QIVIF]{ANSI_RESET} fused image written to {fused_path}")
    return result, report
