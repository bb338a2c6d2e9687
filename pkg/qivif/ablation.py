"""
Ablation and parameter-sensitivity runs over a single pair.
"""
from typing import Callable, Dict, Iterable, List, Tuple

from qivif.config import Config, RunConfig, split_key
from qivif.fusion import fuse_images
from qivif.imgcodec import RasterImage
from qivif.metrics import MetricReport, compute_metrics

config = Config()

# Variant name -> change applied to the base configuration.
VARIANTS: Dict[str, Callable[[RunConfig], RunConfig]] = {
    "full": lambda run: run,
    "no_lighting_suppression": lambda run: run.replace("pipeline", use_qls=False),
    "no_detail_enhancement": lambda run: run.replace("pipeline", use_qaum=False),
    "average_fusion": lambda run: run.replace("pipeline", fusion_rule="average"),
    "adaptive_enhancement": lambda run: run.replace("qaum", mode="adaptive"),
    "channelwise_suppression": lambda run: run.replace("qls_visible", domain="channelwise").replace(
        "qls_infrared", domain="channelwise"
    ),
    "weighted_schatten": lambda run: run.replace("qlrd_visible", penalty="wsp").replace(
        "qlrd_infrared", penalty="wsp"
    ),
    "nuclear_norm": lambda run: run.replace("qlrd_visible", penalty="nuclear").replace(
        "qlrd_infrared", penalty="nuclear"
    ),
}


def run_ablation(
    visible: RasterImage,
    infrared: RasterImage,
    run: RunConfig = RunConfig(),
    variants: Iterable[str] = tuple(VARIANTS),
) -> List[Tuple[str, MetricReport]]:
    rows = []
    for name in variants:
        variant = VARIANTS[name](run)
        config.log("QIVIF", f"ablation variant {name}")
        result = fuse_images(visible, infrared, variant, label=name)
        rows.append((name, compute_metrics(result.fused, visible, infrared)))
    return rows


def run_sweep(
    visible: RasterImage,
    infrared: RasterImage,
    key: str,
    values: Iterable[str],
    run: RunConfig = RunConfig(),
) -> List[Tuple[str, MetricReport]]:
    """Fuse once per value of `section.field` and report the metrics of each run."""
    section, name = split_key(key, "sweep")
    rows = []
    for value in values:
        variant = run.replace(section, **{name: value})
        config.log("QIVIF", f"sweep {section}.{name}={value}")
        result = fuse_images(visible, infrared, variant, label=f"{name}={value}")
        rows.append((f"{section}.{name}={value}", compute_metrics(result.fused, visible, infrared)))
    return rows
