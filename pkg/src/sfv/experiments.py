"""Monte Carlo experiment harness.

Runs a grid of (design, signal) sweep points for a set of replicates
and path methods, records where the first false selection happened in
each run, and aggregates per-point summaries.  Replicate r of sweep
point s under experiment seed q draws from the dedicated random
substream (q, s, r), so results are independent of execution order and
worker count.  Engines stop as soon as a variable outside the support
enters, which keeps long sweeps cheap.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .design import Decaying, DesignSpec, Equi, Family, SignalSpec, generate_dataset
from .diagram import diagram_csv, double_ranking, least_squares_tstats
from .paths import (
    Method,
    Termination,
    forward_stepwise_path,
    lars_path,
    lasso_lars_path,
)
from .prediction import predicted_rank
from .ranking import first_spurious_rank
from .svgplot import emit_svg_scatter

__all__ = [
    "OutputKind",
    "SweepPoint",
    "ExperimentConfig",
    "ReplicateResult",
    "SummaryRow",
    "run_experiment",
    "preset_config",
    "PRESET_NAMES",
    "config_from_json",
    "config_to_json",
]

_ENGINES = {
    Method.LEAST_ANGLE: lars_path,
    Method.LASSO: lasso_lars_path,
    Method.FORWARD_STEPWISE: forward_stepwise_path,
}

_DEFAULT_OUTPUTS = ("rank_csv", "summary_csv", "svg_plot", "prediction_overlay")


class OutputKind(str, Enum):
    RANK_CSV = "rank_csv"
    SUMMARY_CSV = "summary_csv"
    PREDICTION_OVERLAY = "prediction_overlay"
    SVG_PLOT = "svg_plot"
    DIAGRAM_CSV = "diagram_csv"
    DIAGRAM_SVG = "diagram_svg"


@dataclass(frozen=True)
class SweepPoint:
    sweep_value: float
    design: DesignSpec
    signal: SignalSpec


@dataclass(frozen=True)
class ExperimentConfig:
    points: tuple[SweepPoint, ...]
    methods: tuple[Method, ...]
    replicates: int
    seed: int
    sweep_axis: str = "k"
    outputs: tuple[OutputKind, ...] = tuple(OutputKind(o) for o in _DEFAULT_OUTPUTS)
    shuffle_support: bool = False
    max_steps: int | None = None

    def __post_init__(self):
        if not self.points:
            raise ValueError("experiment needs at least one sweep point")
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if not self.methods:
            raise ValueError("experiment needs at least one method")
        values = [pt.sweep_value for pt in self.points]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError(f"sweep values must be strictly increasing, got {values}")
        wants_diagram = any(
            o in (OutputKind.DIAGRAM_CSV, OutputKind.DIAGRAM_SVG) for o in self.outputs
        )
        if wants_diagram:
            for pt in self.points:
                if pt.design.n <= pt.design.p:
                    raise ValueError(
                        "diagram outputs need n > p at every sweep point; "
                        f"got n={pt.design.n}, p={pt.design.p}"
                    )


@dataclass(frozen=True)
class ReplicateResult:
    sweep_index: int
    replicate: int
    method: Method
    T: int | None
    signals_before: int
    drops_before_first_noise: int
    stalled: bool


@dataclass(frozen=True)
class SummaryRow:
    method: str
    sweep_value: float
    mean_T: float
    sd_T: float
    predicted_T: float
    replicates_with_T: int


def _worker_count(n_tasks: int) -> int:
    env = os.environ.get("SFV_WORKERS", "").strip()
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, n_tasks))


def _run_replicate(task) -> list[ReplicateResult]:
    config, sweep_index, replicate = task
    point = config.points[sweep_index]
    data = generate_dataset(
        point.design,
        point.signal,
        config.seed,
        shuffle_support=config.shuffle_support,
        stream=(sweep_index, replicate),
    )
    out = []
    for method in config.methods:
        trace = _ENGINES[method](
            data, max_steps=config.max_steps, stop_support=data.support
        )
        report = first_spurious_rank(trace, data.support)
        out.append(
            ReplicateResult(
                sweep_index=sweep_index,
                replicate=replicate,
                method=method,
                T=report.T,
                signals_before=report.signals_before,
                drops_before_first_noise=report.drops_before_first_noise,
                stalled=trace.termination is Termination.STALLED,
            )
        )
    return out


def _predicted_T(point: SweepPoint) -> float:
    k = point.signal.total_nonzeros
    if k == 0:
        return 1.0
    return predicted_rank(point.design.n, point.design.p, k).rank


def _summaries(config: ExperimentConfig, results: list[ReplicateResult]) -> list[SummaryRow]:
    rows = []
    for method in config.methods:
        for s, point in enumerate(config.points):
            ts = [
                r.T
                for r in results
                if r.method is method and r.sweep_index == s and r.T is not None
            ]
            if ts:
                mean = float(np.mean(ts))
                sd = float(np.std(ts, ddof=1)) if len(ts) > 1 else 0.0
            else:
                mean, sd = math.nan, 0.0
            rows.append(
                SummaryRow(
                    method=method.value,
                    sweep_value=point.sweep_value,
                    mean_T=mean,
                    sd_T=sd,
                    predicted_T=_predicted_T(point),
                    replicates_with_T=len(ts),
                )
            )
    return rows


def _ranks_csv(config: ExperimentConfig, results: list[ReplicateResult]) -> str:
    lines = ["method,sweep_value,replicate,T,signals_before,drops_before_first_noise"]
    for r in results:
        value = config.points[r.sweep_index].sweep_value
        t = "" if r.T is None else str(r.T)
        lines.append(
            f"{r.method.value},{repr(float(value))},{r.replicate},{t},"
            f"{r.signals_before},{r.drops_before_first_noise}"
        )
    return "\n".join(lines) + "\n"


def _summary_csv(rows: list[SummaryRow]) -> str:
    lines = ["method,sweep_value,mean_T,sd_T,predicted_T,replicates_with_T"]
    for row in rows:
        lines.append(
            f"{row.method},{repr(float(row.sweep_value))},{repr(row.mean_T)},"
            f"{repr(row.sd_T)},{repr(row.predicted_T)},{row.replicates_with_T}"
        )
    return "\n".join(lines) + "\n"


def _plot_svg(config: ExperimentConfig, rows: list[SummaryRow]) -> str:
    points = [
        (row.sweep_value, row.mean_T, row.method)
        for row in rows
        if math.isfinite(row.mean_T)
    ]
    overlay = None
    if OutputKind.PREDICTION_OVERLAY in config.outputs:
        overlay = [(pt.sweep_value, _predicted_T(pt)) for pt in config.points]
    return emit_svg_scatter(
        points,
        x_label=config.sweep_axis,
        y_label="mean rank of first false selection",
        overlay=overlay,
    )


def _diagram_outputs(config: ExperimentConfig, out_dir: Path) -> None:
    method = config.methods[0]
    for s, point in enumerate(config.points):
        data = generate_dataset(
            point.design,
            point.signal,
            config.seed,
            shuffle_support=config.shuffle_support,
            stream=(s, 0),
        )
        trace = _ENGINES[method](data, max_steps=config.max_steps)
        tstats = least_squares_tstats(data.X, data.y)
        table = double_ranking(trace, tstats, data.support)
        if OutputKind.DIAGRAM_CSV in config.outputs:
            (out_dir / f"diagram_{s}.csv").write_text(diagram_csv(table))
        if OutputKind.DIAGRAM_SVG in config.outputs:
            entered = [r.h_rank for r in table.rows if r.h_rank is not None]
            # Never-entered variables sit in a band beyond the largest rank.
            band = (max(entered) if entered else 0) + 2
            pts = [
                (
                    float(r.h_rank if r.h_rank is not None else band),
                    float(r.v_rank),
                    "signal" if r.is_signal else "noise",
                )
                for r in table.rows
            ]
            svg = emit_svg_scatter(
                pts, x_label="path rank", y_label="least-squares rank"
            )
            (out_dir / f"diagram_{s}.svg").write_text(svg)


def run_experiment(config: ExperimentConfig, out_dir=None) -> list[SummaryRow]:
    """Execute every sweep point x replicate x method; write requested files.

    Returns the summary rows.  Replicates run on a process pool capped by
    the SFV_WORKERS environment variable; outputs are byte-identical for
    any worker count.  Stalled runs with no false selection are counted
    out of ``replicates_with_T`` rather than averaged.
    """
    tasks = [
        (config, s, r)
        for s in range(len(config.points))
        for r in range(config.replicates)
    ]
    workers = _worker_count(len(tasks))
    if workers == 1:
        chunks = [_run_replicate(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunksize = max(1, len(tasks) // (4 * workers))
            chunks = list(pool.map(_run_replicate, tasks, chunksize=chunksize))
    method_order = {m: i for i, m in enumerate(config.methods)}
    results = sorted(
        (r for chunk in chunks for r in chunk),
        key=lambda r: (r.sweep_index, r.replicate, method_order[r.method]),
    )
    rows = _summaries(config, results)

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if OutputKind.RANK_CSV in config.outputs:
            (out_dir / "ranks.csv").write_text(_ranks_csv(config, results))
        if OutputKind.SUMMARY_CSV in config.outputs:
            (out_dir / "summary.csv").write_text(_summary_csv(rows))
        if OutputKind.SVG_PLOT in config.outputs:
            (out_dir / "plot.svg").write_text(_plot_svg(config, rows))
        if OutputKind.DIAGRAM_CSV in config.outputs or OutputKind.DIAGRAM_SVG in config.outputs:
            _diagram_outputs(config, out_dir)
    return rows


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

_K_GRID = (10, 20, 40, 60, 80, 120, 160, 200, 240, 280, 320)
_M_MULTIPLIERS = (0.2, 0.5, 1.0, 1.7, 2.4, 3.4, 5.0, 7.0, 10.0)
_RHO_GRID = (0.0, 0.1, 0.2, 0.4, 0.6, 0.8)


def _scaled_dims(n, p, scale):
    return max(2, round(n * scale)), max(2, round(p * scale))


def _scaled_ks(ks, p, scale):
    out = sorted({max(1, round(k * scale)) for k in ks})
    return tuple(k for k in out if k <= 0.99 * p)


def _k_sweep_points(design, magnitude, sigma, ks):
    return tuple(
        SweepPoint(
            sweep_value=float(k),
            design=design,
            signal=SignalSpec(p=design.p, blocks=((k, magnitude),), noise_sigma=sigma),
        )
        for k in ks
    )


def _preset_fig1(scale):
    n, p = _scaled_dims(2000, 1800, scale)
    design = DesignSpec(n=n, p=p, family=Family.GAUSSIAN_IID, scale=1.0 / n)
    magnitude = 100.0 * math.sqrt(2.0 * math.log(p))
    points = _k_sweep_points(design, magnitude, 1.0, _scaled_ks(_K_GRID, p, scale))
    return points, "k", 500


def _preset_study1a(scale):
    n, p = _scaled_dims(1000, 1000, scale)
    design = DesignSpec(n=n, p=p, family=Family.GAUSSIAN_IID, scale=1.0 / n)
    points = _k_sweep_points(design, 100.0, 1.0, _scaled_ks(_K_GRID, p, scale))
    return points, "k", 500


def _preset_study1b(scale):
    n, p = _scaled_dims(800, 1200, scale)
    # Per-entry variance keeps column norms at their full-scale value.
    entry_var = (800.0 / 500.0) / n
    design = DesignSpec(n=n, p=p, family=Family.BERNOULLI_RADEMACHER, scale=entry_var)
    points = _k_sweep_points(design, 100.0, 1.0, _scaled_ks(_K_GRID, p, scale))
    return points, "k", 500


def _preset_study2(scale, two_mixtures):
    n, p = _scaled_dims(500, 1000, scale)
    design = DesignSpec(n=n, p=p, family=Family.GAUSSIAN_IID, scale=1.0 / n)
    unit = math.sqrt(2.0 * math.log(p))
    k_half = max(1, round(40 * scale))
    points = []
    for mult in _M_MULTIPLIERS:
        magnitude = mult * unit
        if two_mixtures:
            second = magnitude**2 / (10.0 * unit)
            blocks = ((k_half, magnitude), (k_half, second))
        else:
            blocks = ((2 * k_half, magnitude),)
        points.append(
            SweepPoint(
                sweep_value=magnitude,
                design=design,
                signal=SignalSpec(p=p, blocks=blocks, noise_sigma=1.0),
            )
        )
    return tuple(points), "magnitude", 500


def _preset_study3(scale, kind):
    n, p = _scaled_dims(500, 1000, scale)
    k = max(1, round(80 * scale))
    magnitude = 100.0 * math.sqrt(2.0 * math.log(p))
    points = []
    for rho in _RHO_GRID:
        corr = Equi(rho) if kind == "equi" else Decaying(rho)
        design = DesignSpec(
            n=n,
            p=p,
            family=Family.GAUSSIAN_CORRELATED,
            scale=1.0 / n,
            correlation=corr,
        )
        points.append(
            SweepPoint(
                sweep_value=rho,
                design=design,
                signal=SignalSpec(p=p, blocks=((k, magnitude),), noise_sigma=1.0),
            )
        )
    return tuple(points), "rho", 500


_PRESETS = {
    "fig1": _preset_fig1,
    "study1a": _preset_study1a,
    "study1b": _preset_study1b,
    "study2a": lambda s: _preset_study2(s, two_mixtures=False),
    "study2b": lambda s: _preset_study2(s, two_mixtures=True),
    "study3a": lambda s: _preset_study3(s, "equi"),
    "study3b": lambda s: _preset_study3(s, "decaying"),
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def preset_config(
    name: str,
    seed: int,
    scale: float = 0.25,
    replicates: int | None = None,
    methods: tuple[Method, ...] = (Method.LEAST_ANGLE, Method.LASSO, Method.FORWARD_STEPWISE),
) -> ExperimentConfig:
    """Build a named experiment at the requested scale.

    ``scale`` multiplies the dimensions, sparsity grid, and default
    replicate count of the full-size study; scale 1.0 reproduces the
    original sizes (hours of compute), the default 0.25 runs in minutes.
    """
    if name not in _PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    points, axis, base_replicates = _PRESETS[name](scale)
    if not points:
        raise ValueError(f"preset {name!r} has no sweep points at scale {scale}")
    if replicates is None:
        replicates = max(1, round(base_replicates * scale))
    return ExperimentConfig(
        points=points,
        methods=tuple(methods),
        replicates=replicates,
        seed=seed,
        sweep_axis=axis,
    )


# ---------------------------------------------------------------------------
# JSON configuration
# ---------------------------------------------------------------------------


def _design_to_dict(d: DesignSpec) -> dict:
    corr = None
    if isinstance(d.correlation, Equi):
        corr = {"kind": "equi", "rho": d.correlation.rho}
    elif isinstance(d.correlation, Decaying):
        corr = {"kind": "decaying", "rho": d.correlation.rho}
    return {
        "n": d.n,
        "p": d.p,
        "family": d.family.value,
        "scale": d.scale,
        "correlation": corr,
    }


def _design_from_dict(obj: dict) -> DesignSpec:
    corr = obj.get("correlation")
    correlation = None
    if corr is not None:
        if corr["kind"] == "equi":
            correlation = Equi(rho=float(corr["rho"]))
        elif corr["kind"] == "decaying":
            correlation = Decaying(rho=float(corr["rho"]))
        else:
            raise ValueError(f"unknown correlation kind {corr['kind']!r}")
    return DesignSpec(
        n=int(obj["n"]),
        p=int(obj["p"]),
        family=Family(obj.get("family", "gaussian_iid")),
        scale=obj.get("scale"),
        correlation=correlation,
    )


def _signal_to_dict(s: SignalSpec) -> dict:
    return {
        "p": s.p,
        "blocks": [[c, m] for c, m in s.blocks],
        "noise_sigma": s.noise_sigma,
    }


def _signal_from_dict(obj: dict) -> SignalSpec:
    return SignalSpec(
        p=int(obj["p"]),
        blocks=tuple((int(c), float(m)) for c, m in obj.get("blocks", [])),
        noise_sigma=float(obj.get("noise_sigma", 0.0)),
    )


def _expand_sweep(obj: dict) -> tuple[tuple[SweepPoint, ...], str]:
    base_design = _design_from_dict(obj["design"])
    base_signal = _signal_from_dict(obj["signal"])
    sweep = obj["sweep"]
    axis = sweep["axis"]
    values = [float(v) for v in sweep["values"]]
    points = []
    for v in values:
        if axis == "k":
            if not base_signal.blocks:
                raise ValueError("k sweep needs a base signal block for the magnitude")
            magnitude = base_signal.blocks[0][1]
            signal = SignalSpec(
                p=base_signal.p,
                blocks=((int(v), magnitude),),
                noise_sigma=base_signal.noise_sigma,
            )
            points.append(SweepPoint(v, base_design, signal))
        elif axis == "magnitude":
            if not base_signal.blocks:
                raise ValueError("magnitude sweep needs a base signal block for the count")
            count = base_signal.blocks[0][0]
            signal = SignalSpec(
                p=base_signal.p,
                blocks=((count, v),),
                noise_sigma=base_signal.noise_sigma,
            )
            points.append(SweepPoint(v, base_design, signal))
        elif axis == "rho":
            if base_design.correlation is None:
                raise ValueError("rho sweep needs a correlated base design")
            corr = type(base_design.correlation)(rho=v)
            design = replace(base_design, correlation=corr)
            points.append(SweepPoint(v, design, base_signal))
        else:
            raise ValueError(f"unknown sweep axis {axis!r}")
    return tuple(points), axis


def config_from_json(text: str) -> ExperimentConfig:
    """Parse an experiment configuration document."""
    obj = json.loads(text)
    if "points" in obj:
        points = tuple(
            SweepPoint(
                sweep_value=float(pt["sweep_value"]),
                design=_design_from_dict(pt["design"]),
                signal=_signal_from_dict(pt["signal"]),
            )
            for pt in obj["points"]
        )
        axis = obj.get("sweep_axis", "k")
    else:
        points, axis = _expand_sweep(obj)
    return ExperimentConfig(
        points=points,
        methods=tuple(Method(m) for m in obj.get("methods", ["lars", "lasso", "stepwise"])),
        replicates=int(obj["replicates"]),
        seed=int(obj["seed"]),
        sweep_axis=axis,
        outputs=tuple(OutputKind(o) for o in obj.get("outputs", _DEFAULT_OUTPUTS)),
        shuffle_support=bool(obj.get("shuffle_support", False)),
        max_steps=obj.get("max_steps"),
    )


def config_to_json(config: ExperimentConfig) -> str:
    """Serialize a configuration to the explicit-points JSON form."""
    obj = {
        "points": [
            {
                "sweep_value": pt.sweep_value,
                "design": _design_to_dict(pt.design),
                "signal": _signal_to_dict(pt.signal),
            }
            for pt in config.points
        ],
        "sweep_axis": config.sweep_axis,
        "methods": [m.value for m in config.methods],
        "replicates": config.replicates,
        "seed": config.seed,
        "outputs": [o.value for o in config.outputs],
        "shuffle_support": config.shuffle_support,
        "max_steps": config.max_steps,
    }
    return json.dumps(obj, indent=2) + "\n"
