"""Monte Carlo SNR sweeps: MSE, bias and misclassification against the C-CRB."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional
from xml.sax.saxutils import escape

import numpy as np

from . import crb
from .clustering import LabelAssignment, ScsConfig, kmeans
from .errors import ScsError
from .estimation import align_to_truth, clairvoyant_ml, identify, misclassification
from .model import Dataset, ModelSpec, generate, signal_energy, stack

ALGORITHMS = ("scs", "cml", "naive_kmeans")
CSV_COLUMNS = ("snr_db", "algorithm", "entry", "mse", "bias", "miscls", "ccrb",
               "runs_ok", "runs_failed")


@dataclass(frozen=True, eq=False)
class Scenario:
    spec: ModelSpec
    D: np.ndarray
    snr_grid: tuple
    runs: int = 500
    algorithms: tuple = ("scs", "cml")
    seed: int = 0
    ratio: float = 1.0
    cfg: ScsConfig = ScsConfig()

    def __post_init__(self):
        grid = tuple(float(s) for s in self.snr_grid)
        if not grid:
            raise ValueError("snr_grid must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("snr_grid must be strictly ascending")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")
        if not self.ratio > 0:
            raise ValueError("ratio must be positive")
        object.__setattr__(self, "snr_grid", grid)
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "D", np.atleast_2d(np.asarray(self.D, dtype=float)))


@dataclass
class BenchRow:
    snr_db: float
    algorithm: str
    entry: str
    mse: float
    bias: float
    miscls: float
    ccrb: float
    runs_ok: int
    runs_failed: int
    mse_se: float = math.nan
    miscls_se: float = math.nan

    @property
    def valid(self) -> bool:
        return self.runs_failed * 2 <= self.runs_ok + self.runs_failed


@dataclass
class BenchReport:
    rows: list
    metadata: dict = field(default_factory=dict)

    def select(self, algorithm=None, entry=None, snr_db=None) -> list:
        return [r for r in self.rows
                if (algorithm is None or r.algorithm == algorithm)
                and (entry is None or r.entry == entry)
                and (snr_db is None or r.snr_db == snr_db)]


def snr_to_variances(target_db: float, spec: ModelSpec, D, labels=None,
                     ratio: float = 1.0) -> tuple:
    """Noise variances ``(sigma_e^2, sigma_w^2)`` with ``sigma_w^2 = ratio * sigma_e^2``
    that put the dataset at ``target_db``."""
    D = np.atleast_2d(D)
    if math.isinf(target_db) and target_db > 0:
        return 0.0, 0.0
    labels = spec.labels_for(D) if labels is None else labels
    energy = signal_energy(spec, D, labels)
    s = energy / (D.shape[1] * (spec.n_d + spec.n_y * ratio) * 10.0 ** (target_db / 10.0))
    if not s > 0:
        raise ValueError(f"no positive noise variance reaches {target_db} dB")
    return s, ratio * s


def naive_kmeans_labels(ds: Dataset, K: int, seed: int = 0, restarts: int = 20) -> LabelAssignment:
    """Baseline: K-means directly on the stacked observations ``z_n``."""
    labels, _, inertia = kmeans(stack(ds).Z.T, K, restarts, seed)
    return LabelAssignment(labels, K, inertia=inertia)


def _estimate(alg, ds, spec, sc, noise_ratio):
    if alg == "scs":
        return identify(ds, spec.K, spec.n_d, sc.cfg, noise_ratio)
    if alg == "cml":
        return clairvoyant_ml(ds, spec)
    labels = naive_kmeans_labels(ds, spec.K, sc.cfg.seed, sc.cfg.restarts).labels
    return identify(ds, spec.K, spec.n_d, noise_ratio=noise_ratio, labels=labels)


def run(sc: Scenario, progress=None) -> BenchReport:
    """Execute the sweep.  Run ``r`` at grid index ``s`` draws its noise from
    ``SeedSequence([seed, s, r])``; the input design is the same for every run."""
    t0 = time.perf_counter()
    spec0, D = sc.spec, sc.D
    labels_true = spec0.labels_for(D)
    shapes = [t.shape for t in spec0.thetas]
    rows = []
    for si, db in enumerate(sc.snr_grid):
        s_e2, s_w2 = snr_to_variances(db, spec0, D, labels_true, sc.ratio)
        spec = spec0.with_noise(s_e2, s_w2)
        noise_ratio = sc.ratio if s_e2 > 0 else None
        if s_w2 > 0:
            bounds = [r.diagonal() for r in crb.per_submodel(spec, D, labels_true)]
        else:
            bounds = [np.zeros(int(np.prod(s))) for s in shapes]
        errs = {a: [] for a in sc.algorithms}
        miss = {a: [] for a in sc.algorithms}
        failed = {a: 0 for a in sc.algorithms}
        for ri in range(sc.runs):
            ds = generate(spec, D.shape[1], D, np.random.SeedSequence([sc.seed, si, ri]))
            for alg in sc.algorithms:
                try:
                    est = _estimate(alg, ds, spec, sc, noise_ratio)
                    _, al = align_to_truth(est, spec)
                except (ScsError, np.linalg.LinAlgError):
                    failed[alg] += 1
                    continue
                errs[alg].append(np.concatenate(
                    [(a - t).ravel() for a, t in zip(al.thetas, spec.thetas)]))
                miss[alg].append(misclassification(al.labels.labels, ds.labels))
            if progress is not None:
                progress(si, ri)
        for alg in sc.algorithms:
            rows.extend(_cell_rows(db, alg, errs[alg], miss[alg], failed[alg],
                                   shapes, bounds))
    meta = {
        "runs": sc.runs,
        "seed": sc.seed,
        "ratio": sc.ratio,
        "snr_grid": list(sc.snr_grid),
        "algorithms": list(sc.algorithms),
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    return BenchReport(rows, meta)


def _cell_rows(db, alg, errs, miss, failed, shapes, bounds):
    ok = len(errs)
    if ok:
        E = np.array(errs)
        mse, bias = (E ** 2).mean(axis=0), E.mean(axis=0)
        mse_se = (E ** 2).std(axis=0, ddof=1) / math.sqrt(ok) if ok > 1 else np.full(E.shape[1], np.nan)
        mc = float(np.mean(miss))
        mc_se = float(np.std(miss, ddof=1) / math.sqrt(ok)) if ok > 1 else math.nan
    else:
        n = sum(int(np.prod(s)) for s in shapes)
        mse = bias = mse_se = np.full(n, np.nan)
        mc = mc_se = math.nan
    rows, off = [], 0
    for k, shape in enumerate(shapes):
        size = int(np.prod(shape))
        names = crb.entry_names(*shape, prefix=f"theta{k + 1}")
        sl = slice(off, off + size)
        for j, name in enumerate(names):
            rows.append(BenchRow(db, alg, name, float(mse[sl][j]), float(bias[sl][j]), mc,
                                 float(bounds[k][j]), ok, failed, float(mse_se[sl][j]), mc_se))
        rows.append(BenchRow(db, alg, f"theta{k + 1}[mean]", float(np.mean(mse[sl])),
                             float(np.mean(bias[sl])), mc, float(np.mean(bounds[k])),
                             ok, failed, float(np.sqrt(np.sum(mse_se[sl] ** 2)) / size), mc_se))
        off += size
    return rows


# --------------------------------------------------------------------------
# emission


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_num(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def _num(v):
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            return v
    return v


def to_csv(report: BenchReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def from_csv(text: str) -> BenchReport:
    rd = csv.DictReader(io.StringIO(text))
    rows = []
    for rec in rd:
        rows.append(BenchRow(
            float(rec["snr_db"]), rec["algorithm"], rec["entry"], float(rec["mse"]),
            float(rec["bias"]), float(rec["miscls"]), float(rec["ccrb"]),
            int(rec["runs_ok"]), int(rec["runs_failed"])))
    return BenchReport(rows)


def to_json(report: BenchReport) -> str:
    rows = []
    for r in report.rows:
        d = {k: _json_num(v) for k, v in asdict(r).items()}
        d["valid"] = r.valid
        rows.append(d)
    meta = {k: ([_json_num(x) for x in v] if isinstance(v, list) else _json_num(v))
            for k, v in report.metadata.items()}
    return json.dumps({"metadata": meta, "rows": rows}, indent=2, sort_keys=True) + "\n"


def from_json(text: str) -> BenchReport:
    doc = json.loads(text)
    rows = []
    for d in doc["rows"]:
        d = {k: _num(v) for k, v in d.items() if k != "valid"}
        rows.append(BenchRow(**d))
    meta = {k: ([_num(x) for x in v] if isinstance(v, list) else _num(v))
            for k, v in doc.get("metadata", {}).items()}
    return BenchReport(rows, meta)


_COLORS = {"scs": "#1f77b4", "cml": "#2ca02c", "naive_kmeans": "#d62728"}


def to_svg(report: BenchReport, entry: str) -> str:
    """Log-scale MSE vs SNR for one parameter entry, one line per algorithm
    plus the C-CRB.  The plotted rows are embedded as JSON in ``<metadata>``."""
    rows = [r for r in report.rows if r.entry == entry]
    pts = [r for r in rows if math.isfinite(r.snr_db) and r.mse > 0 and math.isfinite(r.mse)]
    W, H, m = 480, 360, 50
    xs = sorted({r.snr_db for r in pts}) or [0.0, 1.0]
    ys = [math.log10(r.mse) for r in pts] + [math.log10(r.ccrb) for r in pts if r.ccrb > 0]
    x0, x1 = xs[0], xs[-1] if xs[-1] > xs[0] else xs[0] + 1
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if y1 <= y0:
        y1 = y0 + 1

    def px(x):
        return m + (x - x0) / (x1 - x0) * (W - 2 * m)

    def py(y):
        return H - m - (y - y0) / (y1 - y0) * (H - 2 * m)

    meta = json.dumps([{k: _json_num(v) for k, v in asdict(r).items()} for r in rows],
                      sort_keys=True)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f"<metadata>{escape(meta)}</metadata>",
        f'<title>MSE of {escape(entry)}</title>',
        f'<rect x="{m}" y="{m}" width="{W - 2 * m}" height="{H - 2 * m}" '
        'fill="none" stroke="#000"/>',
        f'<text x="{W / 2:.1f}" y="{H - 10}" text-anchor="middle" font-size="12">SNR (dB)</text>',
        f'<text x="12" y="{H / 2:.1f}" font-size="12" '
        f'transform="rotate(-90 12 {H / 2:.1f})" text-anchor="middle">log10 MSE</text>',
    ]
    for x in xs:
        out.append(f'<text x="{px(x):.2f}" y="{H - m + 15}" font-size="10" '
                   f'text-anchor="middle">{x:g}</text>')
    out.append(f'<text x="{m - 5}" y="{py(y0):.2f}" font-size="10" text-anchor="end">{y0:.2f}</text>')
    out.append(f'<text x="{m - 5}" y="{py(y1):.2f}" font-size="10" text-anchor="end">{y1:.2f}</text>')
    series = {}
    for r in pts:
        series.setdefault(r.algorithm, []).append((r.snr_db, math.log10(r.mse)))
    bound = sorted({(r.snr_db, math.log10(r.ccrb)) for r in pts if r.ccrb > 0})
    for i, (alg, sp) in enumerate(sorted(series.items())):
        color = _COLORS.get(alg, "#555")
        poly = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in sorted(sp))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{poly}"/>')
        out.append(f'<text x="{W - m + 4}" y="{m + 12 * (i + 1)}" font-size="10" '
                   f'fill="{color}">{escape(alg)}</text>')
    if bound:
        poly = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in bound)
        out.append(f'<polyline fill="none" stroke="#000" stroke-dasharray="4 3" points="{poly}"/>')
        out.append(f'<text x="{W - m + 4}" y="{m}" font-size="10">C-CRB</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def from_svg(text: str) -> BenchReport:
    import html
    start = text.index("<metadata>") + len("<metadata>")
    end = text.index("</metadata>")
    recs = json.loads(html.unescape(text[start:end]))
    rows = []
    for d in recs:
        d = {k: _num(v) for k, v in d.items()}
        rows.append(BenchRow(**d))
    return BenchReport(rows)


def _entry_filename(entry: str) -> str:
    return entry.replace("[", "_").replace("]", "").replace(",", "_") + ".svg"


def emit(report: BenchReport, fmt: str, path) -> list:
    """Write ``report`` as ``csv``, ``json`` or ``svg`` (one plot per entry,
    ``path`` is then a directory).  Returns the written paths."""
    path = Path(path)
    if fmt == "csv":
        path.write_text(to_csv(report))
        return [path]
    if fmt == "json":
        path.write_text(to_json(report))
        return [path]
    if fmt == "svg":
        path.mkdir(parents=True, exist_ok=True)
        written = []
        for entry in dict.fromkeys(r.entry for r in report.rows):
            p = path / _entry_filename(entry)
            p.write_text(to_svg(report, entry))
            written.append(p)
        return written
    raise ValueError(f"unknown format {fmt!r}")
