"""Report output: delimited files, trajectory dumps, hashes, and figures.

CSV is the machine contract: byte-stable given (config, seed), no
timestamps (those live in run_meta.json, which the hash manifest skips).
Figures render the same content to PNG next to the CSVs for quick reading;
they are best-effort and never part of the hashed outputs.
"""

import csv
import hashlib
import json
import struct
import time
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .config import ExperimentConfig, to_text  # noqa: E402

_TRAJ_MAGIC = b"KPZTRAJ1"
_TRAJ_HEADER = struct.Struct("<8sIQdIdII")


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)
    return path

def write_run_meta(out_dir, cfg: ExperimentConfig, command: str, extra=None) -> Path:
    """Provenance sidecar; the only place a timestamp appears."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "command": command,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "config": to_text(cfg),
    }
    if extra:
        meta.update(extra)
    path = out_dir / "run_meta.json"
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, files) -> Path:
    """hashes.json over the contract files (CSV/binary; no figures, no meta)."""
    out_dir = Path(out_dir)
    entries = {Path(f).name: sha256_of(f) for f in files}
    path = out_dir / "hashes.json"
    path.write_text(json.dumps(entries, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def compare_manifests(new_path, reference_path) -> list:
    """Names whose hashes differ (or are missing) between two manifests."""
    new = json.loads(Path(new_path).read_text(encoding="utf-8"))
    ref = json.loads(Path(reference_path).read_text(encoding="utf-8"))
    names = sorted(set(new) | set(ref))
    return [n for n in names if new.get(n) != ref.get(n)]


def dump_trajectory_csv(path, trajectory, frame_indices) -> Path:
    """(t, x, value) rows for the selected frames."""
    ts = trajectory.time_grid.times
    xs = trajectory.space_grid.x
    rows = (
        (repr(float(ts[j])), repr(float(x)), repr(float(v)))
        for j in frame_indices
        for x, v in zip(xs, trajectory.values[j])
    )
    return write_csv(path, ["t", "x", "value"], rows)


def dump_trajectory_binary(path, trajectory, frame_indices, seed: int = 0) -> Path:
    """Binary frame dump mirroring the noise-file layout (header + float64)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    g = trajectory.space_grid
    tg = trajectory.time_grid
    idx = [int(j) for j in frame_indices]
    with open(path, "wb") as fh:
        fh.write(
            _TRAJ_HEADER.pack(
                _TRAJ_MAGIC, 1, seed, g.half_length, g.n_points, tg.horizon, tg.n_steps, len(idx)
            )
        )
        fh.write(struct.pack(f"<{len(idx)}I", *idx))
        for j in idx:
            fh.write(trajectory.values[j].astype("<f8").tobytes())
    return path


# ---------------------------------------------------------------------------
# figures (rendered beside the CSV output; not hashed)


def _save(fig, out_dir, name) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path


def figure_cross_validation(out_dir, per_seed_levels) -> Path:
    """Gap vs dt, one faint line per seed plus the median, log-log."""
    import numpy as np

    fig, ax = plt.subplots(figsize=(5.4, 3.8))
    dts = None
    gaps = []
    for levels in per_seed_levels:
        dts = [lv.dt for lv in levels]
        g = [lv.sup_gap for lv in levels]
        gaps.append(g)
        ax.loglog(dts, g, color="steelblue", alpha=0.25, lw=0.8)
    med = np.median(np.asarray(gaps), axis=0)
    ax.loglog(dts, med, color="crimson", lw=2.0, marker="o", label="median")
    ref = med[0] * (np.asarray(dts) / dts[0]) ** 0.4
    ax.loglog(dts, ref, "k--", lw=1.0, label=r"order 0.4")
    ax.set_xlabel("dt")
    ax.set_ylabel("sup-window gap at T")
    ax.set_title("KPZ vs Hopf-Cole heat route, shared noise")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, out_dir, "cross_validation.png")


def figure_fbsde(out_dir, z_scores, qv_z_scores) -> Path:
    import numpy as np

    fig, axes = plt.subplots(1, 2, figsize=(8.2, 3.4))
    axes[0].hist(z_scores, bins=24, color="steelblue", alpha=0.8)
    for s in (-3, 3):
        axes[0].axvline(s, color="crimson", ls="--", lw=1)
    axes[0].set_xlabel("(bridge - grid) / SE")
    axes[0].set_title("Feynman-Kac vs grid solution")
    axes[1].hist(qv_z_scores, bins=24, color="darkseagreen", alpha=0.9)
    for s in (-4, 4):
        axes[1].axvline(s, color="crimson", ls="--", lw=1)
    axes[1].set_xlabel("(QV - C_k(0) S) / SD")
    axes[1].set_title(f"QV of Z (n={len(np.atleast_1d(qv_z_scores))})")
    return _save(fig, out_dir, "fbsde_verify.png")


def figure_k_convergence(out_dir, samples_by_k, ks_rows) -> Path:
    import numpy as np

    fig, axes = plt.subplots(1, 2, figsize=(8.6, 3.4))
    for k in sorted(samples_by_k):
        x = np.sort(samples_by_k[k])
        axes[0].step(x, np.arange(1, len(x) + 1) / len(x), label=f"k={k}", lw=1.2)
    axes[0].set_xlabel("interface value at (T, 0)")
    axes[0].set_ylabel("ECDF")
    axes[0].legend(frameon=False, fontsize=8)
    labels = [r[0] for r in ks_rows]
    vals = [r[1] for r in ks_rows]
    errs = [2 * r[2] for r in ks_rows]
    axes[1].bar(labels, vals, yerr=errs, color="steelblue", capsize=3)
    axes[1].set_ylabel("KS distance (2 SE bars)")
    axes[1].set_title("consecutive-level distances")
    return _save(fig, out_dir, "k_convergence.png")


def figure_fields(out_dir, grid, named_fields, title, name="fields.png") -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    for label, values in named_fields:
        ax.plot(grid.x, values, lw=1.0, label=label)
    ax.set_xlabel("x")
    ax.legend(frameon=False, fontsize=8)
    ax.set_title(title)
    return _save(fig, out_dir, name)
