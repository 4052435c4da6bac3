"""Human-readable report rendering for completed scenario directories.

Produces a markdown summary, two-column plot-data files (both raw and
log-log), and matplotlib figures rendered to PNG alongside the
delimited artifacts.  Never modifies scenario inputs.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .exceptions import MissingArtifactError
from .io import read_json

FIG_DPI = 130


def _read_csv_columns(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    cols = {}
    for i, name in enumerate(header):
        try:
            cols[name] = np.array([float(r[i]) for r in rows])
        except ValueError:
            cols[name] = np.array([r[i] for r in rows])
    return cols


def _write_plot_data(out_dir: Path, stem: str, x, y, xlabel: str, ylabel: str) -> None:
    raw = out_dir / f"plotdata_{stem}.dat"
    with open(raw, "w") as fh:
        fh.write(f"# {xlabel}  {ylabel}\n")
        for xi, yi in zip(x, y):
            fh.write(f"{xi:.17g} {yi:.17g}\n")
    good = (np.asarray(y) > 0) & (np.asarray(x) > -1)
    if good.sum() >= 2:
        with open(out_dir / f"plotdata_{stem}_loglog.dat", "w") as fh:
            fh.write(f"# log(1+{xlabel})  log({ylabel})\n")
            for xi, yi in zip(np.asarray(x)[good], np.asarray(y)[good]):
                fh.write(f"{np.log(1.0 + xi):.17g} {np.log(yi):.17g}\n")


def _fig_series(out_dir: Path, stem: str, cols: dict, title: str) -> None:
    times = cols["time"]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for name, values in cols.items():
        if name == "time" or values.dtype.kind not in "fc":
            continue
        positive = values > 0
        if positive.sum() < 2:
            continue
        ax.loglog(1.0 + times[positive], values[positive], label=name, lw=1.2)
    ax.set_xlabel("1 + t")
    ax.set_ylabel("norm")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_dir / f"fig_{stem}.png", dpi=FIG_DPI)
    plt.close(fig)


def _fig_spectrum(out_dir: Path, cols: dict) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ordinary = cols["branch"] == -1
    critical = cols["branch"] == 0
    ax.plot(cols["xi"][ordinary], cols["re_lambda"][ordinary], ".", ms=2,
            color="0.6", label="spectrum")
    ax.plot(cols["xi"][critical], cols["re_lambda"][critical], "r.-", ms=3,
            lw=0.8, label="critical curve")
    ax.set_xlabel("Floquet exponent")
    ax.set_ylabel("Re eigenvalue")
    ax.set_ylim(-3.0, 0.3)
    ax.axhline(0.0, color="k", lw=0.5)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_dir / "fig_spectrum.png", dpi=FIG_DPI)
    plt.close(fig)


def _fig_damping(out_dir: Path, variable: str, cols: dict) -> None:
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    feas = cols["feasible"] > 0
    ax.loglog(cols["theta"][feas], np.maximum(cols["c_min"][feas], 1e-12), "o-",
              ms=3, label="minimal C (feasible)")
    if (~feas).any():
        ax.loglog(cols["theta"][~feas], np.maximum(cols["c_min"][~feas], 1e-12),
                  "x", ms=4, color="r", label="infeasible")
    ax.set_xlabel("theta")
    ax.set_ylabel("minimal C")
    ax.set_title(f"damping feasibility: {variable}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_dir / f"fig_damping_{variable}.png", dpi=FIG_DPI)
    plt.close(fig)


def emit_report(artifact_dir) -> Path:
    """Render summary.md, plot-data files, and PNG figures from the
    artifacts in a completed scenario directory."""
    art = Path(artifact_dir)
    if not art.is_dir():
        raise MissingArtifactError(f"{art} is not a directory")
    known = [
        "summary.json", "verdict.json", "wave_summary.json", "equivalence.json",
        "damping.json", "asymptotics.json", "linear_rate.json",
    ]
    present = [name for name in known if (art / name).exists()]
    series_files = sorted(art.glob("series_*.csv"))
    damping_files = sorted(art.glob("damping_*_feasibility.csv"))
    if not present and not series_files:
        raise MissingArtifactError(
            f"{art} holds no known artifacts; expected one of {known} "
            "or series_*.csv from a completed scenario"
        )

    lines = ["# scenario report", ""]

    if (art / "summary.json").exists():
        summary = read_json(art / "summary.json")
        if "criteria" in summary:
            lines += ["## acceptance criteria", "",
                      "| criterion | verdict | key numbers |", "|---|---|---|"]
            for name, entry in summary["criteria"].items():
                verdict = entry.get("pass")
                verdict_s = {True: "PASS", False: "FAIL", None: "(pytest)"}[verdict]
                detail = ", ".join(
                    f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                    for k, v in entry.items()
                    if k != "pass" and isinstance(v, (int, float)) and not isinstance(v, bool)
                )
                lines.append(f"| {name} | {verdict_s} | {detail[:140]} |")
            lines.append("")

    if (art / "verdict.json").exists():
        v = read_json(art / "verdict.json")
        lines += ["## spectral stability", "",
                  f"- verdict: **{v['verdict']}**",
                  f"- max Re lambda (xi != 0): {v['max_re_nonzero_xi']:.3e}",
                  f"- |lambda_c(0)|: {v['gap_at_zero']:.3e}",
                  f"- curvature d: {v['curvature_d']:.6g} "
                  f"(fit residual {v['fit_residual']:.2e})"]
        if "high_freq_rate" in v:
            lines.append(f"- high-frequency rate: {v['high_freq_rate']:.4g}")
        if "whitham_diffusion" in v:
            lines.append(f"- heat-flow diffusion: {v['whitham_diffusion']:.6g}")
        lines.append("")

    if (art / "equivalence.json").exists():
        e = read_json(art / "equivalence.json")
        lines += ["## norm-equivalence corpus", "",
                  f"- violations: {e['violations']} / {3 * e['n_samples']} inequalities "
                  f"({e['n_samples']} samples x 3 values of p)",
                  f"- worst inversion round-trip error: {e['worst_roundtrip_error']:.3e}",
                  f"- empirical H^{e['hk_order']} constant: {e['hk_constant']:.4g} "
                  f"(x{e['hk_constant_ratio']:.3f} under grid doubling)", ""]

    if (art / "damping.json").exists():
        d = read_json(art / "damping.json")
        lines += ["## damping feasibility", "",
                  "| variable | feasible thetas | best theta | minimal C | doubled-grid theta |",
                  "|---|---|---|---|---|"]
        for var, entry in d["variables"].items():
            lines.append(
                f"| {var} | {entry['feasible_count']}/{entry['n_theta']} "
                f"| {entry['best_theta']:.4g} | {entry['best_c']:.4g} "
                f"| {entry.get('best_theta_doubled', float('nan')):.4g} |"
            )
        lines.append("")

    if (art / "asymptotics.json").exists():
        a = read_json(art / "asymptotics.json")
        lines += ["## heat-flow asymptotics", "",
                  f"- diffusion coefficient: {a['diffusion']:.6g}",
                  f"- eta slack: {a['eta']}", "",
                  "| comparison | fitted exponent | predicted |", "|---|---|---|"]
        for name, f in a["fits"].items():
            if "exponent" in f:
                lines.append(
                    f"| {name} | {f['exponent']:+.3f} +/- {f['stderr']:.3f} "
                    f"| {f['predicted']:+.3f} |"
                )
            else:
                lines.append(f"| {name} | (fit failed: {f['error']}) | |")
        lines.append("")

    for path in series_files:
        label = path.stem.replace("series_", "")
        cols = _read_csv_columns(path)
        lines += [f"## decay fits: {label} run", "",
                  "| norm | fitted exponent |", "|---|---|"]
        from .whitham import fit_decay

        for name, values in cols.items():
            if name == "time":
                continue
            _write_plot_data(Path(art), f"{label}_{name}", cols["time"], values,
                             "t", name)
            try:
                f = fit_decay(cols["time"], values, t_min=10.0, name=name)
                lines.append(f"| {name} | {f.exponent:+.3f} +/- {f.stderr:.3f} |")
            except Exception as exc:
                lines.append(f"| {name} | (not fit: {exc}) |")
        lines.append("")
        _fig_series(Path(art), label, cols, f"{label} run: norm decay")

    if (art / "spectrum.csv").exists():
        _fig_spectrum(Path(art), _read_csv_columns(art / "spectrum.csv"))

    for path in damping_files:
        variable = path.stem.replace("damping_", "").replace("_feasibility", "")
        _fig_damping(Path(art), variable, _read_csv_columns(path))

    out_path = art / "summary.md"
    out_path.write_text("\n".join(lines))
    return out_path
