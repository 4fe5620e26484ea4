"""CSV persistence and figure rendering for simulation runs.

Series files carry one row per recorded time: per-species moments and
temperatures, conserved totals, entropy and its per-record dissipation,
then velocity/temperature gaps and the pair fit parameters (c12, c21) for
every active pair.  Values are written in scientific notation with 17
significant digits; the first line is a single ignorable '#' comment.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["write_series", "write_profile", "render_figures",
           "render_profile_figure"]

_BASE_COLUMNS = ("Ptot_x", "Ptot_y", "Ptot_z", "Etot", "H", "dHdt")


def _fmt(value: float) -> str:
    return f"{value:.16e}"


def _pair_columns(pairs) -> list[str]:
    single = len(pairs) == 1 and pairs[0] == (0, 1)
    columns = []
    for (k, j) in pairs:
        tag = "" if single else f"_{k + 1}{j + 1}"
        columns += [f"vel_gap{tag}", f"Tkin_gap{tag}", f"theta_gap{tag}",
                    f"c{k + 1}{j + 1}", f"c{j + 1}{k + 1}"]
    return columns


def series_header(nspecies: int, pairs) -> str:
    columns = ["t"]
    for k in range(nspecies):
        tag = k + 1
        columns += [f"n_{tag}", f"Px_{tag}", f"Py_{tag}", f"Pz_{tag}",
                    f"T_kin_{tag}", f"theta_{tag}"]
    columns += list(_BASE_COLUMNS)
    columns += _pair_columns(pairs)
    return ",".join(columns)


def write_series(records, path, comment: str | None = None) -> None:
    """Write diagnostics records as CSV; zero records yield a header-only
    file with the species-independent columns."""
    if records:
        nspecies = len(records[0].species)
        pairs = sorted(records[0].pair_c)
    else:
        nspecies, pairs = 0, []
    lines = []
    if comment is not None:
        lines.append(f"# {comment}")
    lines.append(series_header(nspecies, pairs))
    for rec in records:
        row = [_fmt(rec.time)]
        for state in rec.species:
            row += [_fmt(state.n), _fmt(state.momentum[0]),
                    _fmt(state.momentum[1]), _fmt(state.momentum[2]),
                    _fmt(state.kinetic_temperature),
                    _fmt(state.physical_temperature)]
        row += [_fmt(rec.total_momentum[0]), _fmt(rec.total_momentum[1]),
                _fmt(rec.total_momentum[2]), _fmt(rec.total_energy),
                _fmt(rec.entropy), _fmt(rec.dissipation)]
        for (k, j) in pairs:
            c_kj, c_jk = rec.pair_c[(k, j)]
            row += [_fmt(rec.velocity_gap(k, j)),
                    _fmt(rec.kinetic_temperature_gap(k, j)),
                    _fmt(rec.physical_temperature_gap(k, j)),
                    _fmt(c_kj), _fmt(c_jk)]
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def write_profile(profile, domain, path, comment: str | None = None) -> None:
    """Write a spatial profile CSV: x, then per-species n, Ux, T_kin,
    theta (columns suffixed by species index)."""
    profile = np.asarray(profile)
    nspecies = profile.shape[1] // 4
    columns = ["x"]
    for k in range(nspecies):
        tag = k + 1
        columns += [f"n_{tag}", f"Ux_{tag}", f"T_kin_{tag}", f"theta_{tag}"]
    lines = []
    if comment is not None:
        lines.append(f"# {comment}")
    lines.append(",".join(columns))
    for x, row in zip(domain.centers, profile):
        lines.append(",".join([_fmt(x)] + [_fmt(v) for v in row]))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def _series_arrays(records):
    t = np.array([r.time for r in records])
    nspecies = len(records[0].species)
    return t, nspecies


def render_figures(records, outdir, names=None, units: str = "") -> list:
    """Render the standard time-series figures into ``outdir``.

    Produces velocities.png, temperatures.png, entropy.png and
    conservation.png; returns the written paths.
    """
    if not records:
        return []
    t, nspecies = _series_arrays(records)
    labels = names or [str(k + 1) for k in range(nspecies)]
    unit_t = f" [{units.split('-')[-1]}]" if units and "-" in units else ""
    written = []

    fig, ax = plt.subplots(figsize=(6, 4))
    for k in range(nspecies):
        ax.plot(t, [r.species[k].velocity[0] for r in records],
                label=f"U_x {labels[k]}")
    ax.set_xlabel("t" + unit_t)
    ax.set_ylabel("mean velocity (x)")
    ax.legend()
    written.append(_save(fig, outdir, "velocities.png"))

    fig, ax = plt.subplots(figsize=(6, 4))
    for k in range(nspecies):
        line, = ax.plot(t, [r.species[k].kinetic_temperature
                            for r in records], label=f"T_kin {labels[k]}")
        ax.plot(t, [r.species[k].physical_temperature for r in records],
                linestyle="--", color=line.get_color(),
                label=f"theta {labels[k]}")
    ax.set_xlabel("t" + unit_t)
    ax.set_ylabel("temperature")
    ax.legend()
    written.append(_save(fig, outdir, "temperatures.png"))

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t, [r.entropy for r in records])
    ax.set_xlabel("t" + unit_t)
    ax.set_ylabel("entropy H")
    written.append(_save(fig, outdir, "entropy.png"))

    fig, ax = plt.subplots(figsize=(6, 4))
    first = records[0]
    scale_p = max(1.0, float(np.linalg.norm(first.total_momentum)))
    ax.semilogy(t, [abs(r.total_energy - first.total_energy)
                    / abs(first.total_energy) + 1e-18 for r in records],
                label="energy")
    ax.semilogy(t, [np.linalg.norm(r.total_momentum - first.total_momentum)
                    / scale_p + 1e-18 for r in records], label="momentum")
    for k in range(nspecies):
        ax.semilogy(t, [abs(r.species[k].n - first.species[k].n)
                        / first.species[k].n + 1e-18 for r in records],
                    label=f"n {labels[k]}")
    ax.set_xlabel("t" + unit_t)
    ax.set_ylabel("relative drift")
    ax.legend()
    written.append(_save(fig, outdir, "conservation.png"))
    return written


def render_profile_figure(profile, domain, outdir, names=None):
    """Render the 2x2 spatial profile figure (n, Ux, T_kin, theta)."""
    profile = np.asarray(profile)
    nspecies = profile.shape[1] // 4
    labels = names or [str(k + 1) for k in range(nspecies)]
    x = domain.centers
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    titles = ("density n", "mean velocity U_x", "kinetic temperature",
              "physical temperature")
    for which, ax in enumerate(axes.flat):
        for k in range(nspecies):
            ax.plot(x, profile[:, 4 * k + which], label=labels[k])
        ax.set_title(titles[which])
        ax.legend()
    for ax in axes[1]:
        ax.set_xlabel("x")
    return _save(fig, outdir, "profile.png")


def _save(fig, outdir, name: str):
    path = Path(outdir) / name
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
