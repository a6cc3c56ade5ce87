"""Run configuration files and result serialisation.

Configs are TOML documents with the sections [run], [preset], [chain],
[jumps], [dephasing], [boundary] and [honeycomb]. Unknown sections or keys
are errors. Complex numbers may be written as numbers, ``[re, im]`` pairs or
strings such as ``"1-0.5j"``.

Example::

    [run]
    t_final = 5.0
    dt = 0.01
    n_traj = 1000
    master_seed = 7
    initial = "neel"
    observables = ["total_density", "afm"]

    [preset]
    model = "xx_loss"
    N = 4
    J = 1.0
    kappa = 1.0
"""
from __future__ import annotations

import csv
import io as _io
import json
import os
import re
import struct
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import GtrajError, ParseError, ValidationError
from .gaussian import CovarianceState, ground_state
from .honeycomb import HoneycombModel, build_honeycomb, compile_honeycomb
from .models import (JumpTerm, ModelSpec, build_subradiant, build_tfim, build_xx_loss,
                     compile)
from .engine import ScheduleConfig
from .observables import resolve_observables

__version__ = "0.1.0"

MAGIC = b"GTRJ"
BIN_VERSION = 1

PRESETS = {
    "xx_loss": ({"N", "J", "kappa"}, set()),
    "subradiant": ({"N", "J", "kappa"}, set()),
    "tfim": ({"N", "J", "h", "kappa"}, set()),
}
SECTION_KEYS = {
    "run": {"t_final", "dt", "n_traj", "master_seed", "max_step_jump_prob", "observable_stride",
            "integrator", "initial", "observables", "output", "formats", "workers"},
    "preset": {"model", "N", "J", "h", "kappa", "strings"},
    "chain": {"n_sites", "delta", "hop", "pair", "constant", "strings"},
    "jumps": {"sites", "coeffs"},
    "dephasing": {"gamma"},
    "boundary": {"omega"},
    "honeycomb": {"Lx", "Ly", "Jx", "Jy", "Jz", "bond_jumps", "jump", "gauge_bits"},
}
FORMATS = {"csv", "manifest", "covariance"}


@dataclass
class RunConfig:
    model: Any                       # ModelSpec or HoneycombModel
    schedule: ScheduleConfig
    n_traj: int
    master_seed: int
    observables: list
    initial: Any = "neel"
    output: str = "results"
    formats: list = field(default_factory=lambda: ["csv", "manifest"])
    workers: int = 1
    preset: dict | None = None
    source: dict = field(default_factory=dict)
    path: str | None = None
    notes: list = field(default_factory=list)

    def compiled(self):
        if isinstance(self.model, HoneycombModel):
            return compile_honeycomb(self.model)
        return compile(self.model)

    def initial_state(self, compiled=None) -> CovarianceState:
        m = compiled if compiled is not None else self.compiled()
        return initial_state(m, self.initial)


# --- parsing -----------------------------------------------------------------

def _complex(v, where: str, errs: list):
    if isinstance(v, bool):
        errs.append(f"{where}: expected a number")
        return 0j
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    if isinstance(v, str):
        try:
            return complex(v.replace(" ", ""))
        except ValueError:
            pass
    errs.append(f"{where}: cannot read {v!r} as a complex number")
    return 0j


def _clist(v, where, errs, length=None):
    if not isinstance(v, list):
        errs.append(f"{where}: expected a list")
        return []
    out = [_complex(x, f"{where}[{k}]", errs) for k, x in enumerate(v)]
    if length is not None and len(out) != length:
        errs.append(f"{where}: expected {length} entries, got {len(out)}")
    return out


def _real(v, where, errs, positive=False, nonneg=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        errs.append(f"{where}: expected a number")
        return 0
    if integer and int(v) != v:
        errs.append(f"{where}: expected an integer")
    if not np.isfinite(v):
        errs.append(f"{where}: must be finite")
    elif positive and not v > 0:
        errs.append(f"{where}: must be > 0")
    elif nonneg and v < 0:
        errs.append(f"{where}: must be >= 0")
    return int(v) if integer else float(v)


def _locate(text: str, section: str, key: str | None):
    """Best-effort (line, column) of a section header or key."""
    lines = text.splitlines()
    in_sec = section is None
    for n, line in enumerate(lines, 1):
        s = line.strip()
        if s.startswith("["):
            in_sec = s.strip("[] ") == section
            if key is None and in_sec:
                return n, line.index("[") + 1
            continue
        if in_sec and key is not None:
            m = re.match(r"\s*([A-Za-z0-9_\"']+)\s*=", line)
            if m and m.group(1).strip("\"'") == key:
                return n, m.start(1) + 1
    return 1, 1


def parse_config_text(text: str, path: str | None = None) -> RunConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        col = getattr(exc, "colno", None)
        if line is None:
            m = re.search(r"line (\d+), column (\d+)", str(exc))
            line, col = (int(m.group(1)), int(m.group(2))) if m else (1, 1)
        raise ParseError(str(exc).split(" (at line")[0], line, col, path) from None

    for sec, body in doc.items():
        if sec not in SECTION_KEYS or not isinstance(body, dict):
            line, col = _locate(text, sec, None)
            raise ParseError(f"unknown section [{sec}]", line, col, path)
        for key in body:
            if key not in SECTION_KEYS[sec]:
                line, col = _locate(text, sec, key)
                raise ParseError(f"unknown key {key!r} in [{sec}]", line, col, path)

    errs: list[str] = []
    run = doc.get("run", {})
    if "run" not in doc:
        errs.append("[run] section is required")
    t_final = _real(run.get("t_final", 0.0), "run.t_final", errs, nonneg=True)
    dt = _real(run.get("dt", 0.01), "run.dt", errs, positive=True)
    n_traj = _real(run.get("n_traj", 1), "run.n_traj", errs, positive=True, integer=True)
    seed = _real(run.get("master_seed", 0), "run.master_seed", errs, nonneg=True, integer=True)
    workers = _real(run.get("workers", 1), "run.workers", errs, positive=True, integer=True)
    obs = run.get("observables", [])
    if not isinstance(obs, list) or not all(isinstance(o, str) for o in obs):
        errs.append("run.observables: expected a list of strings")
        obs = []
    formats = run.get("formats", ["csv", "manifest"])
    if not isinstance(formats, list) or not set(formats) <= FORMATS:
        errs.append(f"run.formats: entries must be among {sorted(FORMATS)}")
        formats = ["csv", "manifest"]
    output = run.get("output", "results")
    if not isinstance(output, str):
        errs.append("run.output: expected a string")
        output = "results"
    initial = run.get("initial", "neel")

    sched = None
    try:
        sched = ScheduleConfig(float(t_final), float(dt) if dt else 1.0,
                               float(run.get("max_step_jump_prob", 0.1)),
                               int(run.get("observable_stride", 1)),
                               str(run.get("integrator", "exact")))
    except (ValidationError, TypeError, ValueError) as exc:
        viol = getattr(exc, "violations", None) or [str(exc)]
        errs += [f"run: {v}" for v in viol]

    model, preset = _parse_model(doc, errs)

    if not errs and model is not None:
        try:
            cm = compile_honeycomb(model) if isinstance(model, HoneycombModel) else compile(model)
            resolve_observables(cm, obs)
            initial_state(cm, initial)
        except ValidationError as exc:
            errs += exc.violations or [str(exc)]
    if errs:
        raise ValidationError("invalid configuration: " + "; ".join(errs), violations=errs, path=path)
    return RunConfig(model, sched, int(n_traj), int(seed), list(obs), initial, output,
                     list(formats), int(workers), preset, doc, path)


def parse_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read config: {exc.strerror}", path=str(p)) from None
    return parse_config_text(text, str(p))


def _parse_model(doc: dict, errs: list):
    kinds = [k for k in ("preset", "chain", "honeycomb") if k in doc]
    if len(kinds) != 1:
        errs.append("exactly one of [preset], [chain] or [honeycomb] is required")
        return None, None
    kind = kinds[0]
    if kind != "chain":
        for extra in ("jumps", "dephasing", "boundary"):
            if extra in doc:
                errs.append(f"[{extra}] only applies to [chain] models")
    n_err = len(errs)
    if kind == "preset":
        p = doc["preset"]
        name = p.get("model")
        if name not in PRESETS:
            errs.append(f"preset.model: must be one of {sorted(PRESETS)}")
            return None, None
        need, _ = PRESETS[name]
        for k in sorted(need):
            if k not in p:
                errs.append(f"preset.{k}: required for model {name!r}")
        if "h" in p and name != "tfim":
            errs.append(f"preset.h: not a parameter of model {name!r}")
        if len(errs) > n_err:
            return None, None
        N = _real(p["N"], "preset.N", errs, integer=True)
        if isinstance(N, int) and N < 2:
            errs.append("preset.N: must be >= 2")
        J = _real(p["J"], "preset.J", errs)
        kappa = _real(p["kappa"], "preset.kappa", errs, positive=True)
        h = _real(p["h"], "preset.h", errs) if name == "tfim" else None
        strings = p.get("strings", True)
        if not isinstance(strings, bool):
            errs.append("preset.strings: expected true or false")
        if len(errs) > n_err:
            return None, None
        try:
            if name == "xx_loss":
                spec = build_xx_loss(N, J, kappa)
            elif name == "subradiant":
                spec = build_subradiant(N, J, kappa)
            else:
                spec = build_tfim(N, J, h, kappa)
        except ValidationError as exc:
            errs += [f"preset: {v}" for v in (exc.violations or [str(exc)])]
            return None, None
        spec.strings = bool(strings)
        echo = {"model": name, "N": N, "J": J, "kappa": kappa, "strings": bool(strings)}
        if h is not None:
            echo["h"] = h
        return spec, echo
    if kind == "chain":
        c = doc["chain"]
        if "n_sites" not in c:
            errs.append("chain.n_sites: required")
            return None, None
        n = _real(c["n_sites"], "chain.n_sites", errs, integer=True)
        if not isinstance(n, int) or n < 1:
            errs.append("chain.n_sites: must be >= 1")
            return None, None
        delta = [_real(x, f"chain.delta[{k}]", errs) for k, x in enumerate(c.get("delta", [0.0] * n))]
        hop = _clist(c.get("hop", [0.0] * (n - 1)), "chain.hop", errs, n - 1)
        pair = _clist(c.get("pair", [0.0] * (n - 1)), "chain.pair", errs, n - 1)
        if len(delta) != n:
            errs.append(f"chain.delta: expected {n} entries, got {len(delta)}")
        constant = _real(c.get("constant", 0.0), "chain.constant", errs)
        strings = c.get("strings", True)
        if not isinstance(strings, bool):
            errs.append("chain.strings: expected true or false")
        jumps = []
        if "jumps" in doc:
            jd = doc["jumps"]
            sites = jd.get("sites", [])
            coeffs = jd.get("coeffs", [])
            if not isinstance(sites, list) or not isinstance(coeffs, list) or len(sites) != len(coeffs):
                errs.append("jumps: 'sites' and 'coeffs' must be lists of equal length")
            else:
                for k, (s, q) in enumerate(zip(sites, coeffs)):
                    s = _real(s, f"jumps.sites[{k}]", errs, integer=True)
                    q = _clist(q, f"jumps.coeffs[{k}]", errs, 4)
                    if len(q) == 4:
                        jumps.append(JumpTerm(int(s), tuple(q)))
        deph = None
        if "dephasing" in doc:
            g = doc["dephasing"].get("gamma", [])
            deph = [_real(x, f"dephasing.gamma[{k}]", errs, nonneg=True) for k, x in enumerate(g)] \
                if isinstance(g, list) else [_real(g, "dephasing.gamma", errs, nonneg=True)] * n
        boundary = None
        if "boundary" in doc:
            om = doc["boundary"].get("omega", [])
            boundary = [_real(x, f"boundary.omega[{k}]", errs) for k, x in enumerate(om)] \
                if isinstance(om, list) else []
            if len(boundary) != 4:
                errs.append("boundary.omega: expected four drive amplitudes")
        if len(errs) > n_err:
            return None, None
        try:
            spec = ModelSpec(n, delta, hop, pair, jumps, deph, boundary, bool(strings), constant)
        except ValidationError as exc:
            errs += [f"chain: {v}" for v in (exc.violations or [str(exc)])]
            return None, None
        return spec, None
    hc = doc["honeycomb"]
    lx = _real(hc.get("Lx", 2), "honeycomb.Lx", errs, integer=True)
    ly = _real(hc.get("Ly", 2), "honeycomb.Ly", errs, integer=True)
    J = [_real(hc.get(k, 1.0), f"honeycomb.{k}", errs) for k in ("Jx", "Jy", "Jz")]
    if "bond_jumps" in hc and "jump" in hc:
        errs.append("honeycomb: give either 'jump' or 'bond_jumps', not both")
    if "bond_jumps" in hc:
        bj = hc["bond_jumps"]
        lj = [_clist(row, f"honeycomb.bond_jumps[{k}]", errs, 2) for k, row in enumerate(bj)] \
            if isinstance(bj, list) else []
    else:
        lj = _clist(hc.get("jump", [0.0, 0.0]), "honeycomb.jump", errs, 2)
    gb = hc.get("gauge_bits")
    if len(errs) > n_err:
        return None, None
    try:
        return build_honeycomb(lx, ly, J, lj, gb), None
    except ValidationError as exc:
        errs += [f"honeycomb: {v}" for v in (exc.violations or [str(exc)])]
        return None, None


def initial_state(model, initial) -> CovarianceState:
    """Resolve an initial-state request: "neel", "neel_odd", "filled", "empty",
    "ground" or an explicit 0/1 occupation list over physical sites."""
    if model.kind == "honeycomb":
        if initial not in ("ground", None):
            raise ValidationError("run.initial: honeycomb runs start from \"ground\"")
        return ground_state(model.hamiltonian, parity=model.spec.physical_parity())
    n = model.n_sites
    if isinstance(initial, list):
        if len(initial) != n or any(x not in (0, 1) for x in initial):
            raise ValidationError(f"run.initial: need {n} occupations in {{0, 1}}")
        return model.initial_state(initial)
    table = {
        "neel": [(i + 1) % 2 for i in range(n)],
        "neel_odd": [i % 2 for i in range(n)],
        "filled": [1] * n,
        "empty": [0] * n,
    }
    if initial == "ground":
        return ground_state(model.hamiltonian)
    if initial not in table:
        raise ValidationError(f"run.initial: unknown initial state {initial!r}")
    return model.initial_state(table[initial])


# --- results -----------------------------------------------------------------

def version_string() -> str:
    here = Path(__file__).resolve().parent
    try:
        rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"], cwd=here, capture_output=True,
                             text=True, timeout=5)
        if rev.returncode == 0 and rev.stdout.strip():
            return f"gtraj {__version__} ({rev.stdout.strip()})"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"gtraj {__version__}"


def _fmt(x: float) -> str:
    return repr(float(x))


def series_csv(times, mean, stderr=None) -> str:
    buf = _io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", "mean", "stderr"])
    se = np.zeros(len(times)) if stderr is None else stderr
    for t, m, s in zip(times, mean, se):
        w.writerow([_fmt(t), _fmt(m), _fmt(s)])
    return buf.getvalue()


def safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def write_results(result, outdir, formats=("csv", "manifest"), extra_manifest: dict | None = None,
                  snapshots: dict | None = None) -> list[Path]:
    """Write one CSV per observable, ``manifest.json`` and optional covariance snapshots."""
    out = Path(outdir)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "csv" in formats:
            for name, mean in result.mean.items():
                p = out / f"{safe_name(name)}.csv"
                with open(p, "w", encoding="utf-8", newline="") as fh:
                    fh.write(series_csv(result.times, mean, result.stderr.get(name)))
                written.append(p)
        if "covariance" in formats and snapshots:
            for name, mat in snapshots.items():
                p = out / f"{safe_name(name)}.gtrj"
                write_matrix(p, mat)
                written.append(p)
        if "manifest" in formats or not result.mean:
            man = dict(result.manifest)
            man.setdefault("n_traj", result.n_traj)
            man.setdefault("version", version_string())
            man["observables"] = list(result.mean)
            if extra_manifest:
                man.update(extra_manifest)
            p = out / "manifest.json"
            with open(p, "w", encoding="utf-8", newline="\n") as fh:
                json.dump(_jsonable(man), fh, indent=2, sort_keys=True)
                fh.write("\n")
            written.append(p)
    except OSError as exc:
        raise GtrajError(f"cannot write results: {exc.strerror}", path=str(exc.filename or out)) from None
    return written


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def read_series_csv(path):
    """Inverse of the CSV writer: returns (times, mean, stderr) as float arrays."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["time", "mean", "stderr"]:
        raise ParseError("not a gtraj series file", 1, 1, str(path))
    data = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, 3)
    return data[:, 0], data[:, 1], data[:, 2]


def write_matrix(path, mat) -> None:
    m = np.ascontiguousarray(np.asarray(mat, dtype="<c16"))
    if m.ndim != 2:
        raise ValidationError("covariance snapshots must be 2-D", shape=m.shape)
    rows, cols = m.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<III", BIN_VERSION, rows, cols))
        fh.write(m.tobytes())


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) != 16 or head[:4] != MAGIC:
            raise ParseError("bad GTRJ header", 1, 1, str(path))
        version, rows, cols = struct.unpack("<III", head[4:])
        if version != BIN_VERSION:
            raise ParseError(f"unsupported GTRJ version {version}", 1, 5, str(path))
        body = fh.read()
    if len(body) != 16 * rows * cols:
        raise ParseError("GTRJ payload size does not match header", 1, 13, str(path))
    return np.frombuffer(body, dtype="<c16").reshape(rows, cols).astype(complex)


def config_echo(cfg: RunConfig) -> dict:
    """Lossless description of the model and run settings for the manifest."""
    model = cfg.model.to_dict()
    echo = {"model": model, "preset": cfg.preset, "initial": cfg.initial,
            "observables": cfg.observables, "schedule": {
                "t_final": cfg.schedule.t_final, "dt": cfg.schedule.dt,
                "max_step_jump_prob": cfg.schedule.max_step_jump_prob,
                "observable_stride": cfg.schedule.observable_stride,
                "integrator": cfg.schedule.integrator}}
    return echo


def spec_from_echo(model: dict):
    """Rebuild a model from its manifest echo."""
    if model.get("kind") == "honeycomb":
        c = model["couplings"]
        lj = np.array([[complex(*z) for z in row] for row in model["bond_jumps"]])
        return build_honeycomb(model["lx"], model["ly"], (c["x"], c["y"], c["z"]), lj,
                               model["gauge_bits"])

    def cl(v):
        return [complex(a, b) for a, b in v]
    jumps = [JumpTerm(j["site"], tuple(cl(j["coeffs"]))) for j in model["jumps"]]
    return ModelSpec(model["n_sites"], model["delta"], cl(model["hop"]), cl(model["pair"]), jumps,
                     model["dephasing"], model["boundary"], model["strings"], model["constant"])


def threads_env() -> str | None:
    return os.environ.get("GTRJ_THREADS")
