"""Command-line orchestrator: configuration, pipelines, persistent artifacts.

Subcommands: verify, landscape, capacity, srw, simulate, report.  Outputs are
deterministic JSON/CSV keyed by a config hash; timings live only in the
manifest so re-runs are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, hypotheses, kmc, landscape, potential, srw
from .geometry import LatticeGeometry
from .model import ModelParams

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2

PRESETS = {
    "preset-4x3": {
        "lattice": {"width": 4, "height": 3},
        "model": {"U": "1", "delta1": "9/10", "delta2": "3/2"},
        "run": {"betaGrid": [2.0, 4.0, 6.0, 8.0], "seedBase": 0, "runCount": 500},
    },
    "preset-4x4": {
        "lattice": {"width": 4, "height": 4},
        "model": {"U": "1", "delta1": "9/10", "delta2": "3/2"},
        "run": {"betaGrid": [2.0, 4.0], "seedBase": 0, "runCount": 200},
    },
    # H1+H2 hold here (unique checkerboard ground state in the 3x1 interior)
    "preset-5x3": {
        "lattice": {"width": 5, "height": 3},
        "model": {"U": "1", "delta1": "3/10", "delta2": "6/5"},
        "run": {"betaGrid": [2.0, 4.0, 6.0], "seedBase": 0, "runCount": 500},
    },
    # droplet-shaped gate with symmetric activation energies: H2 and all of
    # H3 hold; C*_bd = interior pair + free particle on the boundary
    "preset-5x3-gate": {
        "lattice": {"width": 5, "height": 3},
        "model": {"U": "1", "delta1": "5/4", "delta2": "5/4"},
        "run": {"betaGrid": [5.0, 6.0, 7.0], "seedBase": 0, "runCount": 500},
    },
}

DEFAULT_CONFIG = {
    "lattice": {"width": 4, "height": 3},
    "model": {"U": "1", "delta1": "9/10", "delta2": "3/2"},
    "run": {"betaGrid": [2.0, 4.0], "seedBase": 0, "runCount": 200},
    "analysis": {
        "landscape": True,
        "capacity": True,
        "verify": True,
        "simulate": True,
        "srw": {"Mlist": [16, 64], "epsilon": 0.1},
    },
    "output": {"directory": "out", "formats": ["json", "csv"]},
}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def _parse_scalar(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    if "/" in text:
        try:
            Fraction(text)
            return text  # keep exact rationals as strings
        except (ValueError, ZeroDivisionError):
            pass
    return text


def parse_dotted_config(text: str) -> dict:
    """Flat `a.b.c = value` lines (and # comments) into a nested dict."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, val = line.split("=", 1)
        node = out
        parts = [p.strip() for p in key.strip().split(".")]
        if not all(parts):
            raise ValueError(f"line {lineno}: bad key {key!r}")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ValueError(f"line {lineno}: {p} already holds a value")
        node[parts[-1]] = _parse_scalar(val)
    return out


def _deep_update(base: dict, extra: dict) -> dict:
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _deep_update(base[k], v)
        else:
            base[k] = v
    return base


def load_config(args) -> dict:
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))
    if args.preset:
        if args.preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {args.preset!r}; available: {', '.join(sorted(PRESETS))}"
            )
        _deep_update(cfg, json.loads(json.dumps(PRESETS[args.preset])))
    if args.config:
        text = Path(args.config).read_text()
        parsed = json.loads(text) if text.lstrip().startswith("{") else parse_dotted_config(text)
        _deep_update(cfg, parsed)
    if args.beta:
        cfg["run"]["betaGrid"] = [float(b) for b in args.beta.split(",")]
    if args.seed_base is not None:
        cfg["run"]["seedBase"] = int(args.seed_base)
    if args.out:
        cfg["output"]["directory"] = args.out
    grid = cfg["run"]["betaGrid"]
    if any(b2 <= b1 for b1, b2 in zip(grid, grid[1:])):
        raise ConfigError("run.betaGrid must be strictly increasing")
    return cfg


class ConfigError(ValueError):
    pass


def config_hash(cfg: dict) -> str:
    """Hash of the science-relevant config (output location excluded)."""
    core = {k: v for k, v in cfg.items() if k != "output"}
    blob = json.dumps(core, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def build_model(cfg):
    lat = cfg["lattice"]
    geom = LatticeGeometry(int(lat["width"]), int(lat["height"]))
    n = geom.n_sites
    if 3**n > landscape.ENUM_LIMIT:
        raise ConfigError(
            f"enumeration of 3^{n} = {3**n} states exceeds the 2^32 refusal "
            f"threshold; reduce the box (this tool is exhaustive by design)"
        )
    m = cfg["model"]
    params = ModelParams(m["U"], m["delta1"], m["delta2"])
    return geom, params


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _num(v):
    if isinstance(v, Fraction):
        return {"exact": str(v), "value": float(v)}
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=1, default=_num) + "\n")


def write_manifest(outdir: Path, cfg, timings: dict, command: str):
    write_json(outdir / "manifest.json", {
        "configHash": config_hash(cfg),
        "config": cfg,
        "command": command,
        "versions": {
            "latmet": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "backend": __import__("latmet.kernels", fromlist=["BACKEND"]).BACKEND,
        },
        "timings": timings,
    })


# ---------------------------------------------------------------------------
# pipeline pieces (shared by subcommands)
# ---------------------------------------------------------------------------


class Pipeline:
    def __init__(self, cfg, workers):
        self.cfg = cfg
        self.workers = workers
        self.geometry, self.params = build_model(cfg)
        self.hash = config_hash(cfg)
        self._space = self._stab = self._part = self._gate = None
        self.timings: dict = {}

    def space(self):
        if self._space is None:
            t0 = time.time()
            self._space = landscape.StateSpace(self.geometry, self.params)
            self.timings["energyTable"] = time.time() - t0
        return self._space

    def stability(self):
        if self._stab is None:
            t0 = time.time()
            self._stab = landscape.stability_levels(self.space())
            self.timings["stability"] = time.time() - t0
        return self._stab

    def parts(self):
        if self._part is None:
            t0 = time.time()
            self._part = landscape.partition(self.space(), self.stability().gamma_star_scaled)
            self._gate = landscape.gate_analysis(self.space(), self._part)
            self.timings["partitionGate"] = time.time() - t0
        return self._part, self._gate

    def landscape_report(self) -> dict:
        sp, st = self.space(), self.stability()
        part, gate = self.parts()
        verdict = hypotheses.check_hypotheses(sp, st, part, gate)
        verdict.lemma_checks = hypotheses.verify_structural_lemmas(sp, st, part, gate, verdict)
        g = self.geometry
        wells = [
            {"size": len(w), "minEnergy": _num(sp.to_physical(min(int(sp.H[c]) for c in w)))}
            for w in part.wells
        ]
        per_proto = [
            {
                "code": int(pc),
                "support": list(map(list, gate.per_proto[pc].support)),
                "attachSites": list(map(list, gate.per_proto[pc].attach_sites)),
                "goodSites": list(map(list, gate.per_proto[pc].good_sites)),
                "badSites": list(map(list, gate.per_proto[pc].bad_sites)),
                "wellIndices": list(gate.per_proto[pc].well_indices),
                "cs": list(map(list, gate.per_proto[pc].cs)),
                "csPlus": list(map(list, gate.per_proto[pc].cs_plus)),
                "csPlusPlus": list(map(list, gate.per_proto[pc].cs_plus_plus)),
            }
            for pc in gate.protocritical
        ]
        return {
            "schema": "latmet/landscape/1",
            "configHash": self.hash,
            "lattice": {"width": g.width, "height": g.height},
            "model": self.params.as_dict(),
            "gammaStar": _num(st.gamma_star),
            "gamma": _num(st.gamma),
            "vStar": _num(st.v_star),
            "nStar": gate.n_star,
            "plusCode": sp.plus_code,
            "xStabCodes": [int(c) for c in st.x_stab[:64]],
            "xMetaCodes": [int(c) for c in st.x_meta[:64]],
            "xStarSize": int(len(part.x_star)),
            "xStarStarSize": int(len(part.x_star_star)),
            "componentBoxSize": len(part.comp_box),
            "componentPlusSize": len(part.comp_plus),
            "wells": wells,
            "gate": {
                "levelSetSize": len(gate.level_set),
                "onPathSize": len(gate.on_path),
                "crossingSize": len(gate.crossing),
                "entranceSet": [int(c) for c in gate.entrance],
                "protocritical": [int(c) for c in gate.protocritical],
                "criticalSet": [int(c) for c in gate.critical],
                "attachedSet": [int(c) for c in gate.attached],
                "nStar": gate.n_star,
                "perProtocritical": per_proto,
                "essentialFlags": (
                    {str(k): bool(v) for k, v in gate.essential.items()}
                    if gate.essential is not None else "undecided"
                ),
            },
            "hypotheses": verdict.as_dict(),
            "lemmas": verdict.lemma_checks,
        }

    def capacity_report(self) -> dict:
        sp, st = self.space(), self.stability()
        part, gate = self.parts()
        t0 = time.time()
        dom = potential.default_domain(sp, st.gamma_star_scaled)
        theta = potential.theta_quotient(sp, part)
        betas = [float(b) for b in self.cfg["run"]["betaGrid"]]
        gs_phys = float(st.gamma_star)
        rows = []
        for beta in betas:
            rep = potential.capacity(sp, [sp.box_code], [sp.plus_code], beta, dom)
            rows.append({
                "beta": beta,
                "capDirichlet": rep.cap_dirichlet,
                "capEscape": rep.cap_escape,
                "capReverse": rep.cap_reverse,
                "relDiffRepresentations": abs(rep.cap_dirichlet - rep.cap_escape)
                / max(rep.cap_dirichlet, 1e-300),
                "scaledOverGammaStar": rep.scaled_dirichlet
                * math.exp(-beta * (rep.offset - gs_phys)),
                "harmonicResidual": rep.potential.residual,
            })
        ap = potential.apriori_bounds(
            sp, [sp.box_code], [sp.plus_code], betas, dom,
            stab_phis=(st.phi_box, st.phi_plus),
        )
        triv = potential.potential_triviality_profile(sp, part, betas)
        hitting = []
        for beta in betas:
            if sp.n_states <= 3**12 and beta <= 4:
                mh = potential.mean_hitting_time(sp, beta)
            else:
                mh = potential.mean_hitting_time(sp, beta, domain=dom)
            hitting.append({"beta": beta, **mh})
        self.timings["capacity"] = time.time() - t0
        return {
            "schema": "latmet/capacity/1",
            "configHash": self.hash,
            "gammaStar": _num(st.gamma_star),
            "theta": theta.theta,
            "kValue": theta.k_value,
            "wellConstants": theta.well_constants,
            "thetaResidual": theta.residual,
            "capacities": rows,
            "apriori": {
                "phi": _num(ap["phi"]),
                "c1": ap["c1"],
                "c2": ap["c2"],
                "witnessLength": ap["witness_length"],
                "rows": ap["rows"],
                "allOk": ap["all_ok"],
            },
            "trivialityProfile": triv,
            "meanHitting": hitting,
        }

    def instrumentation(self):
        sp, _ = self.space(), self.stability()
        _, gate = self.parts()
        return kmc.Instrumentation.from_gate(sp, gate)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_verify(pipe: Pipeline, outdir: Path, args) -> int:
    report = pipe.landscape_report()
    write_json(outdir / "verify.json", {
        "schema": "latmet/verify/1",
        "configHash": pipe.hash,
        "hypotheses": report["hypotheses"],
        "lemmas": report["lemmas"],
    })
    ok = report["hypotheses"]["allPass"]
    print(f"verify: regionOk={report['hypotheses']['regionOk']} "
          f"allPass={ok} -> {outdir/'verify.json'}")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_landscape(pipe: Pipeline, outdir: Path, args) -> int:
    write_json(outdir / "landscape.json", pipe.landscape_report())
    print(f"landscape: Gamma*={pipe.stability().gamma_star} -> {outdir/'landscape.json'}")
    return EXIT_OK


def cmd_capacity(pipe: Pipeline, outdir: Path, args) -> int:
    rep = pipe.capacity_report()
    write_json(outdir / "capacity.json", rep)
    if "csv" in pipe.cfg["output"].get("formats", []):
        sp, st = pipe.space(), pipe.stability()
        beta = float(pipe.cfg["run"]["betaGrid"][-1])
        dom = potential.default_domain(sp, st.gamma_star_scaled)
        f = potential.equilibrium_potential(sp, [sp.box_code], [sp.plus_code], beta, dom)
        with open(outdir / "hstar.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["code", "hstar"])
            for c, v in zip(f.domain.tolist(), f.values.tolist()):
                w.writerow([c, repr(v)])
    print(f"capacity: theta={rep['theta']:.6g} K={rep['kValue']:.6g} -> {outdir/'capacity.json'}")
    return EXIT_OK


def cmd_srw(pipe: Pipeline, outdir: Path, args) -> int:
    sp = pipe.space()
    _, gate = pipe.parts()
    shapes = srw.shapes_from_gate(sp, gate)
    scfg = pipe.cfg["analysis"]["srw"]
    rows = srw.kasymp_trend(
        [int(m) for m in scfg["Mlist"]], gate.n_star, shapes,
        epsilon=float(scfg.get("epsilon", 0.1)), workers=pipe.workers,
    )
    write_json(outdir / "srw.json", {
        "schema": "latmet/srw/1",
        "configHash": pipe.hash,
        "nStar": gate.n_star,
        "epsilon": float(scfg.get("epsilon", 0.1)),
        "shapes": [{"support": [list(s) for s in sh["support"]]} for sh in shapes],
        "rows": rows,
    })
    with open(outdir / "srw.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["M", "theta1", "theta2", "escapeRatio", "kasympRatio1", "kasympRatio2"])
        for r in rows:
            w.writerow([r["M"], repr(r["theta1"]), repr(r["theta2"]),
                        repr(r["escapeRatio"]), repr(r["kasympRatio1"]), repr(r["kasympRatio2"])])
    print(f"srw: {len(rows)} rows -> {outdir/'srw.csv'}")
    return EXIT_OK


def cmd_simulate(pipe: Pipeline, outdir: Path, args) -> int:
    sp, st = pipe.space(), pipe.stability()
    _, gate = pipe.parts()
    instr = pipe.instrumentation()
    theta = potential.theta_quotient(sp, pipe.parts()[0]).theta
    cfgrun = pipe.cfg["run"]
    betas = [float(b) for b in cfgrun["betaGrid"]]
    n = int(cfgrun.get("runCount", 200))
    seed_base = int(cfgrun.get("seedBase", 0))
    per_beta = []
    for bi, beta in enumerate(betas):
        seeds = [seed_base + bi * 10**6 + k for k in range(n)]
        recs = kmc.run_batch(
            pipe.geometry, pipe.params, beta, seeds, workers=pipe.workers,
            instrumentation=instr,
        )
        stats = kmc.batch_statistics(
            recs, gate_codes=instr.gate_codes, theta=theta,
            gamma_star=float(st.gamma_star),
        )
        times = sorted(r.hitting_time for r in recs if r.complete)
        norm = [t / stats.mean_time for t in times]
        step = max(1, len(norm) // 512)
        d = stats.as_dict()
        d["beta"] = beta
        d["tauOverMeanSorted"] = norm[::step]
        per_beta.append(d)
        path = outdir / (f"trace-beta{beta:g}.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["seed", "hittingTime", "gateEntranceCode", "excursionCount"])
            for r in recs:
                w.writerow([r.seed, repr(r.hitting_time), r.gate_entrance, r.excursion_count])
        if beta == betas[-1]:
            (outdir / "trace.csv").write_text(path.read_text())
    write_json(outdir / "stats.json", {
        "schema": "latmet/stats/1",
        "configHash": pipe.hash,
        "gammaStar": _num(st.gamma_star),
        "theta": theta,
        "gateSize": len(instr.gate_codes),
        "perBeta": per_beta,
    })
    print(f"simulate: {len(betas)} beta values x {n} runs -> {outdir/'stats.json'}")
    return EXIT_OK


def cmd_report(pipe: Pipeline, outdir: Path, args) -> int:
    merged = {"schema": "latmet/report/1", "configHash": pipe.hash,
              "lattice": pipe.cfg["lattice"], "model": pipe.cfg["model"]}
    missing = []
    for name in ("landscape", "capacity", "stats", "srw"):
        path = outdir / f"{name}.json"
        if not path.exists():
            missing.append(name)
            continue
        payload = json.loads(path.read_text())
        if payload.get("configHash") != pipe.hash:
            print(f"error: {path} was produced under configHash="
                  f"{payload.get('configHash')}, current is {pipe.hash}; refusing to mix",
                  file=sys.stderr)
            return EXIT_USAGE
        merged[name] = payload
    merged["missingSections"] = missing
    write_json(outdir / "report.json", merged)
    print(f"report: merged {4 - len(missing)}/4 sections -> {outdir/'report.json'}")
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "landscape": cmd_landscape,
    "capacity": cmd_capacity,
    "srw": cmd_srw,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="latmet",
        description="Two-type Kawasaki lattice gas: landscape, capacities, KMC.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="config file (dotted keys or JSON)")
    parser.add_argument("--preset", help=f"one of: {', '.join(sorted(PRESETS))}")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--beta", help="comma-separated beta grid override")
    parser.add_argument("--seed-base", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args)
        pipe = Pipeline(cfg, args.workers)
    except (ConfigError, ValueError, OSError, json.JSONDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE

    outdir = Path(cfg["output"]["directory"])
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    try:
        rc = COMMANDS[args.command](pipe, outdir, args)
    except (ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    pipe.timings["total"] = time.time() - t0
    write_manifest(outdir, cfg, pipe.timings, args.command)
    return rc


if __name__ == "__main__":
    sys.exit(main())
