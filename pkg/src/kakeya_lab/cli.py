"""kakeya-lab command line.

Exit codes: 0 every verdict passed, 1 some verdict failed, 2 usage or input
error, 3 the resource estimate exceeds the memory budget (refused before any
large allocation).

Seed precedence: --seed, then the KAKEYA_SEED environment variable, then the
config file's "seed", then 0.  Other options: command line, then the
subcommand's section of the config file, then top-level config keys, then
built-in defaults.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import re
import sys
import warnings

import numpy as np

from . import __version__
from .errors import DegeneracyError, KakeyaLabError, PreconditionError, ResourceError, VerificationError
from .reports import (ExperimentReport, RunManifest, check, dumps, reports_json, sha256_file,
                      summary_csv, write_run)
from .seeding import SEED_ENV

log = logging.getLogger("kakeya_lab")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3
DEFAULT_MEMORY = 4 << 30
TUBE_EXPERIMENTS = ("volume", "wolff", "planiness", "profile", "decompose", "hairbrush", "two-ends")
RING_EXTRA = ("X", "L", "union", "projection", "lines_in_X")
MIN_DELTA_EXP, MAX_DELTA_EXP = 3, 10
TUBE_OBJECT_BYTES = 2000            # a Tube with its Line3, in Python objects
SLAB_BYTES = (1 << 25) * 4


class UsageError(KakeyaLabError):
    pass


# ---------------------------------------------------------------- parsing helpers

def parse_delta(text):
    """"1/2^k" (or the equivalent "1/N" with N a power of two) -> (k, 2^-k)."""
    text = str(text).strip().replace(" ", "")
    m = re.fullmatch(r"1/2\^(\d+)", text) or re.fullmatch(r"2\^-(\d+)", text)
    if m:
        k = int(m.group(1))
    else:
        m = re.fullmatch(r"1/(\d+)", text)
        if not m:
            raise PreconditionError(f"delta must look like 1/2^k, got {text!r}")
        n = int(m.group(1))
        if n < 1 or n & (n - 1):
            raise PreconditionError(f"delta 1/{n} is not dyadic")
        k = n.bit_length() - 1
    if not MIN_DELTA_EXP <= k <= MAX_DELTA_EXP:
        raise PreconditionError(f"delta must lie in [2^-{MAX_DELTA_EXP}, 2^-{MIN_DELTA_EXP}], got 2^-{k}")
    return k, 2.0 ** -k


def parse_bytes(text):
    m = re.fullmatch(r"\s*(\d+(?:\.\d+)?)\s*([kKmMgGtT]?)i?[bB]?\s*", str(text))
    if not m:
        raise PreconditionError(f"cannot parse memory size {text!r}")
    mult = {"": 1, "k": 1 << 10, "m": 1 << 20, "g": 1 << 30, "t": 1 << 40}[m.group(2).lower()]
    return int(float(m.group(1)) * mult)


def parse_list(text, allowed, name):
    items = [s.strip() for s in str(text).split(",") if s.strip()]
    if items == ["all"]:
        return list(allowed)
    bad = [s for s in items if s not in allowed]
    if bad or not items:
        raise PreconditionError(f"unknown {name}: {', '.join(bad) or '(none)'}; choose from {', '.join(allowed)}")
    return list(dict.fromkeys(items))


def _sha_inputs(*paths):
    return {p: sha256_file(p) for p in paths if p}


# ---------------------------------------------------------------- sl2-ring

def sl2_ring_params(opt):
    from .finite_ring import AXIOMS, is_prime
    p = int(opt["p"])
    if not is_prime(p):
        raise PreconditionError(f"p={p} is not prime")
    checks = parse_list(opt["checks"], AXIOMS + RING_EXTRA, "checks")
    return {"p": p, "checks": checks}


def sl2_ring_estimate(params):
    from .finite_ring import AXIOMS, MAX_P_PLANES, PLANE_AXIOMS
    p = params["p"]
    q = p * p
    n = p ** 4
    axioms = [c for c in params["checks"] if c in AXIOMS]
    est = {"points": q ** 3, "lines": n, "pairs": 0, "planes": 0}
    mem = q ** 3 * 8 * 2
    if any(c != "line_count" for c in axioms):
        est["pairs"] = n * n
        mem += n * n * 8 + n * q ** 3 * 5
    if any(c in PLANE_AXIOMS for c in axioms):
        est["planes"] = q ** 3 * q
        mem += est["planes"] * q ** 3 + est["planes"] * n
        if p > MAX_P_PLANES:
            est["refused"] = f"plane enumeration is limited to p <= {MAX_P_PLANES}"
    est["memory_bytes"] = int(mem)
    return est


def run_sl2_ring(params, seed):
    from .finite_ring import AXIOMS, build_sl2_lines, sl2_set_codes, verify_ring_axioms
    p = params["p"]
    checks = params["checks"]
    lines = build_sl2_lines(p)
    axioms = tuple(c for c in checks if c in AXIOMS)
    rep = verify_ring_axioms(lines, p, checks=axioms)
    card = rep.cardinalities
    xset = sl2_set_codes(p)
    outside = sum(int(np.setdiff1d(ln.point_codes(), xset).size > 0) for ln in lines)
    meas = {"p": p, **card, "lines_outside_X": outside, "union_ratio": card["union"] / card["X"]}
    verdicts = [check(a.name, a.witness if not a.passed else "ok", "==", "ok") for a in rep.axioms]
    # the union is measured only: whether it exhausts X is an open question
    targets = {"X": p ** 5, "L": p ** 4 - p ** 2, "projection": p ** 3}
    for name in ("X", "L", "projection"):
        if name in checks:
            verdicts.append(check(f"cardinality_{name}", card[name], "==", targets[name]))
    if "lines_in_X" in checks:
        verdicts.append(check("lines_in_X", outside, "==", 0))
    report = ExperimentReport("sl2-ring", seed, params, meas, verdicts)
    return [report], {"axiom_report.json": rep.to_json() + "\n"}


# ---------------------------------------------------------------- regulus

REGULUS_TASKS = ("fit", "curvature", "normalize")
FIT_SAMPLES = 30


def read_triples(path):
    """Rows of 18 numbers (base and direction of three lines); '#' starts a comment."""
    out = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            fields = [f for f in re.split(r"[,\s]+", text) if f]
            try:
                vals = [float(f) for f in fields]
            except ValueError as exc:
                raise PreconditionError(f"{path}:{lineno}: {exc}") from exc
            if len(vals) != 18 or not all(math.isfinite(v) for v in vals):
                raise PreconditionError(f"{path}:{lineno}: expected 18 finite numbers, got {len(vals)}")
            out.append((lineno, np.array(vals).reshape(3, 2, 3)))
    return out


def write_triples(triples):
    rows = ["# base_x base_y base_z dir_x dir_y dir_z for each of three lines"]
    for lines in triples:
        rows.append(" ".join(repr(float(v)) for L in lines for v in (*L.base, *L.direction)))
    return "\n".join(rows) + "\n"


def regulus_params(opt):
    tasks = parse_list(opt["tasks"], REGULUS_TASKS, "tasks")
    if opt.get("lines") and opt.get("generate"):
        raise PreconditionError("give either --lines or --generate")
    if not opt.get("lines") and not opt.get("generate") and not opt.get("canonical"):
        raise PreconditionError("give --lines FILE, --generate N or --canonical")
    return {"lines": opt.get("lines"), "generate": int(opt["generate"] or 0),
            "canonical": bool(opt.get("canonical")), "tasks": tasks}


def regulus_estimate(params):
    n = params["generate"] + int(params["canonical"])
    if params["lines"]:
        with open(params["lines"]) as fh:
            n += sum(1 for ln in fh if ln.split("#", 1)[0].strip())
    return {"records": n, "memory_bytes": 4096 * n + (1 << 20)}


def _line_mismatch(L, target):
    """Largest distance from two points of L to the target line."""
    return float(target.distance_to_points(np.array([L.base, L.base + L.direction])).max())


def _degeneracy(lines):
    from .geometry.regulus import check_hyperboloid, check_skew, coplanarity
    flags = []
    for i in range(3):
        for j in range(i + 1, 3):
            if coplanarity(lines[i], lines[j]) < 1e-9:
                flags.append(f"coplanar_{i + 1}{j + 1}")
    try:
        check_skew(lines)
    except DegeneracyError as exc:
        flags.append(f"not_skew: {exc}")
    try:
        check_hyperboloid(*lines)
    except DegeneracyError:
        flags.append("paraboloid")
    return flags


def analyse_triple(lines, tasks):
    """Per-record numbers for the regulus subcommand."""
    from .geometry.lines import Line3
    from .geometry.quadric import MONOMIALS
    from .geometry.regulus import (CANONICAL_TRIPLE, affine_normalize, curvature_identity,
                                   fit_regulus, gauss_curvature_pair)
    rec = {"flags": _degeneracy(lines)}
    if any(f.startswith("not_skew") or f.startswith("coplanar") for f in rec["flags"]):
        return rec
    try:
        R = fit_regulus(*lines, require_hyperboloid=False)
    except (DegeneracyError, VerificationError) as exc:
        rec["flags"].append(f"fit_failed: {exc}")
        return rec
    if "fit" in tasks:
        c = R.quadric.normalized().coeffs
        rec["quadric"] = {m: float(v) + 0.0 for m, v in zip(MONOMIALS, c)}
        ts = np.linspace(-1.0, 1.0, FIT_SAMPLES)
        worst = 0.0
        for L in lines:
            pts = L.point(L.foot_parameter(np.zeros(3)) + ts)
            worst = max(worst, float(R.quadric.distance_proxy(pts).max()))
        rec["fit_residual"] = worst
    if "paraboloid" in rec["flags"]:
        return rec
    if "curvature" in tasks:
        try:
            ident = curvature_identity(R)
            rec["identity_lhs"], rec["identity_rhs"] = ident["lhs"], ident["rhs"]
            rec["identity_residual"] = abs(ident["lhs"] - ident["rhs"]) / max(abs(ident["rhs"]), 1e-300)
            spread = 0.0
            for p in (R.frame.origin, lines[1].closest_point_to(np.zeros(3))):
                k1, k2 = gauss_curvature_pair(R, p)
                spread = max(spread, abs(k1 - k2) / max(abs(k1), abs(k2), 1e-300))
            rec["curvature_agreement"] = spread
        except (DegeneracyError, VerificationError, PreconditionError) as exc:
            rec["flags"].append(f"curvature_failed: {exc}")
    if "normalize" in tasks:
        try:
            T = affine_normalize(*lines)
        except (DegeneracyError, VerificationError) as exc:
            rec["flags"].append(f"normalize_failed: {exc}")
        else:
            Ti = T.inverse()
            fwd = max(_line_mismatch(T.map_line(L), C) for L, C in zip(lines, CANONICAL_TRIPLE))
            back = max(_line_mismatch(Ti.map_line(C), Line3(L.base, L.direction))
                       for L, C in zip(lines, CANONICAL_TRIPLE))
            rec["normalization"] = {"A": T.A.tolist(), "b": T.b.tolist()}
            rec["round_trip"] = max(fwd, back)
    return rec


def run_regulus(params, seed):
    from .geometry.lines import Line3
    from .geometry.regulus import CANONICAL_TRIPLE, sample_admissible_triple
    from .seeding import make_rng
    triples = []
    if params["canonical"]:
        triples.append(("canonical", CANONICAL_TRIPLE))
    if params["lines"]:
        for lineno, arr in read_triples(params["lines"]):
            try:
                lines = tuple(Line3(b, d) for b, d in arr)
            except (PreconditionError, ValueError) as exc:
                raise PreconditionError(f"{params['lines']}:{lineno}: {exc}") from exc
            triples.append((f"line {lineno}", lines))
    rng = make_rng(seed)
    generated = []
    for i in range(params["generate"]):
        lines = sample_admissible_triple(rng)
        generated.append(lines)
        triples.append((f"generated {i}", lines))
    records = []
    for source, lines in triples:
        rec = analyse_triple(lines, params["tasks"])
        rec["source"] = source
        records.append(rec)

    def worst(key):
        vals = [r[key] for r in records if key in r]
        return max(vals) if vals else 0.0

    meas = {"records": len(records), "flagged": sum(1 for r in records if r["flags"]),
            "max_fit_residual": worst("fit_residual"),
            "max_identity_residual": worst("identity_residual"),
            "max_curvature_disagreement": worst("curvature_agreement"),
            "max_round_trip": worst("round_trip"), "per_record": records}
    verdicts = []
    if "fit" in params["tasks"]:
        verdicts.append(check("fit_residual", meas["max_fit_residual"], "<=", 1e-10))
    if "curvature" in params["tasks"]:
        verdicts.append(check("identity_relative_error", meas["max_identity_residual"], "<=", 1e-8))
        verdicts.append(check("curvature_agreement", meas["max_curvature_disagreement"], "<=", 1e-6))
    if "normalize" in params["tasks"]:
        verdicts.append(check("normalization_round_trip", meas["max_round_trip"], "<=", 1e-8))
    report = ExperimentReport("regulus", seed, params, meas, verdicts)
    extra = {"triples.txt": write_triples(generated)} if generated else {}
    return [report], extra


# ---------------------------------------------------------------- tubes

def tubes_params(opt):
    if opt.get("delta") is None:
        raise UsageError("tubes needs --delta (a dyadic fraction 1/2^k)")
    k, delta = parse_delta(opt["delta"])
    family = opt["family"]
    if family not in ("sl2", "dirsep", "file"):
        raise PreconditionError(f"unknown family {family!r}")
    if family == "file" and not opt.get("family_file"):
        raise PreconditionError("--family file needs --family-file PATH")
    return {"family": family, "family_file": opt.get("family_file") if family == "file" else None,
            "delta": f"1/2^{k}", "delta_value": delta,
            "experiments": parse_list(opt["experiments"], TUBE_EXPERIMENTS, "experiments"),
            "wolff_samples": int(opt["wolff_samples"]), "alpha": float(opt["alpha"]),
            "rho": float(opt["rho"]), "triples": int(opt["triples"]),
            "two_ends_tubes": int(opt["two_ends_tubes"]), "anchor": opt.get("anchor")}


def _tube_count(params):
    delta = params["delta_value"]
    if params["family"] == "file":
        with open(params["family_file"]) as fh:
            return sum(1 for ln in fh if ln.strip())
    return int(round(delta ** -2))


def tubes_estimate(params):
    """Voxel count of the fine grid, voxel visits and a memory bound, without building anything."""
    delta = params["delta_value"]
    h = delta / 2
    n_side = math.ceil(2 / h)
    n = _tube_count(params)
    visits = int(n * (math.pi * delta ** 2 + 4 * delta * h) / h ** 3)
    mem = n * TUBE_OBJECT_BYTES
    exps = params["experiments"]
    if {"volume", "profile"} & set(exps):
        mem += SLAB_BYTES
    if {"planiness", "hairbrush"} & set(exps):
        mem += visits * 40          # voxel and owner arrays plus the sort
    if "decompose" in exps:
        mem += n * 400
    return {"tubes": n, "grid_side": n_side, "voxels": n_side ** 3, "voxel_visits": visits,
            "memory_bytes": int(mem)}


def _make_family(params, seed):
    from .tubes import TubeFamily, gen_direction_separated, gen_sl2_family
    delta = params["delta_value"]
    if params["family"] == "sl2":
        return gen_sl2_family(delta, seed)
    if params["family"] == "dirsep":
        return gen_direction_separated(delta, seed)
    fam = TubeFamily.read(params["family_file"], seed=seed)
    if abs(fam.delta - delta) > 1e-15:
        raise PreconditionError(f"family file has delta {fam.delta}, not {params['delta']}")
    return fam


def _exp_volume(fam, params, seed, extra):
    from .tubes import union_volume
    st = union_volume(fam)
    delta = fam.delta
    meas = {"n_tubes": len(fam), **st.to_json()}
    meas["union_over_sqrt_delta"] = st.union_volume / math.sqrt(delta)
    verdicts = [check("union_le_total", st.union_volume, "<=", st.total_volume)]
    if fam.provenance == "sl2-style":
        verdicts.append(check("thin_union_lower", st.union_volume, ">=", math.sqrt(delta) / 8))
        verdicts.append(check("thin_union_upper", st.union_volume, "<=", 8 * math.sqrt(delta)))
    else:
        # reference volume for delta-separated families: delta^(1/2) (delta^2 |T|)^(3/4)
        ref = math.sqrt(delta) * (delta ** 2 * len(fam)) ** 0.75
        meas["volume_constant"] = st.union_volume / ref if ref else 0.0
    return meas, verdicts


def profile_scales(delta):
    k = int(round(-math.log2(delta)))
    scales = [delta * 2 ** j for j in range(k // 2 + 1)]
    if scales[-1] < math.sqrt(delta) * (1 - 1e-12):
        scales.append(math.sqrt(delta))
    return scales


def _exp_profile(fam, params, seed, extra):
    from .tubes import minkowski_profile
    delta = fam.delta
    scales = profile_scales(delta)
    prof = minkowski_profile(fam, scales)
    extra["profile.csv"] = prof.to_csv()
    ratio = prof.ratio(scales[-1], scales[0])
    meas = {"scales": prof.scales, "volumes": prof.volumes, "resolutions": prof.resolutions,
            "ratio": ratio}
    vols = prof.volumes
    verdicts = [check("monotone", min(b - a for a, b in zip(vols, vols[1:])) if len(vols) > 1 else 0.0,
                      ">=", 0.0)]
    if fam.provenance == "sl2-style":
        verdicts.append(check("coarse_volume", vols[-1], ">=", 1 / 8))
        verdicts.append(check("profile_ratio", ratio, ">=", delta ** -0.5 / 64))
    return meas, verdicts


def _exp_wolff(fam, params, seed, extra):
    from .tubes import check_wolff_axioms
    rep = check_wolff_axioms(fam, n_samples=params["wolff_samples"], seed=seed)
    return rep.to_json(), [check("wolff_ratio", rep.max_ratio, "<=", rep.ceiling)]


def _exp_planiness(fam, params, seed, extra):
    from .tubes import planiness_statistic, robust_transversality
    rep = planiness_statistic(fam, seed=seed)
    _, tr = robust_transversality(fam)
    meas = {"planiness": rep.to_json(), "transversality": tr.to_json()}
    return meas, [check("retained_fraction", tr.retained_fraction, ">=", 0.5)]


def _exp_decompose(fam, params, seed, extra):
    from .tubes import (StripOracle, decompose_heisenberg_sl2, strips_from_fat_tubes,
                        strips_from_triples)
    cands = strips_from_fat_tubes(fam) + strips_from_triples(fam, params["triples"], seed)
    oracle = StripOracle(fam)
    dec = decompose_heisenberg_sl2(fam, params["alpha"], cands, oracle)
    problems = dec.verify(fam, cands, oracle)
    meas = {**dec.to_json(), "problems": problems}
    return meas, [check("decomposition_problems", len(problems), "==", 0)]


def _exp_hairbrush(fam, params, seed, extra):
    from .tubes import fat_hairbrush_counts, hairbrush
    anchor = fam.tubes[0].id if params["anchor"] is None else int(params["anchor"])
    brush = hairbrush(fam, [anchor])
    fat = fat_hairbrush_counts(fam, seed=seed)
    meas = {"anchor": anchor, "hairbrush_size": len(brush), "fat_hairbrush": fat.to_json()}
    return meas, [check("anchor_in_hairbrush", int(anchor in brush), "==", 1)]


def _exp_two_ends(fam, params, seed, extra):
    from .seeding import make_rng
    from .tubes import Shading, VoxelGrid, rasterize, two_ends_reduce
    grid = VoxelGrid.for_delta(fam.delta)
    rng = make_rng(seed)
    k = min(params["two_ends_tubes"], len(fam))
    pick = np.sort(rng.choice(len(fam), k, replace=False)) if k else []
    results = []
    for i in pick:
        t = fam.tubes[i]
        sh = fam.shadings.get(t.id) or Shading(t.id, rasterize(t, grid), grid.h)
        if sh.count == 0:
            continue
        results.append({"tube": t.id, **two_ends_reduce(sh, params["rho"], tube=t, seed=seed).to_json()})
    worst = max((r["worst_consequence"] for r in results), default=0.0)
    fails = sum(1 for r in results if not r["capture_ok"])
    return ({"tubes": results, "worst_consequence": worst},
            [check("capture_failures", fails, "==", 0),
             check("worst_consequence", worst, "<=", 1.0, tol=1e-9)])


EXPERIMENT_RUNNERS = {"volume": _exp_volume, "profile": _exp_profile, "wolff": _exp_wolff,
                      "planiness": _exp_planiness, "decompose": _exp_decompose,
                      "hairbrush": _exp_hairbrush, "two-ends": _exp_two_ends}


def run_tubes(params, seed):
    fam = _make_family(params, seed)
    log.info("family %s: %d tubes at delta=%s", fam.provenance, len(fam), params["delta"])
    reports, extra = [], {}
    for name in params["experiments"]:
        log.info("running %s", name)
        meas, verdicts = EXPERIMENT_RUNNERS[name](fam, params, seed, extra)
        reports.append(ExperimentReport(f"tubes/{name}", seed, params, meas, verdicts))
    return reports, extra


# ---------------------------------------------------------------- incidence

def incidence_params(opt):
    gen = bool(opt.get("generate"))
    if gen == bool(opt.get("points")):
        raise PreconditionError("give either --generate or --points FILE (with --curves FILE)")
    if not gen and not opt.get("curves"):
        raise PreconditionError("--points needs --curves")
    D = opt["D"]
    if str(D) != "auto":
        try:
            D = int(D)
        except ValueError as exc:
            raise PreconditionError(f"--D must be a positive integer or 'auto', got {D!r}") from exc
        if D < 1:
            raise PreconditionError("--D must be positive")
    params = {"generate": gen, "D": D, "oracle": bool(opt.get("oracle"))}
    if gen:
        k, delta = parse_delta(opt["delta"])
        params.update(delta=f"1/2^{k}", delta_value=delta, A=int(opt["A"]))
    else:
        r = float(opt["r"])
        if not r > 0:
            raise PreconditionError("--r must be positive")
        params.update(points=opt["points"], curves=opt["curves"], r=r)
    return params


def incidence_estimate(params):
    if params["generate"]:
        d = params["delta_value"]
        n_pts = int(d ** -1.5)
        n_cur = int(d ** -1.5)
    else:
        with open(params["points"]) as fh:
            n_pts = sum(1 for ln in fh if ln.strip())
        with open(params["curves"]) as fh:
            n_cur = sum(1 for ln in fh if ln.strip())
    return {"points": n_pts, "curves": n_cur, "incidence_matrix_entries": n_pts * n_cur,
            "memory_bytes": int(n_pts * n_cur * 6 + (64 << 20))}


def _read_incidence_files(params):
    from .incidence import read_curves_csv, read_points_csv
    try:
        pts = read_points_csv(params["points"])
        curves = read_curves_csv(params["curves"])
    except (ValueError, IndexError) as exc:
        raise PreconditionError(f"cannot parse input: {exc}") from exc
    if not np.all(np.isfinite(pts)):
        raise PreconditionError("points file holds non-finite values")
    return pts, curves


def run_incidence(params, seed):
    from .incidence import discrete_st_experiment, incidence_matrix, partition_route
    from .incidence.discrete_st import _pair_max
    from .seeding import make_rng
    if params["generate"]:
        D = None if params["D"] == "auto" else params["D"]
        rep = discrete_st_experiment(params["delta_value"], params["A"], seed=seed, D=D)
        meas = rep.to_json()
        meas.pop("ok", None)
        verdicts = [check("st_constant", rep.constant, "<=", rep.ceiling),
                    check("pair_bound", rep.pair_max, "<=", rep.A),
                    check("cauchy_schwarz", int(rep.cauchy_schwarz_ok), "==", 1)]
        if params["oracle"]:
            verdicts.append(check("routes_agree", rep.incidences_partition, "==", rep.incidences_brute))
        return [ExperimentReport("incidence", seed, params, meas, verdicts)], {}
    pts, curves = _read_incidence_files(params)
    r = params["r"]
    D = max(1, int(round(r ** (-1 / 6)))) if params["D"] == "auto" else params["D"]
    M = incidence_matrix(pts, curves, r)
    brute = int(M.sum())
    route = partition_route(pts, curves, r, D, make_rng(seed), M)
    A = _pair_max(M)
    nP, nC = len(pts), len(curves)
    cs = nC + math.sqrt(A * nP * nP * nC)
    meas = {"D": D, "r": r, "n_points": nP, "n_curves": nC, "pair_max": A,
            "incidences_brute": brute, "incidences_partition": route["total"],
            **{k: v for k, v in route.items() if k != "total"}}
    verdicts = [check("cauchy_schwarz", brute, "<=", cs)]
    if params["oracle"]:
        verdicts.append(check("routes_agree", route["total"], "==", brute))
    return [ExperimentReport("incidence", seed, params, meas, verdicts)], {}


# ---------------------------------------------------------------- dispatch

COMMANDS = {
    "sl2-ring": (sl2_ring_params, sl2_ring_estimate, run_sl2_ring),
    "regulus": (regulus_params, regulus_estimate, run_regulus),
    "tubes": (tubes_params, tubes_estimate, run_tubes),
    "incidence": (incidence_params, incidence_estimate, run_incidence),
}
DEFAULTS = {
    "sl2-ring": {"p": None, "checks": "all"},
    "regulus": {"lines": None, "generate": 0, "canonical": False, "tasks": "all"},
    "tubes": {"family": "sl2", "family_file": None, "delta": None, "experiments": "volume",
              "wolff_samples": 10_000, "alpha": 0.1, "rho": 0.1, "triples": 200,
              "two_ends_tubes": 8, "anchor": None},
    "incidence": {"points": None, "curves": None, "generate": False, "delta": "1/2^8", "A": 4,
                  "D": "auto", "r": 2.0 ** -8, "oracle": False},
}
GLOBAL_DEFAULTS = {"out": "runs", "format": "json", "threads": 1, "max_memory": DEFAULT_MEMORY,
                   "dry_run": False, "no_record": False}


def execute(command, params, seed):
    """Run a subcommand from resolved parameters: (reports, extra files)."""
    return COMMANDS[command][2](params, seed)


def _common_parser():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run options")
    g.add_argument("--config", metavar="JSON", help="config file merged under command-line flags")
    g.add_argument("--seed", type=int, help=f"seed (overrides {SEED_ENV} and the config)")
    g.add_argument("--out", metavar="DIR", help="root of the run directories (default: runs)")
    g.add_argument("--format", choices=("json", "csv"), help="stdout summary format")
    g.add_argument("--threads", type=int, help="cap on worker threads")
    g.add_argument("--max-memory", dest="max_memory", help="memory budget, e.g. 4G")
    g.add_argument("--dry-run", dest="dry_run", action="store_true", default=None,
                   help="print the resource estimate and exit")
    g.add_argument("--no-record", dest="no_record", action="store_true", default=None,
                   help="do not write a run directory")
    g.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    return p


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="kakeya-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sl2-ring", parents=[common], help="exhaustive checks on the finite-ring line family")
    s.add_argument("--p", type=int, help="prime")
    s.add_argument("--checks", help="'all' or a comma list of axiom and cardinality names")

    s = sub.add_parser("regulus", parents=[common], help="quadric fit, curvature identity and normalization")
    s.add_argument("--lines", metavar="FILE", help="18 numbers per row: base and direction of 3 lines")
    s.add_argument("--generate", type=int, metavar="N", help="add N random admissible triples")
    s.add_argument("--canonical", action="store_true", default=None, help="add the canonical triple")
    s.add_argument("--tasks", help="'all' or a comma list of fit, curvature, normalize")

    s = sub.add_parser("tubes", parents=[common], help="experiments on tube families")
    s.add_argument("--family", choices=("sl2", "dirsep", "file"))
    s.add_argument("--family-file", dest="family_file", metavar="JSONL")
    s.add_argument("--delta", help="tube radius 1/2^k with 3 <= k <= 10")
    s.add_argument("--experiments", help="'all' or a comma list of " + ", ".join(TUBE_EXPERIMENTS))
    s.add_argument("--wolff-samples", dest="wolff_samples", type=int)
    s.add_argument("--alpha", type=float, help="strip threshold exponent for decompose")
    s.add_argument("--rho", type=float, help="two-ends exponent")
    s.add_argument("--triples", type=int, help="random candidate strips for decompose")
    s.add_argument("--two-ends-tubes", dest="two_ends_tubes", type=int)
    s.add_argument("--anchor", type=int, help="hairbrush anchor id (default: the first tube)")

    s = sub.add_parser("incidence", parents=[common], help="point/conic incidences by two routes")
    s.add_argument("--points", metavar="CSV")
    s.add_argument("--curves", metavar="CSV")
    s.add_argument("--generate", action="store_true", default=None)
    s.add_argument("--delta", help="generator scale 1/2^k")
    s.add_argument("--A", dest="A", type=int, help="pair bound for the generator")
    s.add_argument("--D", dest="D", help="partition degree or 'auto'")
    s.add_argument("--r", dest="r", type=float, help="incidence distance for file inputs")
    s.add_argument("--oracle", action="store_true", default=None,
                   help="assert that the partition route equals brute force")

    s = sub.add_parser("replay", parents=[common], help="re-run a manifest and compare report bytes")
    s.add_argument("manifest", help="manifest.json of an earlier run")
    return parser


def _load_config(path):
    if not path:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise PreconditionError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise PreconditionError("config must be a JSON object")
    return cfg


def resolve_options(args, config):
    """Merge command line, config and defaults into one options dict."""
    section = config.get(args.command, {}) if isinstance(config.get(args.command), dict) else {}
    opt = {}
    for key, default in {**GLOBAL_DEFAULTS, **DEFAULTS.get(args.command, {})}.items():
        val = getattr(args, key, None)
        if val is None:
            val = section.get(key, config.get(key, default))
        opt[key] = val
    if args.seed is not None:
        seed = args.seed
    elif os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV], 0)
        except ValueError as exc:
            raise PreconditionError(f"{SEED_ENV} must be an integer") from exc
    else:
        seed = int(section.get("seed", config.get("seed", 0)))
    opt["max_memory"] = parse_bytes(opt["max_memory"])
    return opt, seed


def _set_threads(n):
    try:
        import numba
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
    except (ImportError, ValueError):
        pass


def _emit(reports, fmt, run_dir=None):
    if fmt == "csv":
        sys.stdout.write(summary_csv(reports))
    else:
        sys.stdout.write(reports_json(reports))
    if run_dir is not None:
        print(f"run directory: {run_dir}", file=sys.stderr)


def _exit_code(reports):
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def replay(manifest_path, out=None, record=False):
    """Re-run a manifest; returns (identical, new report text, manifest)."""
    man = RunManifest.read(manifest_path)
    if man.subcommand not in COMMANDS:
        raise PreconditionError(f"manifest names unknown subcommand {man.subcommand!r}")
    for path, digest in man.inputs.items():
        if not os.path.exists(path) or sha256_file(path) != digest:
            raise PreconditionError(f"input {path} is missing or changed since the run")
    reports, extra = execute(man.subcommand, man.params, man.seed)
    text = reports_json(reports)
    same = hashlib.sha256(text.encode()).hexdigest() == man.report_sha256
    old = os.path.join(os.path.dirname(os.path.abspath(manifest_path)), "report.json")
    if os.path.exists(old):
        with open(old) as fh:
            same = same and fh.read() == text
    return same, text, man


def _run(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    config = _load_config(args.config)
    opt, seed = resolve_options(args, config)
    _set_threads(opt["threads"])

    if args.command == "replay":
        same, text, man = replay(args.manifest)
        result = {"manifest": args.manifest, "subcommand": man.subcommand, "seed": man.seed,
                  "identical": same, "report_sha256": hashlib.sha256(text.encode()).hexdigest(),
                  "expected_sha256": man.report_sha256}
        sys.stdout.write(dumps(result))
        return EXIT_OK if same else EXIT_FAIL

    to_params, estimate, _ = COMMANDS[args.command]
    params = to_params(opt)
    est = estimate(params)
    est["memory_budget"] = opt["max_memory"]
    est["fits"] = est["memory_bytes"] <= opt["max_memory"] and "refused" not in est
    if opt["dry_run"]:
        sys.stdout.write(dumps({"command": args.command, "params": params, "estimate": est}))
        return EXIT_OK
    if "refused" in est:
        raise ResourceError(est["refused"])
    if not est["fits"]:
        raise ResourceError(f"estimated {est['memory_bytes']} bytes exceed the budget of "
                            f"{opt['max_memory']} bytes; see --dry-run")

    reports, extra = execute(args.command, params, seed)
    text = reports_json(reports)
    run_dir = None
    if not opt["no_record"]:
        inputs = _sha_inputs(params.get("lines"), params.get("family_file"),
                             params.get("points"), params.get("curves"))
        man = RunManifest(argv=list(argv), subcommand=args.command, config=config, seed=seed,
                          params=params, inputs=inputs)
        run_dir = write_run(opt["out"], man, text, extra)
    _emit(reports, opt["format"], run_dir)
    return _exit_code(reports)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        return _run(argv)
    except SystemExit as exc:                        # argparse: 0 for --help, 2 for usage
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (UsageError, PreconditionError, DegeneracyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (VerificationError, KakeyaLabError) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
