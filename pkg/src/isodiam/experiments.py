"""Seeded experiments: decay-rate fits for the constructed families and the verification corpus."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

import numpy as np

from . import constructions as co
from . import convexcheck as cc
from . import profiles as pr
from . import rearrange as ra
from .geomcore import cap_area, cap_area_quadrature, inverse_cap_area, psi, sphere_area, unit_ball_volume

N3_EPS_MIN = math.exp(-8.0)


class ExperimentError(ValueError):
    pass


# ---------------------------------------------------------------------------
# decay laws


def phi(n: int, delta: float) -> float:
    """phi_n(delta): sqrt(delta) for n = 2, sqrt(delta max(|log delta|, 1)) for n = 3, delta^(2/(n+1)) above."""
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise ExperimentError("n must be an integer >= 2")
    if not delta > 0:
        raise ExperimentError("delta must be positive")
    n = int(n)
    if n == 2:
        val = math.sqrt(delta)
    elif n == 3:
        val = math.sqrt(delta * max(abs(math.log(delta)), 1.0))
    else:
        val = delta ** (2.0 / (n + 1))
    if delta <= math.exp(-1.0):
        bound = 3.0 / math.e * delta ** (1.0 / n)
        if val > bound * (1.0 + 1e-14):
            raise ArithmeticError(f"phi_{n}({delta}) = {val} exceeds 3/e delta^(1/n) = {bound}")
    return val


@dataclass(frozen=True)
class DecayLaw:
    n: int

    def phi(self, delta: float) -> float:
        return phi(self.n, delta)

    @property
    def name(self) -> str:
        if self.n == 2:
            return "delta^(1/2)"
        if self.n == 3:
            return "(delta max(|log delta|,1))^(1/2)"
        return f"delta^(2/{self.n + 1})"


# ---------------------------------------------------------------------------
# family names


@dataclass(frozen=True)
class FamilySpec:
    kind: str
    params: dict[str, float]

    @property
    def n(self) -> int:
        if self.kind == "n2" or self.kind == "reuleaux":
            return 2
        if self.kind == "n3":
            return 3
        return int(self.params.get("n", 4 if self.kind == "high" else 2))

    @property
    def label(self) -> str:
        if not self.params:
            return self.kind
        return self.kind + ":" + ",".join(f"{k}={self.params[k]:g}" for k in sorted(self.params))


_FAMILY_KEYS = {
    "n2": set(),
    "high": {"n", "rho"},
    "n3": {"c", "theta"},
    "ballminus": {"r", "x", "n"},
    "reuleaux": {"k", "d"},
}
DECAY_FAMILIES = ("n2", "high", "n3")


def parse_family(text: str) -> FamilySpec:
    """Parse names such as "n2", "high:n=4,rho=0.01", "n3:c=0.19,theta=0.7", "ballminus:r=0.3,x=0.1", "reuleaux:k=5"."""
    kind, _, rest = text.strip().partition(":")
    if kind not in _FAMILY_KEYS:
        raise ExperimentError(f"unknown family {kind!r}; known: {sorted(_FAMILY_KEYS)}")
    params: dict[str, float] = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, val = item.partition("=")
        if not sep or key not in _FAMILY_KEYS[kind]:
            raise ExperimentError(f"bad parameter {item!r} for family {kind}")
        try:
            params[key] = float(val)
        except ValueError as exc:
            raise ExperimentError(f"parameter {key} needs a number, got {val!r}") from exc
    for key in ("n", "k"):
        if key in params:
            if params[key] != int(params[key]):
                raise ExperimentError(f"{key} must be an integer")
            params[key] = int(params[key])
    if kind == "high":
        params.setdefault("n", 4)
        params.setdefault("rho", 0.01)
    if kind == "ballminus" and not {"r", "x"} <= params.keys():
        raise ExperimentError("ballminus needs r and x")
    if kind == "reuleaux":
        params.setdefault("k", 3)
        params.setdefault("d", 1.0)
    return FamilySpec(kind, params)


def build_pair(spec: FamilySpec, eps: float, cells: int = 1024) -> co.CapFunctionPair:
    """Cap function pair of a decay family at scale eps."""
    p = spec.params
    if spec.kind == "n2":
        return co.family_n2(eps, cells)
    if spec.kind == "high":
        return co.family_high_n(eps, float(p["rho"]), int(p["n"]), cells)
    if spec.kind == "n3":
        if eps < N3_EPS_MIN:
            raise co.ConstructionError("n3 family needs eps >= e^-8 (the power f underflows below)")
        return co.family_n3(eps, float(p.get("c", math.pi / 16.0)), float(p.get("theta", 0.7)), cells)
    raise ExperimentError(f"family {spec.kind} has no eps parameter")


def build_profile(spec: FamilySpec, eps: float | None = None) -> pr.RadialProfile:
    if spec.kind in DECAY_FAMILIES:
        if eps is None:
            raise ExperimentError(f"family {spec.kind} needs --eps")
        return co.build_E(build_pair(spec, eps))
    if spec.kind == "ballminus":
        return co.ball_minus_ball(int(spec.params.get("n", 2)), spec.params["r"], spec.params["x"])
    raise ExperimentError(f"family {spec.kind} is not a profile family")


# ---------------------------------------------------------------------------
# decay experiment

CSV_COLUMNS = ("family", "eps", "diam", "volume", "delta", "delta_prime_hull", "r_out", "r_in",
               "symdiff_min", "margin_main", "margin_deficit_bound", "margin_hull_lemma")


@dataclass
class DecayFit:
    family: str
    n: int
    eps_grid: list[float]
    deltas: list[float]
    slope: float
    intercept: float
    residual: float
    ratio_series: dict[str, list[float]]
    rows: list[dict[str, Any]]
    dropped: list[float] = field(default_factory=list)
    seed: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()

    def summary(self) -> dict[str, Any]:
        return {
            "family": self.family,
            "n": self.n,
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "dropped": self.dropped,
            "ratio_max_over_min": {k: _spread(v) for k, v in self.ratio_series.items()},
        }


def _spread(vals: Iterable[float]) -> float:
    a = np.asarray(list(vals), dtype=float)
    return float(np.max(a) / np.min(a)) if a.size and np.min(a) > 0 else math.inf


def fit_loglog(x, y) -> tuple[float, float, float, list[int]]:
    """OLS of log y on log x; the largest x is dropped once if its residual exceeds twice the median.

    Returns (slope, intercept, rms residual, indices kept).
    """
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    keep = list(range(lx.size))

    def ols(idx):
        A = np.stack([lx[idx], np.ones(len(idx))], axis=1)
        coef, *_ = np.linalg.lstsq(A, ly[idx], rcond=None)
        return coef, ly[idx] - A @ coef

    coef, res = ols(keep)
    top = int(np.argmax(lx))
    if lx.size > 5:
        med = float(np.median(np.abs(res)))
        if abs(res[keep.index(top)]) > 2.0 * med:
            keep.remove(top)
            coef, res = ols(keep)
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(res ** 2))), keep


def _scale_of(spec: FamilySpec, pair: co.CapFunctionPair) -> float:
    return float(pair.family_params.get("eps_tilde", pair.eps))


def _decay_row(spec: FamilySpec, eps: float) -> dict[str, Any]:
    pair = build_pair(spec, eps)
    E = co.build_E(pair)
    vol = pr.volume(E)
    bound = co.deficit_upper_bound(pair, vol)
    rep = pr.report(E)
    Q, _ = pr.normalized(E, rep.diameter)
    hull = cc.hull_of_profile(Q)
    dp = cc.delta_prime(hull)
    return {
        "family": spec.label,
        "eps": float(eps),
        "diam": rep.diameter,
        "volume": rep.volume,
        "delta": rep.delta,
        "delta_prime_hull": dp,
        "r_out": rep.r_out,
        "r_in": rep.r_in,
        "symdiff_min": rep.symdiff_min,
        "margin_main": rep.thm_main_margin,
        "margin_deficit_bound": bound - pr.isodiametric_deficit(E, diam=rep.diameter, vol=vol),
        "margin_hull_lemma": rep.delta - dp,
        "_scale": _scale_of(spec, pair),
        "_integral_branch": co.integral_branch(pair),
    }


def decay_experiment(family: str | FamilySpec, eps_list, seed: int = 0, threads: int = 1) -> DecayFit:
    """Build E_eps for every eps, measure the deficit functionals and fit log delta against log eps.

    For the n3 family eps is the unshifted scale eps~ (the pair itself lives on
    [0, (1 - theta) eps~]).  The constructions are deterministic; `seed` is
    recorded for the report only.
    """
    spec = parse_family(family) if isinstance(family, str) else family
    if spec.kind not in DECAY_FAMILIES:
        raise ExperimentError(f"family {spec.kind} has no decay law")
    eps = sorted((float(e) for e in eps_list), reverse=True)
    if len(eps) < 5:
        raise ExperimentError("need at least 5 eps values")
    if len(set(eps)) != len(eps):
        raise ExperimentError("eps values must be distinct")
    # validate the whole grid before the expensive part
    for e in eps:
        try:
            build_pair(spec, e, cells=64)
        except co.ConstructionError as exc:
            raise ExperimentError(f"eps = {e}: {exc}") from exc
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(lambda e: _decay_row(spec, e), eps))
    else:
        rows = [_decay_row(spec, e) for e in eps]
    deltas = [r["delta"] for r in rows]
    if min(deltas) <= 0:
        raise ExperimentError("non-positive deficit in the decay family")
    scales = [r.pop("_scale") for r in rows]
    branch = [r.pop("_integral_branch") for r in rows]
    slope, intercept, resid, keep = fit_loglog(scales, deltas)
    n = spec.n
    ratios: dict[str, list[float]] = {
        "r_out/phi": [r["r_out"] / phi(n, r["delta"]) for r in rows],
        "r_in/delta^(1/n)": [r["r_in"] / r["delta"] ** (1.0 / n) for r in rows],
        "r_out/sqrt(delta)": [r["r_out"] / math.sqrt(r["delta"]) for r in rows],
    }
    if min(branch) > 0:
        ratios["integral_branch/symdiff"] = [b / r["symdiff_min"] for b, r in zip(branch, rows)]
    if spec.kind == "n2":
        ratios["delta/eps^2"] = [d / e ** 2 for d, e in zip(deltas, scales)]
    elif spec.kind == "high":
        ratios[f"delta/eps^{(n + 1) / 2:g}"] = [d / e ** ((n + 1) / 2) for d, e in zip(deltas, scales)]
    else:
        ratios["delta|log eps|/eps^2"] = [d * abs(math.log(e)) / e ** 2 for d, e in zip(deltas, scales)]
    dropped = [scales[i] for i in range(len(scales)) if i not in keep]
    return DecayFit(spec.label, n, scales, deltas, slope, intercept, resid, ratios, rows, dropped, seed)


def geometric_grid(eps_max: float, eps_min: float, steps: int) -> list[float]:
    if not 0 < eps_min < eps_max:
        raise ExperimentError("need 0 < eps_min < eps_max")
    if steps < 2:
        raise ExperimentError("need at least 2 steps")
    return [float(x) for x in np.geomspace(eps_max, eps_min, steps)]


# ---------------------------------------------------------------------------
# verification suite

DEFAULT_CORPUS = {
    "random_profiles": 100,
    "random_hulls": 100,
    "profile_hulls": 20,
    "cauchy_polytopes": 4,
    "cauchy_directions": 20_000,
    "rearrange_sets": 4,
    "rearrange_grid": 128,
    "rearrange_samples": 5000,
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst_margin: float
    count: int
    detail: str = ""

    def as_dict(self) -> dict[str, Any]:
        m = self.worst_margin
        return {"name": self.name, "passed": bool(self.passed), "count": int(self.count),
                "worst_margin": m if math.isfinite(m) else str(m), "detail": self.detail}


def _check(name: str, fn: Callable[[], tuple[float, int, str]]) -> CheckResult:
    """Run a check returning (worst margin, count, detail); margin >= 0 passes. Errors become failures."""
    try:
        margin, count, detail = fn()
    except Exception as exc:  # a broken check is a failed entry, not a crashed suite
        return CheckResult(name, False, -math.inf, 0, f"{type(exc).__name__}: {exc}")
    return CheckResult(name, bool(margin >= 0), float(margin), int(count), detail)


def _closed_forms() -> tuple[float, int, str]:
    alphas = np.linspace(0.0, math.pi, 201)
    worst = 0.0
    # angle -> area -> angle is ill-conditioned near pi (cap' ~ (pi - a)^(n-2)); test it away from there
    calm = alphas <= math.pi - 0.25
    for n in range(2, 9):
        a = cap_area(n, alphas)
        worst = max(worst, float(np.max(np.abs(a - cap_area_quadrature(n, alphas)))))
        worst = max(worst, float(np.max(np.abs(inverse_cap_area(n, a[calm]) - alphas[calm]))))
        areas = np.linspace(0.0, sphere_area(n), 201)
        back = cap_area(n, inverse_cap_area(n, areas))
        worst = max(worst, float(np.max(np.abs(back - areas))) / sphere_area(n))
    worst = max(worst, abs(cap_area(3, math.pi) - 4.0 * math.pi), abs(unit_ball_volume(3) - 4.0 * math.pi / 3.0))
    return 1e-10 - worst, 14 * alphas.size, f"max error {worst:.3e}"


def _psi_bound() -> tuple[float, int, str]:
    worst = math.inf
    for eps in (0.1, 0.2, 0.4):
        t = np.linspace(0.0, eps, 100)
        S, T = np.meshgrid(t, t, indexing="ij")
        mask = S <= T
        gap = math.pi * np.sqrt(T[mask] - S[mask]) - psi(S[mask], T[mask], eps)
        worst = min(worst, float(np.min(gap)))
    return worst + 1e-12, 3 * 100 * 100, "min of pi sqrt(t-s) - psi"


def _ball_minus_ball() -> tuple[float, int, str]:
    worst = math.inf
    count = 0
    for n in (2, 3, 4):
        for r in (0.1, 0.3, 0.5):
            P = co.ball_minus_ball(n, r, 0.5 * (1.0 - r))
            d = pr.isodiametric_deficit(P)
            worst = min(worst, 1e-6 - abs(d - r ** n / (1.0 - r ** n)))
            count += 1
    return worst, count, "delta = r^n/(1-r^n)"


def _families(eps_sets) -> tuple[float, int, str]:
    worst = math.inf
    count = 0
    for label, eps in eps_sets:
        spec = parse_family(label)
        pair = build_pair(spec, eps)
        E = co.build_E(pair)
        d = pr.diameter(E)
        vol = pr.volume(E)
        worst = min(worst, 1e-5 - abs(d - 2.0))
        worst = min(worst, co.deficit_upper_bound(pair, vol) + 1e-8 - pr.isodiametric_deficit(E, d, vol))
        _, _, m = pr.theorem_margin(E)
        worst = min(worst, m + 1e-8)
        count += 1
    return worst, count, "diameter 2, deficit bound, main inequality"


def _random_profiles(seed: int, count: int) -> tuple[float, int, str]:
    worst = math.inf
    for n in (2, 3, 4):
        rng = np.random.default_rng([seed, 1, n])
        for _ in range(count):
            _, _, m = pr.theorem_margin(pr.random_profile(n, rng))
            worst = min(worst, m + 1e-8)
    return worst, 3 * count, "C(n) sqrt(delta) - symdiff/(3|B|)"


def _random_hulls(seed: int, count: int) -> tuple[float, int, str]:
    worst = math.inf
    for n in (2, 3):
        rng = np.random.default_rng([seed, 2, n])
        for _ in range(count):
            worst = min(worst, cc.check_perimeter_bound(cc.random_polytope(n, rng)) + 1e-6)
    return worst, 2 * count, "P(B) - P(F)"


def _profile_hulls(seed: int, count: int) -> tuple[float, int, str]:
    worst = math.inf
    total = 0
    for n in range(2, 7):
        rng = np.random.default_rng([seed, 3, n])
        for _ in range(count):
            P = pr.random_profile(n, rng)
            delta, dp = cc.check_deficit_lemma(P)
            Q, _ = pr.normalized(P)
            worst = min(worst, delta + 1e-8 - dp, cc.check_perimeter_bound(cc.hull_of_profile(Q)) + 1e-6)
            total += 1
    return worst, total, "min(delta - delta', P(B) - P(hull))"


def _cauchy(seed: int, count: int, directions: int) -> tuple[float, int, str]:
    worst = math.inf
    for n in (2, 3):
        rng = np.random.default_rng([seed, 4, n])
        for i in range(count):
            F = cc.random_polytope(n, rng)
            est, se = cc.cauchy_perimeter(F, directions, seed=seed + i)
            direct = cc.perimeter(F)
            worst = min(worst, 3.0 * se - abs(est - direct), 0.01 * direct - abs(est - direct))
    return worst, 2 * count, "within 3 SE and 1 %"


def _reuleaux() -> tuple[float, int, str]:
    worst = math.inf
    for k in (3, 5, 7):
        R = co.reuleaux(k, 1.0)
        worst = min(worst, 1e-9 - abs(R.perimeter() - math.pi))
        poly = cc.polygon_body(R.boundary(4096))
        worst = min(worst, 1e-4 - abs(cc.perimeter(poly) - math.pi))
    return worst, 3, "|P - pi d|"


def _rearrangement(seed: int, count: int, grid: int, samples: int) -> tuple[float, int, str]:
    worst = math.inf
    for i in range(count):
        n = 2 + i % 2
        E = ra.random_disjoint_balls(n, np.random.default_rng([seed, 5, i]))
        R = ra.rearrange_sc(E, grid, samples, seed=seed + i)
        vol = pr.volume(R.profile)
        tol = E.r_bound / grid
        worst = min(worst, 3.0 * R.volume_se - abs(vol - E.known_volume),
                    E.known_diameter + 2.0 * tol - pr.diameter(R.profile))
    return worst, count, "volume within 3 SE, diameter not increased"


def _profile_entry(doc: Any) -> tuple[float, int, str]:
    P = pr.RadialProfile.from_json(doc if isinstance(doc, str) else json.dumps(doc))
    _, _, m = pr.theorem_margin(P)
    return m + 1e-8, 1, "user profile"


def verify_suite(seed: int = 0, corpus_sizes: dict[str, int] | None = None,
                 extra_profiles: Iterable[Any] = ()) -> dict[str, Any]:
    """Run the invariant checks on seeded corpora.

    Every check becomes an entry with pass/fail and its worst margin (>= 0
    means satisfied).  Invalid inputs in `extra_profiles` produce failed
    entries.  The report holds no timings, so equal seeds give equal bytes.
    """
    sizes = dict(DEFAULT_CORPUS)
    for key, val in (corpus_sizes or {}).items():
        if key not in sizes:
            raise ExperimentError(f"unknown corpus key {key!r}")
        sizes[key] = int(val)
    eps_sets = [("n2", 2.0 ** -5), ("high:n=4,rho=0.01", 2.0 ** -5), ("n3", math.exp(-4.0))]
    checks = [
        _check("closed_forms", _closed_forms),
        _check("psi_bound", _psi_bound),
        _check("ball_minus_ball_deficit", _ball_minus_ball),
        _check("families", lambda: _families(eps_sets)),
        _check("random_profiles_main_inequality", lambda: _random_profiles(seed, sizes["random_profiles"])),
        _check("random_hulls_perimeter_bound", lambda: _random_hulls(seed, sizes["random_hulls"])),
        _check("profile_hulls_deficit_lemma", lambda: _profile_hulls(seed, sizes["profile_hulls"])),
        _check("cauchy_formula", lambda: _cauchy(seed, sizes["cauchy_polytopes"], sizes["cauchy_directions"])),
        _check("reuleaux_perimeter", _reuleaux),
        _check("rearrangement", lambda: _rearrangement(seed, sizes["rearrange_sets"], sizes["rearrange_grid"],
                                                       sizes["rearrange_samples"])),
    ]
    for i, doc in enumerate(extra_profiles):
        checks.append(_check(f"profile[{i}]", lambda doc=doc: _profile_entry(doc)))
    return {
        "seed": seed,
        "corpus": sizes,
        "passed": all(c.passed for c in checks),
        "checks": [c.as_dict() for c in checks],
    }


def report_json(report: dict[str, Any]) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def timed(fn: Callable[[], Any]) -> tuple[Any, float]:
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0
