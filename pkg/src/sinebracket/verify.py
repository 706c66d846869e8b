"""Named, repeatable identity checks with measured residuals.

Each check evaluates one algebraic identity of the truncated vorticity
bracket (or one of its companion studies) and reports the largest
residual relative to the largest-magnitude term entering the identity,
so pass criteria are scale free across truncation sizes.  Failures are
reported, never thrown.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .algebra import (
    KNOWN_JACOBI_VIOLATION,
    ContinuumNambuTensor,
    JacobiViolation,
    SineNambuTensor,
    ZeitlinConstants,
    _bilinear_with_scale,
    _lie_poisson_matrix,
    _masked_gather,
    _nambu_matrix,
    _pair_tables,
    alpha_continuum,
    alpha_zeitlin,
    cosine_table,
    dedupe_violations,
    dense_antisymmetry_residual,
    dense_jacobi_residual,
    gen_jacobi_terms,
    killing_bruteforce,
    killing_closed,
    killing_diagonal,
    lie_poisson_prefactor,
    scan_gen_jacobi,
    support_nambu_bracket,
)
from .dynamics import (
    enstrophy_functional,
    hamiltonian_functional,
    random_shell_field,
    rhs_fast,
    rhs_from_lie_poisson,
    rhs_nambu,
    rhs_naive,
)
from .functionals import ModePolynomial, random_real_polynomial
from .grid import TWO_PI, TruncationGrid, WaveVector, _as_wave_vector, build_grid

__all__ = [
    "CheckReport",
    "run_identity_suite",
    "run_counterexample",
    "run_convergence_study",
    "run_jacobi_scan",
    "gen_jacobi_residual_known",
    "format_reports",
]


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one check: what ran, how large the defect, verdict."""

    name: str
    params: dict
    max_residual: float
    tolerance: float
    passed: bool
    runtime_s: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "params": self.params,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "runtime_s": self.runtime_s,
        }


def _report(
    name: str, params: dict, residual: float, tolerance: float, started: float
) -> CheckReport:
    return CheckReport(
        name=name,
        params=params,
        max_residual=float(residual),
        tolerance=float(tolerance),
        passed=bool(residual <= tolerance),
        runtime_s=time.perf_counter() - started,
    )


# ---------------------------------------------------------------------------
# the eight identity checks
# ---------------------------------------------------------------------------


def _table_antisymmetry_residual(grid: TruncationGrid) -> float:
    s = _pair_tables(grid.n).sin_cross
    return float(np.max(np.abs(s + s.T))) / float(np.max(np.abs(s)))


def _table_jacobi_residual(grid: TruncationGrid) -> float:
    """max |sum of the three adjoint products| / max |single product|.

    The deltas force the free upper index, so the identity reduces to a
    scan over (i, j, k); each summand is a product of two sine entries,
    and a sum that wraps onto the origin carries an exactly-zero sine.
    """
    t = _pair_tables(grid.n)
    s, w = t.sin_cross, t.wrap_index
    size = grid.size
    worst = 0.0
    term_scale = 0.0
    for a in range(size):
        wa = np.clip(w[a], 0, None)  # wrap of i+j over j; origin rows carry sine 0
        t1 = s[a][:, None] * s[wa, :]
        t2 = s * s[np.clip(w, 0, None), a]
        wk = np.clip(w[:, a], 0, None)  # wrap of k+i over k
        t3 = (s[:, a][:, None] * s[wk, :]).T
        total = t1 + t2 + t3
        worst = max(worst, float(np.max(np.abs(total))))
        for term in (t1, t2, t3):
            term_scale = max(term_scale, float(np.max(np.abs(term))))
    return worst / term_scale if term_scale else 0.0


def _killing_residual(grid: TruncationGrid, alpha_override: np.ndarray | None) -> float:
    if alpha_override is not None:
        a = alpha_override
        brute = np.einsum("ikl,jlk->ij", a, a)
    else:
        zc = ZeitlinConstants(grid)
        brute = np.empty((grid.size, grid.size))
        for ai, vi in enumerate(grid.vectors):
            for bj, vj in enumerate(grid.vectors):
                brute[ai, bj] = killing_bruteforce(zc, tuple(vi), tuple(vj))
    closed = np.zeros_like(brute)
    for ai, vi in enumerate(grid.vectors):
        mj = int(grid.neg_index[ai])
        closed[ai, mj] = killing_closed(grid, tuple(vi), tuple(grid.vectors[mj]))
    return float(np.max(np.abs(brute - closed))) / abs(killing_diagonal(grid.n))


def _orthogonality_residual(grid: TruncationGrid) -> float:
    """Worst defect of sum_k cos((2pi/n) k.l); terms are unit scale.

    Includes the off-grid witnesses that wrap to the origin, where the
    sum must jump from -1 to n^2 - 1.
    """
    n = grid.n
    cos = cosine_table(n)
    v = grid.vectors
    worst = 0.0
    witnesses = [tuple(x) for x in v] + [(0, 0), (n, 0), (0, n), (n, n)]
    for l in witnesses:
        dots = (v[:, 0] * l[0] + v[:, 1] * l[1]) % n
        total = float(np.sum(cos[dots]))
        wraps = l[0] % n == 0 and l[1] % n == 0
        expected = float(n * n - 1) if wraps else -1.0
        worst = max(worst, abs(total - expected))
    return worst


def _casimir_residual(grid: TruncationGrid, rng: np.random.Generator) -> float:
    """{F, E} must vanish for every F: the enstrophy generates no motion."""
    e = enstrophy_functional(grid)
    shell_max = min(8.0, float(grid.half**2))
    fields = [
        random_shell_field(grid, seed=int(rng.integers(2**31)), shell_max=shell_max, amplitude=2.0)
        for _ in range(2)
    ]
    observables = [hamiltonian_functional(grid)] + [
        random_real_polynomial(grid, rng).as_functional() for _ in range(2)
    ]
    worst = 0.0
    for field in fields:
        matrix = _lie_poisson_matrix(grid, field)
        ge = e.gradient(field)
        for f in observables:
            value, scale = _bilinear_with_scale(matrix, f.gradient(field), ge)
            worst = max(worst, abs(value) / max(scale, 1e-300))
    return worst


def _reduction_residual(grid: TruncationGrid, rng: np.random.Generator) -> float:
    """{F1, F2, E} with the Nambu tensor equals the Lie-Poisson {F1, F2}."""
    e = enstrophy_functional(grid)
    pool = [hamiltonian_functional(grid)] + [
        random_real_polynomial(grid, rng).as_functional() for _ in range(3)
    ]
    shell_max = min(8.0, float(grid.half**2))
    worst = 0.0
    for _ in range(2):
        field = random_shell_field(
            grid, seed=int(rng.integers(2**31)), shell_max=shell_max, amplitude=2.0
        )
        lp = _lie_poisson_matrix(grid, field)
        nm = _nambu_matrix(grid, e.gradient(field))
        for f1 in pool[:2]:
            for f2 in pool[1:]:
                g1, g2 = f1.gradient(field), f2.gradient(field)
                v_n, s_n = _bilinear_with_scale(nm, g1, g2)
                v_l, s_l = _bilinear_with_scale(lp, g1, g2)
                worst = max(worst, abs(v_n - v_l) / max(s_n, s_l, 1e-300))
    return worst


def _nambu_antisymmetry_residual(grid: TruncationGrid) -> float:
    """Swap and cyclic relabelings checked exactly on the tables.

    The closing index is delta-determined, so the swap (i, j) and the
    cycle (i, j, k) -> (k, i, j) generate all of S3 with signs; both
    reduce to identities between entries of the pair table.
    """
    t = _pair_tables(grid.n)
    s, nw = t.sin_cross, t.neg_wrap_index
    size = grid.size
    swap = float(np.max(np.abs(s + s.T)))
    rows = np.clip(nw, 0, None)
    cycled = s[rows, np.arange(size)[:, None]]  # N_kij read back at k = -(i+j)
    base = np.where(nw >= 0, s, 0.0)
    cycled = np.where(nw >= 0, cycled, 0.0)
    cyclic = float(np.max(np.abs(cycled - base)))
    return max(swap, cyclic) / float(np.max(np.abs(s)))


def _rhs_equivalence_residual(grid: TruncationGrid, rng: np.random.Generator) -> float:
    field = random_shell_field(
        grid,
        seed=int(rng.integers(2**31)),
        shell_max=min(8.0, 2.0 * grid.half**2),
        amplitude=3.0,
    )
    routes = [
        rhs_naive(grid, field).coeffs,
        rhs_nambu(grid, field).coeffs,
        rhs_from_lie_poisson(grid, field).coeffs,
        rhs_fast(grid, field).coeffs,
    ]
    # cancellation scale of the double sum, not the (possibly tiny) result
    t = _pair_tables(grid.n)
    gathered = np.abs(_masked_gather(field.coeffs, t.wrap_index))
    inv_lap = np.abs(field.coeffs[grid.neg_index]) / grid.norms2
    scale = (grid.n / TWO_PI) * float(np.max((np.abs(t.sin_cross) * gathered) @ inv_lap))
    worst = 0.0
    for a in range(len(routes)):
        for b in range(a + 1, len(routes)):
            worst = max(worst, float(np.max(np.abs(routes[a] - routes[b]))))
    return worst / max(scale, 1e-300)


def run_identity_suite(
    n: int,
    seed: int = 0,
    alpha_override: np.ndarray | None = None,
) -> list[CheckReport]:
    """The eight structural checks, in dependency order.

    ``alpha_override`` substitutes a dense structure-constant array for
    the checks that consume structure constants directly (antisymmetry,
    Jacobi, Killing); this is the fault-injection entry point.
    """
    if n % 2 == 0 or not 3 <= n <= 15:
        raise ValueError(f"identity suite needs odd n in [3, 15], got {n}")
    grid = build_grid(n)
    rng = np.random.default_rng(seed)
    base = {"n": n, "seed": seed}
    reports: list[CheckReport] = []

    t0 = time.perf_counter()
    if alpha_override is not None:
        r = dense_antisymmetry_residual(alpha_override)
    else:
        r = _table_antisymmetry_residual(grid)
    reports.append(_report("alpha-antisymmetry", dict(base), r, 1e-15, t0))

    t0 = time.perf_counter()
    if alpha_override is not None:
        r = dense_jacobi_residual(alpha_override)
    else:
        r = _table_jacobi_residual(grid)
    reports.append(_report("jacobi-identity", dict(base), r, 1e-12, t0))

    t0 = time.perf_counter()
    r = _killing_residual(grid, alpha_override)
    reports.append(_report("killing-form", dict(base), r, 1e-12, t0))

    t0 = time.perf_counter()
    r = _orthogonality_residual(grid)
    reports.append(_report("orthogonality", dict(base), r, 1e-11, t0))

    t0 = time.perf_counter()
    r = _casimir_residual(grid, rng)
    reports.append(_report("casimir-commutes", dict(base), r, 1e-12, t0))

    t0 = time.perf_counter()
    r = _reduction_residual(grid, rng)
    reports.append(_report("nambu-reduction", dict(base), r, 1e-12, t0))

    t0 = time.perf_counter()
    r = _nambu_antisymmetry_residual(grid)
    reports.append(_report("nambu-antisymmetry", dict(base), r, 1e-15, t0))

    t0 = time.perf_counter()
    r = _rhs_equivalence_residual(grid, rng)
    reports.append(_report("rhs-equivalence", dict(base), r, 1e-10, t0))

    return reports


# ---------------------------------------------------------------------------
# counterexample, convergence study, violation scan
# ---------------------------------------------------------------------------


def run_counterexample(n: int) -> CheckReport:
    """Evaluate the six-index tuple that breaks the generalized identity.

    For both the truncated and the untruncated tensor the first summand
    must be nonzero while the other two vanish exactly; the reported
    residual is the worst spurious summand (inf when a first summand
    degenerates to zero, so the check fails in that direction too).
    """
    if n % 2 == 0 or n < 5:
        raise ValueError(f"counterexample evaluation needs odd n >= 5, got {n}")
    grid = build_grid(n)
    tup = KNOWN_JACOBI_VIOLATION
    started = time.perf_counter()
    summands = {
        "zeitlin": gen_jacobi_terms(SineNambuTensor(grid), *tup),
        "continuum": gen_jacobi_terms(ContinuumNambuTensor(), *tup),
    }
    residual = 0.0
    for terms in summands.values():
        if terms[0] == 0.0:
            residual = math.inf
        residual = max(residual, abs(terms[1]), abs(terms[2]))
    params = {
        "n": n,
        "tuple": [list(v) for v in tup],
        "zeitlin_summands": list(summands["zeitlin"]),
        "continuum_summands": list(summands["continuum"]),
    }
    return _report("jacobi-counterexample", params, residual, 0.0, started)


def _fixed_polynomials(
    i: WaveVector, j: WaveVector
) -> tuple[ModePolynomial, ModePolynomial, ModePolynomial]:
    """Two linear modes and a quadratic whose gradient closes the triad.

    The tensor's delta demands a + b + c = 0 over the gradient supports,
    so the third observable lives on the pair's sum.
    """
    k = i + j
    p1 = ModePolynomial.from_terms([(0.5 + 0.0j, [i])]).with_conjugate()
    p2 = ModePolynomial.from_terms([(0.5 + 0.0j, [j])]).with_conjugate()
    p3 = ModePolynomial.from_terms([(0.25 + 0.0j, [k, -k])]).with_conjugate()
    return p1, p2, p3


def _fixed_assignment(
    support: Sequence[WaveVector], seed: int
) -> Mapping[WaveVector, complex]:
    rng = np.random.default_rng(seed)
    out: dict[WaveVector, complex] = {}
    for v in sorted(set(support)):
        if v in out:
            continue
        z = complex(rng.normal(), rng.normal())
        out[v] = z
        out[-v] = z.conjugate()
    return out


def run_convergence_study(
    pairs: Sequence[tuple],
    n_list: Sequence[int] = (11, 21, 41, 81),
    seed: int = 7,
) -> CheckReport:
    """Decay of the truncation error in the structure constants.

    For each non-collinear pair (i, j) the study tabulates
    |alpha_n(i, j, i+j) - alpha_inf(i, j, i+j)| across n and fits the
    decay exponent by log-log regression; collinear pairs have error
    identically zero and are excluded from the fit.  The study also
    evaluates the truncated and untruncated Nambu brackets on fixed
    low-order polynomials in the pair's modes (the same mode-derivative
    convention on both sides) and tabulates the difference; that
    comparison carries no acceptance band.  Passes iff every fitted
    exponent lies in [1.8, 2.2].
    """
    if not pairs:
        raise ValueError("need at least one wave-vector pair")
    n_list = sorted(int(n) for n in n_list)
    if len(n_list) < 2:
        raise ValueError("need at least two truncation sizes to fit a rate")
    started = time.perf_counter()
    grids = {n: build_grid(n) for n in n_list}
    smallest = grids[n_list[0]]
    continuum = ContinuumNambuTensor()

    rows = []
    exponents = []
    for raw_i, raw_j in pairs:
        i, j = _as_wave_vector(raw_i), _as_wave_vector(raw_j)
        k = i + j
        for v in (i, j, k):
            if not smallest.contains(v):
                raise ValueError(
                    f"pair ({tuple(i)}, {tuple(j)}) leaves the smallest grid n={smallest.n}"
                )
        p1, p2, p3 = _fixed_polynomials(i, j)
        support = list(p1.support()) + list(p2.support()) + list(p3.support())
        assignment = _fixed_assignment(support, seed=seed)
        reference = support_nambu_bracket(continuum, p1, p2, p3, assignment)
        errors: dict[int, float] = {}
        bracket_diffs: dict[int, float] = {}
        for n in n_list:
            g = grids[n]
            errors[n] = float(
                abs(alpha_zeitlin(g, tuple(i), tuple(j), tuple(k)) - alpha_continuum(i, j, k))
            )
            discrete = support_nambu_bracket(SineNambuTensor(g), p1, p2, p3, assignment)
            bracket_diffs[n] = float(abs(discrete - reference))
        collinear = i.cross(j) == 0
        if collinear:
            exponent = None
        else:
            slope = np.polyfit(
                np.log(np.array(n_list, dtype=np.float64)),
                np.log(np.array([errors[n] for n in n_list])),
                1,
            )[0]
            exponent = float(-slope)
            exponents.append(exponent)
        rows.append(
            {
                "pair": [list(i), list(j)],
                "collinear": collinear,
                "errors": {str(n): errors[n] for n in n_list},
                "bracket_diffs": {str(n): bracket_diffs[n] for n in n_list},
                "exponent": exponent,
            }
        )

    if exponents:
        residual = max(abs(e - 2.0) for e in exponents)
    else:
        residual = math.inf  # nothing to fit: only collinear pairs supplied
    params = {"n_list": list(n_list), "pairs": rows, "seed": seed}
    return _report("alpha-convergence", params, residual, 0.2, started)


def run_jacobi_scan(n: int, workers: int = 1) -> tuple[CheckReport, list[JacobiViolation]]:
    """Exhaustive violation scan of the generalized Jacobi identity.

    Enumerates every tuple whose delta factors close, deduplicates under
    the 12-element relabeling symmetry of the residual, and passes iff
    violations exist and the known six-index tuple is among them with
    its closed-form residual value.
    """
    if n not in (5, 7):
        raise ValueError(f"exhaustive scan is sized for n in {{5, 7}}, got {n}")
    started = time.perf_counter()
    grid = build_grid(n)
    violations = scan_gen_jacobi(SineNambuTensor(grid), workers=workers)
    deduped = dedupe_violations(violations)
    expected = gen_jacobi_residual_known(n)
    measured = None
    for v in violations:
        if v.indices == KNOWN_JACOBI_VIOLATION:
            measured = v.residual
            break
    if violations and measured is not None:
        residual = abs(measured - expected) / abs(expected)
    else:
        residual = math.inf
    params = {
        "n": n,
        "workers": workers,
        "violations_raw": len(violations),
        "violations_deduplicated": len(deduped),
        "known_tuple_residual": measured,
        "known_tuple_expected": expected,
    }
    return _report("jacobi-scan", params, residual, 1e-12, started), violations


def gen_jacobi_residual_known(n: int) -> float:
    """Closed form of the scan's anchor residual on the truncation.

    ((n/2pi) sin(2pi/n))^2 / (2pi)^8: the single surviving summand of
    the known tuple, whose two cross products are both unity.
    """
    two_pi = 2.0 * math.pi
    return ((n / two_pi) * math.sin(two_pi / n)) ** 2 / two_pi**8


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------


def format_reports(reports: Sequence[CheckReport]) -> str:
    """Fixed-width text table, one row per check."""
    header = f"{'check':<22} {'max residual':>14} {'tolerance':>11} {'verdict':>7} {'time':>9}"
    lines = [header, "-" * len(header)]
    for r in reports:
        verdict = "PASS" if r.passed else "FAIL"
        lines.append(
            f"{r.name:<22} {r.max_residual:>14.3e} {r.tolerance:>11.1e} "
            f"{verdict:>7} {r.runtime_s:>8.2f}s"
        )
    lines.append(f"{sum(r.passed for r in reports)}/{len(reports)} checks passed")
    return "\n".join(lines)
