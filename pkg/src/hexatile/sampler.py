"""Random tilings of the hexagon.

``sample_exact`` draws from the Gibbs measure column by column.  Given the
positions x at column m, the law of the next positions y is

    P(y | x) = prod_i T_m(x_i, y_i) det[w_(m+1)(y_i, e_k)] / det[w_m(x_i, e_k)]

and particles are drawn top first.  With M = [w_m(x_i, e_k)] and the
"stay" rows R = [T_m(x_i, x_i) w_(m+1)(x_i, e_k)], put G = R M^-1.  Row i
of the transformed matrix is e_i (still summed) or G_i / e_i - G_i (stay /
up), so every conditional is a ratio of determinants of trailing blocks,
and only M^-1 needs extended precision.

``sample_mcmc`` runs Metropolis lozenge flips on the height array.  Its
kernel is compiled with numba unless HEXATILE_BACKEND=numpy.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import flint
import numpy as np

from .exact import exact_limit
from .laurent import binom_product
from .lattice import AlphaLike, LozengeType, PathSystem, column_span, exact_alpha, hexagon_mask, parse_alpha, tiling_from_paths

MODES = ("exact", "log_float")


def backend() -> str:
    """'numba' or 'numpy', from HEXATILE_BACKEND (default numba)."""
    b = os.environ.get("HEXATILE_BACKEND", "numba").strip().lower()
    if b not in ("numba", "numpy"):
        raise ValueError(f"HEXATILE_BACKEND must be 'numba' or 'numpy', got {b!r}")
    return b


@dataclass(frozen=True)
class SamplerConfig:
    n: int
    alpha: AlphaLike
    seed: int = 0
    arithmetic_mode: str = "exact"
    samples: int = 1

    def __post_init__(self) -> None:
        if int(self.n) < 1:
            raise ValueError("n must be >= 1")
        object.__setattr__(self, "alpha", parse_alpha(self.alpha))
        if self.arithmetic_mode not in MODES:
            raise ValueError(f"arithmetic_mode must be one of {MODES}")
        if self.arithmetic_mode == "exact" and self.n > exact_limit():
            raise ValueError(f"exact mode needs n <= {exact_limit()} (HEXATILE_EXACT_N); use log_float")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if int(self.samples) < 1:
            raise ValueError("samples must be >= 1")


def rng_for(seed: int, index: int) -> np.random.Generator:
    """Philox stream for sample ``index`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


@dataclass(frozen=True)
class ColumnState:
    n: int
    m: int
    positions: tuple[int, ...]

    def __post_init__(self) -> None:
        n, m, p = self.n, self.m, self.positions
        if not 0 <= m <= 2 * n:
            raise ValueError(f"column {m} outside 0..{2 * n}")
        if len(p) != n or any(b <= a for a, b in zip(p, p[1:])):
            raise ValueError("positions must be a strictly increasing vector of length n")
        for j, y in enumerate(p):
            if not j <= y <= j + m:
                raise ValueError(f"path {j} at height {y} is not reachable at column {m}")
            if not 0 <= n + j - y <= 2 * n - m:
                raise ValueError(f"path {j} at height {y} cannot reach {n + j} by column {2 * n}")


class _Rows:
    """Completion weights w_m(y, n + k) as exact rows."""

    def __init__(self, n: int, alpha: Fraction) -> None:
        self.n = n
        self.alpha = alpha
        self.poly = []
        for m in range(2 * n + 1):
            even = sum(1 for c in range(m, 2 * n) if c % 2 == 0)
            self.poly.append(binom_product(2 * n - m - even, even, alpha))
        self.fpoly = [[flint.fmpq(v.numerator, v.denominator) for v in p] for p in self.poly]

    def row(self, m: int, y: int) -> list:
        p = self.fpoly[m]
        out = []
        for k in range(self.n):
            d = self.n + k - y
            out.append(p[d] if 0 <= d < len(p) else flint.fmpq(0))
        return out

    def stay_factor(self, m: int):
        a = self.alpha
        return flint.fmpq(a.numerator, a.denominator) if m % 2 == 0 else flint.fmpq(1)


@lru_cache(maxsize=8)
def _rows(n: int, alpha: Fraction) -> _Rows:
    return _Rows(n, alpha)


def _trailing_stay(G, gs, i: int, solve):
    """P(stay) for particle i: det of the trailing block with row i = gs over the one with row i = e_i."""
    if i == len(gs) - 1:
        return gs[i]
    b = solve(G, i)
    return gs[i] + sum(gs[i + 1 + k] * b[k] for k in range(len(b)))


class _ExactColumns:
    """Exact conditionals with memoisation on (column, positions, choices so far)."""

    def __init__(self, n: int, alpha: Fraction) -> None:
        self.n = n
        self.rows = _rows(n, alpha)
        self.g_cache: dict = {}
        self.p_cache: dict = {}

    def g_stay(self, m: int, x: tuple[int, ...]):
        key = (m, x)
        g = self.g_cache.get(key)
        if g is None:
            r = self.rows
            M = flint.fmpq_mat([r.row(m, xi) for xi in x])
            t = r.stay_factor(m)
            R = flint.fmpq_mat([[t * v for v in r.row(m + 1, xi)] for xi in x])
            P = R * M.inv()
            g = [[P[i, k] for k in range(self.n)] for i in range(self.n)]
            self.g_cache[key] = g
        return g

    def p_stay(self, m: int, x: tuple[int, ...], ups: tuple[int, ...]) -> Fraction:
        """ups lists the choices (0 stay, 1 up) of particles n-1, n-2, ... already drawn."""
        key = (m, x, ups)
        p = self.p_cache.get(key)
        if p is None:
            n = self.n
            i = n - 1 - len(ups)
            gs = self.g_stay(m, x)
            chosen = {}
            for k, up in enumerate(ups):
                j = n - 1 - k
                row = list(gs[j])
                if up:
                    row = [-v for v in row]
                    row[j] += 1
                chosen[j] = row

            def solve(_, i):
                K = flint.fmpq_mat([[chosen[j][c] for c in range(i + 1, n)] for j in range(i + 1, n)])
                rhs = flint.fmpq_mat([[-chosen[j][i]] for j in range(i + 1, n)])
                sol = K.solve(rhs)
                return [sol[k, 0] for k in range(n - 1 - i)]

            v = _trailing_stay(None, gs[i], i, solve)
            p = Fraction(int(v.p), int(v.q))
            self.p_cache[key] = p
        return p

    def step(self, m: int, x: tuple[int, ...], rng: np.random.Generator) -> tuple[int, ...]:
        n = self.n
        y = [0] * n
        ups: tuple[int, ...] = ()
        for i in reversed(range(n)):
            if i < n - 1 and y[i + 1] == x[i] + 1:
                up = 0
            else:
                up = int(rng.random() >= self.p_stay(m, x, ups))
            y[i] = x[i] + up
            ups += (up,)
        return tuple(y)

    def transition(self, m: int, x: tuple[int, ...], y: tuple[int, ...]) -> Fraction:
        """Probability that ``step`` moves x to y."""
        n = self.n
        prob = Fraction(1)
        ups: tuple[int, ...] = ()
        for i in reversed(range(n)):
            up = y[i] - x[i]
            if up not in (0, 1):
                return Fraction(0)
            if i < n - 1 and y[i + 1] == x[i] + 1:
                if up:
                    return Fraction(0)
            else:
                p = self.p_stay(m, x, ups)
                prob *= (1 - p) if up else p
                if prob == 0:
                    return prob
            ups += (up,)
        return prob


@lru_cache(maxsize=8)
def _exact_columns(n: int, alpha: Fraction) -> _ExactColumns:
    return _ExactColumns(n, alpha)


def default_precision(n: int) -> int:
    """Bits for M^-1 in log_float mode; entries span about 4^n in magnitude."""
    return 96 + 2 * n


class _FloatColumns:
    """M^-1 in arb ball arithmetic at ``prec`` bits, conditionals in doubles."""

    def __init__(self, n: int, alpha: Fraction, prec: int | None = None) -> None:
        self.n = n
        self.rows = _rows(n, alpha)
        self.prec = prec or default_precision(n)

    def g_stay(self, m: int, x: tuple[int, ...]) -> np.ndarray:
        n, r = self.n, self.rows
        old = flint.ctx.prec
        flint.ctx.prec = self.prec
        try:
            M = flint.arb_mat([r.row(m, xi) for xi in x])
            t = r.stay_factor(m)
            R = flint.arb_mat([[t * v for v in r.row(m + 1, xi)] for xi in x])
            eye = flint.arb_mat(n, n, [int(k % (n + 1) == 0) for k in range(n * n)])
            P = R * M.solve(eye, algorithm="approx")
            return np.array([[float(P[i, k].mid()) for k in range(n)] for i in range(n)])
        finally:
            flint.ctx.prec = old

    def step(self, m: int, x: tuple[int, ...], rng: np.random.Generator) -> tuple[int, ...]:
        n = self.n
        gs = self.g_stay(m, x)
        G = np.zeros((n, n))
        y = [0] * n

        def solve(_, i):
            return np.linalg.solve(G[i + 1 :, i + 1 :], -G[i + 1 :, i])

        for i in reversed(range(n)):
            if i < n - 1 and y[i + 1] == x[i] + 1:
                up = 0
            else:
                p = float(_trailing_stay(G, gs[i], i, solve))
                up = int(rng.random() >= min(max(p, 0.0), 1.0))
            y[i] = x[i] + up
            G[i] = gs[i]
            if up:
                G[i] = -gs[i]
                G[i, i] += 1.0
        return tuple(y)


def _engine(cfg: SamplerConfig, prec: int | None = None):
    a = exact_alpha(cfg.alpha)
    if cfg.arithmetic_mode == "exact":
        return _exact_columns(cfg.n, a)
    return _FloatColumns(cfg.n, a, prec)


def sample_exact(cfg: SamplerConfig, index: int = 0, prec: int | None = None) -> PathSystem:
    """One draw from the Gibbs measure, using substream ``index`` of ``cfg.seed``."""
    n = cfg.n
    rng = rng_for(cfg.seed, index)
    eng = _engine(cfg, prec)
    x = tuple(range(n))
    cols = [x]
    for m in range(2 * n):
        x = eng.step(m, x, rng)
        cols.append(x)
    if x != tuple(range(n, 2 * n)):
        raise ArithmeticError("sampler left the hexagon; increase the working precision")
    return PathSystem(n, np.array(cols).T)


def sequential_probability(p: PathSystem, alpha: AlphaLike) -> Fraction:
    """Exact probability that the sequential sampler outputs ``p``."""
    eng = _exact_columns(p.n, exact_alpha(alpha))
    cols = [tuple(int(v) for v in p.heights[:, m]) for m in range(2 * p.n + 1)]
    prob = Fraction(1)
    for m in range(2 * p.n):
        prob *= eng.transition(m, cols[m], cols[m + 1])
    return prob


def _sample_task(args) -> PathSystem:
    cfg, index, prec = args
    return sample_exact(cfg, index, prec)


def sample_batch(cfg: SamplerConfig, threads: int = 1, prec: int | None = None, start: int = 0) -> list[PathSystem]:
    """cfg.samples independent draws; the result does not depend on ``threads``."""
    jobs = [(cfg, start + k, prec) for k in range(cfg.samples)]
    if threads <= 1 or len(jobs) == 1:
        return [_sample_task(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_sample_task, jobs))


# Metropolis flips


def flip_delta_energy(x: int, direction: int) -> int:
    """Energy change of raising (+1) or lowering (-1) a path at column x.

    Raising turns the step at x-1 from flat to up and the step at x from up
    to flat; only steps at even columns carry energy.
    """
    return direction * (1 if x % 2 == 0 else -1)


def _sublattice_numpy(H: np.ndarray, jp: int, xp: int, D: np.ndarray, U: np.ndarray, alpha: float) -> None:
    n, L = H.shape
    js = np.arange(jp, n, 2)
    xs = np.arange(2 - xp if xp == 0 else 1, L - 1, 2)
    if js.size == 0 or xs.size == 0:
        return
    J, X = np.meshgrid(js, xs, indexing="ij")
    h = H[J, X]
    left = H[J, X - 1]
    right = H[J, X + 1]
    big = np.iinfo(np.int64).max // 2
    above = np.where(J + 1 < n, H[np.minimum(J + 1, n - 1), X], big)
    below = np.where(J > 0, H[np.maximum(J - 1, 0), X], -big)
    raise_ = D[J, X] < 0.5
    can_up = (h == left) & (right == h + 1) & (above > h + 1)
    can_dn = (h == left + 1) & (right == h) & (below < h - 1)
    even = X % 2 == 0
    # raising costs alpha at even x; lowering costs alpha at odd x
    p_up = np.where(even, alpha, 1.0)
    p_dn = np.where(even, 1.0, alpha)
    acc = U[J, X]
    move = np.where(raise_, can_up & (acc < p_up), can_dn & (acc < p_dn))
    H[J, X] = h + np.where(raise_, 1, -1) * move


def _sweeps_numpy(H: np.ndarray, D: np.ndarray, U: np.ndarray, alpha: float) -> None:
    for s in range(D.shape[0]):
        for k, (jp, xp) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
            _sublattice_numpy(H, jp, xp, D[s, k], U[s, k], alpha)


@lru_cache(maxsize=1)
def _numba_kernel():
    from numba import njit

    @njit(cache=True)
    def sweeps(H, D, U, alpha):
        n, L = H.shape
        for s in range(D.shape[0]):
            for k in range(4):
                jp = k // 2
                xp = k % 2
                for j in range(jp, n, 2):
                    x0 = 2 if xp == 0 else 1
                    for x in range(x0, L - 1, 2):
                        h = H[j, x]
                        left = H[j, x - 1]
                        right = H[j, x + 1]
                        even = x % 2 == 0
                        if D[s, k, j, x] < 0.5:
                            ok = h == left and right == h + 1 and (j + 1 >= n or H[j + 1, x] > h + 1)
                            p = alpha if even else 1.0
                            if ok and U[s, k, j, x] < p:
                                H[j, x] = h + 1
                        else:
                            ok = h == left + 1 and right == h and (j == 0 or H[j - 1, x] < h - 1)
                            p = 1.0 if even else alpha
                            if ok and U[s, k, j, x] < p:
                                H[j, x] = h - 1

    return sweeps


def run_sweeps(H: np.ndarray, sweeps: int, alpha: float, rng: np.random.Generator, chunk: int = 64) -> np.ndarray:
    """Apply ``sweeps`` checkerboard Metropolis sweeps to the height array in place.

    Uniforms are drawn in the same order for both backends, so the numba and
    numpy kernels produce identical chains.
    """
    n, L = H.shape
    kern = _numba_kernel() if backend() == "numba" else _sweeps_numpy
    done = 0
    while done < sweeps:
        c = min(chunk, sweeps - done)
        D = rng.random((c, 4, n, L))
        U = rng.random((c, 4, n, L))
        kern(H, D, U, float(alpha))
        done += c
    return H


def lowest_tiling(n: int) -> PathSystem:
    """All paths flat first, then up: the tiling with every path as low as possible."""
    m = np.arange(2 * n + 1)
    return PathSystem(n, np.arange(n)[:, None] + np.maximum(0, m - n)[None, :])


def sample_mcmc(cfg: SamplerConfig, sweeps: int, init: PathSystem | None = None, index: int = 0) -> PathSystem:
    """State of the flip chain after ``sweeps`` sweeps from ``init`` (default ``lowest_tiling``)."""
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    p = init if init is not None else lowest_tiling(cfg.n)
    H = np.array(p.heights, dtype=np.int64)
    run_sweeps(H, sweeps, float(cfg.alpha), rng_for(cfg.seed, index))
    return PathSystem(cfg.n, H)


def mcmc_chain(
    cfg: SamplerConfig,
    burn_in: int | None = None,
    thin: int | None = None,
    init: PathSystem | None = None,
    index: int = 0,
) -> list[PathSystem]:
    """cfg.samples states of one chain, after ``burn_in`` sweeps and ``thin`` sweeps apart.

    Defaults are 10 n^2 and n^2 sweeps.
    """
    n = cfg.n
    burn_in = 10 * n * n if burn_in is None else burn_in
    thin = n * n if thin is None else thin
    if thin < 1:
        raise ValueError("thin must be >= 1")
    rng = rng_for(cfg.seed, index)
    p = init if init is not None else lowest_tiling(n)
    H = np.array(p.heights, dtype=np.int64)
    a = float(cfg.alpha)
    if burn_in:
        run_sweeps(H, burn_in, a, rng)
    out = []
    for _ in range(cfg.samples):
        run_sweeps(H, thin, a, rng)
        out.append(PathSystem(n, H.copy()))
    return out


# densities


@dataclass
class DensityGrid:
    """Per-face type counts over a batch of tilings, indexed [type, x, y]."""

    n: int
    alpha: Fraction | float | None
    counts: np.ndarray
    total: int
    mask: np.ndarray = field(repr=False)

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / max(self.total, 1)

    @property
    def stderr(self) -> np.ndarray:
        f = self.frequencies
        return np.sqrt(f * (1 - f) / max(self.total, 1))

    def merge(self, other: "DensityGrid") -> "DensityGrid":
        if other.n != self.n or (self.alpha is not None and other.alpha is not None and other.alpha != self.alpha):
            raise ValueError("cannot merge grids with different parameters")
        return DensityGrid(self.n, self.alpha if self.alpha is not None else other.alpha, self.counts + other.counts, self.total + other.total, self.mask)

    def faces(self):
        for x in range(2 * self.n):
            for y in range(*column_span(self.n, x)):
                yield x, y

    def to_csv_rows(self) -> list[list]:
        f = self.frequencies
        rows = []
        for x, y in self.faces():
            rows.append([x, y, x % 2, *(repr(float(f[t, x, y])) for t in LozengeType), "sample"])
        return rows


def empirical_densities(batch, alpha: AlphaLike | None = None) -> DensityGrid:
    """Aggregate tilings, given as PathSystems or (PathSystem, alpha) pairs."""
    items = list(batch)
    if not items:
        raise ValueError("empty batch")
    systems = []
    alphas = set()
    for it in items:
        if isinstance(it, PathSystem):
            systems.append(it)
        else:
            p, a = it
            systems.append(p)
            alphas.add(parse_alpha(a))
    ns = {p.n for p in systems}
    if len(ns) != 1 or len(alphas) > 1:
        raise ValueError("batch mixes different (n, alpha)")
    if alpha is not None:
        a = parse_alpha(alpha)
        if alphas and a not in alphas:
            raise ValueError("batch alpha differs from the requested alpha")
        alphas = {a}
    n = ns.pop()
    mask = hexagon_mask(n)
    counts = np.zeros((3, 2 * n, 2 * n), dtype=np.int64)
    for p in systems:
        faces = tiling_from_paths(p)
        for t in LozengeType:
            counts[t] += (faces == t) & mask
    return DensityGrid(n, alphas.pop() if alphas else None, counts, len(systems), mask)
