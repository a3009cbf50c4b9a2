"""Crossings, correlation lengths, and open/closed circuits.

Conventions:

* ``sigma(n, m, p)`` is the probability of a p-open left-right crossing
  of the rectangle ``[0, n] x [0, m]`` (a path of open edges inside the
  rectangle joining the left side to the right side).
* The dual crossing paired with it runs top-bottom through closed dual
  edges, where a dual edge is closed exactly when the primal edge it
  crosses has label ``> p``.  Exactly one of the pair occurs in every
  configuration; the exhaustive tests check this bond by bond.
* The correlation length ``L(p, eps)`` is the smallest ``n`` whose
  square crossing estimate reaches ``1 - eps``, located by doubling and
  then bisecting; ``p_n`` inverts it in ``p`` at fixed ``n``.
* Circuits come in two kinds: ``PrimalOpen`` (a cycle of p-open edges
  in an annulus, surrounding the origin) and ``DualClosed`` (a cycle of
  closed dual edges).  Innermost and outermost extraction both reduce
  to the cell floods in ``_circuits``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _circuits, kernels, lattice
from .errors import (
    AbortedAtCapError,
    BoxTooSmallError,
    OutOfBoxError,
    ScanCapExceededError,
)
from .field import WeightField, mix_seed, omega_for_edges, omega_grids
from .lattice import EdgeId
from .weights import P_C

PRIMAL_OPEN = "PrimalOpen"
DUAL_CLOSED = "DualClosed"
LEFT_RIGHT = "LR"
TOP_BOTTOM = "TB"

DEFAULT_EPSILON = 0.02
LENGTH_CAP = 4096
ANNULUS_SCAN_CAP = 12


# ---------------------------------------------------------------------------
# Rectangle crossings
# ---------------------------------------------------------------------------


def _rect_bases(n: int, m: int):
    """Edge-table arrays for the rectangle [0, n] x [0, m], H block then
    V block, each row-major so the labels reshape to (m+1, n) and
    (m, n+1) grids."""
    bx_h = np.tile(np.arange(n, dtype=np.int64), m + 1)
    by_h = np.repeat(np.arange(m + 1, dtype=np.int64), n)
    bx_v = np.tile(np.arange(n + 1, dtype=np.int64), m)
    by_v = np.repeat(np.arange(m, dtype=np.int64), n + 1)
    bx = np.concatenate([bx_h, bx_v])
    by = np.concatenate([by_h, by_v])
    orient = np.zeros(bx.size, dtype=np.int8)
    orient[bx_h.size :] = 1
    return bx, by, orient


def _split_rect_grids(om: np.ndarray, n: int, m: int):
    nh = n * (m + 1)
    return om[:nh].reshape(m + 1, n), om[nh:].reshape(m, n + 1)


def _crossing_from_grids(
    om_h: np.ndarray, om_v: np.ndarray, p: float, direction: str, mode: str
) -> bool:
    m = om_v.shape[0]
    n = om_h.shape[1]
    if mode == PRIMAL_OPEN:
        h_open = (om_h <= p).astype(np.uint8)
        v_open = (om_v <= p).astype(np.uint8)
        return bool(
            kernels.crossing_connected(
                n + 1, m + 1, h_open.reshape(-1), v_open.reshape(-1),
                0 if direction == LEFT_RIGHT else 1,
            )
        )
    if mode != DUAL_CLOSED:
        raise ValueError(f"unknown crossing mode {mode!r}")
    # Dual vertices are face labels.  A vertical dual step crosses a
    # primal H edge, a horizontal one a primal V edge; steps that would
    # cross edges outside the rectangle are blocked, which loses no
    # crossing (a dual crossing can always be trimmed to leave its
    # extreme row or column by a step across a rectangle edge).
    if direction == TOP_BOTTOM:
        if n == 0:
            return False
        v_open = (om_h > p).astype(np.uint8)  # (m+1, n)
        h_open = np.zeros((m + 2, n - 1), dtype=np.uint8)
        h_open[1 : m + 1, :] = om_v[:, 1:n] > p
        return bool(
            kernels.crossing_connected(
                n, m + 2, h_open.reshape(-1), v_open.reshape(-1), 1
            )
        )
    if m == 0:
        return False
    h_open = (om_v > p).astype(np.uint8)  # (m, n+1)
    v_open = np.zeros((m - 1, n + 2), dtype=np.uint8)
    v_open[:, 1 : n + 1] = om_h[1:m, :] > p
    return bool(
        kernels.crossing_connected(
            n + 2, m, h_open.reshape(-1), v_open.reshape(-1), 0
        )
    )


def has_crossing(
    f: WeightField,
    p: float,
    rect: tuple[int, int],
    direction: str = LEFT_RIGHT,
    mode: str = PRIMAL_OPEN,
) -> bool:
    """Crossing event for the rectangle [0, n] x [0, m] in the field.

    Uses the field's stored labels, so it stays consistent on loaded or
    hand-crafted fields.
    """
    n, m = rect
    if n < 0 or m < 0:
        raise ValueError("rectangle dimensions must be >= 0")
    if direction not in (LEFT_RIGHT, TOP_BOTTOM):
        raise ValueError(f"unknown direction {direction!r}")
    if max(n, m) > f.radius:
        raise OutOfBoxError(f"rectangle {rect} does not fit in B({f.radius})")
    bx, by, orient = _rect_bases(n, m)
    om = f.omega[lattice.edge_indices(f.radius, bx, by, orient)]
    om_h, om_v = _split_rect_grids(om, n, m)
    return _crossing_from_grids(om_h, om_v, p, direction, mode)


@dataclass(frozen=True)
class SigmaEstimate:
    value: float
    stderr: float
    reps: int


def estimate_sigma(p: float, n: int, m: int, reps: int, seed: int) -> SigmaEstimate:
    """Monte Carlo estimate of sigma(n, m, p) with its standard error.

    Replication r draws the rectangle's labels under mix_seed(seed, r);
    the seeds do not depend on p, so estimates at different levels are
    coupled through common configurations.
    """
    if reps < 100:
        raise ValueError("need reps >= 100 for a usable crossing estimate")
    if n < 0 or m < 0:
        raise ValueError("rectangle dimensions must be >= 0")
    bx, by, orient = _rect_bases(n, m)
    hits = 0
    for r in range(reps):
        om = omega_for_edges(mix_seed(seed, r), bx, by, orient)
        om_h, om_v = _split_rect_grids(om, n, m)
        if _crossing_from_grids(om_h, om_v, p, LEFT_RIGHT, PRIMAL_OPEN):
            hits += 1
    value = hits / reps
    return SigmaEstimate(value, float(np.sqrt(value * (1 - value) / reps)), reps)


# ---------------------------------------------------------------------------
# Correlation length and its inverse
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationLengthReport:
    p: float
    epsilon: float
    length: int
    reps: int
    seed: int
    sigma_curve: tuple[tuple[int, float, float], ...]
    caveat: bool


def correlation_length(
    p: float,
    epsilon: float = DEFAULT_EPSILON,
    reps: int = 400,
    seed: int = 0,
    cap: int = LENGTH_CAP,
) -> CorrelationLengthReport:
    """Smallest n with estimated sigma(n, n, p) >= 1 - epsilon.

    Probes n = 1, 2, 4, ... (finally the cap itself), then bisects
    between the last failure and the first success.  Raises
    AbortedAtCapError when every probe up to the cap fails; the caller
    may read that as "longer than the cap".  The caveat flag marks a
    decision within two standard errors of the threshold.
    """
    if not P_C < p <= 1:
        raise ValueError("correlation length needs p in (1/2, 1]")
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must be in (0, 1/2)")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    threshold = 1 - epsilon
    curve: dict[int, SigmaEstimate] = {}

    def sigma(n: int) -> SigmaEstimate:
        if n not in curve:
            curve[n] = estimate_sigma(p, n, n, reps, mix_seed(seed, n))
        return curve[n]

    def curve_tuple():
        return tuple((n, curve[n].value, curve[n].stderr) for n in sorted(curve))

    n, last_fail = 1, 0
    while True:
        if sigma(n).value >= threshold:
            break
        last_fail = n
        if n >= cap:
            raise AbortedAtCapError(
                f"sigma(n, n, {p}) stayed below {threshold} up to n = {cap}",
                cap=cap,
                probes=curve_tuple(),
            )
        n = min(2 * n, cap)
    lo, hi = last_fail + 1, n
    while lo < hi:
        mid = (lo + hi) // 2
        if sigma(mid).value >= threshold:
            hi = mid
        else:
            lo = mid + 1
    est = sigma(hi)
    caveat = abs(est.value - threshold) < 2 * est.stderr
    return CorrelationLengthReport(
        p, epsilon, hi, reps, seed, curve_tuple(), caveat
    )


@dataclass(frozen=True)
class PnEstimate:
    p_n: float
    n: int
    epsilon: float
    trace: tuple[tuple[float, int | None], ...]


def p_n_estimate(
    n: int,
    epsilon: float = DEFAULT_EPSILON,
    reps: int = 400,
    seed: int = 0,
    steps: int = 10,
) -> PnEstimate:
    """Bisect for the smallest p with correlation length at most n.

    Each trial p asks correlation_length with cap = n; aborting at the
    cap is the verdict "longer than n", not an error.  The trace records
    (p, length or None) per step; the estimate is the last trial known
    to satisfy L(p) <= n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > LENGTH_CAP:
        raise ValueError(f"n exceeds the probe cap {LENGTH_CAP}")
    lo, hi = P_C + 1e-6, 1.0
    trace: list[tuple[float, int | None]] = []
    for _ in range(steps):
        mid = (lo + hi) / 2
        try:
            report = correlation_length(mid, epsilon, reps, seed, cap=n)
            trace.append((mid, report.length))
            hi = mid
        except AbortedAtCapError:
            trace.append((mid, None))
            lo = mid
    return PnEstimate(hi, n, epsilon, tuple(trace))


# ---------------------------------------------------------------------------
# Circuits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Circuit:
    """A simple cycle surrounding the origin.

    ``vertices`` is the closed walk (first point repeated at the end):
    lattice vertices for a PrimalOpen circuit, half-integer dual points
    for a DualClosed one.  ``edges`` always holds primal EdgeIds: the
    circuit's own edges when primal, the crossed edges when dual.
    ``enclosed_cells`` counts enclosed faces (primal) or enclosed
    lattice vertices (dual).  ``annulus`` is the annulus index the
    circuit was found in, None for an unconstrained search.
    """

    vertices: tuple[tuple[float, float], ...]
    edges: tuple[EdgeId, ...]
    kind: str
    level: float
    annulus: int | None
    enclosed_cells: int

    def winding(self) -> int:
        """Signed winding around the origin; +-1 for a valid circuit."""
        center = (0.5, 0.5) if self.kind == PRIMAL_OPEN else (0.0, 0.0)
        return _circuits.winding_number(list(self.vertices), center)

    def diameter(self) -> float:
        """Sup-norm diameter of the vertex set."""
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return max(max(xs) - min(xs), max(ys) - min(ys))


def _norm_grid(r: int) -> np.ndarray:
    a = np.abs(np.arange(-r, r + 1))
    return np.maximum(a[None, :], a[:, None])


def _primal_usable(f: WeightField, p: float, r_in: int, r_out: int):
    """Usability grids for open edges with both ends in the vertex ring
    r_in < ||v|| <= r_out."""
    om_h, om_v = omega_grids(f, r_out)
    ring = _norm_grid(r_out) > r_in
    usable_h = ring[:, :-1] & ring[:, 1:] & (om_h <= p)
    usable_v = ring[:-1, :] & ring[1:, :] & (om_v <= p)
    return usable_h, usable_v


def _dual_usable(f: WeightField, p: float, r_in: int | None, r_out: int):
    """Usability grids on the face-label lattice for closed dual edges.

    A step between side-by-side labels (i, j)-(i+1, j) crosses the
    primal V edge at (i+1, j); a step between stacked labels crosses the
    primal H edge at (i, j+1).  Labels are confined to the ring
    r_in < ||label|| <= r_out (no inner constraint when r_in is None).
    """
    big = r_out + 1
    om_h, om_v = omega_grids(f, big)
    crossed_v = om_v[1 : 2 * r_out + 2, 2 : 2 * r_out + 2]
    crossed_h = om_h[2 : 2 * r_out + 2, 1 : 2 * r_out + 2]
    ring = np.ones((2 * r_out + 1, 2 * r_out + 1), dtype=bool)
    if r_in is not None:
        ring = _norm_grid(r_out) > r_in
    usable_h = ring[:, :-1] & ring[:, 1:] & (crossed_v > p)
    usable_v = ring[:-1, :] & ring[1:, :] & (crossed_h > p)
    return usable_h, usable_v


def _primal_circuit(search, p: float, k: int | None) -> Circuit:
    edges = tuple(
        EdgeId((x, y), orient) for (x, y), orient in search.edges
    )
    return Circuit(
        vertices=tuple((float(x), float(y)) for x, y in search.walk),
        edges=edges,
        kind=PRIMAL_OPEN,
        level=p,
        annulus=k,
        enclosed_cells=search.enclosed_cells,
    )


def _dual_circuit(search, p: float, k: int | None) -> Circuit:
    edges = tuple(
        EdgeId((i + 1, j), lattice.VERTICAL)
        if orient == "H"
        else EdgeId((i, j + 1), lattice.HORIZONTAL)
        for (i, j), orient in search.edges
    )
    return Circuit(
        vertices=tuple((x + 0.5, y + 0.5) for x, y in search.walk),
        edges=edges,
        kind=DUAL_CLOSED,
        level=p,
        annulus=k,
        enclosed_cells=search.enclosed_cells,
    )


def innermost_open_circuit(f: WeightField, k: int, p: float = P_C) -> Circuit | None:
    """Innermost p-open circuit in Ann(k) surrounding the origin.

    Needs the field to cover B(2^(k+1)).  Returns None when the annulus
    has no such circuit (equivalently, a closed dual path crosses it).
    """
    spec = lattice.AnnulusSpec(k)
    if spec.outer > f.radius:
        raise BoxTooSmallError(
            f"Ann({k}) reaches B({spec.outer}), field covers B({f.radius})"
        )
    r_in = max(spec.inner, 0)
    usable_h, usable_v = _primal_usable(f, p, r_in, spec.outer)
    search = _circuits.innermost(usable_h, usable_v, r_in, spec.outer)
    return None if search is None else _primal_circuit(search, p, k)


def innermost_closed_dual_circuit(
    f: WeightField, k: int, p: float = P_C
) -> Circuit | None:
    """Innermost p-closed dual circuit with labels in the dual annulus
    2^(k-1) < ||label|| <= 2^k, surrounding the origin.

    Needs the field to cover B(2^k + 1) so every crossed edge has a
    label.  k = 0 degenerates to the label ring of norm exactly 1.
    """
    if k < 0:
        raise ValueError("dual annulus index must be >= 0")
    r_out = 2**k
    r_in = 2 ** (k - 1) if k >= 1 else 0
    if r_out + 1 > f.radius:
        raise BoxTooSmallError(
            f"dual annulus {k} needs B({r_out + 1}), field covers B({f.radius})"
        )
    usable_h, usable_v = _dual_usable(f, p, r_in, r_out)
    search = _circuits.innermost(usable_h, usable_v, r_in, r_out)
    return None if search is None else _dual_circuit(search, p, k)


def outermost_closed_dual_circuit(f: WeightField, p: float) -> Circuit | None:
    """Outermost p-closed dual circuit around the origin in the box.

    Every closed dual circuit around the origin is enclosed by this one,
    so its diameter is the maximal one; compare against a threshold to
    decide diameter events.
    """
    if f.radius < 2:
        raise BoxTooSmallError("need at least B(2) to search dual circuits")
    r_out = f.radius - 1
    usable_h, usable_v = _dual_usable(f, p, None, r_out)
    search = _circuits.outermost(usable_h, usable_v, (-1, -1), r_out)
    return None if search is None else _dual_circuit(search, p, None)


def closed_dual_circuit_exists(
    f: WeightField,
    p: float,
    annulus: int | None = None,
    min_diameter: float | None = None,
) -> bool:
    """Existence of a p-closed dual circuit around the origin, either
    confined to a dual annulus or of at least a given diameter."""
    if (annulus is None) == (min_diameter is None):
        raise ValueError("give exactly one of annulus and min_diameter")
    if annulus is not None:
        return innermost_closed_dual_circuit(f, annulus, p) is not None
    c = outermost_closed_dual_circuit(f, p)
    return c is not None and c.diameter() >= min_diameter


def find_m_and_circuit(
    f: WeightField, n: int, p: float = P_C, scan_cap: int = ANNULUS_SCAN_CAP
) -> tuple[int, Circuit]:
    """Scan annuli k = n, n+1, ... for the first p-open circuit.

    Returns (m, circuit) for the smallest such m.  Raises
    ScanCapExceededError either when the field's box ends before the cap
    (box_limited, with the radius a retry needs) or when all annuli up
    to n + scan_cap are crossed by closed dual paths.
    """
    if n < -1:
        raise ValueError("annulus index must be >= -1")
    for k in itertools.count(n):
        if k > n + scan_cap:
            raise ScanCapExceededError(
                f"no open circuit in Ann({n})..Ann({n + scan_cap}) at p = {p}"
            )
        outer = 2 ** (k + 1)
        if outer > f.radius:
            raise ScanCapExceededError(
                f"Ann({k}) reaches B({outer}), field covers B({f.radius})",
                box_limited=True,
                suggested_radius=outer,
            )
        circuit = innermost_open_circuit(f, k, p)
        if circuit is not None:
            return k, circuit
    raise AssertionError("unreachable")
