"""Invasion percolation growth and the statistics built on it.

Growth starts from the origin and repeatedly adds the boundary edge of
least label, where the boundary holds every non-invaded edge incident
to an invaded vertex.  Runs are confined to the sampled box: vertices
on the box rim are never invaded (edges to them are dropped from the
boundary), and the run stops once the cluster has touched the stop
radius and the surviving boundary minimum has risen above the drain
level (default 1/2), so the critically-open surroundings of everything
invaded are absorbed out to the rim before the run ends.

Dropping a rim edge is the first point where the confined run can
disagree with the infinite-volume process, so the steps before the
first drop form an exact prefix of the infinite invasion.  The
statistics read off a cluster (p̂, the constrained geodesic) use that
faithful prefix; replay and absorption checks apply to the whole
confined run.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import fourarm, fpp, lattice
from .errors import InsufficientGrowthError, NoPathError, NotReachedError
from .field import WeightField
from .lattice import HORIZONTAL, VERTICAL, EdgeId
from .weights import P_C, CriticalDistribution

ORIGIN = (0, 0)


@dataclass(eq=False)
class InvasionCluster:
    """An invasion run: the invaded edges in invasion order.

    indices/base_x/base_y/orientation/omega are parallel arrays, one
    entry per step; orientation is 0 for H, 1 for V as in the lattice
    edge table.  `reached` records whether the cluster touched the stop
    radius (False only when a step cap cut the run short); `first_clip`
    is the step index from which the run may differ from the unconfined
    process (-1 when no boundary edge was ever dropped at the rim).
    """

    field: WeightField
    stop_radius: int
    drain_p: float
    reached: bool
    first_clip: int
    indices: np.ndarray
    base_x: np.ndarray
    base_y: np.ndarray
    orientation: np.ndarray
    omega: np.ndarray

    def __len__(self) -> int:
        return int(self.indices.size)

    @property
    def prefix_len(self) -> int:
        """Number of leading steps that are exact infinite-volume steps."""
        return len(self) if self.first_clip < 0 else int(self.first_clip)

    def edge(self, i: int) -> EdgeId:
        kind = HORIZONTAL if self.orientation[i] == 0 else VERTICAL
        return EdgeId((int(self.base_x[i]), int(self.base_y[i])), kind)

    def edges(self) -> list[EdgeId]:
        return [self.edge(i) for i in range(len(self))]

    def span_radii(self) -> np.ndarray:
        """Per-step sup-norm of the invaded edge's farthest endpoint."""
        bx = self.base_x.astype(np.int64)
        by = self.base_y.astype(np.int64)
        tip_x = bx + (self.orientation == 0)
        tip_y = by + (self.orientation != 0)
        return np.maximum(
            np.maximum(np.abs(bx), np.abs(by)),
            np.maximum(np.abs(tip_x), np.abs(tip_y)),
        )

    def vertex_radius(self) -> int:
        """Largest sup-norm over invaded vertices."""
        if len(self) == 0:
            return 0
        return int(self.span_radii().max())

    def p_hat(self, n: int) -> float:
        """Largest label among faithful-prefix edges outside E(B(2^n)).

        n = -1 means no exclusion (every prefix edge counts).
        """
        bound = 2**n if n >= 0 else 0
        k = self.prefix_len
        mask = self.span_radii()[:k] > bound
        if not mask.any():
            raise InsufficientGrowthError(
                f"no invaded edge outside B({bound}) before the rim cut in; "
                "rerun on a larger box"
            )
        return float(self.omega[:k][mask].max())

    def t_hat(self, n: int, d: CriticalDistribution) -> float:
        return float(d.quantile(self.p_hat(n)))

    def edge_mask(self, prefix_only: bool = False) -> np.ndarray:
        """Boolean mask over the field's canonical edge order."""
        mask = np.zeros(self.field.omega.size, dtype=bool)
        k = self.prefix_len if prefix_only else len(self)
        mask[self.indices[:k]] = True
        return mask

    def vertices(self) -> set[tuple[int, int]]:
        out = {ORIGIN}
        for i in range(len(self)):
            x, y = int(self.base_x[i]), int(self.base_y[i])
            out.add((x, y))
            if self.orientation[i] == 0:
                out.add((x + 1, y))
            else:
                out.add((x, y + 1))
        return out


@dataclass(frozen=True)
class InvasionStats:
    """p̂ and its weight image for the requested scales."""

    p_hat: dict[int, float]
    t_hat: dict[int, float]


def invade(
    f: WeightField,
    stop_radius: int,
    drain_p: float = P_C,
    max_steps: int | None = None,
) -> InvasionCluster:
    """Grow the invasion cluster from the origin on field `f`.

    Stops once the cluster has reached `stop_radius` and the boundary
    minimum exceeds `drain_p` (pass drain_p < 0 to stop at the radius
    outright).  Growth is clipped at the box rim, never erroring: the
    same seed on a larger box replays the run and pushes the faithful
    prefix further out.
    """
    r = f.radius
    if stop_radius < 1:
        raise ValueError("stop_radius must be >= 1")
    if stop_radius + 2 > r:
        raise ValueError(
            f"stop radius {stop_radius} needs a box of radius >= {stop_radius + 2}"
        )
    bx, by, orient = lattice.edge_arrays(r)
    width = 2 * r + 1
    edge_u = (by.astype(np.int64) + r) * width + (bx.astype(np.int64) + r)
    edge_v = edge_u + np.where(orient == 0, 1, width)
    h_map, v_map = lattice.edge_index_maps(r)
    cap = int(max_steps) if max_steps is not None else f.omega.size + 1
    from . import kernels

    steps, reached, first_clip = kernels.invade_grid(
        width,
        h_map,
        v_map,
        edge_u,
        edge_v,
        f.omega,
        lattice.vertex_index(r, ORIGIN),
        stop_radius,
        float(drain_p),
        r,
        cap,
    )
    steps = np.asarray(steps, dtype=np.int64)
    return InvasionCluster(
        field=f,
        stop_radius=stop_radius,
        drain_p=float(drain_p),
        reached=bool(reached),
        first_clip=int(first_clip),
        indices=steps,
        base_x=bx[steps],
        base_y=by[steps],
        orientation=orient[steps],
        omega=f.omega[steps],
    )


def invasion_stats(
    c: InvasionCluster, n_list, d: CriticalDistribution
) -> InvasionStats:
    """Exact p̂_n maxima (and their weight images) for each n in n_list."""
    p_hat = {int(n): c.p_hat(int(n)) for n in n_list}
    t_hat = {n: float(d.quantile(v)) for n, v in p_hat.items()}
    return InvasionStats(p_hat=p_hat, t_hat=t_hat)


def constrained_geodesic(
    c: InvasionCluster, d: CriticalDistribution, n: int
) -> tuple[fpp.PassageResult, fpp.AnnulusTimes]:
    """Least-weight path 0 -> ∂B(2^{n+1}) through invaded edges only.

    The path is confined to B(2^{n+1}) and to the faithful prefix of
    the run, which must already have exited that box.  Returns the
    geodesic and its per-annulus weight split.
    """
    bound = 2 ** (n + 1)
    if bound > c.field.radius:
        raise InsufficientGrowthError(
            f"field radius {c.field.radius} cannot hold B({bound})"
        )
    k = c.prefix_len
    spans = c.span_radii()[:k]
    if k == 0 or int(spans.max()) < bound:
        raise InsufficientGrowthError(
            f"cluster has not reached B({bound}); grow with a larger stop radius"
        )
    mask = np.zeros(c.field.omega.size, dtype=np.uint8)
    mask[c.indices[:k][spans <= bound]] = 1
    try:
        result = fpp.passage_time(
            c.field, d, [ORIGIN], lattice.boundary_of_box(bound), restrict_to=mask
        )
    except NoPathError as exc:
        raise NotReachedError(
            "invaded edges fail to connect 0 to the boundary; "
            "the cluster data is inconsistent"
        ) from exc
    return result, fpp.annulus_decomposition(result)


@dataclass(frozen=True)
class ShellBoundAudit:
    """One evaluation of the shell-weight bound on a grown cluster.

    Compares the geodesic weight inside shell k (edges of
    E(B(2^{k+1})) \\ E(B(2^k))), gated by {p̂_k <= p}, against the
    four-arm edge count of that shell times the weight quantile at p.
    """

    k: int
    n: int
    p: float
    t_k: float
    p_hat_k: float
    indicator: bool
    four_arm_count: int
    quantile_p: float
    lhs: float
    rhs: float
    holds: bool


def shell_bound_check(
    c: InvasionCluster,
    d: CriticalDistribution,
    k: int,
    n: int,
    p: float,
    geodesic: tuple[fpp.PassageResult, fpp.AnnulusTimes] | None = None,
) -> ShellBoundAudit:
    """Audit T_k(γ_n)·1{p̂_k <= p} <= N(2^{k-1}, 2^k, p)·F⁻¹(p).

    Pass `geodesic` to reuse a constrained_geodesic result when several
    k values are audited on one cluster.
    """
    if not 1 <= k <= n - 1:
        raise ValueError("need 1 <= k <= n-1")
    if geodesic is None:
        geodesic = constrained_geodesic(c, d, n)
    _, ann = geodesic
    t_k = dict(ann.per_annulus).get(k, 0.0)
    p_hat_k = c.p_hat(k)
    indicator = p_hat_k <= p
    count = fourarm.count_four_arm(c.field, 2 ** (k - 1), 2**k, p)
    q = float(d.quantile(p))
    lhs = t_k if indicator else 0.0
    rhs = count.count * q
    return ShellBoundAudit(
        k=k,
        n=n,
        p=float(p),
        t_k=float(t_k),
        p_hat_k=p_hat_k,
        indicator=bool(indicator),
        four_arm_count=count.count,
        quantile_p=q,
        lhs=float(lhs),
        rhs=float(rhs),
        holds=bool(lhs <= rhs),
    )


def dump_trace(c: InvasionCluster, path: str) -> None:
    """Write the invasion steps as CSV, one row per invaded edge."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "edge_base_x", "edge_base_y", "orientation", "omega"])
        for i in range(len(c)):
            w.writerow(
                [
                    i,
                    int(c.base_x[i]),
                    int(c.base_y[i]),
                    HORIZONTAL if c.orientation[i] == 0 else VERTICAL,
                    repr(float(c.omega[i])),
                ]
            )
