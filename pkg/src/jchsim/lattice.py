"""Lattice geometries: chains, square lattices, Kagome lattices and explicit edge lists.

Square-lattice sites are indexed ``x + Lx * y``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError

TOPOLOGIES = ("chain", "square", "kagome", "explicit")
BOUNDARIES = ("open", "periodic")


def _normalize_edges(edges: Iterable[Sequence[int]], num_sites: int) -> tuple[tuple[int, int], ...]:
    out = set()
    for edge in edges:
        if len(edge) != 2:
            raise ConfigError(f"edge {edge!r} must be a pair of sites")
        i, j = int(edge[0]), int(edge[1])
        if i == j:
            raise ConfigError(f"self-loop on site {i}")
        if not (0 <= i < num_sites and 0 <= j < num_sites):
            raise ConfigError(f"edge ({i}, {j}) outside 0..{num_sites - 1}")
        out.add((min(i, j), max(i, j)))
    return tuple(sorted(out))


@dataclass(frozen=True)
class LatticeSpec:
    topology: str
    num_sites: int
    boundary: str
    edges: tuple[tuple[int, int], ...]
    shape: tuple[int, ...] = ()
    positions: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"unknown topology {self.topology!r}; choose from {TOPOLOGIES}")
        if self.boundary not in BOUNDARIES:
            raise ConfigError(f"unknown boundary {self.boundary!r}; choose from {BOUNDARIES}")
        if int(self.num_sites) < 1:
            raise ConfigError("a lattice needs at least one site")
        object.__setattr__(self, "edges", _normalize_edges(self.edges, self.num_sites))

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in set(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_sites, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def neighbors(self, site: int) -> list[int]:
        return sorted({j for i, j in self.edges if i == site} | {i for i, j in self.edges if j == site})

    def bond_direction(self, i: int, j: int) -> str:
        """'x' or 'y' for a square-lattice bond."""
        if self.topology != "square":
            raise ConfigError("bond directions are defined for square lattices only")
        lx = self.shape[0]
        xi, yi = i % lx, i // lx
        xj, yj = j % lx, j // lx
        if yi == yj and xi != xj:
            return "x"
        if xi == xj and yi != yj:
            return "y"
        raise ConfigError(f"({i}, {j}) is not a nearest-neighbour bond")


def chain(n: int, boundary: str = "open") -> LatticeSpec:
    edges = [(k, k + 1) for k in range(n - 1)]
    if boundary == "periodic" and n > 2:
        edges.append((n - 1, 0))
    positions = tuple((float(k), 0.0) for k in range(n))
    return LatticeSpec("chain", n, boundary, tuple(edges), (n,), positions)


def square(lx: int, ly: int | None = None, boundary: str = "open") -> LatticeSpec:
    ly = lx if ly is None else ly
    if lx < 1 or ly < 1:
        raise ConfigError("square lattice sides must be >= 1")
    edges = []
    for y in range(ly):
        for x in range(lx):
            s = x + lx * y
            if x + 1 < lx:
                edges.append((s, s + 1))
            elif boundary == "periodic" and lx > 2:
                edges.append((s, lx * y))
            if y + 1 < ly:
                edges.append((s, s + lx))
            elif boundary == "periodic" and ly > 2:
                edges.append((s, x))
    positions = tuple((float(x), float(y)) for y in range(ly) for x in range(lx))
    return LatticeSpec("square", lx * ly, boundary, tuple(edges), (lx, ly), positions)


KAGOME_BASIS = ((0.0, 0.0), (1.0, 0.0), (0.5, np.sqrt(3) / 2))


def kagome(nx: int, ny: int | None = None, boundary: str = "periodic") -> LatticeSpec:
    """Kagome lattice of ``nx * ny`` three-site unit cells.

    Lattice vectors are (2, 0) and (1, sqrt 3); sublattices A, B, C sit at
    (0, 0), (1, 0), (1/2, sqrt 3 / 2). With periodic boundaries every site
    has four neighbours.
    """
    ny = nx if ny is None else ny
    if nx < 1 or ny < 1:
        raise ConfigError("Kagome dimensions must be >= 1")

    def site(cx, cy, sub):
        if boundary == "periodic":
            cx, cy = cx % nx, cy % ny
        elif not (0 <= cx < nx and 0 <= cy < ny):
            return None
        return 3 * (cx + nx * cy) + sub

    edges = []
    positions = []
    for cy in range(ny):
        for cx in range(nx):
            ox, oy = 2.0 * cx + cy, np.sqrt(3) * cy
            positions.extend((ox + bx, oy + by) for bx, by in KAGOME_BASIS)
            a, b, c = site(cx, cy, 0), site(cx, cy, 1), site(cx, cy, 2)
            edges += [(a, b), (a, c), (b, c)]
            for src, target in ((b, site(cx + 1, cy, 0)), (c, site(cx, cy + 1, 0)),
                                (b, site(cx + 1, cy - 1, 2))):
                if target is not None and target != src:
                    edges.append((src, target))
    return LatticeSpec("kagome", 3 * nx * ny, boundary, tuple(edges), (nx, ny), tuple(positions))


def from_edges(num_sites: int, edges: Iterable[Sequence[int]]) -> LatticeSpec:
    return LatticeSpec("explicit", num_sites, "open", tuple(tuple(e) for e in edges))


def make_lattice(topology: str, size: Sequence[int] | int, boundary: str = "open",
                 edges: Iterable[Sequence[int]] | None = None) -> LatticeSpec:
    dims = [size] if isinstance(size, int) else list(size)
    if topology == "chain":
        return chain(dims[0], boundary)
    if topology == "square":
        return square(dims[0], dims[1] if len(dims) > 1 else None, boundary)
    if topology == "kagome":
        return kagome(dims[0], dims[1] if len(dims) > 1 else None, boundary)
    if topology == "explicit":
        if edges is None:
            raise ConfigError("explicit topology requires an edge list")
        return from_edges(dims[0], edges)
    raise ConfigError(f"unknown topology {topology!r}; choose from {TOPOLOGIES}")


def edge_coloring(lattice: LatticeSpec) -> dict[tuple[int, int], int]:
    """Greedy proper edge colouring: bonds sharing a site get distinct colours."""
    colors: dict[tuple[int, int], int] = {}
    used: dict[int, set[int]] = {s: set() for s in range(lattice.num_sites)}
    for i, j in lattice.edges:
        taken = used[i] | used[j]
        c = 0
        while c in taken:
            c += 1
        colors[(i, j)] = c
        used[i].add(c)
        used[j].add(c)
    return colors
