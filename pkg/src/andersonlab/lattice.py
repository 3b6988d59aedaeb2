"""Lattice boxes, random on-site potentials, and box Hamiltonians.

Conventions
-----------
A box with n sites per side in dimension d is the integer-lattice cube

    {x in Z^d : -floor((n-1)/2) <= x_i <= n-1-floor((n-1)/2)},

i.e. centered at the origin (exactly so when n is odd).  Sites are
ordered lexicographically and the linear index is a bijection with
{0, ..., n^d - 1}.

The Hamiltonian is H = -hop + V: H(x,x) = V(x), H(x,y) = -1 for
|x - y| = 1 with both sites inside the box (zero boundary conditions,
no diagonal shift from the hopping term).

Splitting against an inner box B: with chi the indicator of B,

    H_inner = chi H chi,  H_outer = (1-chi) H (1-chi),
    Gamma   = H - H_inner - H_outer,

so Gamma is supported exactly on the hopping bonds that cross the
boundary of B.  All three come back at host order; restrict() extracts
the inner-box submatrix when the restricted operator itself is wanted.

Potentials are iid uniform(a, b) drawn from a counter-based Philox
stream keyed by the 64-bit seed, so equal seeds give bit-identical
samples regardless of call order or thread count.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BoxGeometry:
    """A d-dimensional box with n sites per side."""

    dimension: int
    sites_per_side: int

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if self.sites_per_side < 1:
            raise ValueError("sites_per_side must be a positive integer")

    @property
    def volume(self) -> int:
        return self.sites_per_side ** self.dimension

    @property
    def low(self) -> int:
        """Smallest coordinate on each axis."""
        return -((self.sites_per_side - 1) // 2)

    @property
    def high(self) -> int:
        """Largest coordinate on each axis."""
        return self.sites_per_side - 1 + self.low

    def index_of(self, site) -> int:
        site = np.asarray(site, dtype=np.int64).reshape(self.dimension)
        if np.any(site < self.low) or np.any(site > self.high):
            raise ValueError(f"site {site} outside the box")
        idx = 0
        for c in site:
            idx = idx * self.sites_per_side + int(c - self.low)
        return idx

    def site_of(self, index: int) -> np.ndarray:
        if not 0 <= index < self.volume:
            raise ValueError(f"index {index} out of range")
        coords = np.empty(self.dimension, dtype=np.int64)
        for axis in range(self.dimension - 1, -1, -1):
            coords[axis] = index % self.sites_per_side + self.low
            index //= self.sites_per_side
        return coords


@dataclass(frozen=True)
class PotentialSpec:
    """iid on-site disorder; only the uniform(a, b) family for now."""

    a: float
    b: float
    family: str = "uniform"

    def __post_init__(self):
        if self.family != "uniform":
            raise ValueError(f"unsupported potential family {self.family!r}")
        if not self.b > self.a:
            raise ValueError("uniform potential needs b > a")

    @property
    def density_sup(self) -> float:
        """Sup of the single-site density: 1/(b-a) for uniform."""
        return 1.0 / (self.b - self.a)

    @classmethod
    def uniform(cls, a: float, b: float) -> "PotentialSpec":
        return cls(a=float(a), b=float(b))


def enumerate_sites(geometry: BoxGeometry) -> np.ndarray:
    """All sites of the box in lexicographic order, shape (volume, d)."""
    n = geometry.sites_per_side
    axes = [np.arange(geometry.low, geometry.high + 1)] * geometry.dimension
    grids = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([g.reshape(-1) for g in grids], axis=1)
    assert coords.shape == (geometry.volume, geometry.dimension)
    return coords.astype(np.int64)


def japanese_bracket(x) -> np.ndarray:
    """<x> = sqrt(1 + |x|^2), elementwise over rows of site arrays."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        return np.sqrt(1.0 + x * x)
    return np.sqrt(1.0 + np.sum(x * x, axis=-1))


def sample_potential(spec: PotentialSpec, geometry: BoxGeometry, seed: int) -> np.ndarray:
    """One potential value per site, from a Philox stream keyed by seed."""
    gen = np.random.Generator(np.random.Philox(key=np.uint64(seed & (2**64 - 1))))
    return gen.uniform(spec.a, spec.b, size=geometry.volume)


def build_hamiltonian(geometry: BoxGeometry, potential: np.ndarray) -> np.ndarray:
    """Dense symmetric H = -hop + diag(potential) with zero boundary conditions."""
    potential = np.asarray(potential, dtype=np.float64)
    vol = geometry.volume
    if potential.shape != (vol,):
        raise ValueError(
            f"potential has {potential.shape} values, box has volume {vol}"
        )
    h = np.zeros((vol, vol))
    h[np.arange(vol), np.arange(vol)] = potential
    n = geometry.sites_per_side
    coords = enumerate_sites(geometry)
    stride = 1
    for axis in range(geometry.dimension - 1, -1, -1):
        has_up = coords[:, axis] < geometry.high
        i = np.nonzero(has_up)[0]
        j = i + stride
        h[i, j] = -1.0
        h[j, i] = -1.0
        stride *= n
    return h


def is_exactly_symmetric(h: np.ndarray) -> bool:
    return h.ndim == 2 and h.shape[0] == h.shape[1] and np.array_equal(h, h.T)


def inner_box_mask(host: BoxGeometry, inner_sites_per_side: int) -> np.ndarray:
    """Boolean mask over host sites of the centered inner box."""
    if inner_sites_per_side % 2 != 1:
        raise ValueError("inner box needs an odd number of sites per side")
    if inner_sites_per_side > host.sites_per_side:
        raise ValueError("inner box larger than host box")
    half = (inner_sites_per_side - 1) // 2
    coords = enumerate_sites(host)
    mask = np.all(np.abs(coords) <= half, axis=1)
    if int(mask.sum()) != inner_sites_per_side ** host.dimension:
        raise ValueError("inner box does not fit inside the host box")
    return mask


def build_splitting(host: BoxGeometry, inner_sites_per_side: int,
                    hamiltonian: np.ndarray = None,
                    potential: np.ndarray = None):
    """Split a host Hamiltonian as H = H_inner + H_outer + Gamma.

    All three matrices are at host order (entries copied from H, never
    recomputed).  Supply either the assembled host Hamiltonian or a
    potential to assemble it from.
    """
    if hamiltonian is None:
        if potential is None:
            raise ValueError("need a hamiltonian or a potential")
        hamiltonian = build_hamiltonian(host, potential)
    h = np.asarray(hamiltonian, dtype=np.float64)
    if h.shape != (host.volume, host.volume):
        raise ValueError("hamiltonian does not match the host box")
    mask = inner_box_mask(host, inner_sites_per_side)
    chi = mask.astype(np.float64)
    inside = np.outer(chi, chi)
    outside = np.outer(1.0 - chi, 1.0 - chi)
    h_inner = np.where(inside == 1.0, h, 0.0)
    h_outer = np.where(outside == 1.0, h, 0.0)
    gamma = h - h_inner - h_outer
    return h_inner, h_outer, gamma


def restrict(h: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Submatrix of h on the sites selected by mask."""
    idx = np.nonzero(mask)[0]
    return h[np.ix_(idx, idx)]
