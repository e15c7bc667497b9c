"""Products of constant-curvature spaces.

A :class:`Signature` is an ordered list of ``(kind, dim, K)`` components.
Flat coordinate vectors are split along the last axis in declaration order;
every geometric operation is applied per component and squared distances
add up across components.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from . import geometry

_KINDS = {"P": -1, "E": 0, "S": 1}
_ITEM = re.compile(r"^\s*([PES])(\d+)@([^,\s]+)\s*$")


@dataclass(frozen=True)
class Component:
    dim: int
    K: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"component dimension must be >= 1, got {self.dim}")
        if not np.isfinite(self.K):
            raise ValueError(f"curvature must be finite, got {self.K}")

    @property
    def kind(self) -> str:
        if self.K < 0:
            return "P"
        return "S" if self.K > 0 else "E"

    def __str__(self):
        K = float(self.K)
        k = str(int(K)) if K.is_integer() else repr(K)
        return f"{self.kind}{self.dim}@{k}"


@dataclass(frozen=True)
class Signature:
    components: tuple[Component, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ValueError("a signature needs at least one component")

    @classmethod
    def parse(cls, text: str) -> "Signature":
        """Parse ``P20@-0.17,S10@0.29,E10@0``."""
        comps = []
        for item in text.split(","):
            m = _ITEM.match(item)
            if m is None:
                raise ValueError(f"bad signature item {item!r}")
            kind, dim, K = m.group(1), int(m.group(2)), float(m.group(3))
            if np.sign(K) != _KINDS[kind]:
                raise ValueError(f"{item.strip()}: curvature sign does not match kind {kind}")
            comps.append(Component(dim, K))
        return cls(tuple(comps))

    @classmethod
    def of(cls, *pairs) -> "Signature":
        """Build from ``(dim, K)`` pairs."""
        return cls(tuple(Component(int(n), float(K)) for n, K in pairs))

    def __str__(self):
        return ",".join(str(c) for c in self.components)

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    @property
    def total_dim(self) -> int:
        return sum(c.dim for c in self.components)

    @property
    def slices(self) -> list[slice]:
        out, start = [], 0
        for c in self.components:
            out.append(slice(start, start + c.dim))
            start += c.dim
        return out


def split(flat, sig: Signature) -> list:
    """Split the last axis of ``flat`` into per-component parts."""
    if flat.shape[-1] != sig.total_dim:
        raise ValueError(f"expected {sig.total_dim} coordinates, got {flat.shape[-1]}")
    return [flat[..., s] for s in sig.slices]


def concat(parts) -> np.ndarray:
    return np.concatenate(list(parts), axis=-1)


def _check_parts(parts, sig):
    if len(parts) != len(sig):
        raise ValueError(f"expected {len(sig)} parts, got {len(parts)}")
    for part, c in zip(parts, sig):
        if part.shape[-1] != c.dim:
            raise ValueError(f"part of width {part.shape[-1]} for component {c}")


def product_distance_sq(x, y, sig: Signature):
    """Sum of per-component squared distances, left to right."""
    _check_parts(x, sig)
    _check_parts(y, sig)
    total = 0.0
    for xi, yi, c in zip(x, y, sig):
        total = total + geometry.distance(xi, yi, c.K) ** 2
    return total


def product_exp0(v, sig: Signature) -> list:
    _check_parts(v, sig)
    return [geometry.exp0(vi, c.K) for vi, c in zip(v, sig)]


def product_log0(x, sig: Signature) -> list:
    _check_parts(x, sig)
    return [geometry.log0(xi, c.K) for xi, c in zip(x, sig)]


def product_clamp(x, sig: Signature) -> list:
    return [geometry.clamp_to_domain(xi, c.K) for xi, c in zip(x, sig)]
