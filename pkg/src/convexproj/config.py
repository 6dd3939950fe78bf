"""Tolerances and sampling defaults shared by every module."""

from dataclasses import dataclass, field, replace


@dataclass(frozen=True)
class Tolerances:
    unit_norm: float = 1e-12
    orthonormal: float = 1e-10
    det_one: float = 1e-9
    boundary: float = 1e-9
    saturation: float = 1e-8
    collinear: float = 1e-9
    invariance: float = 1e-8


@dataclass(frozen=True)
class Config:
    tol: Tolerances = field(default_factory=Tolerances)
    seed: int = 0
    # limit-set thresholds
    epsilon: float = 1e-3
    separation: float = 1e-2
    matching: float = 1e-2
    pairing: float = 1e-2
    n_basepoints: int = 5
    # sampling
    domain_samples: int = 2048
    delta_grid: int = 64
    expansion_pairs: int = 200
    centroid_max_iter: int = 200
    # normalization thresholds standing in for compact families
    inner_radius_min: float = 0.05
    outer_radius_max: float = 50.0
    metric: str = "angle-hausdorff"

    def with_(self, **kw):
        return replace(self, **kw)


DEFAULT = Config()
