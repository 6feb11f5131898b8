"""Free-parameter vectors with named components and box bounds."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError


def validate_bounds(bounds):
    """Coerce to a (d, 2) float array and check each interval is proper."""
    b = np.asarray(bounds, dtype=float)
    if b.ndim != 2 or b.shape[1] != 2:
        raise InvalidArgumentError(f"bounds must have shape (d, 2), got {b.shape}")
    if not np.all(np.isfinite(b)):
        raise InvalidArgumentError("bounds must be finite")
    if not np.all(b[:, 0] < b[:, 1]):
        raise InvalidArgumentError("each bound must satisfy a < b")
    return b


@dataclass(frozen=True, eq=False)
class ParameterVector:
    """Ordered free-parameter values with per-parameter closed bounds.

    Values must lie inside their bounds unless the vector is explicitly
    flagged as an out-of-support proposal (the sampler constructs such
    vectors; the likelihood maps them to zero posterior mass).
    """

    names: tuple
    values: np.ndarray
    bounds: np.ndarray
    out_of_support: bool = field(default=False)

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        values = np.asarray(self.values, dtype=float).reshape(-1).copy()
        bounds = validate_bounds(self.bounds)
        if not (len(names) == values.size == bounds.shape[0]):
            raise InvalidArgumentError(
                f"names ({len(names)}), values ({values.size}) and bounds "
                f"({bounds.shape[0]}) must agree in length"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("parameter values must be finite")
        inside = np.all((values >= bounds[:, 0]) & (values <= bounds[:, 1]))
        if not inside and not self.out_of_support:
            raise InvalidArgumentError(
                "values outside bounds require the out_of_support flag"
            )
        values.setflags(write=False)
        bounds.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "bounds", bounds)

    @property
    def dim(self):
        return self.values.size

    def inside_bounds(self):
        """True when every value lies in its closed interval."""
        return bool(
            np.all(
                (self.values >= self.bounds[:, 0])
                & (self.values <= self.bounds[:, 1])
            )
        )

    def as_dict(self):
        return dict(zip(self.names, self.values.tolist()))

    def with_values(self, values, out_of_support=False):
        """New vector with the same names/bounds and different values."""
        return ParameterVector(self.names, values, self.bounds, out_of_support)

    def normalized(self):
        """Map each component to (v - a) / (b - a); the unit box image."""
        a, b = self.bounds[:, 0], self.bounds[:, 1]
        return (self.values - a) / (b - a)
