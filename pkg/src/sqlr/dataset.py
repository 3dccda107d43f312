from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix ``x`` (n x d) paired with the response ``y`` (length n)."""

    x: np.ndarray
    y: np.ndarray
    feature_names: Optional[Sequence[str]] = None

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64)
        y = np.array(self.y, dtype=np.float64).reshape(-1)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2:
            raise ValueError(f"x must be a 2-D matrix, got shape {x.shape}")
        if x.shape[0] != y.shape[0]:
            raise ValueError(f"x has {x.shape[0]} rows but y has {y.shape[0]} entries")
        if y.shape[0] < 1:
            raise ValueError("dataset is empty")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite values")
        names = self.feature_names
        if names is not None:
            names = tuple(str(s) for s in names)
            if len(names) != x.shape[1]:
                raise ValueError("feature_names length does not match the number of columns")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def names(self) -> tuple[str, ...]:
        if self.feature_names is not None:
            return tuple(self.feature_names)
        return tuple(f"X{j + 1}" for j in range(self.d))

    def drop_columns(self, columns) -> "Dataset":
        keep = [j for j in range(self.d) if j not in set(columns)]
        names = None if self.feature_names is None else [self.feature_names[j] for j in keep]
        return Dataset(self.x[:, keep], self.y, names)
