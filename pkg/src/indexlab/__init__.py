"""indexlab: index computations for families of boundary value problems on a
cylinder, with an exact coinvariant-algebra toolkit."""

from __future__ import annotations

__version__ = "0.1.0"
