"""Scheme parameters and the error types shared across the package."""

from __future__ import annotations

from dataclasses import dataclass, replace


class ParameterError(ValueError):
    """Invalid scheme parameters or mismatched operand shapes."""


class NumericalError(ArithmeticError):
    """A numerical computation could not be completed soundly."""


class IntegrityError(RuntimeError):
    """A protocol trace failed an internal consistency check."""


STANDARD_M = (2, 4)


def _is_prime(x: int) -> bool:
    if x < 2:
        return False
    if x % 2 == 0:
        return x == 2
    d = 3
    while d * d <= x:
        if x % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class SchemeParams:
    """The tuple (n, q, k, r, L) of a NewHope-style scheme.

    ``r == q`` is accepted as a lossless (no compression) setting; any other
    ``r`` must be a power of two in ``[2, q]``.
    """

    n: int = 1024
    q: int = 12289
    k: int = 8
    r: int = 8
    L: int = 256

    def __post_init__(self):
        for name in ("n", "q", "k", "r", "L"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ParameterError(f"{name} must be an integer, got {v!r}")
        if self.n < 1 or self.L < 1:
            raise ParameterError("n and L must be positive")
        if self.n % self.L != 0:
            raise ParameterError(f"n={self.n} is not a multiple of L={self.L}")
        if self.q < 3 or not _is_prime(self.q):
            raise ParameterError(f"q={self.q} must be an odd prime")
        if self.k < 1:
            raise ParameterError(f"k={self.k} must be >= 1")
        if self.r != self.q and (self.r < 2 or self.r > self.q or self.r & (self.r - 1)):
            raise ParameterError(f"r={self.r} must be a power of two in [2, q] or equal to q")

    @property
    def m(self) -> int:
        """Repetition count of the threshold encoder."""
        return self.n // self.L

    @property
    def half_q(self) -> int:
        return self.q // 2

    @property
    def threshold(self) -> int:
        """Decision threshold T_m = (m/2) * floor(q/2), rounded up for odd m.

        Decode sums are integers, so ``sum >= T_m`` and ``sum >= ceil(T_m)``
        are the same test.
        """
        return -(-self.m * self.half_q // 2)

    def with_(self, **changes) -> "SchemeParams":
        return replace(self, **changes)

    def check_standard_m(self, allow_nonstandard_m: bool = False) -> None:
        if self.m not in STANDARD_M and not allow_nonstandard_m:
            raise ParameterError(
                f"m={self.m} is outside the supported set {STANDARD_M}; "
                "pass allow_nonstandard_m=True to extrapolate the sign patterns"
            )

    def as_dict(self) -> dict:
        return {"n": self.n, "q": self.q, "k": self.k, "r": self.r, "L": self.L, "m": self.m}


NEWHOPE1024 = SchemeParams(n=1024, q=12289, k=8, r=8, L=256)
NEWHOPE512 = SchemeParams(n=512, q=12289, k=8, r=8, L=256)
TOY = SchemeParams(n=8, q=17, k=1, r=4, L=2)

PRESETS = {"newhope1024": NEWHOPE1024, "newhope512": NEWHOPE512, "toy": TOY}
