"""Parameters of ``[[n, 1, d]]_D`` codes used for the logical qudits."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError, DimensionTooSmall, NotPrime, SingletonViolation

__all__ = ["CodeParams", "is_prime", "polynomial_code", "custom_code"]


def is_prime(m: int) -> bool:
    if m < 2:
        return False
    if m % 2 == 0:
        return m == 2
    f = 3
    while f * f <= m:
        if m % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class CodeParams:
    """A code embedding one ``D``-level logical qudit into ``n`` physical qudits."""

    D: int
    n: int
    d: int

    def __post_init__(self):
        if self.D < 2:
            raise DimensionTooSmall(f"dimension D={self.D} must be at least 2")
        if self.n < 1 or self.d < 1:
            raise ConfigError("need n >= 1 and d >= 1")
        if 2 * self.d - 1 > self.n:
            raise SingletonViolation(
                f"[[{self.n},1,{self.d}]] violates the quantum singleton bound 2d-1 <= n"
            )

    @property
    def t(self) -> int:
        """Number of correctable errors."""
        return (self.d - 1) // 2

    @property
    def even_distance(self) -> bool:
        return self.d % 2 == 0

    def label(self) -> str:
        return f"[[{self.n},1,{self.d}]]_{self.D}"


def polynomial_code(D: int) -> CodeParams:
    """The singleton-saturating polynomial code ``[[D, 1, (D+1)/2]]_D`` for prime ``D``."""
    if D < 3:
        raise DimensionTooSmall(f"polynomial codes need D >= 3, got {D}")
    if not is_prime(D):
        raise NotPrime(f"D={D} is not prime; no polynomial code available")
    return CodeParams(D=D, n=D, d=(D + 1) // 2)


def custom_code(D: int, n: int, d: int) -> CodeParams:
    return CodeParams(D=D, n=n, d=d)
