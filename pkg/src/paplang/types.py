"""Object-language types: real vectors, products and functions."""

from __future__ import annotations

from dataclasses import dataclass


class Ty:
    """Base class of object-language types."""

    __slots__ = ()

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True, eq=True, repr=False)
class RealVec(Ty):
    k: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"R^k needs k >= 1, got {self.k}")

    def __repr__(self) -> str:
        return f"RealVec({self.k})"


@dataclass(frozen=True, eq=True, repr=False)
class Prod(Ty):
    left: Ty
    right: Ty

    def __repr__(self) -> str:
        return f"Prod({self.left!r}, {self.right!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Fun(Ty):
    arg: Ty
    ret: Ty

    def __repr__(self) -> str:
        return f"Fun({self.arg!r}, {self.ret!r})"


R = RealVec(1)


def show_type(ty: Ty, prec: int = 0) -> str:
    # prec 0: arrow position, 1: product operand, 2: atom
    if isinstance(ty, RealVec):
        return "R" if ty.k == 1 else f"R^{ty.k}"
    if isinstance(ty, Prod):
        # products associate to the right
        s = f"{show_type(ty.left, 2)} x {show_type(ty.right, 1)}"
        return f"({s})" if prec > 1 else s
    if isinstance(ty, Fun):
        s = f"{show_type(ty.arg, 1)} -> {show_type(ty.ret, 0)}"
        return f"({s})" if prec > 0 else s
    raise TypeError(f"not a type: {ty!r}")


def is_ground(ty: Ty) -> bool:
    """True for types built only from R^k and products."""
    if isinstance(ty, RealVec):
        return True
    if isinstance(ty, Prod):
        return is_ground(ty.left) and is_ground(ty.right)
    return False


def flat_dim(ty: Ty) -> int:
    """Number of scalars in a ground type."""
    if isinstance(ty, RealVec):
        return ty.k
    if isinstance(ty, Prod):
        return flat_dim(ty.left) + flat_dim(ty.right)
    raise ValueError(f"{ty} is not a ground type")


def is_first_order(ty: Ty) -> bool:
    return isinstance(ty, Fun) and is_ground(ty.arg) and is_ground(ty.ret)


def dual_type(ty: Ty) -> Ty:
    """Dual-number type: R^k becomes R^k x R^k, structure is preserved elsewhere."""
    if isinstance(ty, RealVec):
        return Prod(ty, ty)
    if isinstance(ty, Prod):
        return Prod(dual_type(ty.left), dual_type(ty.right))
    if isinstance(ty, Fun):
        return Fun(dual_type(ty.arg), dual_type(ty.ret))
    raise TypeError(f"not a type: {ty!r}")
