"""Finite scenarios: ordered formal primes, levels, stalks and group rings.

A scenario fixes a finite ordered set of primes ``x`` (the list order is the
total order), for each prime a cyclic group ``G_{z(x)}`` of given order, a
polynomial ``p(x; t)`` with coefficients in ``T = Z[H]`` and a Frobenius
element, plus the modulus ``M``.

Internally a stalk of the ambient level is a bitmask over prime indices, a
group element is a tuple of exponents (one slot per prime) and an element of
``H`` is an index into :attr:`Scenario.h_elements`.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence

GroupElem = tuple[int, ...]
TElem = tuple[int, ...]
# group ring element of G_z x H: (g, h_index) -> integer coefficient
GroupRing = dict[tuple[GroupElem, int], int]


class ScenarioError(ValueError):
    """Raised when a scenario violates its invariants or a Kolyvagin condition."""


@dataclass(frozen=True)
class PrimeSpec:
    id: str
    level: int
    group_order: int
    p_coeffs: tuple[TElem, ...]
    frobenius: Mapping[str, int] = field(default_factory=dict)
    r_coeffs: tuple[TElem, ...] | None = None
    norm_hint: int | None = None


@dataclass(frozen=True)
class Level:
    """A finite level z, stored as one exponent per configured prime."""

    exponents: tuple[int, ...]

    @property
    def mask(self) -> int:
        return sum(1 << i for i, e in enumerate(self.exponents) if e)


class Scenario:
    def __init__(self, modulus: int, coefficient_group: Sequence[int], primes: Sequence[PrimeSpec]):
        self.modulus = int(modulus)
        self.coefficient_group = tuple(int(o) for o in coefficient_group)
        self.primes = tuple(primes)
        self._check()

    # -- construction -------------------------------------------------------

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Scenario":
        try:
            modulus = data["modulus"]
            group = data.get("coefficient_group", [])
            raw_primes = data["primes"]
        except KeyError as exc:
            raise ScenarioError(f"scenario is missing field {exc.args[0]!r}") from None
        if not isinstance(modulus, int) or isinstance(modulus, bool):
            raise ScenarioError("modulus must be an integer")
        hsize = 1
        for o in group:
            if not isinstance(o, int) or o < 1:
                raise ScenarioError("coefficient_group entries must be positive integers")
            hsize *= o

        def telem(c: Any, where: str) -> TElem:
            if isinstance(c, int):
                return (c,) + (0,) * (hsize - 1)
            if not isinstance(c, list) or len(c) != hsize or not all(isinstance(v, int) for v in c):
                raise ScenarioError(f"{where}: T-coefficient must be a list of {hsize} integers")
            return tuple(c)

        primes = []
        for k, raw in enumerate(raw_primes):
            try:
                pid = str(raw["id"])
                p_coeffs = tuple(telem(c, f"prime {pid} p_coeffs") for c in raw["p_coeffs"])
                r_raw = raw.get("r_coeffs")
                primes.append(
                    PrimeSpec(
                        id=pid,
                        level=int(raw.get("level", 1)),
                        group_order=int(raw["group_order"]),
                        p_coeffs=p_coeffs,
                        frobenius={str(a): int(b) for a, b in raw.get("frobenius", {}).items()},
                        r_coeffs=None if r_raw is None else tuple(telem(c, f"prime {pid} r_coeffs") for c in r_raw),
                        norm_hint=raw.get("norm_hint"),
                    )
                )
            except KeyError as exc:
                raise ScenarioError(f"prime #{k} is missing field {exc.args[0]!r}") from None
        return cls(modulus, group, primes)

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"malformed JSON: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        out = {"modulus": self.modulus, "coefficient_group": list(self.coefficient_group), "primes": []}
        for p in self.primes:
            entry: dict[str, Any] = {
                "id": p.id,
                "level": p.level,
                "group_order": p.group_order,
                "p_coeffs": [list(c) for c in p.p_coeffs],
                "frobenius": dict(p.frobenius),
            }
            if p.r_coeffs is not None:
                entry["r_coeffs"] = [list(c) for c in p.r_coeffs]
            if p.norm_hint is not None:
                entry["norm_hint"] = p.norm_hint
            out["primes"].append(entry)
        return out

    def _check(self) -> None:
        M = self.modulus
        if M < 2:
            raise ScenarioError("modulus M must be at least 2")
        ids = [p.id for p in self.primes]
        if len(set(ids)) != len(ids):
            raise ScenarioError("prime ids must be unique")
        for p in self.primes:
            if p.level < 1:
                raise ScenarioError(f"prime {p.id}: level must be positive")
            if p.group_order < 1:
                raise ScenarioError(f"prime {p.id}: group_order must be positive")
            if not p.p_coeffs:
                raise ScenarioError(f"prime {p.id}: p_coeffs must be non-empty")
            for c in p.p_coeffs:
                if len(c) != self.h_order:
                    raise ScenarioError(f"prime {p.id}: T-coefficients must have {self.h_order} entries")
            unknown = set(p.frobenius) - set(ids)
            if unknown:
                raise ScenarioError(f"prime {p.id}: frobenius names unknown primes {sorted(unknown)}")
            if p.frobenius.get(p.id, 0) % p.group_order:
                raise ScenarioError(f"prime {p.id}: Frobenius must restrict to the identity on its own group")
            # first Kolyvagin condition
            if p.group_order % M:
                raise ScenarioError(
                    f"Kolyvagin condition 1 violated at prime {p.id}: M ∤ |G_x| (M={M}, |G_x|={p.group_order})"
                )
            p_at_1 = [sum(c[h] for c in p.p_coeffs) for h in range(self.h_order)]
            if any(v % M for v in p_at_1):
                raise ScenarioError(
                    f"Kolyvagin condition 1 violated at prime {p.id}: M ∤ p(x;1) (p(x;1)={p_at_1}, M={M})"
                )
            if p.r_coeffs is None:
                if p.norm_hint is None:
                    raise ScenarioError(f"prime {p.id}: either r_coeffs or norm_hint is required")
                n, m = p.norm_hint, p.group_order
                for j, c in enumerate(p.p_coeffs):
                    for v in c:
                        if (v - v * n**j) % m:
                            raise ScenarioError(
                                f"prime {p.id}: |G_z(x)| must divide p(x;t) - p(x;n_x t) "
                                f"(coefficient of t^{j} fails for n_x={n})"
                            )
            else:
                for c in p.r_coeffs:
                    if len(c) != self.h_order:
                        raise ScenarioError(f"prime {p.id}: r_coeffs T-coefficients must have {self.h_order} entries")

    # -- basic shape ----------------------------------------------------------

    @property
    def k(self) -> int:
        return len(self.primes)

    @property
    def full_mask(self) -> int:
        return (1 << self.k) - 1

    @cached_property
    def orders(self) -> tuple[int, ...]:
        return tuple(p.group_order for p in self.primes)

    @cached_property
    def ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.primes)

    def index(self, prime_id: str) -> int:
        try:
            return self.ids.index(prime_id)
        except ValueError:
            raise ScenarioError(f"unknown prime id {prime_id!r}") from None

    @cached_property
    def h_order(self) -> int:
        n = 1
        for o in self.coefficient_group:
            n *= o
        return n

    @cached_property
    def h_elements(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(o) for o in self.coefficient_group)))

    @cached_property
    def _h_table(self) -> list[list[int]]:
        pos = {h: i for i, h in enumerate(self.h_elements)}
        mods = self.coefficient_group
        return [
            [pos[tuple((a + b) % o for a, b, o in zip(h1, h2, mods))] for h2 in self.h_elements]
            for h1 in self.h_elements
        ]

    def h_mul(self, i: int, j: int) -> int:
        return self._h_table[i][j]

    @cached_property
    def frobenius(self) -> tuple[GroupElem, ...]:
        out = []
        for p in self.primes:
            out.append(tuple(p.frobenius.get(q.id, 0) % q.group_order for q in self.primes))
        return tuple(out)

    # -- levels and stalks ------------------------------------------------------

    def level(self, exponents: Mapping[str, int] | None = None) -> Level:
        """Build a level; ``None`` gives the full scenario level."""
        if exponents is None:
            return Level(tuple(p.level for p in self.primes))
        exps = []
        for p in self.primes:
            e = int(exponents.get(p.id, 0))
            if e not in (0, p.level):
                raise ScenarioError(
                    f"prime {p.id}: exponent {e} unsupported (group orders are configured only at level {p.level})"
                )
            exps.append(e)
        unknown = set(exponents) - set(self.ids)
        if unknown:
            raise ScenarioError(f"unknown prime ids {sorted(unknown)}")
        return Level(tuple(exps))

    def level_of_mask(self, mask: int) -> Level:
        return Level(tuple(p.level if mask >> i & 1 else 0 for i, p in enumerate(self.primes)))

    def stalks(self, z: Level) -> list[Level]:
        return [self.level_of_mask(m) for m in submasks(z.mask)]

    def label(self, mask: int) -> str:
        """Human label of a stalk or squarefree divisor: '1', 'x1', 'x1*x2'."""
        if mask == 0:
            return "1"
        return "*".join(self.ids[i] if self.primes[i].level == 1 else f"{self.ids[i]}^{self.primes[i].level}"
                        for i in bits(mask))

    def squarefree_label(self, mask: int) -> str:
        return "1" if mask == 0 else "*".join(self.ids[i] for i in bits(mask))

    def parse_squarefree(self, text: str) -> int:
        text = text.strip()
        if text in ("", "1"):
            return 0
        mask = 0
        for part in text.split("*"):
            mask |= 1 << self.index(part.strip())
        return mask

    # -- group elements and group ring -----------------------------------------

    def restrict(self, g: GroupElem, mask: int) -> GroupElem:
        return tuple(e if mask >> i & 1 else 0 for i, e in enumerate(g))

    def g_mul(self, a: GroupElem, b: GroupElem) -> GroupElem:
        return tuple((x + y) % o for x, y, o in zip(a, b, self.orders))

    def g_pow(self, a: GroupElem, n: int) -> GroupElem:
        return tuple((x * n) % o for x, o in zip(a, self.orders))

    @property
    def identity(self) -> GroupElem:
        return (0,) * self.k

    def sigma(self, i: int) -> GroupElem:
        return tuple(int(j == i) % self.orders[j] for j in range(self.k))

    def group_elements(self, mask: int) -> Iterator[GroupElem]:
        ranges = [range(o) if mask >> i & 1 else range(1) for i, o in enumerate(self.orders)]
        return itertools.product(*ranges)

    def gr_mul(self, a: GroupRing, b: GroupRing) -> GroupRing:
        out: GroupRing = {}
        for (g1, h1), c1 in a.items():
            for (g2, h2), c2 in b.items():
                key = (self.g_mul(g1, g2), self.h_mul(h1, h2))
                out[key] = out.get(key, 0) + c1 * c2
        return {k: v for k, v in out.items() if v}

    def gr_add(self, a: GroupRing, b: GroupRing, scale: int = 1) -> GroupRing:
        out = dict(a)
        for key, v in b.items():
            out[key] = out.get(key, 0) + scale * v
        return {k: v for k, v in out.items() if v}

    def gr_one(self) -> GroupRing:
        return {(self.identity, 0): 1}

    def gr_scalar_t(self, t: TElem) -> GroupRing:
        return {(self.identity, h): c for h, c in enumerate(t) if c}

    def eval_poly(self, coeffs: Sequence[TElem], g: GroupElem) -> GroupRing:
        """sum_j coeffs[j] * g^j in T[G_z]."""
        out: GroupRing = {}
        for j, c in enumerate(coeffs):
            gj = self.g_pow(g, j)
            for h, v in enumerate(c):
                if v:
                    out[(gj, h)] = out.get((gj, h), 0) + v
        return {k: v for k, v in out.items() if v}

    def norm_element(self, i: int) -> GroupRing:
        s = self.sigma(i)
        return {(self.g_pow(s, k), 0): 1 for k in range(self.orders[i])}

    def frob_inverse(self, i: int) -> GroupElem:
        return self.g_pow(self.frobenius[i], -1)

    def p_of_frob_inv(self, i: int) -> GroupRing:
        return self.eval_poly(self.primes[i].p_coeffs, self.frob_inverse(i))

    def r_poly(self, i: int) -> tuple[TElem, ...]:
        p = self.primes[i]
        if p.r_coeffs is not None:
            return p.r_coeffs
        n, m = p.norm_hint, p.group_order
        return tuple(tuple((v - v * n**j) // m for v in c) for j, c in enumerate(p.p_coeffs))

    def gamma_element(self, i: int) -> GroupRing:
        """p(x; Fr^-1) - r_x(Fr^-1) |G_z(x)|."""
        r = self.eval_poly(self.r_poly(i), self.frob_inverse(i))
        return self.gr_add(self.p_of_frob_inv(i), r, scale=-self.orders[i])

    def kolyvagin_operator(self, i: int) -> GroupRing:
        """D_z(x) = sum_k k sigma^k."""
        s = self.sigma(i)
        return {(self.g_pow(s, k), 0): k for k in range(1, self.orders[i])}


def omega(x: int, y: int) -> int:
    """Sign (-1)^{#primes of y below x} when x | y, else 0 (x index, y bitmask)."""
    if not y >> x & 1:
        return 0
    below = bin(y & ((1 << x) - 1)).count("1")
    return -1 if below % 2 else 1


def bits(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def submasks(mask: int) -> list[int]:
    """All submasks of ``mask`` ordered by (popcount, value)."""
    subs = []
    s = mask
    while True:
        subs.append(s)
        if s == 0:
            break
        s = (s - 1) & mask
    return sorted(subs, key=lambda m: (bin(m).count("1"), m))


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def iter_w(mask: int, k: int, degree: int) -> Iterable[tuple[int, ...]]:
    """Exponent vectors w with support inside ``mask`` and total degree ``degree``."""
    idx = bits(mask)
    if degree < 0:
        return []
    out = []
    for combo in itertools.combinations_with_replacement(idx, degree):
        w = [0] * k
        for i in combo:
            w[i] += 1
        out.append(tuple(w))
    return sorted(set(out))
