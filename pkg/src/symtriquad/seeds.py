"""Initial guesses: classical symmetric polynomial rules and a user registry.

The built-in table holds 15-digit polynomial rules (weights normalised to
sum to one) for the point counts that head each row of the
orbit-count table.  They are starting points only: the pipeline
refines them to the working precision on the pure monomial sequence before
they are used anywhere else.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import mpmath as mp

from .errors import MissingSeedError
from .geometry import Orbit, SymmetricRule

__all__ = [
    "ORBIT_COUNTS",
    "POLY_DEGREE",
    "SeedRegistry",
    "default_registry",
    "initial_guess_registry",
    "register_seed",
    "seed_rule",
]

# n -> (n0, n1, n2), polynomial degree d
_ORBIT_TABLE = {
    1: ((1, 0, 0), 1),
    3: ((0, 1, 0), 2),
    4: ((1, 1, 0), 3),
    6: ((0, 2, 0), 4),
    7: ((1, 2, 0), 5),
    12: ((0, 2, 1), 6),
    13: ((1, 2, 1), 7),
    16: ((1, 3, 1), 8),
    19: ((1, 4, 1), 9),
    25: ((1, 2, 3), 10),
    27: ((0, 5, 2), 11),
    33: ((0, 5, 3), 12),
    37: ((1, 6, 3), 13),
    42: ((0, 6, 4), 14),
    48: ((0, 6, 5), 15),
    52: ((1, 7, 5), 16),
    61: ((1, 8, 6), 17),
    70: ((1, 9, 7), 18),
    73: ((1, 8, 8), 19),
    79: ((1, 10, 8), 20),
}
ORBIT_COUNTS = {n: c for n, (c, _) in _ORBIT_TABLE.items()}
POLY_DEGREE = {n: d for n, (_, d) in _ORBIT_TABLE.items()}

# (kind, params..., weight); weights sum to 1
_SEEDS = {
    1: [(0, "1.0")],
    3: [(1, "0.666666666666667", "0.333333333333333")],
    4: [(0, "-0.5625"), (1, "0.6", "0.520833333333333")],
    6: [
        (1, "0.108103018168070", "0.223381589678011"),
        (1, "0.816847572980459", "0.109951743655322"),
    ],
    7: [
        (0, "0.225"),
        (1, "0.059715871789770", "0.132394152788506"),
        (1, "0.797426985353087", "0.125939180544827"),
    ],
    12: [
        (1, "0.501426509658179", "0.116786275726379"),
        (1, "0.873821971016996", "0.050844906370207"),
        (2, "0.053145049844817", "0.310352451033784", "0.082851075618374"),
    ],
    13: [
        (0, "-0.149570044467682"),
        (1, "0.479308067841920", "0.175615257433208"),
        (1, "0.869739794195568", "0.053347235608838"),
        (2, "0.048690315425316", "0.312865496004874", "0.077113760890257"),
    ],
    16: [
        (0, "0.144315607677787"),
        (1, "0.081414823414554", "0.095091634267285"),
        (1, "0.658861384496480", "0.103217370534718"),
        (1, "0.898905543365938", "0.032458497623198"),
        (2, "0.008394777409958", "0.263112829634638", "0.027230314174435"),
    ],
    19: [
        (0, "0.097135796282799"),
        (1, "0.020634961602525", "0.031334700227139"),
        (1, "0.125820817014127", "0.077827541004774"),
        (1, "0.623592928761935", "0.079647738927210"),
        (1, "0.910540973211095", "0.025577675658698"),
        (2, "0.036838412054736", "0.221962989160766", "0.043283539377289"),
    ],
    25: [
        (0, "0.090817990382754"),
        (1, "0.028844733232685", "0.036725957756467"),
        (1, "0.781036849029926", "0.045321059435528"),
        (2, "0.141707219414880", "0.307939838764121", "0.072757916845420"),
        (2, "0.025003534762686", "0.246672560639903", "0.028327242531057"),
        (2, "0.009540815400299", "0.066803251012200", "0.009421666963733"),
    ],
    27: [
        (1, "-0.069222096541517", "0.000927006328961"),
        (1, "0.202061394068290", "0.077149534914813"),
        (1, "0.593380199137435", "0.059322977380774"),
        (1, "0.761298175434837", "0.036184540503418"),
        (1, "0.935270103777448", "0.013659731002678"),
        (2, "0.050178138310495", "0.356620648261293", "0.052337111962204"),
        (2, "0.021022016536166", "0.171488980304042", "0.020707659639141"),
    ],
    33: [
        (1, "0.023565220452390", "0.025731066440455"),
        (1, "0.120551215411079", "0.043692544538038"),
        (1, "0.457579229975768", "0.062858224217885"),
        (1, "0.744847708916828", "0.034796112930709"),
        (1, "0.957365299093579", "0.006166261051559"),
        (2, "0.115343494534698", "0.275713269685514", "0.040371557766381"),
        (2, "0.022838332222257", "0.281325580989940", "0.022356773202303"),
        (2, "0.025734050548330", "0.116251915907597", "0.017316231108659"),
    ],
}


def _build(entries, digits=64) -> SymmetricRule:
    orbits = []
    with mp.workdps(digits):
        for e in entries:
            kind, *vals = e
            w = mp.mpf(vals[-1]) / 2
            params = [mp.mpf(v) for v in vals[:-1]]
            orbits.append(Orbit(kind, w, *params))
    return SymmetricRule(tuple(orbits), digits)


def seed_rule(n: int, digits: int = 64) -> SymmetricRule:
    """The built-in (unrefined) polynomial rule with ``n`` points."""
    if n not in _SEEDS:
        raise MissingSeedError(f"no built-in polynomial rule with n={n} points")
    return _build(_SEEDS[n], digits)


@dataclass
class SeedRegistry:
    _user: dict = field(default_factory=dict)

    def register(self, rule: SymmetricRule, label: str = "user") -> None:
        self._user.setdefault(rule.n_points, []).append((label, rule))

    def clear(self) -> None:
        self._user.clear()

    def lookup(self, n: int, digits: int = 64) -> list[SymmetricRule]:
        found = []
        if n in _SEEDS:
            found.append(seed_rule(n, digits))
        found += [r for _, r in self._user.get(n, [])]
        if not found:
            raise MissingSeedError(f"no initial guess for n={n}; register a rule file for it")
        return found

    def labels(self, n: int) -> list[str]:
        out = ["builtin"] if n in _SEEDS else []
        return out + [lab for lab, _ in self._user.get(n, [])]


default_registry = SeedRegistry()


def register_seed(rule: SymmetricRule, label: str = "user") -> None:
    default_registry.register(rule, label)


def initial_guess_registry(n: int, digits: int = 64) -> list[SymmetricRule]:
    """Built-in seed for ``n`` (if any) followed by user-registered alternatives."""
    return default_registry.lookup(n, digits)
