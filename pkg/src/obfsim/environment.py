"""Profile universes, target sets and environmental key finders."""
from __future__ import annotations

import heapq
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from sklearn.utils import check_random_state

from . import crypto

SEPARATOR = "\x1f"
MAX_PUZZLE_DIFFICULTY = 32

CONCAT = "CONCAT"
CONCAT_ALL_ORDERS = "CONCAT_ALL_ORDERS"
INDEX_SUFFIX = "INDEX_SUFFIX"
HASH_PUZZLE = "HASH_PUZZLE"
STRATEGIES = (CONCAT, CONCAT_ALL_ORDERS, INDEX_SUFFIX, HASH_PUZZLE)


class EnvSpecError(ValueError):
    """Invalid universe, profile, target or key-finder specification."""


@dataclass(frozen=True)
class EnvVariable:
    name: str
    domain: tuple[str, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(self.domain))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.domain:
            raise EnvSpecError(f"variable {self.name!r} has an empty domain")
        if len(self.weights) != len(self.domain):
            raise EnvSpecError(
                f"variable {self.name!r}: {len(self.weights)} weights for "
                f"{len(self.domain)} values"
            )
        if len(set(self.domain)) != len(self.domain):
            raise EnvSpecError(f"variable {self.name!r} has duplicate values")
        if any(w <= 0 for w in self.weights):
            raise EnvSpecError(f"variable {self.name!r} has nonpositive weights")
        if not math.isclose(math.fsum(self.weights), 1.0, abs_tol=1e-9):
            raise EnvSpecError(f"variable {self.name!r} weights do not sum to 1")

    @classmethod
    def uniform(cls, name: str, domain: Sequence[str]) -> "EnvVariable":
        domain = tuple(domain)
        return cls(name, domain, (1.0 / len(domain),) * len(domain))

    def weight(self, value: str) -> float:
        try:
            return self.weights[self.domain.index(value)]
        except ValueError:
            raise EnvSpecError(
                f"value {value!r} not in domain of {self.name!r}"
            ) from None

    def entropy_bits(self) -> float:
        return -math.fsum(w * math.log2(w) for w in self.weights)


def path_strings_variable(paths: Sequence[str], weights=None) -> EnvVariable:
    """Stand-in for a file-system walk: one variable over candidate path strings."""
    if weights is None:
        return EnvVariable.uniform("PATH-STRINGS", paths)
    return EnvVariable("PATH-STRINGS", tuple(paths), tuple(weights))


Profile = Mapping[str, str]


@dataclass(frozen=True)
class ProfileUniverse:
    variables: tuple[EnvVariable, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise EnvSpecError("duplicate variable names in universe")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def variable(self, name: str) -> EnvVariable:
        for v in self.variables:
            if v.name == name:
                return v
        raise EnvSpecError(f"variable {name!r} not in universe")

    @property
    def size(self) -> int:
        return math.prod(len(v.domain) for v in self.variables)

    def probability(self, profile: Profile) -> float:
        return math.prod(v.weight(profile[v.name]) for v in self.variables)

    def modal_profile(self) -> dict[str, str]:
        # Max weight; ties go to the lexicographically smallest value.
        return {
            v.name: min(zip(v.weights, v.domain), key=lambda wv: (-wv[0], wv[1]))[1]
            for v in self.variables
        }

    def iter_profiles(self) -> Iterator[dict[str, str]]:
        """All profiles in domain order (exhaustive; small universes only)."""
        names = self.names
        for values in itertools.product(*(v.domain for v in self.variables)):
            yield dict(zip(names, values))

    def iter_by_probability(self, names: Sequence[str] | None = None):
        """Yield ``(assignment, probability)`` over ``names`` in descending
        probability, ties broken by lexicographic order of the value tuple.

        Lazy best-first search over the product lattice, so the first few
        assignments of a 2**40-profile universe cost only a few heap pushes.
        """
        names = self.names if names is None else tuple(names)
        ordered = []
        for name in names:
            v = self.variable(name)
            ordered.append(sorted(zip(v.domain, v.weights), key=lambda dw: (-dw[1], dw[0])))
        if not ordered:
            yield {}, 1.0
            return

        def entry(idx):
            values = tuple(ordered[k][i][0] for k, i in enumerate(idx))
            prob = math.prod(ordered[k][i][1] for k, i in enumerate(idx))
            return (-prob, values, idx)

        start = (0,) * len(ordered)
        heap = [entry(start)]
        seen = {start}
        while heap:
            neg_prob, values, idx = heapq.heappop(heap)
            yield dict(zip(names, values)), -neg_prob
            for k in range(len(idx)):
                if idx[k] + 1 < len(ordered[k]):
                    nxt = idx[:k] + (idx[k] + 1,) + idx[k + 1:]
                    if nxt not in seen:
                        seen.add(nxt)
                        heapq.heappush(heap, entry(nxt))

    def to_dict(self) -> dict:
        return {
            "variables": [
                {"name": v.name, "domain": list(v.domain), "weights": list(v.weights)}
                for v in self.variables
            ]
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ProfileUniverse":
        try:
            return cls(tuple(
                EnvVariable(d["name"], tuple(d["domain"]), tuple(d["weights"]))
                for d in data["variables"]
            ))
        except (KeyError, TypeError) as exc:
            raise EnvSpecError(f"malformed universe JSON: {exc}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ProfileUniverse":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class TargetSpec:
    require: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "require", dict(self.require))

    def matches(self, profile: Profile) -> bool:
        return all(profile.get(k) == v for k, v in self.require.items())

    def to_dict(self) -> dict:
        return {"require": dict(self.require)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "TargetSpec":
        return cls(dict(data.get("require", {})))


@dataclass(frozen=True)
class KeyFinderSpec:
    strategy: str
    vars: tuple[str, ...]
    m: int | None = None
    difficulty: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        if self.strategy not in STRATEGIES:
            raise EnvSpecError(f"unknown key-finder strategy {self.strategy!r}")
        if not self.vars:
            raise EnvSpecError("key finder needs at least one variable")
        if self.strategy == INDEX_SUFFIX and (self.m is None or self.m < 1):
            raise EnvSpecError("INDEX_SUFFIX needs m >= 1")
        if self.strategy == HASH_PUZZLE and (
            self.difficulty is None
            or not 0 <= self.difficulty <= MAX_PUZZLE_DIFFICULTY
        ):
            raise EnvSpecError(
                f"HASH_PUZZLE needs 0 <= difficulty <= {MAX_PUZZLE_DIFFICULTY}"
            )

    def check_universe(self, universe: ProfileUniverse) -> None:
        for name in self.vars:
            universe.variable(name)

    def to_dict(self) -> dict:
        out = {"strategy": self.strategy, "vars": list(self.vars)}
        if self.m is not None:
            out["m"] = self.m
        if self.difficulty is not None:
            out["difficulty"] = self.difficulty
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "KeyFinderSpec":
        try:
            return cls(
                data["strategy"], tuple(data["vars"]),
                m=data.get("m"), difficulty=data.get("difficulty"),
            )
        except KeyError as exc:
            raise EnvSpecError(f"malformed key-finder JSON: missing {exc}") from None


def sample_profile(universe: ProfileUniverse, rng=None) -> dict[str, str]:
    rng = check_random_state(rng)
    out = {}
    for v in universe.variables:
        out[v.name] = v.domain[rng.choice(len(v.domain), p=v.weights)]
    return out


def p_target(universe: ProfileUniverse, target: TargetSpec) -> float:
    p = 1.0
    for name, value in target.require.items():
        p *= universe.variable(name).weight(value)
    return p


def entropy_bits(universe: ProfileUniverse, vars: Sequence[str] | None = None) -> float:
    names = universe.names if vars is None else vars
    return math.fsum(universe.variable(n).entropy_bits() for n in names)


def _concat(names: Sequence[str], profile: Profile) -> str:
    try:
        return SEPARATOR.join(profile[n] for n in names)
    except KeyError as exc:
        raise EnvSpecError(f"profile lacks variable {exc}") from None


def solve_puzzle(base: str, difficulty: int) -> tuple[int, int]:
    """Least nonce whose ``hash(base || sep || nonce)`` has ``difficulty``
    leading zero bits. Returns ``(nonce, hashes_computed)``."""
    prefix = (base + SEPARATOR).encode()
    nonce = 0
    while True:
        digest = crypto.hash(prefix + str(nonce).encode())
        if crypto.leading_zero_bits(digest) >= difficulty:
            return nonce, nonce + 1
        nonce += 1


def derive_env_key(spec: KeyFinderSpec, profile: Profile, index: int | None = None) -> str:
    """Canonical key string an obfuscator seals against for ``profile``."""
    base = _concat(spec.vars, profile)
    if spec.strategy == INDEX_SUFFIX:
        if index is None or not 1 <= index <= spec.m:
            raise EnvSpecError(f"INDEX_SUFFIX needs 1 <= index <= {spec.m}")
        return f"{base}{SEPARATOR}{index}"
    if index is not None:
        raise EnvSpecError(f"{spec.strategy} takes no index")
    if spec.strategy == HASH_PUZZLE:
        nonce, _ = solve_puzzle(base, spec.difficulty)
        return f"{base}{SEPARATOR}{nonce}"
    return base


def iter_candidates_with_cost(spec: KeyFinderSpec, profile: Profile):
    """Yield ``(candidate, hash_calls)``: ``hash_calls`` is the key-finder
    work spent producing that candidate (nonzero only for hash puzzles)."""
    if any(n not in profile for n in spec.vars):
        return
    if spec.strategy == CONCAT:
        yield _concat(spec.vars, profile), 0
    elif spec.strategy == CONCAT_ALL_ORDERS:
        for order in itertools.permutations(spec.vars):
            yield _concat(order, profile), 0
    elif spec.strategy == INDEX_SUFFIX:
        base = _concat(spec.vars, profile)
        for j in range(1, spec.m + 1):
            yield f"{base}{SEPARATOR}{j}", 0
    else:
        base = _concat(spec.vars, profile)
        nonce, work = solve_puzzle(base, spec.difficulty)
        yield f"{base}{SEPARATOR}{nonce}", work


def enumerate_candidates(spec: KeyFinderSpec, profile: Profile) -> Iterator[str]:
    for candidate, _ in iter_candidates_with_cost(spec, profile):
        yield candidate


def env_key(candidate: str) -> bytes:
    """Symmetric key derived from a key-finder candidate: ``H(candidate)``."""
    return crypto.hash(candidate.encode())
