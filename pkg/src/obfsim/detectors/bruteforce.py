"""Brute-force search for environmental keys over a public profile universe."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .. import crypto
from ..environment import ProfileUniverse, env_key, iter_candidates_with_cost
from ..obfuscators.container import (HTD_ENV_EBOWLA, H_OF_BLOCK,
                                     MalformedContainerError)
from ..toyvm.codec import parse_block
from ..toyvm.program import ContainerOp, Program
from .base import BaseDetector, as_budget
from .dynamic import observe_malicious
from .simple import TrivialDetector


def dovetail(streams: Iterable[Iterator], width: Optional[int] = None,
             limit: Optional[int] = None):
    """Interleave lazily admitted streams round-robin; yields ``(index, item)``.

    With ``width=None`` one new stream is admitted per round, so a stream
    admitted at round ``r`` has had ``k - r`` pulls after round ``k``. With a
    fixed ``width`` the pool is refilled to ``width`` whenever a stream runs
    dry. ``limit`` caps the total number of items yielded.
    """
    source = iter(streams)
    active: list = []
    admitted = 0
    pulled = 0
    more = True

    def admit():
        nonlocal admitted, more
        try:
            active.append((admitted, iter(next(source))))
            admitted += 1
        except StopIteration:
            more = False

    while True:
        if width is None:
            if more:
                admit()
        else:
            while more and len(active) < width:
                admit()
        if not active:
            return
        for entry in list(active):
            if limit is not None and pulled >= limit:
                return
            idx, it = entry
            try:
                item = next(it)
            except StopIteration:
                active.remove(entry)
                continue
            pulled += 1
            yield idx, item


@dataclass
class SearchResult:
    found: list                      # per lock: (profile, key) or None
    candidates_used: int = 0
    trials: list = field(default_factory=list)  # [profile, candidates tried]

    @property
    def complete(self) -> bool:
        return all(f is not None for f in self.found)

    @property
    def any_found(self) -> bool:
        return any(f is not None for f in self.found)


@dataclass(frozen=True)
class _Lock:
    position: int  # instruction index of the container
    branch: int
    branch_obj: object
    kind: str

    @property
    def spec(self):
        return self.branch_obj.keyfinder

    def signature(self):
        b = self.branch_obj
        base = (self.kind, b.keyfinder, b.digest.kind, b.digest.value, b.digest.offset)
        return base + ((b.ct,) if b.digest.kind == H_OF_BLOCK else ())


def program_locks(program: Program) -> list:
    locks = []
    for i, ins in enumerate(program.instructions):
        if isinstance(ins, ContainerOp):
            for j, branch in enumerate(ins.container.locks):
                locks.append(_Lock(i, j, branch, ins.container.kind))
    return locks


def _opens(lock: _Lock, key: bytes, hk: bytes) -> bool:
    b = lock.branch_obj
    if lock.kind == HTD_ENV_EBOWLA:
        plain = crypto.dec(key, b.ct)
        return crypto.hash(plain[: len(plain) - b.digest.offset]) == b.digest.value
    return hk == b.digest.value


class EnvBruteforceDetector(BaseDetector):
    """Searches the universe for the keys of environment-keyed containers.

    Assignments to the key-finder variables (which are in the clear) are
    enumerated in descending probability, lexicographic on ties, and their
    candidate streams are dovetailed up to ``budget.max_key_candidates``
    candidates. An opened block is run on the probe inputs under the
    profile that opened it: any ``MAL:`` output gives 1. If every lock
    opens and nothing malicious shows, ``base`` judges the deobfuscated
    program; if the search runs dry, ``on_exhausted`` (default ``base``)
    judges the program with the unopened containers stripped. Programs
    without env-keyed containers go straight to ``base``. A digest match
    whose plaintext cannot be parsed yields 1.
    """

    def __init__(self, universe=None, base=None, on_exhausted=None, budget=None,
                 width=None, probe_inputs=None):
        self.universe = universe
        self.base = base
        self.on_exhausted = on_exhausted
        self.budget = budget
        self.width = width
        self.probe_inputs = probe_inputs

    def _fit(self, X, programs, y):
        if not isinstance(self.universe, ProfileUniverse):
            raise TypeError("EnvBruteforceDetector needs a ProfileUniverse")
        self.budget_ = as_budget(self.budget)
        self.base_ = self._fit_sub(self.base or TrivialDetector(0.5), X, y)
        self.on_exhausted_ = self._fit_sub(self.on_exhausted, X, y) or self.base_
        self.probes_ = self.budget_.probes(self.probe_inputs_)
        self._cache = {}
        self._streams = {}

    def _candidate_stream(self, names, specs):
        """Dovetailed ``(profile index, spec, key, H(key))`` sequence.

        It depends only on the universe, the key finders and the budget, so
        it is produced once per key-finder set and replayed by every search.
        Returns ``(items, profiles, iterator)``; ``items`` grows on demand.
        """
        memo_key = (tuple(names), tuple(specs))
        if memo_key in self._streams:
            return self._streams[memo_key]
        assignments = self.universe.iter_by_probability(names)
        if self.budget_.max_profiles is not None:
            assignments = (a for _, a in zip(range(self.budget_.max_profiles), assignments))
        profiles = []
        spec_index = {spec: i for i, spec in enumerate(specs)}

        def streams():
            for profile, _ in assignments:
                profiles.append(profile)
                yield ((spec, cand) for spec in specs
                       for cand, _ in iter_candidates_with_cost(spec, profile))

        def produce():
            for idx, (spec, candidate) in dovetail(streams(), self.width,
                                                   self.budget_.max_key_candidates):
                key = env_key(candidate)
                yield idx, spec_index[spec], key, crypto.hash(key)

        entry = ([], profiles, produce())
        self._streams[memo_key] = entry
        return entry

    def _replay(self, names, specs):
        items, profiles, source = self._candidate_stream(names, specs)
        i = 0
        while True:
            if i == len(items):
                try:
                    items.append(next(source))
                except StopIteration:
                    return
            yield items[i], profiles
            i += 1

    def search(self, program: Program) -> SearchResult:
        locks = program_locks(program)
        signature = tuple(lock.signature() for lock in locks)
        if signature in self._cache:
            return self._cache[signature]
        result = self._search(locks)
        self._cache[signature] = result
        return result

    def _search(self, locks) -> SearchResult:
        result = SearchResult([None] * len(locks))
        if not locks:
            return result
        specs = list(dict.fromkeys(lock.spec for lock in locks))
        wanted = {v for s in specs for v in s.vars}
        names = [n for n in self.universe.names if n in wanted]
        if wanted - set(names):
            # Key finder reads variables the public universe does not model.
            return result
        spec_index = {spec: i for i, spec in enumerate(specs)}
        by_digest, by_plaintext = {}, []
        for k, lock in enumerate(locks):
            si = spec_index[lock.spec]
            if lock.kind == HTD_ENV_EBOWLA:
                by_plaintext.append((k, si, lock))
            else:
                by_digest.setdefault((si, lock.branch_obj.digest.value), []).append(k)
        counts = {}
        profiles = []
        open_left = len(locks)
        for (idx, si, key, hk), profiles in self._replay(names, specs):
            result.candidates_used += 1
            counts[idx] = counts.get(idx, 0) + 1
            hits = [k for k in by_digest.get((si, hk), ()) if result.found[k] is None]
            hits += [k for k, lsi, lock in by_plaintext
                     if lsi == si and result.found[k] is None and _opens(lock, key, hk)]
            for k in hits:
                result.found[k] = (profiles[idx], key)
                open_left -= 1
            if not open_left:
                break
        result.trials = [[profiles[i], counts[i]] for i in sorted(counts)]
        return result

    def _proba(self, program):
        locks = program_locks(program)
        if not locks:
            return self.base_._proba(program)
        result = self.search(program)
        opened = {}
        try:
            for lock, hit in zip(locks, result.found):
                if hit is None:
                    continue
                profile, key = hit
                block = parse_block(crypto.dec(key, lock.branch_obj.ct))
                opened[(lock.position, lock.branch)] = block
                probe_program = Program(program.id, block, program.input_len)
                if observe_malicious(probe_program, self.probes_, [profile],
                                     self.budget_.max_steps):
                    return 1.0
        except MalformedContainerError:
            return 1.0
        rest = self._substitute(program, locks, opened)
        if result.complete:
            return self.base_._proba(rest)
        return self.on_exhausted_._proba(rest)

    @staticmethod
    def _substitute(program, locks, opened) -> Program:
        by_position = {}
        for lock in locks:
            by_position.setdefault(lock.position, []).append(lock)
        out = []
        for i, ins in enumerate(program.instructions):
            if i not in by_position:
                out.append(ins)
                continue
            for lock in by_position[i]:
                out.extend(opened.get((lock.position, lock.branch), ()))
        return program.replace(instructions=tuple(out), block=None)
