"""Obfuscated blocks: the unit every obfuscator produces.

Fields present per kind::

    kind            ct  embedded_key  digest         keyfinder  other
    BASE64          x   -             -              -          -
    XOR1            x   1 byte        -              -          -
    CIPHER_EMBEDDED x   cipher key    -              -          -
    HTD_RANDOM      x   -             H_OF_KEY       -          keyspace_bits
    HTD_ENV_EBOWLA  x   -             H_OF_BLOCK(t)  x          -
    HTD_ENV_FIXED   x   -             H_OF_KEY       x          -
    DENIABLE_XOR    x   K2            -              -          schedule(K1, s)
    DENIABLE_DUAL   -   -             -              -          branches (2)

Each DENIABLE_DUAL branch carries its own ct, H_OF_KEY digest and keyfinder;
branches are tried in order, so branch 0 wins a simultaneous match.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .. import crypto
from ..environment import EnvSpecError, KeyFinderSpec

BASE64 = "BASE64"
XOR1 = "XOR1"
CIPHER_EMBEDDED = "CIPHER_EMBEDDED"
HTD_RANDOM = "HTD_RANDOM"
HTD_ENV_EBOWLA = "HTD_ENV_EBOWLA"
HTD_ENV_FIXED = "HTD_ENV_FIXED"
DENIABLE_XOR = "DENIABLE_XOR"
DENIABLE_DUAL = "DENIABLE_DUAL"
KINDS = (BASE64, XOR1, CIPHER_EMBEDDED, HTD_RANDOM, HTD_ENV_EBOWLA,
         HTD_ENV_FIXED, DENIABLE_XOR, DENIABLE_DUAL)
CIPHER_KINDS = tuple(k for k in KINDS if k != BASE64)
ENV_KINDS = (HTD_ENV_EBOWLA, HTD_ENV_FIXED, DENIABLE_DUAL)

H_OF_KEY = "H_OF_KEY"
H_OF_BLOCK = "H_OF_BLOCK"


class MalformedContainerError(ValueError):
    """A container whose payload cannot be decoded or violates its kind."""


@dataclass(frozen=True)
class Digest:
    kind: str
    value: bytes
    offset: int = 0

    def __post_init__(self):
        if self.kind not in (H_OF_KEY, H_OF_BLOCK):
            raise MalformedContainerError(f"unknown digest kind {self.kind!r}")
        if len(self.value) != crypto.DIGEST_SIZE:
            raise MalformedContainerError("digest must be 32 bytes")
        if self.offset < 0 or (self.kind == H_OF_KEY and self.offset):
            raise MalformedContainerError("offset only valid (>= 0) for H_OF_BLOCK")

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "value": crypto.base64_encode(self.value)}
        if self.kind == H_OF_BLOCK:
            out["offset"] = self.offset
        return out

    @classmethod
    def from_dict(cls, d) -> "Digest":
        return cls(d["kind"], crypto.base64_decode(d["value"]), int(d.get("offset", 0)))


@dataclass(frozen=True)
class Schedule:
    """Remote-key delivery: ``k1`` becomes obtainable from clock step ``available_from``."""

    k1: bytes
    available_from: int

    def to_dict(self) -> dict:
        return {"k1": crypto.base64_encode(self.k1), "available_from": self.available_from}

    @classmethod
    def from_dict(cls, d) -> "Schedule":
        return cls(crypto.base64_decode(d["k1"]), int(d["available_from"]))


@dataclass(frozen=True)
class Branch:
    ct: bytes
    digest: Digest
    keyfinder: KeyFinderSpec

    def to_dict(self) -> dict:
        return {"ct": crypto.base64_encode(self.ct), "digest": self.digest.to_dict(),
                "keyfinder": self.keyfinder.to_dict()}

    @classmethod
    def from_dict(cls, d) -> "Branch":
        return cls(crypto.base64_decode(d["ct"]), Digest.from_dict(d["digest"]),
                   KeyFinderSpec.from_dict(d["keyfinder"]))


_REQUIRED = {
    BASE64: {"ct"},
    XOR1: {"ct", "embedded_key"},
    CIPHER_EMBEDDED: {"ct", "embedded_key"},
    HTD_RANDOM: {"ct", "digest", "keyspace_bits"},
    HTD_ENV_EBOWLA: {"ct", "digest", "keyfinder"},
    HTD_ENV_FIXED: {"ct", "digest", "keyfinder"},
    DENIABLE_XOR: {"ct", "embedded_key", "schedule"},
    DENIABLE_DUAL: {"branches"},
}
_OPTIONAL = ("ct", "digest", "keyfinder", "embedded_key", "keyspace_bits",
             "schedule", "branches")


@dataclass(frozen=True)
class Container:
    kind: str
    ct: Optional[bytes] = None
    digest: Optional[Digest] = None
    keyfinder: Optional[KeyFinderSpec] = None
    embedded_key: Optional[bytes] = None
    keyspace_bits: Optional[int] = None
    schedule: Optional[Schedule] = None
    branches: Optional[tuple] = None
    # Ground truth recorded at sealing time; never serialized, never read by detectors.
    sealed_malicious: Optional[bool] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise MalformedContainerError(f"unknown container kind {self.kind!r}")
        if self.branches is not None:
            object.__setattr__(self, "branches", tuple(self.branches))
        present = {f for f in _OPTIONAL if getattr(self, f) is not None}
        if present != _REQUIRED[self.kind]:
            raise MalformedContainerError(
                f"{self.kind} container needs fields {sorted(_REQUIRED[self.kind])}, "
                f"got {sorted(present)}"
            )
        if self.kind == XOR1 and len(self.embedded_key) != 1:
            raise MalformedContainerError("XOR1 key must be a single byte")
        if self.kind == HTD_RANDOM and self.digest.kind != H_OF_KEY:
            raise MalformedContainerError("HTD_RANDOM stores H(k)")
        if self.kind == HTD_ENV_FIXED and self.digest.kind != H_OF_KEY:
            raise MalformedContainerError("HTD_ENV_FIXED stores H(k)")
        if self.kind == HTD_ENV_EBOWLA and self.digest.kind != H_OF_BLOCK:
            raise MalformedContainerError("HTD_ENV_EBOWLA stores H(B)")
        if self.kind == DENIABLE_XOR and not (
            len(self.ct) == len(self.embedded_key) == len(self.schedule.k1)
        ):
            raise MalformedContainerError("deniable XOR needs |C| = |K1| = |K2|")
        if self.kind == DENIABLE_DUAL and len(self.branches) != 2:
            raise MalformedContainerError("DENIABLE_DUAL needs exactly two branches")

    @property
    def locks(self) -> tuple:
        """Env-keyed branches as ``Branch`` objects (empty for other kinds)."""
        if self.kind == DENIABLE_DUAL:
            return self.branches
        if self.kind in (HTD_ENV_EBOWLA, HTD_ENV_FIXED):
            return (Branch(self.ct, self.digest, self.keyfinder),)
        return ()

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.ct is not None:
            out["ct"] = crypto.base64_encode(self.ct)
        if self.digest is not None:
            out["digest"] = self.digest.to_dict()
        if self.keyfinder is not None:
            out["keyfinder"] = self.keyfinder.to_dict()
        if self.embedded_key is not None:
            out["embedded_key"] = crypto.base64_encode(self.embedded_key)
        if self.keyspace_bits is not None:
            out["keyspace_bits"] = self.keyspace_bits
        if self.schedule is not None:
            out["schedule"] = self.schedule.to_dict()
        if self.branches is not None:
            out["branches"] = [b.to_dict() for b in self.branches]
        return out

    @classmethod
    def from_dict(cls, d) -> "Container":
        try:
            return cls(
                kind=d["kind"],
                ct=crypto.base64_decode(d["ct"]) if "ct" in d else None,
                digest=Digest.from_dict(d["digest"]) if "digest" in d else None,
                keyfinder=(KeyFinderSpec.from_dict(d["keyfinder"])
                           if "keyfinder" in d else None),
                embedded_key=(crypto.base64_decode(d["embedded_key"])
                              if "embedded_key" in d else None),
                keyspace_bits=(int(d["keyspace_bits"])
                               if "keyspace_bits" in d else None),
                schedule=Schedule.from_dict(d["schedule"]) if "schedule" in d else None,
                branches=(tuple(Branch.from_dict(b) for b in d["branches"])
                          if "branches" in d else None),
            )
        except (KeyError, TypeError, ValueError, crypto.CryptoError, EnvSpecError) as exc:
            if isinstance(exc, MalformedContainerError):
                raise
            raise MalformedContainerError(f"malformed container JSON: {exc!r}") from None
