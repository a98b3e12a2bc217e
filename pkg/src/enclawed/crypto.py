"""FIPS-gated envelope encryption, scrypt key derivation, and secret-buffer
hygiene.

This module wraps a general-purpose backend behind a policy gate; it does not
claim validated-module status. The FIPS probe is pluggable so deployments can
wire their backend's own self-test.
"""

from __future__ import annotations

import hashlib
import os
import secrets
import struct
from dataclasses import dataclass
from typing import Callable, Mapping

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .errors import DecryptError, KeyDerivationError

ENVELOPE_VERSION = 1
SALT_LEN = 16
NONCE_LEN = 12
TAG_LEN = 16
KEY_LEN = 32

# scrypt working set is 128 * N * r bytes; parameters above this are rejected.
SCRYPT_MEM_CEILING = 64 * 1024 * 1024
DEFAULT_SCRYPT_N = 2**15
DEFAULT_SCRYPT_R = 8
DEFAULT_SCRYPT_P = 1

ENV_FIPS_MODE = "ENCLAWED_FIPS_MODE"
_TRUTHY = {"1", "true", "yes", "on"}


def derive_key(
    passphrase: str | bytes,
    salt: bytes,
    n: int = DEFAULT_SCRYPT_N,
    r: int = DEFAULT_SCRYPT_R,
    p: int = DEFAULT_SCRYPT_P,
) -> bytes:
    """Deterministic 32-byte scrypt key; parameters over the 64 MiB ceiling error cleanly."""
    if n < 2 or (n & (n - 1)) != 0:
        raise KeyDerivationError(f"scrypt N must be a power of two >= 2, got {n}")
    if r < 1 or p < 1:
        raise KeyDerivationError("scrypt r and p must be positive")
    required = 128 * n * r
    if required > SCRYPT_MEM_CEILING:
        raise KeyDerivationError(
            f"scrypt parameters need {required} bytes, over the {SCRYPT_MEM_CEILING} ceiling"
        )
    password = passphrase.encode("utf-8") if isinstance(passphrase, str) else passphrase
    # headroom past 128*N*r covers the backend's block buffers
    maxmem = required + 128 * r * p + (1 << 20)
    try:
        return hashlib.scrypt(
            password, salt=salt, n=n, r=r, p=p, maxmem=maxmem, dklen=KEY_LEN
        )
    except (ValueError, MemoryError) as exc:
        raise KeyDerivationError(f"scrypt failed: {exc}") from exc


@dataclass(frozen=True)
class Envelope:
    v: int
    salt: bytes
    nonce: bytes
    aad_present: bool
    ciphertext: bytes
    tag: bytes

    def header_bytes(self) -> bytes:
        return bytes([self.v]) + self.salt + self.nonce + bytes([1 if self.aad_present else 0])

    def to_bytes(self) -> bytes:
        return (
            self.header_bytes()
            + struct.pack(">I", len(self.ciphertext))
            + self.ciphertext
            + self.tag
        )

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Envelope":
        header_len = 1 + SALT_LEN + NONCE_LEN + 1
        if len(raw) < header_len + 4 + TAG_LEN:
            raise DecryptError("envelope too short")
        v = raw[0]
        salt = raw[1 : 1 + SALT_LEN]
        nonce = raw[1 + SALT_LEN : 1 + SALT_LEN + NONCE_LEN]
        aad_flag = raw[header_len - 1]
        if aad_flag not in (0, 1):
            raise DecryptError("corrupt aad flag")
        (ct_len,) = struct.unpack(">I", raw[header_len : header_len + 4])
        body = raw[header_len + 4 :]
        if len(body) != ct_len + TAG_LEN:
            raise DecryptError("envelope length mismatch")
        return cls(v, salt, nonce, aad_flag == 1, body[:ct_len], body[ct_len:])


def _coerce_aad(aad: str | bytes | None) -> bytes | None:
    if aad is None:
        return None
    return aad.encode("utf-8") if isinstance(aad, str) else bytes(aad)


def seal(key: bytes, plaintext: bytes, aad: str | bytes | None = None) -> Envelope:
    """AES-256-GCM with a fresh random nonce per call; the header is authenticated."""
    if len(key) != KEY_LEN:
        raise KeyDerivationError(f"key must be {KEY_LEN} bytes")
    salt = secrets.token_bytes(SALT_LEN)
    nonce = secrets.token_bytes(NONCE_LEN)
    aad_bytes = _coerce_aad(aad)
    head = bytes([ENVELOPE_VERSION]) + salt + nonce + bytes([1 if aad_bytes is not None else 0])
    out = AESGCM(key).encrypt(nonce, bytes(plaintext), head + (aad_bytes or b""))
    return Envelope(
        v=ENVELOPE_VERSION,
        salt=salt,
        nonce=nonce,
        aad_present=aad_bytes is not None,
        ciphertext=out[:-TAG_LEN],
        tag=out[-TAG_LEN:],
    )


def open_envelope(
    key: bytes, envelope: Envelope | bytes, aad: str | bytes | None = None
) -> bytes:
    """Authenticate then decrypt; any mismatch raises DecryptError with no plaintext."""
    if isinstance(envelope, (bytes, bytearray)):
        envelope = Envelope.from_bytes(bytes(envelope))
    if envelope.v != ENVELOPE_VERSION:
        raise DecryptError(f"unsupported envelope version {envelope.v}")
    aad_bytes = _coerce_aad(aad)
    if envelope.aad_present != (aad_bytes is not None):
        raise DecryptError("aad presence mismatch")
    try:
        return AESGCM(key).decrypt(
            envelope.nonce,
            envelope.ciphertext + envelope.tag,
            envelope.header_bytes() + (aad_bytes or b""),
        )
    except InvalidTag as exc:
        raise DecryptError("authentication failed") from exc


class SecretBuffer:
    """Single-owner mutable byte region that can be provably zeroized."""

    def __init__(self, data: bytes | bytearray):
        self.data = bytearray(data)

    def __len__(self) -> int:
        return len(self.data)

    def zeroize(self) -> None:
        for i in range(len(self.data)):
            self.data[i] = 0

    def is_zeroized(self) -> bool:
        return all(b == 0 for b in self.data)


def with_secret(provider: Callable[[], SecretBuffer | bytearray], action: Callable[[SecretBuffer], object]) -> object:
    """Run action over a secret buffer; zeroize on success and on raise."""
    buf = provider()
    if not isinstance(buf, SecretBuffer):
        buf = SecretBuffer(buf)
    try:
        return action(buf)
    finally:
        buf.zeroize()


def fips_probe(
    env: Mapping[str, str] | None = None,
    self_test: Callable[[], bool] | None = None,
) -> bool:
    """Report whether the configured backend asserts an approved mode.

    Default behavior: a configuration flag (ENCLAWED_FIPS_MODE) must be set
    truthy, and the backend self-test hook, when wired, must also pass.
    """
    source = os.environ if env is None else env
    flagged = source.get(ENV_FIPS_MODE, "").strip().lower() in _TRUTHY
    if not flagged:
        return False
    if self_test is not None:
        return bool(self_test())
    return True
