"""Cryptographic primitives for the network.

One hash (SHA-256 by default, name fixed in the genesis config) and one
signature scheme (Ed25519) are used network-wide.  Payload encryption uses
AES-256-GCM; key wrapping uses X25519 key agreement with keys derived from
the same Ed25519 identity seed, so a single 32-byte secret per subject is
enough to sign, decrypt and unwrap.
"""

from __future__ import annotations

import hashlib
import os
import random
from functools import lru_cache

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.hashes import SHA256
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from .errors import TelechainError

HASH_ALGORITHMS = {
    "sha256": lambda data: hashlib.sha256(data).digest(),
    "sha3_256": lambda data: hashlib.sha3_256(data).digest(),
    "blake2b_256": lambda data: hashlib.blake2b(data, digest_size=32).digest(),
}

SIGNATURE_SCHEMES = ("ed25519",)

GCM_NONCE_LEN = 12


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def hash_named(name: str, data: bytes) -> bytes:
    try:
        return HASH_ALGORITHMS[name](data)
    except KeyError:
        raise TelechainError("UNKNOWN_HASH", name) from None


def hkdf(ikm: bytes, info: bytes, length: int = 32) -> bytes:
    return HKDF(algorithm=SHA256(), length=length, salt=None, info=info).derive(ikm)


# --- Ed25519 signing -------------------------------------------------------

def generate_seed(rng: random.Random | None = None) -> bytes:
    """32-byte private seed; seeded rng gives reproducible identities."""
    if rng is None:
        return os.urandom(32)
    return rng.randbytes(32)


def public_key_from_seed(seed: bytes) -> bytes:
    priv = Ed25519PrivateKey.from_private_bytes(seed)
    return priv.public_key().public_bytes_raw()


def sign(seed: bytes, message: bytes) -> bytes:
    return Ed25519PrivateKey.from_private_bytes(seed).sign(message)


@lru_cache(maxsize=65536)
def _verify_cached(public_key: bytes, message: bytes, signature: bytes) -> bool:
    # sound to cache: the result is a pure function of the three values, and
    # every peer in-process re-checks the same immutable triples
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
        return True
    except (InvalidSignature, ValueError, TypeError):
        return False


def verify(public_key: bytes, message: bytes, signature: bytes) -> bool:
    """False on any malformed input; never raises."""
    try:
        return _verify_cached(bytes(public_key), bytes(message), bytes(signature))
    except TypeError:
        return False


# --- Ed25519 -> X25519 conversion ------------------------------------------
#
# Standard birational map between the Ed25519 and Curve25519 groups
# (the same conversion libsodium exposes): u = (1 + y) / (1 - y) mod p
# for public keys, and the clamped first half of SHA-512(seed) for the
# private scalar.  Verified in tests against the X25519 implementation.

_P = 2**255 - 19


def ed25519_public_to_x25519(ed_public: bytes) -> bytes:
    if len(ed_public) != 32:
        raise TelechainError("BAD_KEY", "ed25519 public key must be 32 bytes")
    y = int.from_bytes(ed_public, "little") & ((1 << 255) - 1)
    if y >= _P:
        raise TelechainError("BAD_KEY", "point y out of field range")
    denom = (1 - y) % _P
    if denom == 0:
        raise TelechainError("BAD_KEY", "degenerate point")
    u = (1 + y) * pow(denom, _P - 2, _P) % _P
    return u.to_bytes(32, "little")


def ed25519_seed_to_x25519(seed: bytes) -> bytes:
    if len(seed) != 32:
        raise TelechainError("BAD_KEY", "ed25519 seed must be 32 bytes")
    h = bytearray(hashlib.sha512(seed).digest()[:32])
    h[0] &= 248
    h[31] &= 127
    h[31] |= 64
    return bytes(h)


def x25519_shared(my_scalar: bytes, their_x_public: bytes) -> bytes:
    priv = X25519PrivateKey.from_private_bytes(my_scalar)
    return priv.exchange(X25519PublicKey.from_public_bytes(their_x_public))


# --- AES-256-GCM ------------------------------------------------------------

def aead_encrypt(key: bytes, nonce: bytes, plaintext: bytes, aad: bytes = b"") -> bytes:
    return AESGCM(key).encrypt(nonce, plaintext, aad)


def aead_decrypt(key: bytes, nonce: bytes, ciphertext: bytes, aad: bytes = b"") -> bytes:
    """Raises TelechainError(DECRYPT_FAILED) on tamper or wrong key."""
    try:
        return AESGCM(key).decrypt(nonce, ciphertext, aad)
    except (InvalidTag, ValueError) as exc:
        raise TelechainError("DECRYPT_FAILED", str(exc)) from None


# --- Key wrapping ------------------------------------------------------------

def seal_to_public(recipient_ed_public: bytes, plaintext: bytes,
                   rng: random.Random | None = None) -> bytes:
    """Anonymous one-way box: ephemeral X25519 + AES-GCM.

    Output layout: ephemeral public key (32) || ciphertext.  The nonce is
    derived from both public keys; safe because the AEAD key is unique per
    ephemeral key.
    """
    eph_seed = generate_seed(rng)
    eph_priv = X25519PrivateKey.from_private_bytes(eph_seed)
    eph_pub = eph_priv.public_key().public_bytes_raw()
    recip_x = ed25519_public_to_x25519(recipient_ed_public)
    shared = eph_priv.exchange(X25519PublicKey.from_public_bytes(recip_x))
    key = hkdf(shared, b"tch-seal" + eph_pub + recip_x)
    nonce = hkdf(shared, b"tch-seal-nonce" + eph_pub + recip_x, GCM_NONCE_LEN)
    return eph_pub + aead_encrypt(key, nonce, plaintext)


def open_sealed(recipient_seed: bytes, blob: bytes) -> bytes:
    if len(blob) < 32 + 16:
        raise TelechainError("DECRYPT_FAILED", "sealed blob too short")
    eph_pub, ciphertext = blob[:32], blob[32:]
    my_scalar = ed25519_seed_to_x25519(recipient_seed)
    my_x_pub = X25519PrivateKey.from_private_bytes(my_scalar).public_key().public_bytes_raw()
    shared = x25519_shared(my_scalar, eph_pub)
    key = hkdf(shared, b"tch-seal" + eph_pub + my_x_pub)
    nonce = hkdf(shared, b"tch-seal-nonce" + eph_pub + my_x_pub, GCM_NONCE_LEN)
    return aead_decrypt(key, nonce, ciphertext)


def pair_key(my_seed: bytes, their_ed_public: bytes) -> bytes:
    """Symmetric key shared by two identities (static-static X25519).

    Both directions derive the same key, so either party can encrypt or
    decrypt messages exchanged between the pair.
    """
    my_scalar = ed25519_seed_to_x25519(my_seed)
    my_x_pub = X25519PrivateKey.from_private_bytes(my_scalar).public_key().public_bytes_raw()
    their_x = ed25519_public_to_x25519(their_ed_public)
    shared = x25519_shared(my_scalar, their_x)
    lo, hi = sorted((my_x_pub, their_x))
    return hkdf(shared, b"tch-pair" + lo + hi)
