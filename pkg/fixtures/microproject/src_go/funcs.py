"""Source-side functions of the subject project."""

import hashlib


def ed25519PrivateKeyToCurve25519(pk):
    h = hashlib.sha512()
    h.update(pk.seed)
    out = h.digest()
    return Digest32(out[:32])


def clampDigest(d):
    out = bytearray(d.data)
    out[0] &= 248
    out[31] = (out[31] & 127) | 64
    return Digest32(bytes(out))
