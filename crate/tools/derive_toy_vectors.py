#!/usr/bin/env python3
"""Independent derivation of the toy-backend test vectors.

Everything here is computed by brute force over Z/qZ with q = 1009:
scalar multiplication is repeated addition, inverses are found by
exhaustive search, and the pairing is evaluated as the exponent
product ab (the toy group G_T is written additively in exponents).
Nothing is imported from the Rust implementation.

Usage: python3 tools/derive_toy_vectors.py > crates/core/tests/vectors/toy_vectors.json
"""

import json

Q = 1009


def smul(k, p):
    """k * p by repeated addition (k taken mod q)."""
    acc = 0
    for _ in range(k % Q):
        acc = (acc + p) % Q
    return acc


def inv(x):
    for cand in range(1, Q):
        if (cand * x) % Q == 1:
            return cand
    raise ValueError("no inverse")


def pair(a, b):
    # e(a P1, b P2) = e(P1, P2)^{ab}; exponent written directly.
    return smul(a, b)


def gt_mul(x, y):
    return (x + y) % Q


def enc(v):
    return v.to_bytes(2, "big").hex()


def sc1():
    s = 7
    p1, p2 = 1, 1
    u2 = smul(s, p2)
    u1 = u2  # psi is the identity on residues
    p_v = 3
    ltk = smul(s, p_v)
    p_r = 4
    b = smul(s, p_r)
    r = 2
    h = 5
    y_pt = smul(r, p_v)
    z = smul((r + h) % Q, ltk)
    omega_sender = pair(smul(r, ltk), p_r)
    omega_receiver = pair(y_pt, b)
    assert omega_sender == omega_receiver
    lhs = pair(z, p2)
    rhs = pair((y_pt + smul(h, p_v)) % Q, u2)
    assert lhs == rhs
    n = 0x0102030405060708
    ltp = b"vehicle-A-ltp-00"
    tau = 42
    m = n.to_bytes(8, "big") + ltp + tau.to_bytes(8, "big")
    # H5(omega) programmed to the all-zero mask, so y = Z || m
    y_bytes = bytes.fromhex(enc(z)) + m
    return {
        "q": Q, "s": s, "u1": u1, "u2": u2,
        "p_v": p_v, "ltk": ltk, "p_r": p_r, "b": b,
        "r": r, "h": h, "y": y_pt, "z": z, "omega": omega_sender,
        "lhs": lhs, "rhs": rhs,
        "n": n, "ltp_hex": ltp.hex(), "tau": tau,
        "m_hex": m.hex(), "y_hex": y_bytes.hex(),
        "envelope_hex": enc(y_pt) + y_bytes.hex(),
    }


def sign(s, p_cs, p0, p1pt, c, r):
    d0 = smul(s, p0)
    d1 = smul(s, p1pt)
    s2 = smul(r, 1)
    s1 = (smul(r, p_cs) + d0 + smul(c, d1)) % Q
    return d0, d1, s1, s2


def ag1():
    s = 7
    u2 = smul(s, 1)
    p_cs = 5
    a = dict(p0=2, p1=3, c=4, r=6)
    b = dict(p0=8, p1=9, c=2, r=3)
    out = {"q": Q, "s": s, "u2": u2, "p_cs": p_cs}
    for name, sig in (("a", a), ("b", b)):
        d0, d1, s1, s2 = sign(s, p_cs, sig["p0"], sig["p1"], sig["c"], sig["r"])
        lhs = pair(s1, 1)
        rhs = gt_mul(pair(s2, p_cs), pair((sig["p0"] + smul(sig["c"], sig["p1"])) % Q, u2))
        assert lhs == rhs
        out[name] = dict(sig, d0=d0, d1=d1, s1=s1, s2=s2, lhs=lhs, rhs=rhs)
    agg_s1 = (out["a"]["s1"] + out["b"]["s1"]) % Q
    agg_s2 = (out["a"]["s2"] + out["b"]["s2"]) % Q
    x = (a["p0"] + smul(a["c"], a["p1"]) + b["p0"] + smul(b["c"], b["p1"])) % Q
    lhs = pair(agg_s1, 1)
    rhs = gt_mul(pair(agg_s2, p_cs), pair(x, u2))
    assert lhs == rhs
    out["agg"] = {"s1": agg_s1, "s2": agg_s2, "key_sum": x, "lhs": lhs, "rhs": rhs}
    return out


def sim_signcrypt():
    s = 7
    u1 = smul(s, 1)
    u2 = u1
    r, h, p_v = 4, 2, 3
    y_pt = (smul(r, 1) - smul(h, p_v)) % Q
    z = smul(r, u1)
    lhs = pair(z, 1)
    rhs = pair((y_pt + smul(h, p_v)) % Q, u2)
    assert lhs == rhs
    return {"q": Q, "s": s, "r": r, "h": h, "p_v": p_v, "y": y_pt, "z": z, "lhs": lhs, "rhs": rhs}


def sim_sign_other_string():
    s = 7
    u2 = smul(s, 1)
    beta = 5
    p_cs = smul(beta, u2)  # non-designated common string: beta * U2
    p0, p1pt, c, r = 2, 3, 4, 6
    key = (p0 + smul(c, p1pt)) % Q
    s2 = (smul(r, 1) - smul(inv(beta), key)) % Q
    s1 = smul(r, p_cs)
    lhs = pair(s1, 1)
    rhs = gt_mul(pair(s2, p_cs), pair(key, u2))
    assert lhs == rhs
    return {"q": Q, "s": s, "beta": beta, "beta_inv": inv(beta), "p_cs": p_cs,
            "p0": p0, "p1": p1pt, "c": c, "r": r, "s1": s1, "s2": s2, "lhs": lhs, "rhs": rhs}


def signcrypt_extract():
    s, p_v, r = 7, 3, 2
    ltk = smul(s, p_v)
    h, h_hat = 5, 9
    z = smul(r + h, ltk)
    z_hat = smul(r + h_hat, ltk)
    out = smul(inv((h - h_hat) % Q), (z - z_hat) % Q)
    assert out == ltk
    return {"q": Q, "s": s, "p_v": p_v, "ltk": ltk, "r": r, "h": h, "h_hat": h_hat,
            "z": z, "z_hat": z_hat, "extracted": out}


def aggregate_extract():
    s = 7
    u1 = smul(s, 1)
    a0, a0p, a1, a1p = 1, 2, 1, 3
    beta, c, r = 5, 4, 6
    p0 = (smul(a0, 1) + smul(a0p, u1)) % Q
    p1pt = (smul(a1, 1) + smul(a1p, u1)) % Q
    p_cs = smul(beta, 1)  # designated common string: beta * P2
    d0, d1, s1, s2 = sign(s, p_cs, p0, p1pt, c, r)
    denom = (a0p + smul(c, a1p)) % Q
    inner = (s1 - smul(beta, s2) - smul((a0 + smul(c, a1)) % Q, u1)) % Q
    out = smul(inv(denom), inner)
    assert out == smul(s, u1)
    return {"q": Q, "s": s, "alpha0": a0, "alpha0_prime": a0p, "alpha1": a1, "alpha1_prime": a1p,
            "beta": beta, "c": c, "r": r, "p0": p0, "p1": p1pt, "d0": d0, "d1": d1,
            "s1": s1, "s2": s2, "denominator": denom, "inner": inner, "extracted": out}


if __name__ == "__main__":
    print(json.dumps({
        "sc1": sc1(),
        "ag1": ag1(),
        "sim_signcrypt": sim_signcrypt(),
        "sim_sign_other_string": sim_sign_other_string(),
        "signcrypt_extract": signcrypt_extract(),
        "aggregate_extract": aggregate_extract(),
        "pair_6_28": pair(6, 28),
        "scalar_147_hex": enc(147),
    }, indent=2, sort_keys=True))
