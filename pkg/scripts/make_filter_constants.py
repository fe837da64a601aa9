"""Generate high-precision taps for the named orthogonal filter banks.

Each bank is pinned by an exact algebraic system (normalization, shift
orthogonality, vanishing moments) and polished with a Gauss-Newton
iteration at 60 decimal digits, seeded from the published double-precision
values. Daubechies-5 is additionally cross-checked against a direct
spectral factorization of its Bernstein polynomial. Output is meant to be
pasted into ``filters.py``; this script is a dev tool, not a runtime
dependency.

Run: python scripts/make_filter_constants.py
"""

import mpmath as mp

mp.mp.dps = 60

SQRT2 = mp.sqrt(2)

# Published double-precision seeds, scaling-filter (reconstruction lowpass)
# orientation, natural index order n = 0..N-1.
SEEDS = {
    "db5": [
        0.160102397974125, 0.603829269797473, 0.724308528438574,
        0.138428145901103, -0.242294887066190, -0.032244869585030,
        0.077571493840065, -0.006241490213012, -0.012580751999016,
        0.003335725285002,
    ],
    "sym5": [
        0.027333068345078, 0.029519490925775, -0.039134249302383,
        0.199397533977394, 0.723407690402421, 0.633978963458212,
        0.016602105764522, -0.175328089908450, -0.021101834024759,
        0.019538882735287,
    ],
    "coif2": [
        0.016387336463522, -0.041464936781759, -0.067372554721963,
        0.386110066823092, 0.812723635445542, 0.417005184421693,
        -0.076488599078306, -0.059434418646457, 0.023680171946334,
        0.005611434819394, -0.001823208870703, -0.000720549445364,
    ],
}


def residuals(h, psi_moments, phi_moments=0, phi_center=0):
    """Defining equations: Sum h = sqrt(2); <h, h(.-2k)> = delta_k;
    alternating moments (wavelet side) and centered moments (scaling side).
    """
    n = len(h)
    eqs = [mp.fsum(h) - SQRT2]
    for k in range(n // 2):
        acc = mp.fsum(h[i] * h[i - 2 * k] for i in range(2 * k, n))
        eqs.append(acc - (1 if k == 0 else 0))
    for j in range(psi_moments):
        eqs.append(mp.fsum((-1) ** i * mp.mpf(i) ** j * h[i]
                           for i in range(n)))
    for j in range(1, phi_moments + 1):
        eqs.append(mp.fsum(mp.mpf(i - phi_center) ** j * h[i]
                           for i in range(n)))
    return eqs


def polish(seed, **kw):
    h = [mp.mpf(repr(v)) for v in seed]
    for _ in range(80):
        f = residuals(h, **kw)
        if max(abs(v) for v in f) < mp.mpf(10) ** -50:
            break
        m, n = len(f), len(h)
        jac = mp.matrix(m, n)
        eps = mp.mpf(10) ** -30
        for col in range(n):
            hp = list(h)
            hm = list(h)
            hp[col] += eps
            hm[col] -= eps
            fp = residuals(hp, **kw)
            fm = residuals(hm, **kw)
            for row in range(m):
                jac[row, col] = (fp[row] - fm[row]) / (2 * eps)
        # Gauss-Newton least-squares step (system may be consistently
        # overdetermined: one moment equation is dependent).
        jt = jac.T
        step = mp.lu_solve(jt * jac, jt * mp.matrix(f))
        h = [h[i] - step[i] for i in range(n)]
    return h


def db_spectral(p):
    """Spectral factorization of the order-p Daubechies half-band
    polynomial, extremal-phase (all roots inside the unit circle).
    """
    coeffs = [mp.binomial(p - 1 + k, k) for k in range(p)]
    yroots = mp.polyroots(list(reversed(coeffs)), maxsteps=200,
                          extraprec=200)
    zroots = []
    for y in yroots:
        b = 2 - 4 * y
        disc = mp.sqrt(b * b - 4)
        z1 = (b + disc) / 2
        z2 = (b - disc) / 2
        zroots.append(z1 if abs(z1) < 1 else z2)
    # H(z) = c * (1+z)^p * prod(z - z_k); normalize H(1) = sqrt(2).
    poly = [mp.mpf(1)]
    for _ in range(p):
        poly = [a + b for a, b in zip(poly + [mp.mpf(0)],
                                      [mp.mpf(0)] + poly)]
    for zk in zroots:
        poly = [a - zk * b for a, b in
                zip([mp.mpc(0)] + poly, poly + [mp.mpc(0)])]
    poly = [v.real for v in poly]
    scale = SQRT2 / mp.fsum(poly)
    return [v * scale for v in poly]


def show(name, taps):
    print(f'    "{name}": (')
    for t in taps:
        print(f'        "{mp.nstr(t, 24)}",')
    print("    ),")


def main():
    db5 = polish(SEEDS["db5"], psi_moments=5)
    sym5 = polish(SEEDS["sym5"], psi_moments=5)
    coif2 = polish(SEEDS["coif2"], psi_moments=4, phi_moments=3,
                   phi_center=4)

    spectral = db_spectral(5)
    drift = max(abs(a - b) for a, b in zip(db5, spectral))
    rev_drift = max(abs(a - b) for a, b in zip(db5, spectral[::-1]))
    print(f"# db5 Newton vs spectral factorization: {mp.nstr(min(drift, rev_drift), 3)}")
    for name, taps in (("db5", db5), ("sym5", sym5), ("coif2", coif2)):
        seed_gap = max(abs(t - mp.mpf(repr(s)))
                       for t, s in zip(taps, SEEDS[name]))
        print(f"# {name}: max polish correction from seed = {mp.nstr(seed_gap, 3)}")
        res = residuals(taps, psi_moments=0)
        print(f"# {name}: max defining residual = "
              f"{mp.nstr(max(abs(v) for v in res), 3)}")
    print()
    for name, taps in (("db5", db5), ("sym5", sym5), ("coif2", coif2)):
        show(name, taps)


if __name__ == "__main__":
    main()
