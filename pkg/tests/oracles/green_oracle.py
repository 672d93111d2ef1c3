"""High-precision periodic Green function values on the unit torus.

The Green function obeys -Delta G = delta_0 - 1 with zero mean.  Two
independent routes:

1. Ewald split: G(x) = (1/4pi) sum_n E1(eta^2 |x-n|^2)
                      + sum_{m!=0} cos(2pi m.x) exp(-pi^2|m|^2/eta^2)/(4pi^2|m|^2)
                      - 1/(4 eta^2),
   valid for any splitting parameter eta (checked by computing at two
   eta values), zero mean by construction.

2. Jacobi theta: h(z) = (1/2pi) ln|theta1(pi z, q=e^-pi)| - (Im z)^2/2
   satisfies Delta h = delta - 1 up to an additive constant, so
   differences G(x1)-G(x2) must equal -(h(z1)-h(z2)).

Prints golden values for the library's float Ewald implementation.
"""

import mpmath as mp

mp.mp.dps = 30


def ewald_G(x1, x2, eta, nmax=8):
    s = mp.mpf(0)
    for n1 in range(-nmax, nmax + 1):
        for n2 in range(-nmax, nmax + 1):
            r2 = (x1 - n1) ** 2 + (x2 - n2) ** 2
            if r2 > 0:
                s += mp.e1(eta**2 * r2)
    s = s / (4 * mp.pi)
    f = mp.mpf(0)
    for m1 in range(-nmax, nmax + 1):
        for m2 in range(-nmax, nmax + 1):
            mm = m1 * m1 + m2 * m2
            if mm == 0:
                continue
            f += mp.cos(2 * mp.pi * (m1 * x1 + m2 * x2)) * \
                mp.exp(-mp.pi**2 * mm / eta**2) / (4 * mp.pi**2 * mm)
    return s + f - 1 / (4 * eta**2)


def ewald_gamma(eta, nmax=8):
    # regular part at the source: lim G(x) + ln|x| / 2pi
    s = mp.mpf(0)
    for n1 in range(-nmax, nmax + 1):
        for n2 in range(-nmax, nmax + 1):
            if n1 == 0 and n2 == 0:
                continue
            s += mp.e1(eta**2 * (n1 * n1 + n2 * n2))
    s = s / (4 * mp.pi)
    f = mp.mpf(0)
    for m1 in range(-nmax, nmax + 1):
        for m2 in range(-nmax, nmax + 1):
            mm = m1 * m1 + m2 * m2
            if mm == 0:
                continue
            f += mp.exp(-mp.pi**2 * mm / eta**2) / (4 * mp.pi**2 * mm)
    # n = 0 term of the lattice sum contributes -(euler + 2 ln eta)/4pi
    # after the log subtraction
    local = -(mp.euler + 2 * mp.log(eta)) / (4 * mp.pi)
    return local + s + f - 1 / (4 * eta**2)


def ewald_grad(x1, x2, eta, nmax=8):
    gx = mp.mpf(0)
    gy = mp.mpf(0)
    for n1 in range(-nmax, nmax + 1):
        for n2 in range(-nmax, nmax + 1):
            dx = x1 - n1
            dy = x2 - n2
            r2 = dx * dx + dy * dy
            if r2 > 0:
                w = -mp.exp(-eta**2 * r2) / r2 / (2 * mp.pi)
                gx += w * dx
                gy += w * dy
    for m1 in range(-nmax, nmax + 1):
        for m2 in range(-nmax, nmax + 1):
            mm = m1 * m1 + m2 * m2
            if mm == 0:
                continue
            w = -mp.sin(2 * mp.pi * (m1 * x1 + m2 * x2)) * \
                mp.exp(-mp.pi**2 * mm / eta**2) / (2 * mp.pi * mm)
            gx += w * m1
            gy += w * m2
    return gx, gy


def theta_h(x1, x2):
    q = mp.exp(-mp.pi)
    z = mp.mpc(x1, x2)
    return mp.log(abs(mp.jtheta(1, mp.pi * z, q))) / (2 * mp.pi) - x2**2 / 2


def main():
    eta1 = mp.sqrt(mp.pi)
    eta2 = mp.mpf("1.6")
    pts = [(mp.mpf(1) / 2, mp.mpf(1) / 2),
           (mp.mpf(1) / 4, mp.mpf(1) / 4),
           (mp.mpf("0.3"), mp.mpf("0.1"))]

    print("# eta independence and theta cross-check (unit torus, source 0)")
    vals = []
    for (a, b) in pts:
        g1 = ewald_G(a, b, eta1)
        g2 = ewald_G(a, b, eta2)
        assert abs(g1 - g2) < mp.mpf("1e-25"), (a, b, g1 - g2)
        vals.append(g1)
        print("G(%s, %s) = %s" % (mp.nstr(a, 5), mp.nstr(b, 5), mp.nstr(g1, 22)))

    # differences against the theta route
    for i in range(len(pts) - 1):
        d_ewald = vals[i] - vals[i + 1]
        d_theta = -(theta_h(*pts[i]) - theta_h(*pts[i + 1]))
        assert abs(d_ewald - d_theta) < mp.mpf("1e-25"), (i, d_ewald - d_theta)
    print("# theta-difference cross-check passed at 1e-25")

    gam1 = ewald_gamma(eta1)
    gam2 = ewald_gamma(eta2)
    assert abs(gam1 - gam2) < mp.mpf("1e-25")
    print("gamma(0,0) = %s" % mp.nstr(gam1, 22))

    gx, gy = ewald_grad(mp.mpf("0.3"), mp.mpf("0.1"), eta1)
    gx2, gy2 = ewald_grad(mp.mpf("0.3"), mp.mpf("0.1"), eta2)
    assert abs(gx - gx2) + abs(gy - gy2) < mp.mpf("1e-25")
    # central-difference check against the theta route
    h = mp.mpf("1e-9")
    fx = -(theta_h(mp.mpf("0.3") + h, mp.mpf("0.1")) -
           theta_h(mp.mpf("0.3") - h, mp.mpf("0.1"))) / (2 * h)
    fy = -(theta_h(mp.mpf("0.3"), mp.mpf("0.1") + h) -
           theta_h(mp.mpf("0.3"), mp.mpf("0.1") - h)) / (2 * h)
    assert abs(gx - fx) < mp.mpf("1e-12") and abs(gy - fy) < mp.mpf("1e-12")
    print("gradG(0.3, 0.1) = (%s, %s)" % (mp.nstr(gx, 22), mp.nstr(gy, 22)))

    # value at a generic separation for the symmetry test
    g = ewald_G(mp.mpf("0.15"), mp.mpf("0.45"), eta1)
    print("G(0.15, 0.45) = %s" % mp.nstr(g, 22))


if __name__ == "__main__":
    main()
