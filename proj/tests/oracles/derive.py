"""Independent symbolic checks for constants frozen into the C++ tests.

Run with: python3 tests/oracles/derive.py
"""
import sympy as sp
from mpmath import mp, mpf

r, l = sp.symbols("r l", positive=True)


def flat_blocks(u, v, w, lv):
    lam = sp.Integer(lv) * (lv + 1)
    s = sp.sqrt(lam)
    U = -(sp.Rational(2, 3) * sp.diff(u, r, 2) + sp.Rational(4, 3) * sp.diff(u, r) / r
          - sp.Rational(4, 3) * u / r**2 - lam / 2 * u / r**2 + s / r * v - s / 6 * sp.diff(v, r))
    V = -(s / 6 * sp.diff(u, r) + 4 * s / 3 * u / r + 2 * r * sp.diff(v, r)
          + (1 - sp.Rational(2, 3) * lam) * v + r**2 / 2 * sp.diff(v, r, 2))
    W = -(r**2 / 2 * sp.diff(w, r, 2) + 2 * r * sp.diff(w, r) + (1 - lam / 2) * w)
    return [sp.simplify(x) for x in (U, V, W)]


def families(lv):
    s = sp.sqrt(sp.Integer(lv) * (lv + 1))
    return {
        "inf-a": ((lv - 6) * s * r**(lv + 1), lv * (lv + 9) * r**lv, 0),
        "inf-b": (s * r**(lv - 1), (lv + 1) * r**(lv - 2), 0),
        "inf-W": (0, 0, r**(lv - 1)),
        "org-a": ((lv + 7) * s * r**(-lv), -(lv + 1) * (lv - 8) * r**(-lv - 1), 0),
        "org-b": (s * r**(-lv - 2), -lv * r**(-lv - 3), 0),
        "org-W": (0, 0, r**(-lv - 2)),
    }


print("kernel families (expect all zero):")
for lv in range(1, 7):
    for name, (u, v, w) in families(lv).items():
        res = flat_blocks(sp.sympify(u), sp.sympify(v), sp.sympify(w), lv)
        print(f"  l={lv} {name}: {res}")

u0 = r**2
U0 = -(sp.Rational(2, 3) * sp.diff(u0, r, 2) + sp.Rational(4, 3) * sp.diff(u0, r) / r
       - sp.Rational(4, 3) * u0 / r**2)
print("l=0 u=r^2 ->", sp.simplify(U0))
for u0 in (r, r**-2):
    U0 = -(sp.Rational(2, 3) * sp.diff(u0, r, 2) + sp.Rational(4, 3) * sp.diff(u0, r) / r
           - sp.Rational(4, 3) * u0 / r**2)
    print(f"l=0 u={u0} ->", sp.simplify(U0))

# General radial metric A dr^2 + r^2 dOmega^2: conformal Killing operator and
# vector Laplacian for X = u d_r, compared against the flat l=0 line.
A = sp.Function("A")(r)
u = sp.Function("u")(r)
m = sp.Rational(1, 3) * (sp.diff(u, r) + sp.diff(A, r) / (2 * A) * u - u / r)
LX = -(2 * sp.diff(m, r) + 6 * m / r) / A
flat = LX.subs(A, 1).doit()
print("vector Laplacian flat limit minus l=0 line:",
      sp.simplify(flat + (sp.Rational(2, 3) * sp.diff(u, r, 2) + sp.Rational(4, 3) * sp.diff(u, r) / r
                          - sp.Rational(4, 3) * u / r**2)))

# Maximal-slice Schwarzschild data: A0 = 1/(1 - 2M/rho + c^2/rho^4), m0 = c/rho^3.
M, c, rho = sp.symbols("M c rho", positive=True)
F0 = 2 * M / rho - c**2 / rho**4
R0 = 2 * (F0 + rho * sp.diff(F0, rho)) / rho**2
print("maximal slice: R - 6 m0^2 =", sp.simplify(R0 - 6 * (c / rho**3) ** 2))
print("bowen-york divergence 2m'+6m/r:", sp.simplify(2 * sp.diff(c / rho**3, rho) + 6 * c / rho**4))

# Schwarzschild-de Sitter: F = Lambda r^2/3 + 2 M eps / r solves F + r F' = Lambda r^2.
Lam, eps = sp.symbols("Lambda epsilon")
F = Lam * r**2 / 3 + 2 * M * eps / r
print("sds ode:", sp.simplify(F + r * sp.diff(F, r) - Lam * r**2))

# Quadratic remainder at eta = 0.1 with |mu|^2 = 6 m^2.  With N = D phi - R phi/8
# + |mu|^2 phi^-7/8 + a phi^5 the remainder is
# Q = |mu|^2/8 ((1+eta)^-7 - 1 + 7 eta) + a ((1+eta)^5 - 1 - 5 eta).
mp.dps = 40
eta = mpf("0.1")
print("(1.1)^-7 - 1 + 0.7 =", mp.nstr((1 + eta) ** -7 - 1 + 7 * eta, 20))
print("(1.1)^5 - 1 - 0.5 =", mp.nstr((1 + eta) ** 5 - 1 - 5 * eta, 20))

# Conformal transformation of the Hamiltonian constraint:
# R(phi^4 g) = phi^-5 (R phi - 8 Lap phi); |phi^-2 mu|^2_{phi^4 g} = phi^-12 |mu|^2.
phi = sp.Function("phi")(r)
Lap = (sp.diff(phi, r, 2) + (2 / r - sp.diff(A, r) / (2 * A)) * sp.diff(phi, r)) / A
Rg = sp.Function("R")(r)
mu2, tau, a = sp.symbols("mu2 tau a")
N = Lap - Rg * phi / 8 + mu2 * phi**-7 / 8 + (Lam / 4 - tau**2 / 12) * phi**5
H = phi**-5 * (Rg * phi - 8 * Lap) - phi**-12 * mu2 + sp.Rational(2, 3) * tau**2 - 2 * Lam
print("H' + 8 phi^-5 N:", sp.simplify(H + 8 * phi**-5 * N))

# Smooth cutoff: chi(s) = psi((4-s)/3) / (psi((4-s)/3) + psi((s-1)/3)), psi(t)=exp(-1/t).
s = sp.symbols("s")
psi = lambda t: sp.exp(-1 / t)
chi = psi((4 - s) / 3) / (psi((4 - s) / 3) + psi((s - 1) / 3))
print("chi(2.5) =", sp.N(chi.subs(s, sp.Rational(5, 2)), 20))
for k in range(1, 5):
    print(f"chi^({k})(2) =", sp.N(sp.diff(chi, s, k).subs(s, 2), 20))
print("chi(1.7) =", sp.N(chi.subs(s, sp.Rational(17, 10)), 20))

print("polynomial profiles u = r^2, v = r, w = r^2:")
for lv in range(1, 5):
    U, V, W = flat_blocks(r**2, r, r**2, lv)
    print(f"  l={lv}: U={sp.nsimplify(U)}  V/r={sp.simplify(V / r)}  W/r^2={sp.simplify(W / r**2)}")

# Radial Laplacian on the unit round 3-sphere, b = sin x: eigenvalues -k(k+2).
x = sp.symbols("x")
for k in range(4):
    f = sp.sin((k + 1) * x) / sp.sin(x)
    lap = sp.diff(sp.sin(x) ** 2 * sp.diff(f, x), x) / sp.sin(x) ** 2
    print(f"S^3 radial mode k={k}: Lap f / f =", sp.simplify(lap / f))
print("unit ball Dirichlet, l=0: -pi^2 =", sp.N(-sp.pi**2, 20))

# KID candidates: C = cos x on the round sphere with Lambda = 3, and the
# Schwarzschild lapse on the time-symmetric slice with Lambda = 0.
C = sp.cos(x)
hess_rr = sp.diff(C, x, 2)
hess_tt = sp.cos(x) / sp.sin(x) * sp.diff(C, x)
print("de Sitter KID rr:", sp.simplify(-hess_rr + (2 - 3) * C), " angular:", sp.simplify(-hess_tt + (2 - 3) * C))
M = sp.symbols("M", positive=True)
A = 1 / (1 - 2 * M / r)
N = sp.sqrt(1 - 2 * M / r)
hr = (sp.diff(N, r, 2) - sp.diff(A, r) / (2 * A) * sp.diff(N, r)) / A
ht = sp.diff(N, r) / (A * r)
ric_r = -2 * M / r**3
ric_t = M / r**3
print("Schwarzschild KID rr:", sp.simplify(-hr + ric_r * N), " angular:", sp.simplify(-ht + ric_t * N))
