"""
Manufactured solutions and their source terms.

Exact fields are written once as sympy expressions; chemical potential and
source terms are obtained by symbolic differentiation of the strong
residuals and compiled to numpy callables with ``lambdify``. Sources are
consistent with the weak forms: b in skew form, c_hat(B, B, v) =
(B x curl B, v), d(v, p) = (p, div v), and the advection term enters the
phase equation as +u . grad(phi).
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import sympy as sym
from numpy.typing import NDArray

from forms.schemas import CoefficientLaw
from scheme.schemas import SchemeParams, Sources

X, Y, T = sym.symbols("x y t", real=True)
PI = sym.pi

Scalar = Callable[..., NDArray[np.float64]]
Pair = Callable[..., tuple[NDArray[np.float64], NDArray[np.float64]]]


def _law(law: CoefficientLaw, phi: sym.Expr) -> sym.Expr:
    if law.kind == "exp_pos":
        return sym.exp(phi)
    if law.kind == "exp_neg":
        return sym.exp(-phi)
    return sym.Float(law.value)


def _grad(f: sym.Expr) -> tuple[sym.Expr, sym.Expr]:
    return sym.diff(f, X), sym.diff(f, Y)


def _div(v: tuple[sym.Expr, sym.Expr]) -> sym.Expr:
    return sym.diff(v[0], X) + sym.diff(v[1], Y)


def _curl(v: tuple[sym.Expr, sym.Expr]) -> sym.Expr:
    return sym.diff(v[1], X) - sym.diff(v[0], Y)


def _rot(w: sym.Expr) -> tuple[sym.Expr, sym.Expr]:
    """Vector curl of a scalar: (d2 w, -d1 w)."""
    return sym.diff(w, Y), -sym.diff(w, X)


def _compile_scalar(expr: sym.Expr) -> Scalar:
    fn = sym.lambdify((X, Y, T), expr, modules="numpy")

    def evaluate(x: NDArray[np.float64], y: NDArray[np.float64], t: float) -> NDArray[np.float64]:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        return np.asarray(fn(x, y, t), dtype=float) + np.zeros(shape)

    return evaluate


def _compile_pair(exprs: tuple[sym.Expr, sym.Expr]) -> Pair:
    first, second = (_compile_scalar(e) for e in exprs)

    def evaluate(
        x: NDArray[np.float64], y: NDArray[np.float64], t: float
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return first(x, y, t), second(x, y, t)

    return evaluate


def default_fields() -> dict[str, object]:
    """Exact phase, velocity, pressure and magnetic fields of the test problem."""
    s = sym.sin(T)
    return {
        "phi": 2 + s * sym.cos(PI * X) * sym.cos(PI * Y),
        "u": (
            PI * sym.sin(2 * PI * Y) * sym.sin(PI * X) ** 2 * s,
            -PI * sym.sin(2 * PI * X) * sym.sin(PI * Y) ** 2 * s,
        ),
        "p": sym.cos(PI * X) * sym.sin(PI * Y) * s,
        "B": (
            sym.sin(PI * X) * sym.cos(PI * Y) * s,
            -sym.sin(PI * Y) * sym.cos(PI * X) * s,
        ),
    }


@dataclass(frozen=True)
class ManufacturedSolution:
    """
    Closed-form exact fields with derived chemical potential and sources.

    Every attribute is a numpy callable of (x, y, t); vector quantities
    return component pairs, gradients of vectors return
    ((d1 v1, d2 v1), (d1 v2, d2 v2)).
    """

    phi: Scalar
    mu: Scalar
    p: Scalar
    u: Pair
    B: Pair
    grad_phi: Pair
    grad_mu: Pair
    grad_p: Pair
    grad_u: tuple[Pair, Pair]
    grad_B: tuple[Pair, Pair]
    div_u: Scalar
    div_B: Scalar
    g_phi: Scalar
    g_u: Pair
    g_B: Pair

    def sources(self) -> Sources:
        return Sources(g_phi=self.g_phi, g_u=self.g_u, g_B=self.g_B)

    def initial_phi(self, x: NDArray[np.float64], y: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.phi(x, y, 0.0)

    def initial_u(
        self, x: NDArray[np.float64], y: NDArray[np.float64]
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return self.u(x, y, 0.0)

    def initial_B(
        self, x: NDArray[np.float64], y: NDArray[np.float64]
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return self.B(x, y, 0.0)


def _check_solenoidal(name: str, div: Scalar) -> None:
    rng = np.random.default_rng(20240601)
    x, y, t = rng.random(64), rng.random(64), rng.random(64)
    worst = float(np.max(np.abs(div(x, y, t))))
    if worst > 1e-10:
        raise ValueError(
            f"manufactured {name} is not divergence free (|div| up to {worst:.2e}); "
            "the source terms assume a solenoidal field"
        )


def build_manufactured_solution(
    eps: float,
    lam: float,
    s_c: float,
    kappa: CoefficientLaw,
    nu: CoefficientLaw,
    eta: CoefficientLaw,
    fields: Optional[dict[str, object]] = None,
) -> ManufacturedSolution:
    """
    Derive chemical potential and sources for a set of exact fields.

    Raises:
        ValueError: If the exact velocity or magnetic field is not solenoidal
    """
    fields = fields or default_fields()
    phi = fields["phi"]
    u = fields["u"]
    p = fields["p"]
    b = fields["B"]

    e = sym.Float(eps)
    laplace_phi = _div(_grad(phi))
    mu = -e * laplace_phi + (phi**3 - phi) / e

    kappa_e, nu_e, eta_e = _law(kappa, phi), _law(nu, phi), _law(eta, phi)
    grad_phi, grad_mu, grad_p = _grad(phi), _grad(mu), _grad(p)

    g_phi = (
        sym.diff(phi, T)
        - e * _div((kappa_e * grad_mu[0], kappa_e * grad_mu[1]))
        + u[0] * grad_phi[0]
        + u[1] * grad_phi[1]
    )

    grad_u = [_grad(u[0]), _grad(u[1])]
    strain = [[(grad_u[c][d] + grad_u[d][c]) / 2 for d in range(2)] for c in range(2)]
    viscous = [
        sum(sym.diff(2 * nu_e * strain[c][d], (X, Y)[d]) for d in range(2)) for c in range(2)
    ]
    convection = [u[0] * grad_u[c][0] + u[1] * grad_u[c][1] for c in range(2)]
    curl_b = _curl(b)
    lorentz = (b[1] * curl_b, -b[0] * curl_b)
    g_u = tuple(
        sym.diff(u[c], T)
        - viscous[c]
        + convection[c]
        + sym.Float(s_c) * lorentz[c]
        + grad_p[c]
        - sym.Float(lam) * mu * grad_phi[c]
        for c in range(2)
    )

    resistive = _rot(eta_e * curl_b)
    induction = _rot(u[0] * b[1] - u[1] * b[0])
    g_b = tuple(sym.diff(b[c], T) + resistive[c] - induction[c] for c in range(2))

    grad_b = [_grad(b[0]), _grad(b[1])]
    solution = ManufacturedSolution(
        phi=_compile_scalar(phi),
        mu=_compile_scalar(mu),
        p=_compile_scalar(p),
        u=_compile_pair(u),
        B=_compile_pair(b),
        grad_phi=_compile_pair(grad_phi),
        grad_mu=_compile_pair(grad_mu),
        grad_p=_compile_pair(grad_p),
        grad_u=(_compile_pair(grad_u[0]), _compile_pair(grad_u[1])),
        grad_B=(_compile_pair(grad_b[0]), _compile_pair(grad_b[1])),
        div_u=_compile_scalar(_div(u)),
        div_B=_compile_scalar(_div(b)),
        g_phi=_compile_scalar(g_phi),
        g_u=_compile_pair(g_u),
        g_B=_compile_pair(g_b),
    )
    _check_solenoidal("velocity", solution.div_u)
    _check_solenoidal("magnetic field", solution.div_B)
    return solution


@lru_cache(maxsize=16)
def _cached_solution(
    eps: float,
    lam: float,
    s_c: float,
    kappa: CoefficientLaw,
    nu: CoefficientLaw,
    eta: CoefficientLaw,
) -> ManufacturedSolution:
    return build_manufactured_solution(eps, lam, s_c, kappa, nu, eta)


def manufactured_solution(params: SchemeParams) -> ManufacturedSolution:
    """Exact solution of the test problem for the given parameters (cached)."""
    return _cached_solution(params.eps, params.lam, params.s_c, params.kappa, params.nu, params.eta)


def mms_sources(params: SchemeParams) -> Sources:
    """Source closures g_phi, g_u, g_B making the exact fields solve the system."""
    return manufactured_solution(params).sources()
