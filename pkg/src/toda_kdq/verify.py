"""Deterministic invariant suite behind the `verify-all` CLI command.

Every check uses fixed seeds and fixed summation order, so two runs print
byte-identical tables.  The ensemble sizes are chosen to finish in seconds;
the full-scale acceptance battery lives in the test suite.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import iso_flow, kdq, pseudo_toda, sphere, toda_1d
from .moment_1d import (
    DiscreteMeasure,
    JacobiMatrix,
    continued_fraction_eval,
    jacobi_from_measure,
    nevanlinna_limit_check,
    resolvent_NN,
    spectral_data_from_jacobi,
    stieltjes_transform,
)

__all__ = ["CheckResult", "run_all", "format_table", "max_threads"]

_SEED = 20240811


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    observed: float
    tolerance: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} observed={self.observed!r} tol={self.tolerance!r}"


def max_threads() -> int:
    """Parallelism cap from TODA_KDQ_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("TODA_KDQ_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    cap = max_threads()
    if cap > 1:
        with ThreadPoolExecutor(max_workers=cap) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _random_flaschka(rng, n):
    return toda_1d.TodaStateFlaschka(
        a=rng.uniform(0.3, 1.0, size=n - 1), b=rng.uniform(-1.0, 1.0, size=n)
    )


def _check_sphere_orthonormality() -> CheckResult:
    worst = 0.0
    for n in (2, 3):
        deg = 12
        pts, wts = sphere.sphere_nodes(n, deg)
        mats = [sphere.harmonic_basis(n, k, pts) for k in range(6)]
        for i, bi in enumerate(mats):
            for j, bj in enumerate(mats):
                gram = (bi * wts[:, None]).T @ bj
                expected = np.eye(bi.shape[1], bj.shape[1]) if i == j else 0.0
                worst = max(worst, float(np.max(np.abs(gram - expected))))
    return CheckResult("sphere-orthonormality", worst <= 1e-10, worst, 1e-10)


def _check_sphere_addition() -> CheckResult:
    rng = np.random.default_rng(_SEED)
    worst = 0.0
    for n in (2, 3):
        dirs = rng.normal(size=(20, n))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        for k in range(9):
            sums = (sphere.harmonic_basis(n, k, dirs) ** 2).sum(axis=1)
            worst = max(worst, float(np.max(np.abs(sums - sphere.dim_harmonics(n, k)))))
    return CheckResult("sphere-addition-theorem", worst <= 1e-10, worst, 1e-10)


def _check_moment_roundtrip() -> CheckResult:
    rng = np.random.default_rng(_SEED + 1)
    worst = 0.0
    for _ in range(5):
        atoms = np.sort(rng.uniform(-2.0, 2.0, size=6))
        w = rng.uniform(0.2, 1.0, size=6)
        mu = DiscreteMeasure(atoms, w / w.sum())
        sd = spectral_data_from_jacobi(jacobi_from_measure(mu))
        worst = max(
            worst,
            float(np.max(np.abs(sd.eigenvalues - mu.atoms))),
            float(np.max(np.abs(sd.masses - mu.weights))),
        )
    return CheckResult("moment-inverse-roundtrip", worst <= 1e-10, worst, 1e-10)


def _check_moment_triple() -> CheckResult:
    rng = np.random.default_rng(_SEED + 2)
    worst = 0.0
    jac = JacobiMatrix(diag=rng.uniform(-1, 1, size=6), offdiag=rng.uniform(0.3, 1.0, size=5))
    sd = spectral_data_from_jacobi(jac)
    mu = sd.to_measure()
    for _ in range(20):
        lam = complex(rng.uniform(-3, 3), rng.uniform(0.5, 2))
        vals = [
            continued_fraction_eval(jac, lam),
            resolvent_NN(jac, lam),
            stieltjes_transform(mu, lam),
        ]
        scale = max(abs(v) for v in vals)
        spread = max(abs(a - b) for a in vals for b in vals)
        worst = max(worst, float(spread / scale))
    return CheckResult("moment-cf-resolvent-eigen", worst <= 1e-11, worst, 1e-11)


def _symmetric_measure(rng) -> DiscreteMeasure:
    # symmetric atoms with paired weights: odd moments vanish, so the
    # residual decays at second order (100x per decade); atom magnitudes
    # ~2-3 keep the top moment far above the double-precision cancellation
    # floor of the y = 1000 bracket
    u = np.sort(rng.uniform(2.0, 3.0, size=2))
    w = rng.uniform(0.2, 1.0, size=2)
    return DiscreteMeasure([-u[1], -u[0], u[0], u[1]], [w[1], w[0], w[0], w[1]])


def _check_moment_nevanlinna() -> CheckResult:
    rng = np.random.default_rng(_SEED + 3)
    mu = _symmetric_measure(rng)
    worst_ratio = 0.0
    ok = True
    for n_trunc in (1, 2):
        res = nevanlinna_limit_check(mu, n_trunc, [10.0, 100.0, 1000.0])
        ok = ok and bool(np.all(np.diff(res) < 0.0))
        worst_ratio = max(worst_ratio, float(res[-1] / res[0]))
    return CheckResult("moment-nevanlinna-decay", ok and worst_ratio <= 1e-3, worst_ratio, 1e-3)


def _toda_ensemble():
    rng = np.random.default_rng(_SEED + 4)
    return [_random_flaschka(rng, n) for n in (2, 3, 4, 5, 6)]


def _toda_run(state):
    traj = toda_1d.integrate_toda(state, 2.0, 1e-3)
    lam0 = spectral_data_from_jacobi(toda_1d.lax_matrices(state)[0]).eigenvalues
    h0 = toda_1d.hamiltonian_ab(state)
    drift_lam = drift_h = dev_trace = dev_spec = 0.0
    for i in range(0, len(traj), 10):
        s = traj.state(i)
        lax, _ = toda_1d.lax_matrices(s)
        lam = spectral_data_from_jacobi(lax).eigenvalues
        drift_lam = max(drift_lam, float(np.max(np.abs(lam - lam0))))
        h = toda_1d.hamiltonian_ab(s)
        drift_h = max(drift_h, abs(h - h0))
        dev_trace = max(dev_trace, abs(float(np.sum(lam0**2)) - 0.5 * h))
        sp = toda_1d.spectral_solve(state, traj.times[i])
        dev_spec = max(
            dev_spec,
            float(np.max(np.abs(sp.a - s.a))) if s.a.size else 0.0,
            float(np.max(np.abs(sp.b - s.b))),
        )
    return drift_lam, drift_h, dev_trace, dev_spec


def _check_toda_suite():
    results = _map(_toda_run, _toda_ensemble())
    drift_lam = max(r[0] for r in results)
    drift_h = max(r[1] for r in results)
    dev_trace = max(r[2] for r in results)
    dev_spec = max(r[3] for r in results)

    s0 = toda_1d.TodaStateFlaschka(a=[0.5], b=[0.0, 0.0])
    closed_dev = 0.0
    for t in np.linspace(0.0, 5.0, 26):
        s = toda_1d.spectral_solve(s0, t)
        closed_dev = max(
            closed_dev,
            float(abs(s.a[0] - 0.5 / np.cosh(t))),
            float(abs(s.b[0] - 0.5 * np.tanh(t))),
            float(abs(s.b[1] + 0.5 * np.tanh(t))),
        )
    return [
        CheckResult("toda-isospectral-rk4", drift_lam <= 1e-8, drift_lam, 1e-8),
        CheckResult("toda-energy-conservation", drift_h <= 1e-8, drift_h, 1e-8),
        CheckResult("toda-trace-identity", dev_trace <= 1e-12, dev_trace, 1e-12),
        CheckResult("toda-spectral-vs-rk4", dev_spec <= 1e-6, dev_spec, 1e-6),
        CheckResult("toda-closed-form-n2", closed_dev <= 1e-6, closed_dev, 1e-6),
    ]


def _check_kdq_kernel() -> CheckResult:
    rng = np.random.default_rng(_SEED + 5)
    worst = 0.0
    for n in (2, 3):
        for _ in range(15):
            x = rng.normal(size=n)
            x *= rng.uniform(0.2, 0.5) / np.linalg.norm(x)
            th = rng.normal(size=n)
            th /= np.linalg.norm(th)
            zeta = (
                np.linalg.norm(x)
                * rng.uniform(2.0, 5.0)
                * np.exp(1j * rng.uniform(-np.pi / 4, np.pi / 4))
            )
            p = kdq.KDQPoint(zeta, th)
            series = kdq.hua_kernel(p, x, 40)
            closed = p.zeta ** (n - 1) / kdq.aronszajn_r_pow_n(p, x)
            worst = max(worst, abs(series - closed))
    return CheckResult("kdq-kernel-series-vs-closed", worst <= 1e-10, worst, 1e-10)


def _check_kdq_cauchy() -> CheckResult:
    rng = np.random.default_rng(_SEED + 6)
    worst = 0.0
    for n in (2, 3):
        for k in range(4):
            for ell in range(1, sphere.dim_harmonics(n, k) + 1):
                for j in range(3):
                    poly = kdq.AlmansiPolynomial(n, {(j, k, ell): 1.0})
                    x = rng.normal(size=n)
                    x *= rng.uniform(0.2, 0.5) / np.linalg.norm(x)
                    val = kdq.cauchy_reproduce(poly, x)
                    worst = max(worst, abs(val - poly.eval(x)))
    return CheckResult("kdq-cauchy-reproduction", worst <= 1e-8, worst, 1e-8)


def _check_kdq_multi_nevanlinna() -> CheckResult:
    mu = kdq.PseudoPositiveMeasure(
        3, {(0, 1): DiscreteMeasure([0.5], [1.0], half_line=True)}
    )
    zetas = [m * np.exp(1j * np.pi / 4) for m in (4.0, 8.0, 16.0)]
    res = kdq.multi_nevanlinna_check(mu, (0, 1), 1, zetas)
    ok = bool(np.all(np.diff(res) < 0.0)) and res[-1] <= 1e-4
    return CheckResult("kdq-multi-nevanlinna", ok, float(res[-1]), 1e-4)


def _pseudo_fixture() -> pseudo_toda.PseudoTodaState:
    rng = np.random.default_rng(_SEED + 7)
    comps = {}
    for k in range(3):
        for ell in range(1, sphere.dim_harmonics(3, k) + 1):
            lam = np.sort(rng.uniform(0.2, 1.2, size=4))
            m = rng.uniform(0.2, 1.0, size=4)
            comps[(k, ell)] = pseudo_toda.TodaComponent(lam, m / m.sum())
    return pseudo_toda.PseudoTodaState(3, comps)


def _check_pseudo_suite():
    state = _pseudo_fixture()
    h0 = pseudo_toda.total_hamiltonian(state)
    norm_dev = 0.0
    h_dev = 0.0
    for t in (0.0, 1.0, 10.0, 100.0):
        ev = pseudo_toda.evolve(state, t)
        norm_dev = max(norm_dev, pseudo_toda.normalization_invariant(ev))
        h_dev = max(h_dev, abs(pseudo_toda.total_hamiltonian(ev) - h0))
    ode_res = max(
        pseudo_toda.component_ode_residual(state, key, 0.5, 1e-4)
        for key in state.components
    )
    mu = pseudo_toda.state_to_measure(pseudo_toda.evolve(state, 2.0))
    rep = kdq.growth_condition_check(mu)
    growth_dev = max(abs(rep.C - 1.0), abs(rep.D - 1.0))
    return [
        CheckResult("pseudo-normalization", norm_dev <= 1e-12, norm_dev, 1e-12),
        CheckResult("pseudo-hamiltonian-constant", h_dev == 0.0, h_dev, 0.0),
        CheckResult("pseudo-ode-residual", ode_res <= 1e-6, ode_res, 1e-6),
        CheckResult("pseudo-growth-c-d-one", growth_dev <= 1e-12, growth_dev, 1e-12),
    ]


def _check_iso_monotonicity() -> CheckResult:
    rng = np.random.default_rng(_SEED + 8)
    worst_inc = 0.0
    worst_res = 0.0
    for _ in range(5):
        comps = {}
        for k in range(3):
            lam = rng.uniform(0.3, 2.0, size=3)
            comps[(k, 1)] = iso_flow.IsoFlowComponent(lam, rng.uniform(0.1, 1.0, size=3))
        rep = iso_flow.monotonicity_check(
            iso_flow.IsoFlowState(comps), np.linspace(0.0, 10.0, 21), dt=1e-5
        )
        worst_inc = max(worst_inc, rep.max_increase)
        worst_res = max(worst_res, rep.max_derivative_residual)
    ok = worst_inc <= 1e-12 and worst_res <= 1e-8
    return CheckResult("iso-monotonicity", ok, max(worst_inc, worst_res), 1e-8)


def run_all() -> list[CheckResult]:
    """Run every invariant check, in a fixed order."""
    results = [
        _check_sphere_orthonormality(),
        _check_sphere_addition(),
        _check_moment_roundtrip(),
        _check_moment_triple(),
        _check_moment_nevanlinna(),
    ]
    results.extend(_check_toda_suite())
    results.extend(
        [
            _check_kdq_kernel(),
            _check_kdq_cauchy(),
            _check_kdq_multi_nevanlinna(),
        ]
    )
    results.extend(_check_pseudo_suite())
    results.append(_check_iso_monotonicity())
    return results


def format_table(results: list[CheckResult]) -> str:
    lines = [r.line() for r in results]
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
