"""Projection of phase-space states onto physical expectation contributions.

Per-realization values of the atomic coherences, the inversion, and the field
quadratures are algebraic functions of the phase-space point; ensemble means
of these projections converge to the quantum expectation values.  For higher
accuracy an observable can instead be carried along as an extra SDE
coordinate via the stochastic chain rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .basis import POLE_FLOOR, BasisFamily
from .errors import PoleProximityError
from .jc import ModelParams, as_state_vector, split_state
from .sde import ObservableMap, SdeSystem

DEFAULT_OBSERVABLES = ("rho_11", "rho_22", "rho_21", "rho_12", "nu")


@dataclass(frozen=True)
class ObservableSet:
    """Projected per-realization contributions at one or many states.

    ``rho21`` and ``rho12`` are not complex conjugates realization by
    realization; only their ensemble means are.
    """

    rho21: np.ndarray
    rho12: np.ndarray
    nu: np.ndarray
    e: np.ndarray
    h: np.ndarray


def project(family: BasisFamily, state, check=True) -> ObservableSet:
    """Map a phase-space vector (batched ok) to its observable contributions."""
    state = as_state_vector(state)
    n = (state.shape[-1] - 2) // 2
    alpha, beta, z, w = split_state(state, n)
    h, ht = family.pair(z, w)
    denom = 1.0 + h * ht
    if check and np.any(~np.isfinite(np.abs(denom)) | (np.abs(denom) < POLE_FLOOR)):
        raise PoleProximityError("1 + h*htilde vanishes; projection undefined")
    return ObservableSet(
        rho21=h / denom,
        rho12=ht / denom,
        nu=(h * ht - 1.0) / denom,
        e=beta + alpha,
        h=1j * (beta - alpha),
    )


def parse_mode_index(name: str, prefix: str, n_modes: int):
    tail = name[len(prefix):]
    idx = int(tail)
    if not 1 <= idx <= n_modes:
        raise ValueError(f"mode index out of range in observable {name!r}")
    return idx - 1


def observable_bundle(
    params: ModelParams, family: BasisFamily, names, probes=()
) -> ObservableMap:
    """Batched evaluator for named observables of the phase-space SDE.

    Supported names: rho_11, rho_22, rho_21, rho_12, nu, z, w, e_<n>, h_<n>,
    E_at_<j>/H_at_<j> for probe positions (1-based index into ``probes``).
    """
    n = params.mode_count
    names = tuple(names)
    probes = tuple(float(x) for x in probes)
    k = params.wave_numbers
    e_p = params.e_photon
    inv_z = 1.0 / params.impedance

    def batch(state):
        state = as_state_vector(state)
        alpha, beta, z, w = split_state(state, n)
        h, ht = family.pair(z, w)
        with np.errstate(all="ignore"):
            denom = 1.0 + h * ht
            rho21 = h / denom
            rho12 = ht / denom
            nu = (h * ht - 1.0) / denom
            e_field = beta + alpha
            h_field = 1j * (beta - alpha)
            cols = []
            for name in names:
                if name == "rho_21":
                    cols.append(rho21)
                elif name == "rho_12":
                    cols.append(rho12)
                elif name == "nu":
                    cols.append(nu)
                elif name == "rho_11":
                    cols.append((1.0 - nu) / 2.0)
                elif name == "rho_22":
                    cols.append((1.0 + nu) / 2.0)
                elif name == "z":
                    cols.append(z)
                elif name == "w":
                    cols.append(w)
                elif name.startswith("e_"):
                    cols.append(e_field[..., parse_mode_index(name, "e_", n)])
                elif name.startswith("h_"):
                    cols.append(h_field[..., parse_mode_index(name, "h_", n)])
                elif name.startswith("E_at_"):
                    x = probes[int(name[5:]) - 1]
                    cols.append((e_p * np.sin(k * x) * e_field).sum(axis=-1))
                elif name.startswith("H_at_"):
                    x = probes[int(name[5:]) - 1]
                    cols.append(-inv_z * (e_p * np.cos(k * x) * h_field).sum(axis=-1))
                else:
                    raise ValueError(f"unknown observable {name!r}")
            return np.stack([np.asarray(c, dtype=complex) for c in cols], axis=-1)

    return ObservableMap(names, batch)


@dataclass(frozen=True)
class SmoothObservable:
    """Scalar observable with analytic gradient and Hessian over the state."""

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]


def extend_with_observable(system: SdeSystem, v: SmoothObservable) -> SdeSystem:
    """Augment an SDE with the coordinate Sigma = v(X) via the Ito formula.

    The extra coordinate evolves with drift grad(v).A + (1/2) tr(B B^T Hess v)
    and noise grad(v).B, sharing the original Wiener increments; the original
    coordinates are untouched and do not see Sigma.
    """
    n = system.dim

    def drift(state):
        phi = state[..., :n]
        a = np.asarray(system.drift(phi), dtype=complex)
        b = np.asarray(system.noise(phi), dtype=complex)
        grad = np.asarray(v.gradient(phi), dtype=complex)
        hess = np.asarray(v.hessian(phi), dtype=complex)
        corr = np.einsum("...ij,...kj->...ik", b, b)
        extra = np.einsum("...i,...i->...", a, grad) + 0.5 * np.einsum(
            "...pq,...pq->...", corr, hess
        )
        return np.concatenate([a, extra[..., None]], axis=-1)

    def noise(state):
        phi = state[..., :n]
        b = np.asarray(system.noise(phi), dtype=complex)
        grad = np.asarray(v.gradient(phi), dtype=complex)
        row = np.einsum("...i,...im->...m", grad, b)
        return np.concatenate([b, row[..., None, :]], axis=-2)

    return SdeSystem(
        dim=n + 1,
        noise_dim=system.noise_dim,
        drift=drift,
        noise=noise,
        constant_noise=False,
    )


def projection_observable(which: str, family: BasisFamily, n_modes: int) -> SmoothObservable:
    """Closed-form value/gradient/Hessian of rho_21, rho_12, or nu.

    Derivatives act on the full phase vector; bosonic entries are zero since
    the atomic projections depend only on (z, w).
    """
    if which not in ("rho_21", "rho_12", "nu"):
        raise ValueError("which must be one of rho_21, rho_12, nu")
    dim = 2 * (n_modes + 1)
    iz, iw = 2 * n_modes, 2 * n_modes + 1

    def parts(state):
        state = as_state_vector(state)
        _, _, z, w = split_state(state, n_modes)
        return family.jet(z, w), state.shape[:-1]

    def value(state):
        pf, _ = parts(state)
        denom = 1.0 + pf.h * pf.ht
        if which == "rho_21":
            return pf.h / denom
        if which == "rho_12":
            return pf.ht / denom
        return (pf.h * pf.ht - 1.0) / denom

    def gradient(state):
        pf, batch = parts(state)
        den2 = (1.0 + pf.h * pf.ht) ** 2
        out = np.zeros(batch + (dim,), dtype=complex)
        if which == "rho_21":
            out[..., iz] = pf.hp / den2
            out[..., iw] = -pf.h**2 * pf.htp / den2
        elif which == "rho_12":
            out[..., iz] = -pf.ht**2 * pf.hp / den2
            out[..., iw] = pf.htp / den2
        else:
            out[..., iz] = 2.0 * pf.hp * pf.ht / den2
            out[..., iw] = 2.0 * pf.h * pf.htp / den2
        return out

    def hessian(state):
        pf, batch = parts(state)
        denom = 1.0 + pf.h * pf.ht
        den2, den3 = denom**2, denom**3
        out = np.zeros(batch + (dim, dim), dtype=complex)
        if which == "rho_21":
            zz = pf.hpp / den2 - 2.0 * pf.hp**2 * pf.ht / den3
            zw = -2.0 * pf.h * pf.hp * pf.htp / den3
            ww = -pf.h**2 * pf.htpp / den2 + 2.0 * pf.h**3 * pf.htp**2 / den3
        elif which == "rho_12":
            zz = -pf.ht**2 * pf.hpp / den2 + 2.0 * pf.ht**3 * pf.hp**2 / den3
            zw = -2.0 * pf.ht * pf.hp * pf.htp / den3
            ww = pf.htpp / den2 - 2.0 * pf.htp**2 * pf.h / den3
        else:
            zz = 2.0 * pf.hpp * pf.ht / den2 - 4.0 * pf.hp**2 * pf.ht**2 / den3
            zw = 2.0 * pf.hp * pf.htp * (1.0 - pf.h * pf.ht) / den3
            ww = 2.0 * pf.htpp * pf.h / den2 - 4.0 * pf.htp**2 * pf.h**2 / den3
        out[..., iz, iz] = zz
        out[..., iz, iw] = zw
        out[..., iw, iz] = zw
        out[..., iw, iw] = ww
        return out

    return SmoothObservable(value, gradient, hessian)
