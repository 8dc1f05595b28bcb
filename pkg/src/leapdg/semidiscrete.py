"""Element-local right-hand sides, numerical fluxes and mass-block solves.

Right-hand sides come in two forms. The *weak* form is the vector of
inner products against the nodal basis (volume term plus surface flux
integrals). The *strong* form ``g`` is the nodal field whose P_N mass
product reproduces it, ``R_k = J_k M g_k``; the time loop works with ``g``
and applies precomputed ``(mass block)^-1 J M`` operators.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUpError, MaterialError


@dataclass
class FieldState:
    """Staggered unknowns: E at t^m, Hz at t^{m+1/2}, as (K, Np) arrays."""

    Ex: np.ndarray
    Ey: np.ndarray
    Hz: np.ndarray
    m: int = 0

    @classmethod
    def zeros(cls, shape, m=0):
        return cls(np.zeros(shape), np.zeros(shape), np.zeros(shape), m)

    def copy(self):
        return FieldState(self.Ex.copy(), self.Ey.copy(), self.Hz.copy(), self.m)

    def scaled(self, a):
        return FieldState(a * self.Ex, a * self.Ey, a * self.Hz, self.m)

    def is_finite(self):
        return bool(np.isfinite(self.Ex).all() and np.isfinite(self.Ey).all()
                    and np.isfinite(self.Hz).all())


@dataclass(frozen=True, eq=False)
class FluxTraces:
    """Jumps [u] = u^- - u^+ at face nodes, shape (K, 3, Nfp); boundary jumps are u^-."""

    Ex: np.ndarray
    Ey: np.ndarray
    Hz: np.ndarray


def flux_traces(disc, Ex=None, Ey=None, Hz=None):
    zero = None
    def j(u):
        nonlocal zero
        if u is None:
            if zero is None:
                zero = np.zeros((disc.K, 3, disc.ops.Nfp))
            return zero
        return disc.jump(u)
    return FluxTraces(j(Ex), j(Ey), j(Hz))


def _check_finite(disc, arr, what):
    if arr.ndim == 3:
        bad = ~np.isfinite(arr)
        if bad.any():
            k, f, _ = np.argwhere(bad)[0]
            raise BlowUpError(f"non-finite {what} at element {k}, face {f}")
    elif not np.isfinite(arr).all():
        k, _ = np.argwhere(~np.isfinite(arr))[0]
        raise BlowUpError(f"non-finite {what} in element {k}")


@dataclass(eq=False)
class MaxwellOperator:
    """Semi-discrete TE operator on a fixed discretization and material."""

    disc: object
    material: object
    impedance: object
    alpha: int
    face_alpha: np.ndarray = field(init=False)
    _coef: dict = field(init=False, repr=False)
    electric_block: np.ndarray = field(init=False, repr=False)
    _electric_inv: np.ndarray = field(init=False, repr=False)
    _electric_update: np.ndarray = field(init=False, repr=False)
    magnetic_mass: np.ndarray = field(init=False, repr=False)
    _magnetic_update: object = field(init=False, repr=False)
    _kernel_data: object = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if self.alpha not in (0, 1):
            raise ValueError(f"alpha must be 0 or 1, got {self.alpha!r}")
        disc, imp = self.disc, self.impedance
        self.face_alpha = np.where(disc.boundary, 1.0, float(self.alpha))
        Zm, Zp, Ym, Yp = imp.Z, imp.Z_ext, imp.Y, imp.Y_ext
        n = disc.mesh.normals
        self._coef = {
            "nx": n[..., 0, None],
            "ny": n[..., 1, None],
            "e_h": (Zp / (Zp + Zm))[..., None],
            "e_e": (self.face_alpha / (Zp + Zm))[..., None],
            "h_e": (Yp / (Yp + Ym))[..., None],
            "h_h": (self.face_alpha / (Yp + Ym))[..., None],
        }
        self._build_mass_blocks()

    # {{{ setup

    def _build_mass_blocks(self):
        disc, mat = self.disc, self.material
        ops = disc.ops
        Np = ops.Np
        J = disc.mesh.jacobians[:, None, None]
        mxx = ops.weighted_mass(mat.eps_xx)
        mxy = ops.weighted_mass(mat.eps_xy)
        myy = ops.weighted_mass(mat.eps_yy)
        ref = np.empty((disc.K, 2 * Np, 2 * Np))
        ref[:, :Np, :Np] = mxx
        ref[:, :Np, Np:] = mxy
        ref[:, Np:, :Np] = mxy
        ref[:, Np:, Np:] = myy
        ref = 0.5 * (ref + ref.transpose(0, 2, 1))
        chol = _batched_cholesky(ref, "permittivity")
        self.electric_block = J * ref

        eye = np.eye(2 * Np)
        ref_inv = _cholesky_solve(chol, np.broadcast_to(eye, ref.shape))
        self._electric_inv = ref_inv / J
        mm = np.zeros((2 * Np, 2 * Np))
        mm[:Np, :Np] = ops.M
        mm[Np:, Np:] = ops.M
        self._electric_update = ref_inv @ mm

        mu = mat.mu
        if np.all(mu == mu.flat[0]):
            self.magnetic_mass = J * (mu.flat[0] * ops.M)[None]
            self._magnetic_update = 1.0 / mu.flat[0]
        else:
            mref = ops.weighted_mass(mu)
            mref = 0.5 * (mref + mref.transpose(0, 2, 1))
            mchol = _batched_cholesky(mref, "permeability")
            self.magnetic_mass = J * mref
            self._magnetic_update = _cholesky_solve(mchol, np.broadcast_to(ops.M, mref.shape))

    # }}}

    # {{{ strong-form pieces used by the time loop

    def electric_volume_and_h_flux(self, Hz, jump_Hz=None):
        """Strong E right-hand side from Hz alone (volume curl + Z^+[Hz] flux)."""
        disc, c = self.disc, self._coef
        Hx, Hy = disc.gradient(Hz)
        if jump_Hz is None:
            jump_Hz = disc.jump(Hz)
        common = c["e_h"] * jump_Hz
        gx = Hy + disc.lift(-c["ny"] * common)
        gy = -Hx + disc.lift(c["nx"] * common)
        return gx, gy

    def electric_alpha_flux(self, jump_Ex, jump_Ey):
        """Strong E right-hand side of the dissipative (alpha) flux part."""
        c = self._coef
        common = -c["e_e"] * (c["nx"] * jump_Ey - c["ny"] * jump_Ex)
        return self.disc.lift(-c["ny"] * common), self.disc.lift(c["nx"] * common)

    def magnetic_strong(self, Ex, Ey, jump_Hz_avg, jump_Ex=None, jump_Ey=None):
        disc, c = self.disc, self._coef
        Exx, Exy = disc.gradient(Ex)
        Eyx, _ = disc.gradient(Ey)
        if jump_Ex is None:
            jump_Ex = disc.jump(Ex)
        if jump_Ey is None:
            jump_Ey = disc.jump(Ey)
        flux = c["h_e"] * (c["nx"] * jump_Ey - c["ny"] * jump_Ex) - c["h_h"] * jump_Hz_avg
        return Exy - Eyx + disc.lift(flux)

    def boundary_data_sources(self, gEx, gEy, gHz):
        """Nodal source terms imposing ghost traces on boundary faces.

        The boundary flux takes jumps u^- - g instead of u^-, where the
        (K, 3, Nfp) arrays ``g*`` hold exterior data on boundary faces (values
        on interior faces are ignored). The flux is linear in the jumps, so
        the data moves to the right-hand side as the returned (sx, sy, sz).
        """
        disc, c = self.disc, self._coef
        mask = disc.boundary[..., None]
        jx, jy, jh = (np.where(mask, -g, 0.0) for g in (gEx, gEy, gHz))
        common = c["e_h"] * jh
        ax, ay = self.electric_alpha_flux(jx, jy)
        sx = disc.lift(-c["ny"] * common) + ax
        sy = disc.lift(c["nx"] * common) + ay
        sz = disc.lift(c["h_e"] * (c["nx"] * jy - c["ny"] * jx) - c["h_h"] * jh)
        return sx, sy, sz

    def kernel_data(self):
        """Contiguous arrays consumed by the fused kernels."""
        if self._kernel_data is None:
            disc, c = self.disc, self._coef
            C = np.ascontiguousarray
            mag = self._magnetic_update
            self._kernel_data = dict(
                vmapM=C(disc.vmapM), vmapP=C(disc.vmapP), bnd=C(disc.boundary),
                nx=C(c["nx"][..., 0]), ny=C(c["ny"][..., 0]),
                e_h=C(c["e_h"][..., 0]), e_e=C(c["e_e"][..., 0]),
                h_e=C(c["h_e"][..., 0]), h_h=C(c["h_h"][..., 0]),
                fscale=C(disc.fscale), Dr=C(disc.ops.Dr), Ds=C(disc.ops.Ds),
                metric=C(disc.mesh.metric), lift=C(disc.ops.lift),
                e_update=C(self._electric_update),
                h_update=np.zeros((1, 1, 1)) if np.isscalar(mag) else C(mag),
                h_scalar=float(mag) if np.isscalar(mag) else 0.0,
            )
        return self._kernel_data

    def electric_update(self, gx, gy):
        """(eps mass block)^-1 J M [gx; gy] per element."""
        Np = self.disc.Np
        g = np.concatenate([gx, gy], axis=1)[..., None]
        out = np.matmul(self._electric_update, g)[..., 0]
        return out[:, :Np], out[:, Np:]

    def magnetic_update(self, gz):
        """(mu mass)^-1 J M gz per element."""
        if np.isscalar(self._magnetic_update):
            return self._magnetic_update * gz
        return np.matmul(self._magnetic_update, gz[..., None])[..., 0]

    # }}}

    # {{{ weak-form interface

    def weak(self, g):
        return self.disc.mass_apply(g)

    def electric_rhs(self, Hz, E_avg_traces):
        """Weak right-hand sides (Rx, Ry) of the two electric equations.

        ``E_avg_traces`` holds the jumps of the time-averaged electric field;
        the Hz jump is taken from ``Hz`` itself.
        """
        gx, gy = self.electric_volume_and_h_flux(Hz)
        ax, ay = self.electric_alpha_flux(E_avg_traces.Ex, E_avg_traces.Ey)
        Rx, Ry = self.weak(gx + ax), self.weak(gy + ay)
        _check_finite(self.disc, Rx, "electric rhs (x)")
        _check_finite(self.disc, Ry, "electric rhs (y)")
        return Rx, Ry

    def magnetic_rhs(self, Ex, Ey, Hz_avg_traces):
        """Weak right-hand side Rz of the magnetic equation."""
        Rz = self.weak(self.magnetic_strong(Ex, Ey, Hz_avg_traces.Hz))
        _check_finite(self.disc, Rz, "magnetic rhs")
        return Rz

    def solve_electric_block(self, Rx, Ry):
        Np = self.disc.Np
        R = np.concatenate([Rx, Ry], axis=1)[..., None]
        out = np.matmul(self._electric_inv, R)[..., 0]
        return out[:, :Np], out[:, Np:]

    def solve_magnetic_mass(self, Rz):
        return np.linalg.solve(self.magnetic_mass, Rz[..., None])[..., 0]

    # }}}

    def energy(self, state):
        """1/2 (eps E, E) + 1/2 (mu Hz, Hz) summed over elements."""
        E = np.concatenate([state.Ex, state.Ey], axis=1)
        e = np.einsum("ki,kij,kj->", E, self.electric_block, E)
        h = np.einsum("ki,kij,kj->", state.Hz, self.magnetic_mass, state.Hz)
        return 0.5 * float(e + h)


def _batched_cholesky(mats, what):
    try:
        return np.linalg.cholesky(mats)
    except np.linalg.LinAlgError:
        for k, m in enumerate(mats):
            try:
                np.linalg.cholesky(m)
            except np.linalg.LinAlgError:
                raise MaterialError(
                    f"{what}-weighted mass matrix of element {k} is not positive definite",
                    element=k) from None
        raise


def _cholesky_solve(L, B):
    from scipy.linalg import solve_triangular
    out = np.empty(np.broadcast_shapes(L.shape[:-2] + B.shape[-2:], B.shape))
    for k in range(len(L)):
        z = solve_triangular(L[k], B[k], lower=True)
        out[k] = solve_triangular(L[k], z, lower=True, trans="T")
    return out


def build_operator(disc, material, alpha):
    from .materials import face_impedances
    return MaxwellOperator(disc, material, face_impedances(material, disc), alpha)
