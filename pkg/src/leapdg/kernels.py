"""Fused element-local kernels for the inner iterations of a time step.

Each kernel loops over elements; element k writes only row k of its outputs
and reads neighbour values through precomputed trace maps, so the loops are
free of write contention. They reproduce ``MaxwellOperator``'s numpy path.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None

AVAILABLE = njit is not None


def _electric_fixed(H, vmapM, vmapP, bnd, nx, ny, e_h, fscale, Dr, Ds, metric, lift,
                    gx, gy):
    K, Np = H.shape
    Nfp = vmapM.shape[2]
    Hf = H.ravel()
    flux_x = np.empty(3 * Nfp)
    flux_y = np.empty(3 * Nfp)
    for k in range(K):
        rx, sx, ry, sy = metric[k, 0, 0], metric[k, 0, 1], metric[k, 1, 0], metric[k, 1, 1]
        for f in range(3):
            c = e_h[k, f] * fscale[k, f]
            ax, ay = -ny[k, f] * c, nx[k, f] * c
            for i in range(Nfp):
                j = Hf[vmapM[k, f, i]]
                if not bnd[k, f]:
                    j -= Hf[vmapP[k, f, i]]
                flux_x[f * Nfp + i] = ax * j
                flux_y[f * Nfp + i] = ay * j
        for a in range(Np):
            ur = 0.0
            us = 0.0
            for b in range(Np):
                ur += Dr[a, b] * H[k, b]
                us += Ds[a, b] * H[k, b]
            lx = 0.0
            ly = 0.0
            for q in range(3 * Nfp):
                lx += lift[a, q] * flux_x[q]
                ly += lift[a, q] * flux_y[q]
            gx[k, a] = ry * ur + sy * us + lx
            gy[k, a] = -(rx * ur + sx * us) + ly


def _electric_iterate(g0x, g0y, Exm, Eym, Exi, Eyi, vmapM, vmapP, bnd, nx, ny, e_e,
                      fscale, lift, update, dt, Ex_out, Ey_out):
    K, Np = Exm.shape
    Nfp = vmapM.shape[2]
    Sx = (Exm + Exi).ravel()
    Sy = (Eym + Eyi).ravel()
    flux_x = np.empty(3 * Nfp)
    flux_y = np.empty(3 * Nfp)
    g = np.empty(2 * Np)
    for k in range(K):
        for f in range(3):
            nxf, nyf = nx[k, f], ny[k, f]
            c = -0.5 * e_e[k, f] * fscale[k, f]
            for i in range(Nfp):
                m = vmapM[k, f, i]
                jx = Sx[m]
                jy = Sy[m]
                if not bnd[k, f]:
                    p = vmapP[k, f, i]
                    jx -= Sx[p]
                    jy -= Sy[p]
                common = c * (nxf * jy - nyf * jx)
                flux_x[f * Nfp + i] = -nyf * common
                flux_y[f * Nfp + i] = nxf * common
        for a in range(Np):
            lx = 0.0
            ly = 0.0
            for q in range(3 * Nfp):
                lx += lift[a, q] * flux_x[q]
                ly += lift[a, q] * flux_y[q]
            g[a] = g0x[k, a] + lx
            g[Np + a] = g0y[k, a] + ly
        for a in range(Np):
            ax = 0.0
            ay = 0.0
            for b in range(2 * Np):
                ax += update[k, a, b] * g[b]
                ay += update[k, Np + a, b] * g[b]
            Ex_out[k, a] = Exm[k, a] + dt * ax
            Ey_out[k, a] = Eym[k, a] + dt * ay


def _magnetic_iterate(Ex, Ey, Hh, Hi, src, has_src, vmapM, vmapP, bnd, nx, ny, h_e, h_h,
                      fscale, Dr, Ds, metric, lift, update, scalar_update, dt, H_out):
    K, Np = Ex.shape
    Nfp = vmapM.shape[2]
    Exf = Ex.ravel()
    Eyf = Ey.ravel()
    Sh = (Hh + Hi).ravel()
    flux = np.empty(3 * Nfp)
    g = np.empty(Np)
    for k in range(K):
        rx, sx, ry, sy = metric[k, 0, 0], metric[k, 0, 1], metric[k, 1, 0], metric[k, 1, 1]
        for f in range(3):
            nxf, nyf = nx[k, f], ny[k, f]
            ce = h_e[k, f] * fscale[k, f]
            ch = 0.5 * h_h[k, f] * fscale[k, f]
            for i in range(Nfp):
                m = vmapM[k, f, i]
                jx = Exf[m]
                jy = Eyf[m]
                jh = Sh[m]
                if not bnd[k, f]:
                    p = vmapP[k, f, i]
                    jx -= Exf[p]
                    jy -= Eyf[p]
                    jh -= Sh[p]
                flux[f * Nfp + i] = ce * (nxf * jy - nyf * jx) - ch * jh
        for a in range(Np):
            exr = 0.0
            exs = 0.0
            eyr = 0.0
            eys = 0.0
            for b in range(Np):
                exr += Dr[a, b] * Ex[k, b]
                exs += Ds[a, b] * Ex[k, b]
                eyr += Dr[a, b] * Ey[k, b]
                eys += Ds[a, b] * Ey[k, b]
            lz = 0.0
            for q in range(3 * Nfp):
                lz += lift[a, q] * flux[q]
            val = (ry * exr + sy * exs) - (rx * eyr + sx * eys) + lz
            if has_src:
                val += src[k, a]
            g[a] = val
        if scalar_update != 0.0:
            for a in range(Np):
                H_out[k, a] = Hh[k, a] + dt * scalar_update * g[a]
        else:
            for a in range(Np):
                acc = 0.0
                for b in range(Np):
                    acc += update[k, a, b] * g[b]
                H_out[k, a] = Hh[k, a] + dt * acc


if AVAILABLE:
    electric_fixed = njit(cache=True, fastmath=True)(_electric_fixed)
    electric_iterate = njit(cache=True, fastmath=True)(_electric_iterate)
    magnetic_iterate = njit(cache=True, fastmath=True)(_magnetic_iterate)
else:  # pragma: no cover
    electric_fixed = electric_iterate = magnetic_iterate = None
