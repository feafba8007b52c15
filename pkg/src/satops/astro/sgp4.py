"""Near-Earth SGP4 analytical propagation.

The standard SGP4 mean-element model (Spacetrack Report #3 as revised in
the 2006 AIAA reconciliation): Brouwer secular rates with drag terms fit
to the TLE's B* coefficient, long- and short-period periodics restored at
evaluation time.  Output is TEME position/velocity in km and km/s.

Only the near-Earth branch (orbital period < 225 min) is implemented; the
deep-space resonance and lunar-solar machinery is deliberately out of
scope for a LEO operations system, and such element sets are rejected at
initialization.

``propagate`` accepts a scalar offset or an ndarray of offsets; all math
is written against numpy so a dense time grid costs one vectorized sweep.
Matches the public verification vectors to well under 1 m (see tests).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DecayedOrbit, UnsupportedOrbit
from .tle import OrbitalElements

_TWOPI = 2.0 * math.pi
_X2O3 = 2.0 / 3.0
_DEG2RAD = math.pi / 180.0

try:  # optional compiled kernel for dense time grids
    from numba import njit as _njit
except ImportError:  # pragma: no cover - exercised where numba is absent
    _njit = None


@dataclass(frozen=True)
class GravityModel:
    mu: float               # km^3/s^2
    radius_km: float
    j2: float
    j3: float
    j4: float

    @property
    def xke(self) -> float:
        return 60.0 / math.sqrt(self.radius_km ** 3 / self.mu)

    @property
    def j3oj2(self) -> float:
        return self.j3 / self.j2


# WGS-72 is the constants set TLEs are fit against and verification vectors use.
WGS72 = GravityModel(mu=398600.8, radius_km=6378.135,
                     j2=0.001082616, j3=-0.00000253881, j4=-0.00000165597)
WGS84 = GravityModel(mu=398600.5, radius_km=6378.137,
                     j2=0.00108262998905, j3=-0.00000253215306, j4=-0.00000161098761)


def _propagate_loop(t_arr, r_out, v_out, err,
                    no_unkozai, ecco, inclo, nodeo, argpo, mo, bstar, isimp,
                    eta, con41, x1mth2, x7thm1, cc1, cc4, cc5,
                    mdot, argpdot, nodedot, omgcof, xmcof, nodecf,
                    t2cof, t3cof, t4cof, t5cof, d2, d3, d4,
                    xlcof, aycof, delmo, sinmao, xke, j2, radiusearthkm):
    """Scalar-loop twin of :meth:`Sgp4Model.propagate`, JIT-compilable."""
    twopi = 6.283185307179586
    x2o3 = 2.0 / 3.0
    vkmpersec = radiusearthkm * xke / 60.0
    cosio = math.cos(inclo)
    sinio = math.sin(inclo)
    for i in range(t_arr.shape[0]):
        t = t_arr[i]
        xmdf = mo + mdot * t
        argpdf = argpo + argpdot * t
        nodedf = nodeo + nodedot * t
        t2 = t * t
        nodem = nodedf + nodecf * t2
        tempa = 1.0 - cc1 * t
        tempe = bstar * cc4 * t
        templ = t2cof * t2
        if isimp == 0:
            delomg = omgcof * t
            delmtemp = 1.0 + eta * math.cos(xmdf)
            delm = xmcof * (delmtemp * delmtemp * delmtemp - delmo)
            temp = delomg + delm
            mm = xmdf + temp
            argpm = argpdf - temp
            t3 = t2 * t
            t4 = t3 * t
            tempa = tempa - d2 * t2 - d3 * t3 - d4 * t4
            tempe = tempe + bstar * cc5 * (math.sin(mm) - sinmao)
            templ = templ + t3cof * t3 + t4 * (t4cof + t * t5cof)
        else:
            mm = xmdf
            argpm = argpdf

        am = (xke / no_unkozai) ** x2o3 * tempa * tempa
        nm = xke / am ** 1.5
        em = ecco - tempe
        if em >= 1.0 or em < -0.001:
            err[i] = 1
            continue
        if em < 1.0e-6:
            em = 1.0e-6
        mm = mm + no_unkozai * templ
        xlm = mm + argpm + nodem
        if nodem >= 0.0:
            nodem = nodem % twopi
        else:
            nodem = -((-nodem) % twopi)
        argpm = argpm % twopi
        xlm = xlm % twopi
        mm = (xlm - argpm - nodem) % twopi

        axnl = em * math.cos(argpm)
        temp = 1.0 / (am * (1.0 - em * em))
        aynl = em * math.sin(argpm) + temp * aycof
        xl = mm + argpm + nodem + temp * xlcof * axnl

        u = (xl - nodem) % twopi
        eo1 = u
        tem5 = 9999.9
        ktr = 1
        while abs(tem5) >= 1.0e-12 and ktr <= 10:
            sineo1 = math.sin(eo1)
            coseo1 = math.cos(eo1)
            tem5 = 1.0 - coseo1 * axnl - sineo1 * aynl
            tem5 = (u - aynl * coseo1 + axnl * sineo1 - eo1) / tem5
            if abs(tem5) >= 0.95:
                tem5 = 0.95 if tem5 > 0.0 else -0.95
            eo1 = eo1 + tem5
            ktr += 1
        sineo1 = math.sin(eo1)
        coseo1 = math.cos(eo1)

        ecose = axnl * coseo1 + aynl * sineo1
        esine = axnl * sineo1 - aynl * coseo1
        el2 = axnl * axnl + aynl * aynl
        pl = am * (1.0 - el2)
        if pl < 0.0:
            err[i] = 4
            continue
        rl = am * (1.0 - ecose)
        rdotl = math.sqrt(am) * esine / rl
        rvdotl = math.sqrt(pl) / rl
        betal = math.sqrt(1.0 - el2)
        temp = esine / (1.0 + betal)
        sinu = am / rl * (sineo1 - aynl - axnl * temp)
        cosu = am / rl * (coseo1 - axnl + aynl * temp)
        su = math.atan2(sinu, cosu)
        sin2u = (cosu + cosu) * sinu
        cos2u = 1.0 - 2.0 * sinu * sinu
        temp = 1.0 / pl
        temp1 = 0.5 * j2 * temp
        temp2 = temp1 * temp

        mrt = rl * (1.0 - 1.5 * temp2 * betal * con41) + 0.5 * temp1 * x1mth2 * cos2u
        if mrt < 1.0:
            err[i] = 6
            continue
        su = su - 0.25 * temp2 * x7thm1 * sin2u
        xnode = nodem + 1.5 * temp2 * cosio * sin2u
        xinc = inclo + 1.5 * temp2 * cosio * sinio * cos2u
        mvt = rdotl - nm * temp1 * x1mth2 * sin2u / xke
        rvdot = rvdotl + nm * temp1 * (x1mth2 * cos2u + 1.5 * con41) / xke

        sinsu = math.sin(su)
        cossu = math.cos(su)
        snod = math.sin(xnode)
        cnod = math.cos(xnode)
        sini = math.sin(xinc)
        cosi = math.cos(xinc)
        xmx = -snod * cosi
        xmy = cnod * cosi
        ux = xmx * sinsu + cnod * cossu
        uy = xmy * sinsu + snod * cossu
        uz = sini * sinsu
        vx = xmx * cossu - cnod * sinsu
        vy = xmy * cossu - snod * sinsu
        vz = sini * cossu

        mr = mrt * radiusearthkm
        r_out[i, 0] = mr * ux
        r_out[i, 1] = mr * uy
        r_out[i, 2] = mr * uz
        v_out[i, 0] = (mvt * ux + rvdot * vx) * vkmpersec
        v_out[i, 1] = (mvt * uy + rvdot * vy) * vkmpersec
        v_out[i, 2] = (mvt * uz + rvdot * vz) * vkmpersec


_propagate_compiled = _njit(cache=True)(_propagate_loop) if _njit is not None else None
_COMPILED_MIN_SIZE = 256


class Sgp4Model:
    """Initialized coefficient set for one element record."""

    def __init__(self, elements: OrbitalElements, gravity: GravityModel = WGS72):
        self.elements = elements
        self.gravity = gravity

        g = gravity
        ecco = elements.eccentricity
        inclo = elements.inclination * _DEG2RAD
        nodeo = elements.raan * _DEG2RAD
        argpo = elements.arg_perigee * _DEG2RAD
        mo = elements.mean_anomaly * _DEG2RAD
        no_kozai = elements.mean_motion * _TWOPI / 1440.0   # rad/min
        bstar = elements.bstar

        # --- un-Kozai the mean motion ---------------------------------
        eccsq = ecco * ecco
        omeosq = 1.0 - eccsq
        rteosq = math.sqrt(omeosq)
        cosio = math.cos(inclo)
        cosio2 = cosio * cosio
        ak = (g.xke / no_kozai) ** _X2O3
        d1 = 0.75 * g.j2 * (3.0 * cosio2 - 1.0) / (rteosq * omeosq)
        del_ = d1 / (ak * ak)
        adel = ak * (1.0 - del_ * del_ - del_ * (1.0 / 3.0 + 134.0 * del_ * del_ / 81.0))
        del_ = d1 / (adel * adel)
        no_unkozai = no_kozai / (1.0 + del_)

        if _TWOPI / no_unkozai >= 225.0:
            raise UnsupportedOrbit(
                f"period {(_TWOPI / no_unkozai):.1f} min >= 225 min requires a "
                "deep-space propagator"
            )

        ao = (g.xke / no_unkozai) ** _X2O3
        sinio = math.sin(inclo)
        po = ao * omeosq
        con42 = 1.0 - 5.0 * cosio2
        con41 = -con42 - cosio2 - cosio2
        posq = po * po
        rp = ao * (1.0 - ecco)

        # --- drag terms: s4/qoms24 altered for low perigees -------------
        isimp = rp < 220.0 / g.radius_km + 1.0
        sfour = 78.0 / g.radius_km + 1.0
        qzms24 = ((120.0 - 78.0) / g.radius_km) ** 4
        perigee_km = (rp - 1.0) * g.radius_km
        if perigee_km < 156.0:
            sfour = perigee_km - 78.0
            if perigee_km < 98.0:
                sfour = 20.0
            qzms24 = ((120.0 - sfour) / g.radius_km) ** 4
            sfour = sfour / g.radius_km + 1.0

        pinvsq = 1.0 / posq
        tsi = 1.0 / (ao - sfour)
        eta = ao * ecco * tsi
        etasq = eta * eta
        eeta = ecco * eta
        psisq = abs(1.0 - etasq)
        coef = qzms24 * tsi ** 4
        coef1 = coef / psisq ** 3.5
        cc2 = coef1 * no_unkozai * (
            ao * (1.0 + 1.5 * etasq + eeta * (4.0 + etasq))
            + 0.375 * g.j2 * tsi / psisq * con41 * (8.0 + 3.0 * etasq * (8.0 + etasq))
        )
        cc1 = bstar * cc2
        cc3 = 0.0
        if ecco > 1.0e-4:
            cc3 = -2.0 * coef * tsi * g.j3oj2 * no_unkozai * sinio / ecco
        x1mth2 = 1.0 - cosio2
        cc4 = 2.0 * no_unkozai * coef1 * ao * omeosq * (
            eta * (2.0 + 0.5 * etasq)
            + ecco * (0.5 + 2.0 * etasq)
            - g.j2 * tsi / (ao * psisq) * (
                -3.0 * con41 * (1.0 - 2.0 * eeta + etasq * (1.5 - 0.5 * eeta))
                + 0.75 * x1mth2 * (2.0 * etasq - eeta * (1.0 + etasq)) * math.cos(2.0 * argpo)
            )
        )
        cc5 = 2.0 * coef1 * ao * omeosq * (1.0 + 2.75 * (etasq + eeta) + eeta * etasq)

        # --- secular rates ----------------------------------------------
        cosio4 = cosio2 * cosio2
        temp1 = 1.5 * g.j2 * pinvsq * no_unkozai
        temp2 = 0.5 * temp1 * g.j2 * pinvsq
        temp3 = -0.46875 * g.j4 * pinvsq * pinvsq * no_unkozai
        mdot = no_unkozai + 0.5 * temp1 * rteosq * con41 + 0.0625 * temp2 * rteosq * (
            13.0 - 78.0 * cosio2 + 137.0 * cosio4)
        argpdot = (-0.5 * temp1 * con42
                   + 0.0625 * temp2 * (7.0 - 114.0 * cosio2 + 395.0 * cosio4)
                   + temp3 * (3.0 - 36.0 * cosio2 + 49.0 * cosio4))
        xhdot1 = -temp1 * cosio
        nodedot = xhdot1 + (0.5 * temp2 * (4.0 - 19.0 * cosio2)
                            + 2.0 * temp3 * (3.0 - 7.0 * cosio2)) * cosio
        omgcof = bstar * cc3 * math.cos(argpo)
        xmcof = 0.0
        if ecco > 1.0e-4:
            xmcof = -_X2O3 * coef * bstar / eeta
        nodecf = 3.5 * omeosq * xhdot1 * cc1
        t2cof = 1.5 * cc1
        if abs(cosio + 1.0) > 1.5e-12:
            xlcof = -0.25 * g.j3oj2 * sinio * (3.0 + 5.0 * cosio) / (1.0 + cosio)
        else:
            xlcof = -0.25 * g.j3oj2 * sinio * (3.0 + 5.0 * cosio) / 1.5e-12
        aycof = -0.5 * g.j3oj2 * sinio
        delmo = (1.0 + eta * math.cos(mo)) ** 3
        sinmao = math.sin(mo)
        x7thm1 = 7.0 * cosio2 - 1.0

        # --- higher-order drag (skipped for very low perigees) -----------
        d2 = d3 = d4 = t3cof = t4cof = t5cof = 0.0
        if not isimp:
            cc1sq = cc1 * cc1
            d2 = 4.0 * ao * tsi * cc1sq
            temp = d2 * tsi * cc1 / 3.0
            d3 = (17.0 * ao + sfour) * temp
            d4 = 0.5 * temp * ao * tsi * (221.0 * ao + 31.0 * sfour) * cc1
            t3cof = d2 + 2.0 * cc1sq
            t4cof = 0.25 * (3.0 * d3 + cc1 * (12.0 * d2 + 10.0 * cc1sq))
            t5cof = 0.2 * (3.0 * d4 + 12.0 * cc1 * d3 + 6.0 * d2 * d2
                           + 15.0 * cc1sq * (2.0 * d2 + cc1sq))

        self.ecco = ecco
        self.inclo = inclo
        self.nodeo = nodeo
        self.argpo = argpo
        self.mo = mo
        self.bstar = bstar
        self.no_unkozai = no_unkozai
        self.isimp = isimp
        self.eta = eta
        self.con41 = con41
        self.x1mth2 = x1mth2
        self.x7thm1 = x7thm1
        self.cc1, self.cc4, self.cc5 = cc1, cc4, cc5
        self.mdot, self.argpdot, self.nodedot = mdot, argpdot, nodedot
        self.omgcof, self.xmcof, self.nodecf = omgcof, xmcof, nodecf
        self.t2cof, self.t3cof, self.t4cof, self.t5cof = t2cof, t3cof, t4cof, t5cof
        self.d2, self.d3, self.d4 = d2, d3, d4
        self.xlcof, self.aycof = xlcof, aycof
        self.delmo, self.sinmao = delmo, sinmao

    def propagate(self, tsince_min):
        """Position/velocity at epoch + ``tsince_min`` minutes (scalar or array).

        Returns ``(r, v)`` with shape ``(..., 3)``, TEME km and km/s.
        Raises :class:`DecayedOrbit` if any requested instant is invalid
        (radius under one Earth radius, or drag drove the mean eccentricity
        out of range).
        """
        g = self.gravity
        t = np.asarray(tsince_min, dtype=np.float64)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)

        if _propagate_compiled is not None and t.size >= _COMPILED_MIN_SIZE:
            r, v = self._propagate_via_kernel(t)
            return (r[0], v[0]) if scalar else (r, v)

        # secular gravity and drag
        xmdf = self.mo + self.mdot * t
        argpdf = self.argpo + self.argpdot * t
        nodedf = self.nodeo + self.nodedot * t
        t2 = t * t
        nodem = nodedf + self.nodecf * t2
        tempa = 1.0 - self.cc1 * t
        tempe = self.bstar * self.cc4 * t
        templ = self.t2cof * t2

        if not self.isimp:
            delomg = self.omgcof * t
            delmtemp = 1.0 + self.eta * np.cos(xmdf)
            delm = self.xmcof * (delmtemp ** 3 - self.delmo)
            temp = delomg + delm
            mm = xmdf + temp
            argpm = argpdf - temp
            t3 = t2 * t
            t4 = t3 * t
            tempa = tempa - self.d2 * t2 - self.d3 * t3 - self.d4 * t4
            tempe = tempe + self.bstar * self.cc5 * (np.sin(mm) - self.sinmao)
            templ = templ + self.t3cof * t3 + t4 * (self.t4cof + t * self.t5cof)
        else:
            mm = xmdf
            argpm = argpdf

        am = (g.xke / self.no_unkozai) ** _X2O3 * tempa * tempa
        nm = g.xke / am ** 1.5
        em = self.ecco - tempe
        if np.any(em >= 1.0) or np.any(em < -0.001):
            raise DecayedOrbit("mean eccentricity out of range (drag decay)")
        em = np.maximum(em, 1.0e-6)

        mm = mm + self.no_unkozai * templ
        xlm = mm + argpm + nodem
        nodem = np.where(nodem >= 0.0, nodem % _TWOPI, -((-nodem) % _TWOPI))
        argpm = argpm % _TWOPI
        xlm = xlm % _TWOPI
        mm = (xlm - argpm - nodem) % _TWOPI

        # long-period periodics
        axnl = em * np.cos(argpm)
        temp = 1.0 / (am * (1.0 - em * em))
        aynl = em * np.sin(argpm) + temp * self.aycof
        xl = mm + argpm + nodem + temp * self.xlcof * axnl

        # Kepler's equation: Newton with the reference clamp, 10 rounds
        u = (xl - nodem) % _TWOPI
        eo1 = u.copy()
        for _ in range(10):
            sineo1 = np.sin(eo1)
            coseo1 = np.cos(eo1)
            tem5 = 1.0 - coseo1 * axnl - sineo1 * aynl
            tem5 = (u - aynl * coseo1 + axnl * sineo1 - eo1) / tem5
            tem5 = np.clip(tem5, -0.95, 0.95)
            eo1 = eo1 + tem5
            if np.all(np.abs(tem5) < 1.0e-12):
                break
        sineo1 = np.sin(eo1)
        coseo1 = np.cos(eo1)

        # short-period preliminary quantities
        ecose = axnl * coseo1 + aynl * sineo1
        esine = axnl * sineo1 - aynl * coseo1
        el2 = axnl * axnl + aynl * aynl
        pl = am * (1.0 - el2)
        if np.any(pl < 0.0):
            raise DecayedOrbit("semilatus rectum is negative")

        rl = am * (1.0 - ecose)
        rdotl = np.sqrt(am) * esine / rl
        rvdotl = np.sqrt(pl) / rl
        betal = np.sqrt(1.0 - el2)
        temp = esine / (1.0 + betal)
        sinu = am / rl * (sineo1 - aynl - axnl * temp)
        cosu = am / rl * (coseo1 - axnl + aynl * temp)
        su = np.arctan2(sinu, cosu)
        sin2u = (cosu + cosu) * sinu
        cos2u = 1.0 - 2.0 * sinu * sinu
        temp = 1.0 / pl
        temp1 = 0.5 * g.j2 * temp
        temp2 = temp1 * temp

        mrt = rl * (1.0 - 1.5 * temp2 * betal * self.con41) \
            + 0.5 * temp1 * self.x1mth2 * cos2u
        su = su - 0.25 * temp2 * self.x7thm1 * sin2u
        xnode = nodem + 1.5 * temp2 * np.cos(self.inclo) * sin2u
        xinc = self.inclo + 1.5 * temp2 * np.cos(self.inclo) * np.sin(self.inclo) * cos2u
        mvt = rdotl - nm * temp1 * self.x1mth2 * sin2u / g.xke
        rvdot = rvdotl + nm * temp1 * (self.x1mth2 * cos2u + 1.5 * self.con41) / g.xke

        # orientation vectors
        sinsu = np.sin(su)
        cossu = np.cos(su)
        snod = np.sin(xnode)
        cnod = np.cos(xnode)
        sini = np.sin(xinc)
        cosi = np.cos(xinc)
        xmx = -snod * cosi
        xmy = cnod * cosi
        ux = xmx * sinsu + cnod * cossu
        uy = xmy * sinsu + snod * cossu
        uz = sini * sinsu
        vx = xmx * cossu - cnod * sinsu
        vy = xmy * cossu - snod * sinsu
        vz = sini * cossu

        if np.any(mrt < 1.0):
            raise DecayedOrbit("radius below one Earth radius")

        mr = mrt * g.radius_km
        vkmpersec = g.radius_km * g.xke / 60.0
        r = np.stack([mr * ux, mr * uy, mr * uz], axis=-1)
        v = np.stack([(mvt * ux + rvdot * vx) * vkmpersec,
                      (mvt * uy + rvdot * vy) * vkmpersec,
                      (mvt * uz + rvdot * vz) * vkmpersec], axis=-1)
        if scalar:
            return r[0], v[0]
        return r, v

    def _propagate_via_kernel(self, t: np.ndarray):
        flat = np.ascontiguousarray(t.ravel())
        r = np.empty((flat.size, 3))
        v = np.empty((flat.size, 3))
        err = np.zeros(flat.size, dtype=np.int8)
        _propagate_compiled(
            flat, r, v, err,
            self.no_unkozai, self.ecco, self.inclo, self.nodeo, self.argpo,
            self.mo, self.bstar, 1 if self.isimp else 0,
            self.eta, self.con41, self.x1mth2, self.x7thm1,
            self.cc1, self.cc4, self.cc5,
            self.mdot, self.argpdot, self.nodedot,
            self.omgcof, self.xmcof, self.nodecf,
            self.t2cof, self.t3cof, self.t4cof, self.t5cof,
            self.d2, self.d3, self.d4,
            self.xlcof, self.aycof, self.delmo, self.sinmao,
            self.gravity.xke, self.gravity.j2, self.gravity.radius_km,
        )
        if err.any():
            code = int(err[err != 0][0])
            if code == 1:
                raise DecayedOrbit("mean eccentricity out of range (drag decay)")
            if code == 4:
                raise DecayedOrbit("semilatus rectum is negative")
            raise DecayedOrbit("radius below one Earth radius")
        shape = t.shape + (3,)
        return r.reshape(shape), v.reshape(shape)
