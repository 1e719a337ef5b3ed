"""Hot loops of the samplers.

All random input arrives pre-drawn (uniforms in (0, 1], standard normals),
so every kernel is a deterministic function of its arguments and the numba
and pure-Python backends produce the same floats.

Dyad layout used throughout: ``dyad_rows[d] = (r1, r2)`` with ``r2 = -1``
for a singleton. Node adjacency is CSR: entries ``node_ptr[i]:node_ptr[i+1]``
of ``ent_out``/``ent_in`` hold, per incident dyad, the row where node ``i``
is the actor and the row where it is the partner (``-1`` if unobserved).
"""
import math

import numpy as np

from ._jit import njit

SQRT2 = math.sqrt(2.0)
LOG_2PI = math.log(2.0 * math.pi)
TAIL_SWITCH = 6.0


# --- standard normal ---------------------------------------------------------

@njit
def norm_cdf(x):
    return 0.5 * math.erfc(-x / SQRT2)


@njit
def norm_logcdf(x):
    if x > -20.0:
        return math.log(0.5 * math.erfc(-x / SQRT2))
    # asymptotic Mills-ratio expansion; relative error < 1e-16 for x <= -20
    x2 = 1.0 / (x * x)
    series = 1.0 - x2 * (1.0 - 3.0 * x2 * (1.0 - 5.0 * x2 * (1.0 - 7.0 * x2)))
    return -0.5 * x * x - 0.5 * LOG_2PI - math.log(-x) + math.log(series)


@njit
def norm_ppf(p):
    """Wichura's AS 241 (PPND16), about 1e-16 relative accuracy."""
    if p <= 0.0:
        return -np.inf
    if p >= 1.0:
        return np.inf
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2509.0809287301226727 * r + 33430.575583588128105) * r
                    + 67265.770927008700853) * r + 45921.953931549871457) * r
                  + 13731.693765509461125) * r + 1971.5909503065514427) * r
                + 133.14166789178437745) * r + 3.387132872796366608)
        den = (((((((5226.495278852854561 * r + 28729.085735721942674) * r
                    + 39307.89580009271061) * r + 21213.794301586595867) * r
                  + 5394.1960214247511077) * r + 687.1870074920579083) * r
                + 42.313330701600911252) * r + 1.0)
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        num = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r
                    + 0.24178072517745061177) * r + 1.27045825245236838258) * r
                  + 3.64784832476320460504) * r + 5.7694972214606914055) * r
                + 4.6303378461565452959) * r + 1.42343711074968357734)
        den = (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r
                    + 0.0151986665636164571966) * r + 0.14810397642748007459) * r
                  + 0.68976733498510000455) * r + 1.6763848301838038494) * r
                + 2.05319162663775882187) * r + 1.0)
    else:
        r -= 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 0.0012426609473880784386) * r + 0.026532189526576123093) * r
                  + 0.29656057182850489123) * r + 1.7848265399172913358) * r
                + 5.4637849111641143699) * r + 6.6579046435011037772)
        den = (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r
                    + 1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r
                  + 0.0148753612908506148525) * r + 0.13692988092273580531) * r
                + 0.59983220655588793769) * r + 1.0)
    val = num / den
    return -val if q < 0.0 else val


@njit
def truncnorm_lower(alpha, u, pool, pos):
    """Draw ``z ~ N(0, 1)`` conditioned on ``z >= alpha``.

    Inverse CDF on the upper tail for ``alpha <= 6``; beyond that the
    exponential-proposal rejection sampler of Robert (1995) consuming pairs
    from ``pool``. An exhausted pool falls back to the inverse CDF.
    Returns ``(z, new_pos)``.
    """
    if alpha > TAIL_SWITCH:
        lam = 0.5 * (alpha + math.sqrt(alpha * alpha + 4.0))
        n = pool.shape[0]
        while pos + 1 < n:
            z = alpha - math.log(pool[pos]) / lam
            v = pool[pos + 1]
            pos += 2
            if math.log(v) <= -0.5 * (z - lam) * (z - lam):
                return z, pos
    tail = u * norm_cdf(-alpha)
    if tail > 0.0:
        z = -norm_ppf(tail)
        if z < alpha:
            z = alpha
        return z, pos
    # Phi(-alpha) underflowed (alpha > ~37): the tail is exponential to all digits
    return alpha - math.log(u) / alpha, pos


@njit
def sample_probit_latent(mean, sd, y, u, pool, pos):
    """Latent ``N(mean, sd^2)`` restricted to ``>= 0`` if ``y == 1`` else ``< 0``."""
    if y > 0.5:
        w, pos = truncnorm_lower(-mean / sd, u, pool, pos)
        z = mean + sd * w
        return (z if z >= 0.0 else 0.0), pos
    w, pos = truncnorm_lower(mean / sd, u, pool, pos)
    z = mean - sd * w
    # rounding can land on the wrong side of the bound; y == 0 needs y* < 0
    if z >= 0.0:
        z = -1e-300
    return z, pos


# --- Gaussian-scale blocks (continuous response or probit latents) ----------

@njit
def update_probit_latents(zstar, y, eta, dyad_rows, rho, u, pool):
    """One Gibbs pass over every dyad's latent pair; returns pool positions used."""
    pos = 0
    cond_sd = math.sqrt(1.0 - rho * rho)
    for d in range(dyad_rows.shape[0]):
        r1 = dyad_rows[d, 0]
        r2 = dyad_rows[d, 1]
        if r2 < 0:
            zstar[r1], pos = sample_probit_latent(eta[r1], 1.0, y[r1], u[r1], pool, pos)
            continue
        m1 = eta[r1] + rho * (zstar[r2] - eta[r2])
        zstar[r1], pos = sample_probit_latent(m1, cond_sd, y[r1], u[r1], pool, pos)
        m2 = eta[r2] + rho * (zstar[r1] - eta[r1])
        zstar[r2], pos = sample_probit_latent(m2, cond_sd, y[r2], u[r2], pool, pos)
    return pos


@njit
def dyad_precision_apply(v, dyad_rows, sigma2, rho):
    """Multiply ``v`` (rows x k) by the block-diagonal inverse residual covariance."""
    out = np.empty_like(v)
    c = 1.0 / (sigma2 * (1.0 - rho * rho))
    s = 1.0 / sigma2
    k = v.shape[1]
    for d in range(dyad_rows.shape[0]):
        r1 = dyad_rows[d, 0]
        r2 = dyad_rows[d, 1]
        if r2 < 0:
            for j in range(k):
                out[r1, j] = s * v[r1, j]
        else:
            for j in range(k):
                out[r1, j] = c * (v[r1, j] - rho * v[r2, j])
                out[r2, j] = c * (v[r2, j] - rho * v[r1, j])
    return out


@njit
def gibbs_nodes(a, b, z, base, m, actor, partner, group, node_ptr, ent_out,
                ent_in, prec_ab, sigma2, rho, normals):
    """Sequential bivariate-normal Gibbs draws of each node's (actor, partner) effect.

    ``base`` is the fixed part ``x'beta`` per row. ``prec_ab`` is the inverse
    actor-partner covariance.
    """
    c = 1.0 / (sigma2 * (1.0 - rho * rho))
    s = 1.0 / sigma2
    for i in range(a.shape[0]):
        q11 = prec_ab[0, 0]
        q12 = prec_ab[0, 1]
        q22 = prec_ab[1, 1]
        l1 = 0.0
        l2 = 0.0
        t1 = 0.0
        t2 = 0.0
        for k in range(node_ptr[i], node_ptr[i + 1]):
            ro = ent_out[k]
            ri = ent_in[k]
            if ro >= 0:
                t1 = z[ro] - base[ro] - m[group[ro]] - b[partner[ro]]
            if ri >= 0:
                t2 = z[ri] - base[ri] - m[group[ri]] - a[actor[ri]]
            if ro >= 0 and ri >= 0:
                q11 += c
                q22 += c
                q12 -= c * rho
                l1 += c * (t1 - rho * t2)
                l2 += c * (t2 - rho * t1)
            elif ro >= 0:
                q11 += s
                l1 += s * t1
            else:
                q22 += s
                l2 += s * t2
        det = q11 * q22 - q12 * q12
        mu1 = (q22 * l1 - q12 * l2) / det
        mu2 = (q11 * l2 - q12 * l1) / det
        L11 = math.sqrt(q11)
        L21 = q12 / L11
        L22 = math.sqrt(q22 - L21 * L21)
        x2 = normals[i, 1] / L22
        x1 = (normals[i, 0] - L21 * x2) / L11
        a[i] = mu1 + x1
        b[i] = mu2 + x2


@njit
def gibbs_groups(m, z, base, a, b, actor, partner, dyad_rows, group_ptr,
                 group_dyads, sigma2m, sigma2, rho, normals):
    c = 1.0 / (sigma2 * (1.0 + rho))
    s = 1.0 / sigma2
    for g in range(m.shape[0]):
        q = 1.0 / sigma2m
        lin = 0.0
        for k in range(group_ptr[g], group_ptr[g + 1]):
            d = group_dyads[k]
            r1 = dyad_rows[d, 0]
            r2 = dyad_rows[d, 1]
            t1 = z[r1] - base[r1] - a[actor[r1]] - b[partner[r1]]
            if r2 < 0:
                q += s
                lin += s * t1
            else:
                t2 = z[r2] - base[r2] - a[actor[r2]] - b[partner[r2]]
                q += 2.0 * c
                lin += c * (t1 + t2)
        m[g] = lin / q + normals[g] / math.sqrt(q)


@njit
def dyad_stats(e, dyad_rows):
    """Sufficient statistics of the residual pairs.

    Returns ``(sum of squares over paired rows, sum of cross products,
    number of pairs, sum of squares over singletons, number of singletons)``.
    """
    s11 = 0.0
    s12 = 0.0
    ss = 0.0
    n_pairs = 0
    n_single = 0
    for d in range(dyad_rows.shape[0]):
        r1 = dyad_rows[d, 0]
        r2 = dyad_rows[d, 1]
        if r2 < 0:
            ss += e[r1] * e[r1]
            n_single += 1
        else:
            s11 += e[r1] * e[r1] + e[r2] * e[r2]
            s12 += e[r1] * e[r2]
            n_pairs += 1
    return s11, s12, n_pairs, ss, n_single


@njit
def probit_loglik(y, eta):
    total = 0.0
    for r in range(y.shape[0]):
        if y[r] > 0.5:
            total += norm_logcdf(eta[r])
        else:
            total += norm_logcdf(-eta[r])
    return total


# --- Poisson blocks ----------------------------------------------------------

@njit
def poisson_loglik(y, lin):
    total = 0.0
    for r in range(y.shape[0]):
        total += y[r] * lin[r] - math.exp(lin[r]) - math.lgamma(y[r] + 1.0)
    return total


@njit
def _poisson_shift(y, lin, r, delta):
    return y[r] * delta - (math.exp(lin[r] + delta) - math.exp(lin[r]))


@njit
def rwm_beta(beta, x, y, lin, scales, normals, logu, acc):
    """Single-component random-walk Metropolis for each fixed effect (flat prior)."""
    n = y.shape[0]
    for p in range(beta.shape[0]):
        step = scales[p] * normals[p]
        ratio = 0.0
        for r in range(n):
            ratio += _poisson_shift(y, lin, r, step * x[r, p])
        if logu[p] < ratio:
            beta[p] += step
            for r in range(n):
                lin[r] += step * x[r, p]
            acc[p] = 1.0
        else:
            acc[p] = 0.0


@njit
def rwm_nodes(a, b, y, lin, node_ptr, ent_out, ent_in, prec_ab, scales,
              normals, logu, acc):
    """Joint random-walk Metropolis on each node's (actor, partner) pair."""
    p11 = prec_ab[0, 0]
    p12 = prec_ab[0, 1]
    p22 = prec_ab[1, 1]
    for i in range(a.shape[0]):
        da = scales[i] * normals[i, 0]
        db = scales[i] * normals[i, 1]
        na = a[i] + da
        nb = b[i] + db
        ratio = -0.5 * (p11 * (na * na - a[i] * a[i]) + 2.0 * p12 * (na * nb - a[i] * b[i])
                        + p22 * (nb * nb - b[i] * b[i]))
        for k in range(node_ptr[i], node_ptr[i + 1]):
            if ent_out[k] >= 0:
                ratio += _poisson_shift(y, lin, ent_out[k], da)
            if ent_in[k] >= 0:
                ratio += _poisson_shift(y, lin, ent_in[k], db)
        if logu[i] < ratio:
            a[i] = na
            b[i] = nb
            for k in range(node_ptr[i], node_ptr[i + 1]):
                if ent_out[k] >= 0:
                    lin[ent_out[k]] += da
                if ent_in[k] >= 0:
                    lin[ent_in[k]] += db
            acc[i] = 1.0
        else:
            acc[i] = 0.0


@njit
def rwm_groups(m, y, lin, group_ptr, group_rows, sigma2m, scales, normals, logu, acc):
    for g in range(m.shape[0]):
        step = scales[g] * normals[g]
        new = m[g] + step
        ratio = -0.5 * (new * new - m[g] * m[g]) / sigma2m
        for k in range(group_ptr[g], group_ptr[g + 1]):
            ratio += _poisson_shift(y, lin, group_rows[k], step)
        if logu[g] < ratio:
            m[g] = new
            for k in range(group_ptr[g], group_ptr[g + 1]):
                lin[group_rows[k]] += step
            acc[g] = 1.0
        else:
            acc[g] = 0.0


@njit
def rwm_dyad_residuals(e, y, lin, dyad_rows, sigma2, rho, scales, normals, logu, acc):
    """Random-walk Metropolis on each dyad's residual pair (or single residual)."""
    c = 1.0 / (sigma2 * (1.0 - rho * rho))
    for d in range(dyad_rows.shape[0]):
        r1 = dyad_rows[d, 0]
        r2 = dyad_rows[d, 1]
        d1 = scales[d] * normals[d, 0]
        n1 = e[r1] + d1
        if r2 < 0:
            ratio = -0.5 * (n1 * n1 - e[r1] * e[r1]) / sigma2
            ratio += _poisson_shift(y, lin, r1, d1)
            if logu[d] < ratio:
                e[r1] = n1
                lin[r1] += d1
                acc[d] = 1.0
            else:
                acc[d] = 0.0
            continue
        d2 = scales[d] * normals[d, 1]
        n2 = e[r2] + d2
        old = e[r1] * e[r1] - 2.0 * rho * e[r1] * e[r2] + e[r2] * e[r2]
        new = n1 * n1 - 2.0 * rho * n1 * n2 + n2 * n2
        ratio = -0.5 * c * (new - old)
        ratio += _poisson_shift(y, lin, r1, d1) + _poisson_shift(y, lin, r2, d2)
        if logu[d] < ratio:
            e[r1] = n1
            e[r2] = n2
            lin[r1] += d1
            lin[r2] += d2
            acc[d] = 1.0
        else:
            acc[d] = 0.0
