"""Compiled inner loops for filtered back-projection."""
import math
import os

import numba
import numpy as np

# the bundled TBB is too old for numba; the portable layer avoids the probe warning
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "workqueue"


@numba.njit(cache=True)
def ramp_kernel(u, rc):
    """Band-limited ramp filter g(u) = int_{-rc}^{rc} |r| exp(i r u) dr."""
    if abs(u) <= 1e-4 / rc:
        return rc * rc - rc**4 * u * u / 4.0
    sh = math.sin(0.5 * rc * u)
    ch = math.cos(0.5 * rc * u)
    # 1 - cos(rc u) = 2 sin^2(rc u / 2) avoids cancellation at small u
    return 2.0 * (2.0 * rc * sh * ch / u - 2.0 * sh * sh / (u * u))


@numba.njit(parallel=True, cache=True)
def back_project(rows, theta_w, cos_t, sin_t, x0, h, x_w, x_out, p_out, rc):
    """W[a, b] = (1/2pi) sum_i theta_w[i] sum_j x_w[j] rows[i, j] g(x'_j - x_b cos_i - p_a sin_i).

    x'_j = x0 + j h. The trig functions along x' are advanced by a fixed
    rotation, so each (output point, angle) pair costs two sin/cos calls.
    """
    n_ang, n_x = rows.shape
    out = np.zeros((p_out.size, x_out.size))
    tiny = 1e-4 / rc
    rot_c = math.cos(0.5 * rc * h)
    rot_s = math.sin(0.5 * rc * h)
    for a in numba.prange(p_out.size):
        for b in range(x_out.size):
            acc = 0.0
            for i in range(n_ang):
                if theta_w[i] == 0.0:
                    continue
                t = x_out[b] * cos_t[i] + p_out[a] * sin_t[i]
                u = x0 - t
                sh = math.sin(0.5 * rc * u)
                ch = math.cos(0.5 * rc * u)
                s = 0.0
                for j in range(n_x):
                    u = x0 + j * h - t
                    wp = x_w[j] * rows[i, j]
                    if wp != 0.0:
                        if abs(u) <= tiny:
                            g = rc * rc - rc**4 * u * u / 4.0
                        else:
                            g = 2.0 * (2.0 * rc * sh * ch / u - 2.0 * sh * sh / (u * u))
                        s += wp * g
                    sh, ch = sh * rot_c + ch * rot_s, ch * rot_c - sh * rot_s
                acc += theta_w[i] * s
            out[a, b] = acc / (2.0 * math.pi)
    return out
