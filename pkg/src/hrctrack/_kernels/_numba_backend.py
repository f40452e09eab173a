"""Compiled implementations of the hot kernels; see the numpy backend for
the shared array contracts. Compilation is cached on disk next to the
package so repeated runs skip the warm-up."""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"

_JIT = {"cache": True, "nogil": True}


@njit(**_JIT)
def gaussian_point_table(points, centers, sigma2):
    pts = points  # (M, 2)
    m = pts.shape[0]
    n = centers.shape[0]
    out = np.empty((m, n))
    if sigma2 == 0.0:
        for p in range(m):
            for i in range(n):
                match = pts[p, 0] == centers[i, 0] and pts[p, 1] == centers[i, 1]
                out[p, i] = 1.0 if match else 0.0
        return out
    norm = 1.0 / (2.0 * np.pi * sigma2)
    inv = 1.0 / (2.0 * sigma2)
    for p in range(m):
        for i in range(n):
            dx = pts[p, 0] - centers[i, 0]
            dy = pts[p, 1] - centers[i, 1]
            out[p, i] = norm * np.exp(-(dx * dx + dy * dy) * inv)
    return out


@njit(**_JIT)
def clutter_table(points, centers, sigma2, weights):
    n_epochs = points.shape[0]
    m = points.shape[1]
    out = np.empty((n_epochs, m))
    for t in range(n_epochs):
        cond = gaussian_point_table(points[t], centers, sigma2)
        for p in range(m):
            acc = 0.0
            for i in range(centers.shape[0]):
                acc += cond[p, i] * weights[i]
            out[t, p] = acc
    return out


@njit(**_JIT)
def single_obs_table(points, centers, sigma2, epsilon, weights):
    n_epochs = points.shape[0]  # points: (T+1, 1, 2)
    n = centers.shape[0]
    out = np.empty((n_epochs, n))
    for t in range(n_epochs):
        cond = gaussian_point_table(points[t], centers, sigma2)[0]
        clutter = 0.0
        for i in range(n):
            clutter += cond[i] * weights[i]
        for i in range(n):
            out[t, i] = (1.0 - epsilon) * cond[i] + epsilon * clutter
    return out


@njit(**_JIT)
def multi_obs_table(points, centers, sigma2, lambda0, lambdas, weights):
    n_epochs = points.shape[0]
    m = points.shape[1]
    n = centers.shape[0]
    out = np.zeros((n_epochs, n))
    for t in range(n_epochs):
        cond = gaussian_point_table(points[t], centers, sigma2)
        g = np.empty(m)
        zeros = 0
        zero_at = -1
        for p in range(m):
            acc = 0.0
            for i in range(n):
                acc += cond[p, i] * weights[i]
            g[p] = acc
            if acc == 0.0:
                zeros += 1
                zero_at = p
        if zeros == 0:
            full = 1.0
            for p in range(m):
                full *= g[p]
            for i in range(n):
                acc = lambda0 * full
                for p in range(m):
                    acc += lambdas[p] * cond[p, i] * (full / g[p])
                out[t, i] = acc
        elif zeros == 1:
            others = 1.0
            for p in range(m):
                if p != zero_at:
                    others *= g[p]
            for i in range(n):
                out[t, i] = lambdas[zero_at] * cond[zero_at, i] * others
        # zeros >= 2: every association leaves a zero clutter factor.
    return out


@njit(**_JIT)
def hrc_forward(bt, endpoint_t, like):
    n_epochs = like.shape[0]
    horizon = n_epochs - 1
    n_dest = endpoint_t.shape[0]
    n_states = endpoint_t.shape[1]
    marg = np.zeros((n_epochs, n_states))
    dest = np.zeros((n_epochs, n_dest))
    h = np.zeros(n_epochs)
    q = np.empty((n_dest, n_states))
    total = 0.0
    for k in range(n_dest):
        for i in range(n_states):
            v = endpoint_t[k, i] * like[0, i]
            q[k, i] = v
            total += v
    h[0] = total
    if total <= 0.0:
        return marg, dest, h
    for k in range(n_dest):
        for i in range(n_states):
            q[k, i] /= total
            marg[0, i] += q[k, i]
            dest[0, k] += q[k, i]
    for t in range(1, horizon):
        total = 0.0
        for k in range(n_dest):
            acc = np.dot(bt[k, t - 1], q[k])
            for i in range(n_states):
                v = like[t, i] * acc[i]
                q[k, i] = v
                total += v
        h[t] = total
        if total <= 0.0:
            return marg, dest, h
        for k in range(n_dest):
            for i in range(n_states):
                q[k, i] /= total
                marg[t, i] += q[k, i]
                dest[t, k] += q[k, i]
    total = 0.0
    for k in range(n_dest):
        acc = 0.0
        for i in range(n_states):
            acc += q[k, i]
        v = like[horizon, k] * acc
        dest[horizon, k] = v
        total += v
    h[horizon] = total
    if total <= 0.0:
        for k in range(n_dest):
            dest[horizon, k] = 0.0
        return marg, dest, h
    for k in range(n_dest):
        dest[horizon, k] /= total
        marg[horizon, k] = dest[horizon, k]
    return marg, dest, h


@njit(**_JIT)
def chain_forward(tt, initial, like):
    n_epochs = like.shape[0]
    n_states = initial.shape[0]
    marg = np.zeros((n_epochs, n_states))
    h = np.zeros(n_epochs)
    q = np.empty(n_states)
    total = 0.0
    for i in range(n_states):
        v = initial[i] * like[0, i]
        q[i] = v
        total += v
    h[0] = total
    if total <= 0.0:
        return marg, h
    for i in range(n_states):
        q[i] /= total
        marg[0, i] = q[i]
    for t in range(1, n_epochs):
        acc = np.dot(tt[t - 1], q)
        total = 0.0
        for i in range(n_states):
            v = acc[i] * like[t, i]
            q[i] = v
            total += v
        h[t] = total
        if total <= 0.0:
            return marg, h
        for i in range(n_states):
            q[i] /= total
            marg[t, i] = q[i]
    return marg, h
