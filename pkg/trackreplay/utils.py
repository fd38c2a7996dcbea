# Copyright (c) 2026 trackreplay contributors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Polyline utility functions."""

import numpy as np


def cumulative_arclength(X, Y):
    """Returns the cumulative path length at each vertex, starting at 0."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    s = np.zeros(len(X))
    if len(X) > 1:
        s[1:] = np.cumsum(np.hypot(np.diff(X), np.diff(Y)))
    return s

def interpolate_along(X, Y, s_path, s_query):
    """Returns points on the polyline at the given arclengths.

    Parameters
    ----------
    X, Y : array-like
        polyline vertices
    s_path : array-like
        cumulative arclength of the vertices, non-decreasing
    s_query : array-like
        arclengths to look up, clipped to the path length

    Returns
    -------
    tuple of numpy.ndarray
        (X, Y) of the queried points
    """
    s_query = np.clip(s_query, s_path[0], s_path[-1])
    return np.interp(s_query, s_path, X), np.interp(s_query, s_path, Y)

def project_to_segments(px, py, X, Y, first=0, last=None):
    """Projects a point onto polyline segments [first, last).

    Returns
    -------
    tuple
        (segment index, fraction along the segment, distance) of the closest
        projection
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    last = len(X) - 1 if last is None else min(last, len(X) - 1)
    first = max(0, min(first, last - 1))
    x0, y0 = X[first:last], Y[first:last]
    dx, dy = X[first + 1:last + 1] - x0, Y[first + 1:last + 1] - y0
    length2 = dx * dx + dy * dy
    with np.errstate(invalid='ignore', divide='ignore'):
        frac = np.where(length2 > 0, ((px - x0) * dx + (py - y0) * dy) / length2, 0.0)
    frac = np.clip(frac, 0.0, 1.0)
    dist = np.hypot(x0 + frac * dx - px, y0 + frac * dy - py)
    best = int(np.argmin(dist))
    return first + best, float(frac[best]), float(dist[best])

def distance_to_polyline(px, py, X, Y, chunk=256):
    """Returns the distance of every point to the polyline (X, Y)."""
    px = np.atleast_1d(np.asarray(px, dtype=float))
    py = np.atleast_1d(np.asarray(py, dtype=float))
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if len(X) == 1:
        return np.hypot(px - X[0], py - Y[0])
    x0, y0 = X[:-1], Y[:-1]
    dx, dy = np.diff(X), np.diff(Y)
    length2 = dx * dx + dy * dy
    safe = np.where(length2 > 0, length2, 1.0)
    out = np.empty(len(px))
    for start in range(0, len(px), chunk):
        qx = px[start:start + chunk, None]
        qy = py[start:start + chunk, None]
        frac = np.clip(((qx - x0) * dx + (qy - y0) * dy) / safe, 0.0, 1.0)
        frac = np.where(length2 > 0, frac, 0.0)
        dist = np.hypot(x0 + frac * dx - qx, y0 + frac * dy - qy)
        out[start:start + chunk] = dist.min(axis=1)
    return out
