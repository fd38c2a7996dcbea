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

"""Seeded synthetic urban drives."""

import logging
import math

import numpy as np

from . import fileformat

logger = logging.getLogger(__name__)


#### Constants

DEFAULT_DRIVES = 5
DEFAULT_RATE = 50.0  # Hz
ROUTE_DURATION = 320.0  # s
MAX_TAIL = 8.0  # s
TAIL_SPEED = 6.0  # m/s
SPEED_SPREAD = 0.03

# (time s, speed m/s); speed moves between waypoints along a half cosine
SPEED_WAYPOINTS = (
    (0.0, 2.0), (8.0, 8.0), (28.0, 10.0), (36.0, 5.0), (46.0, 5.0), (54.0, 9.0),
    (74.0, 9.0), (82.0, 0.0), (88.0, 0.0), (96.0, 8.0), (120.0, 10.5), (130.0, 6.0),
    (150.0, 6.0), (158.0, 10.0), (180.0, 10.0), (186.0, 5.0), (194.0, 5.0), (202.0, 0.0),
    (208.0, 0.0), (216.0, 7.0), (236.0, 9.0), (244.0, 4.0), (252.0, 4.0), (260.0, 8.0),
    (280.0, 8.0), (288.0, 0.0), (294.0, 0.0), (302.0, 6.0), (ROUTE_DURATION, TAIL_SPEED),
)

# (start s, duration s, peak curvature 1/m); raised-cosine curvature bumps
CURVES = (
    (37.0, 7.5, 1.0 / 12.0),     # corner
    (60.0, 10.0, 1.0 / 80.0),
    (131.0, 5.0, -1.0 / 14.0),   # roundabout
    (137.0, 6.0, 1.0 / 14.0),
    (144.0, 5.0, -1.0 / 14.0),
    (165.0, 8.0, -1.0 / 100.0),
    (187.0, 7.5, -1.0 / 12.0),   # corner
    (244.5, 7.0, 1.0 / 9.0),     # corner
    (265.0, 8.0, 1.0 / 60.0),
)

# noise standard deviation per channel
NOISE = {
    fileformat.CHANNEL_X: 0.02,
    fileformat.CHANNEL_Y: 0.02,
    fileformat.CHANNEL_VX: 0.02,
    fileformat.CHANNEL_AX: 0.05,
    fileformat.CHANNEL_AY: 0.05,
    fileformat.CHANNEL_R: 0.003,
    fileformat.CHANNEL_AZ: 0.15,
    fileformat.CHANNEL_ROLL_ACC: 0.03,
    fileformat.CHANNEL_PITCH_ACC: 0.03,
}


def speed_profile(t):
    """Returns the route speed at times t."""
    t = np.asarray(t, dtype=float)
    v = np.full(len(t), TAIL_SPEED)
    for (t0, v0), (t1, v1) in zip(SPEED_WAYPOINTS, SPEED_WAYPOINTS[1:]):
        inside = (t >= t0) & (t < t1)
        phase = (t[inside] - t0) / (t1 - t0)
        v[inside] = v0 + (v1 - v0) * 0.5 * (1.0 - np.cos(math.pi * phase))
    return v

def curvature_profile(t):
    """Returns the route curvature at times t."""
    t = np.asarray(t, dtype=float)
    kappa = np.zeros(len(t))
    for start, duration, peak in CURVES:
        inside = (t >= start) & (t < start + duration)
        kappa[inside] += peak * 0.5 * (1.0 - np.cos(2.0 * math.pi * (t[inside] - start) / duration))
    return kappa

def route(t, speed_scale=1.0):
    """Returns the noise-free channels of the route driven at a scaled speed."""
    dt = t[1] - t[0]
    v = speed_profile(t) * speed_scale
    r = v * curvature_profile(t)
    psi = np.concatenate(([0.0], np.cumsum(r[:-1]) * dt))
    X = np.concatenate(([0.0], np.cumsum((v * np.cos(psi))[:-1]) * dt))
    Y = np.concatenate(([0.0], np.cumsum((v * np.sin(psi))[:-1]) * dt))
    return {
        fileformat.CHANNEL_X: X,
        fileformat.CHANNEL_Y: Y,
        fileformat.CHANNEL_VX: v,
        fileformat.CHANNEL_AX: np.gradient(v, dt),
        fileformat.CHANNEL_AY: v * r,
        fileformat.CHANNEL_R: r,
        fileformat.CHANNEL_AZ: np.zeros(len(t)),
        fileformat.CHANNEL_ROLL_ACC: np.zeros(len(t)),
        fileformat.CHANNEL_PITCH_ACC: np.zeros(len(t)),
    }

def generate_drives(seed, n_drives=DEFAULT_DRIVES, fs=DEFAULT_RATE):
    """Generates repeated drives of one synthetic urban route.

    The route has straights up to about 11 m/s, three 90 degree corners,
    a roundabout-like double curve and three standstills. Drives differ in
    speed scaling, sensor noise and tail length.

    Parameters
    ----------
    seed : int
        random seed
    n_drives : int
        number of drives
    fs : float
        sampling rate in Hz

    Returns
    -------
    list of Trace
        drives starting at t = 0
    """
    if n_drives < 1:
        raise ValueError(f'n_drives must be positive: {n_drives}')
    if not fs > 0:
        raise ValueError(f'fs must be positive: {fs}')
    rng = np.random.default_rng(seed)
    drives = []
    for i in range(n_drives):
        scale = 1.0 + float(np.clip(rng.normal(0.0, SPEED_SPREAD), -1.5 * SPEED_SPREAD, 1.5 * SPEED_SPREAD))
        tail = float(rng.uniform(0.0, MAX_TAIL))
        n = int(round((ROUTE_DURATION + tail) * fs)) + 1
        t = np.arange(n) / fs
        channels = route(t, scale)
        for name, sigma in NOISE.items():
            channels[name] = channels[name] + rng.normal(0.0, sigma, n)
        channels[fileformat.CHANNEL_VX] = np.maximum(channels[fileformat.CHANNEL_VX], 0.0)
        logger.debug('drive %d: speed scale %.3f, %.1f s', i, scale, (n - 1) / fs)
        drives.append(fileformat.Trace(0.0, 1.0 / fs, channels))
    return drives
