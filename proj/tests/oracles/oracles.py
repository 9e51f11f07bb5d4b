# Copyright 2026 The TraceBench Authors
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

"""Independent reference values frozen into the C++ tests.

Run with `python3 tests/oracles/oracles.py`; the printed numbers are the
constants used in tests/*.cpp. Nothing here imports the C++ code.
"""

import math

import numpy as np
from statsmodels.stats.proportion import proportion_confint


def wilson():
    pairs = [(32, 40), (28, 40), (27, 40), (26, 40), (24, 40),
             (9, 10), (8, 10), (7, 10), (6, 10), (14, 20), (12, 20),
             (0, 10), (10, 10), (1, 1)]
    print("# wilson 95% (percent, 1 decimal)")
    for k, n in pairs:
        lo, hi = proportion_confint(k, n, alpha=0.05, method="wilson")
        print(f"{{{k}, {n}, {round(100 * lo, 1)}, {round(100 * hi, 1)}}},")
    lo, hi = proportion_confint(14, 20, alpha=0.10, method="wilson")
    print(f"# (14,20) at 90%: {round(100 * lo, 1)} {round(100 * hi, 1)}")


def center_weight():
    c = np.array([16.0, 16.0])
    n = np.linalg.norm(c)
    for p in ([24, 16], [16, 16], [0, 0], [20, 13]):
        d = np.linalg.norm(np.array(p, float) - c)
        print(f"# center_weight {p}: {math.exp(-d / n):.12f}")


def jacobian_fd(q, links, h=1e-6):
    def fk(q):
        a = np.cumsum(q)
        return np.array([np.sum(links * np.cos(a)), np.sum(links * np.sin(a))])
    J = np.zeros((2, len(q)))
    for i in range(len(q)):
        e = np.zeros(len(q))
        e[i] = h
        J[:, i] = (fk(q + e) - fk(q - e)) / (2 * h)
    return J


def manipulability():
    links = np.array([0.40, 0.35, 0.30])
    for q in ([0.3, 0.7, -0.4], [-1.2, 0.1, 2.0], [0.0, 1.5707963267948966, 0.0]):
        J = jacobian_fd(np.array(q), links)
        print(f"# manipulability {q}: {math.sqrt(max(np.linalg.det(J @ J.T), 0)):.12f}")
    # Max over uniform joint samples, for the w_max estimate.
    rng = np.random.default_rng(0)
    qs = rng.uniform(-math.pi, math.pi, size=(200000, 3))
    best = 0.0
    for q in qs[:20000]:
        J = jacobian_fd(q, links)
        best = max(best, math.sqrt(max(np.linalg.det(J @ J.T), 0)))
    print(f"# sampled max manipulability (20000 draws): {best:.6f}")


def kl():
    rng = np.random.default_rng(3)
    mu = rng.normal(size=4)
    ls = rng.normal(scale=0.5, size=4)
    s = np.exp(ls)
    closed = 0.5 * np.sum(mu ** 2 + s ** 2 - 1 - 2 * ls)
    z = mu + s * rng.normal(size=(1_000_000, 4))
    logq = np.sum(-0.5 * ((z - mu) / s) ** 2 - ls, axis=1)
    logp = np.sum(-0.5 * z ** 2, axis=1)
    print(f"# kl mu={mu.round(6).tolist()} logsig={ls.round(6).tolist()}")
    print(f"#   closed {closed:.9f}  mc {np.mean(logq - logp):.9f}")


def transforms():
    x, y, th = 1.0, 2.0, math.pi / 2
    T = np.array([[math.cos(th), -math.sin(th), x], [math.sin(th), math.cos(th), y], [0, 0, 1]])
    print(f"# gripper_to_world (1,2,pi/2) * (0.1,0): {(T @ np.array([0.1, 0, 1]))[:2].round(12).tolist()}")


if __name__ == "__main__":
    wilson()
    center_weight()
    manipulability()
    kl()
    transforms()
