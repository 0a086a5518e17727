"""Independent reference implementations used by the unit and acceptance tests."""

import itertools

import numpy as np

from g2mf.optimize import cut_capacity


def random_homography(rng):
    # well-conditioned: near-identity in normalized coordinates, mapped to pixels
    T = np.array([[1 / 300, 0, -1], [0, 1 / 300, -0.8], [0, 0, 1]])
    A = np.eye(3) + 0.15 * rng.normal(size=(3, 3))
    return np.linalg.inv(T) @ A @ T


def apply_h(H, x):
    xh = np.column_stack([x, np.ones(len(x))]) @ H.T
    return xh[:, :2] / xh[:, 2:]


def sign_aligned_diff(A, B):
    A = A / np.linalg.norm(A)
    B = B / np.linalg.norm(B)
    return min(np.linalg.norm(A - B), np.linalg.norm(A + B))


def camera_pair(rng, n):
    """Two cameras viewing random 3D points; returns x1, x2, F (independent of the 8-pt code)."""
    K = np.array([[500.0, 0, 320], [0, 500, 240], [0, 0, 1]])
    ang = rng.uniform(-0.2, 0.2, 3)
    cx, cy, cz = np.cos(ang)
    sx, sy, sz = np.sin(ang)
    R = (np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
         @ np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
         @ np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]]))
    t = rng.normal(size=3)
    X = np.column_stack([rng.uniform(-2, 2, n), rng.uniform(-1.5, 1.5, n), rng.uniform(4, 9, n)])
    P1 = K @ np.column_stack([np.eye(3), np.zeros(3)])
    P2 = K @ np.column_stack([R, t])
    Xh = np.column_stack([X, np.ones(n)])
    a = Xh @ P1.T
    b = Xh @ P2.T
    x1 = a[:, :2] / a[:, 2:]
    x2 = b[:, :2] / b[:, 2:]
    tx = np.array([[0, -t[2], t[1]], [t[2], 0, -t[0]], [-t[1], t[0], 0]])
    Ki = np.linalg.inv(K)
    F = Ki.T @ tx @ R @ Ki
    return x1, x2, F


def brute_force_delaunay(P):
    """Edges of all triangles whose circumcircle contains no other point."""
    n = len(P)
    tri = np.array(list(itertools.combinations(range(n), 3)))
    a, b, c = P[tri[:, 0]], P[tri[:, 1]], P[tri[:, 2]]
    d = 2 * (a[:, 0] * (b[:, 1] - c[:, 1]) + b[:, 0] * (c[:, 1] - a[:, 1]) + c[:, 0] * (a[:, 1] - b[:, 1]))
    ok = np.abs(d) > 1e-12
    tri, a, b, c, d = tri[ok], a[ok], b[ok], c[ok], d[ok]
    sa, sb, sc = (a ** 2).sum(1), (b ** 2).sum(1), (c ** 2).sum(1)
    ux = (sa * (b[:, 1] - c[:, 1]) + sb * (c[:, 1] - a[:, 1]) + sc * (a[:, 1] - b[:, 1])) / d
    uy = (sa * (c[:, 0] - b[:, 0]) + sb * (a[:, 0] - c[:, 0]) + sc * (b[:, 0] - a[:, 0])) / d
    r2 = (a[:, 0] - ux) ** 2 + (a[:, 1] - uy) ** 2
    dist2 = (P[None, :, 0] - ux[:, None]) ** 2 + (P[None, :, 1] - uy[:, None]) ** 2
    inside = dist2 < r2[:, None] * (1 - 1e-9)
    inside[np.arange(len(tri))[:, None], tri] = False
    empty = ~inside.any(axis=1)
    edges = set()
    for t in tri[empty]:
        for i, j in ((t[0], t[1]), (t[1], t[2]), (t[0], t[2])):
            edges.add((min(i, j), max(i, j)))
    return edges


def brute_min_cut(n, tails, heads, caps, s, t):
    inner = [v for v in range(n) if v not in (s, t)]
    best = np.inf
    for bits in itertools.product([0, 1], repeat=len(inner)):
        side = np.zeros(n, dtype=bool)
        side[s] = True
        side[inner] = np.array(bits, dtype=bool) if inner else []
        best = min(best, cut_capacity(tails, heads, caps, side))
    return best


def naive_energy(costs, labels, edges, weights, label_cost=0.0):
    total = 0.0
    for i in range(len(labels)):
        total += costs[i][labels[i]]
    for (i, j), w in zip(edges, weights):
        if labels[i] != labels[j]:
            total += w
    models = {l for l in labels if l != 0}
    return total + label_cost * len(models)


def random_instance(rng, n, L):
    costs = rng.uniform(0, 2, size=(n, L))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    k = int(rng.integers(0, len(pairs) + 1))
    sel = rng.choice(len(pairs), k, replace=False) if k else []
    edges = np.array([pairs[s] for s in sel], dtype=int).reshape(-1, 2)
    weights = rng.uniform(0.05, 0.6, size=len(edges))
    return costs, edges, weights
