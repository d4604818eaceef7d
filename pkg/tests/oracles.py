"""Independent reference implementations the suite checks the package against.

Everything here is deliberately naive: dense matrices, exhaustive enumeration,
direct formula transcription.  Slow is fine, these only ever see small inputs.
"""

import numpy as np


def central_difference(fn, x, step=1e-5):
    """Numerical gradient of a scalar function, one coordinate at a time.

    Mutates a private copy of ``x`` in place between evaluations, so ``fn``
    must read its argument fresh on every call.
    """
    x = np.array(x, dtype=float)
    grad = np.zeros_like(x)
    flat = x.ravel()
    gflat = grad.ravel()
    for j in range(flat.size):
        orig = flat[j]
        flat[j] = orig + step
        hi = fn(x)
        flat[j] = orig - step
        lo = fn(x)
        flat[j] = orig
        gflat[j] = (hi - lo) / (2.0 * step)
    return grad


def gradient_gap(analytic, numeric):
    """Worst-entry discrepancy normalized by the larger gradient magnitude."""
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    scale = max(1.0, np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0))
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)


def set_partitions(n):
    """Every partition of {0..n-1} as a label list, via restricted growth strings."""
    if n == 0:
        yield []
        return
    labels = [0] * n

    def descend(pos, used):
        if pos == n:
            yield list(labels)
            return
        for c in range(used + 1):
            labels[pos] = c
            yield from descend(pos + 1, max(used, c + 1))

    yield from descend(1, 1)


def best_partition_value(n, value_fn):
    """Maximum of ``value_fn(labels)`` over all partitions of n nodes."""
    best = -np.inf
    for labels in set_partitions(n):
        best = max(best, value_fn(np.asarray(labels)))
    return best


def single_move_optimal(labels, value_fn, tol=1e-12):
    """True when no relocation of one node to any community (or to a fresh
    singleton) raises ``value_fn``."""
    labels = np.asarray(labels)
    base = value_fn(labels)
    targets = set(labels.tolist())
    targets.add(int(labels.max()) + 1)
    for v in range(len(labels)):
        for c in targets:
            if c == labels[v]:
                continue
            trial = labels.copy()
            trial[v] = c
            if value_fn(trial) > base + tol:
                return False
    return True


def dense_pagerank(adjacency, damping=0.85, tol=1e-13, max_iter=100000):
    """Power iteration on the fully materialized Google matrix."""
    a = np.asarray(adjacency, dtype=float)
    n = a.shape[0]
    row_sums = a.sum(axis=1)
    transition = np.empty_like(a)
    for i in range(n):
        if row_sums[i] == 0:
            transition[i] = 1.0 / n
        else:
            transition[i] = a[i] / row_sums[i]
    google = damping * transition + (1.0 - damping) / n
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = x @ google
        if np.abs(nxt - x).sum() < tol:
            return nxt / nxt.sum()
        x = nxt
    raise RuntimeError("oracle pagerank failed to converge")


def exhaustive_propagation(out_edges, num_users, decay, max_depth):
    """Propagated trust by enumerating every simple directed path.

    For each ordered pair the shortest path length wins; among paths of that
    length the largest trust product is kept, then scaled by decay^(d-1).
    Exponential, so only usable on tiny graphs.
    """
    results = {}
    for source in range(num_users):
        found = {}  # dest -> (distance, best product)

        def wander(node, depth, product, seen):
            if depth >= max_depth:
                return
            for dest, t in out_edges.get(node, {}).items():
                if dest in seen:
                    continue
                value = product * t
                have = found.get(dest)
                if have is None or depth + 1 < have[0]:
                    found[dest] = (depth + 1, value)
                elif depth + 1 == have[0] and value > have[1]:
                    found[dest] = (depth + 1, value)
                wander(dest, depth + 1, value, seen | {dest})

        wander(source, 0, 1.0, {source})
        if found:
            results[source] = {
                dest: product * decay ** (dist - 1) for dest, (dist, product) in found.items()
            }
    return results


def plain_mf_objective(P, Q, users, items, values, lam_p, lam_q):
    """Squared-error matrix-factorization loss written straight from its formula."""
    total = 0.0
    for u, i, r in zip(users, items, values):
        total += 0.5 * (r - float(P[:, u] @ Q[:, i])) ** 2
    total += 0.5 * lam_p * float((P * P).sum())
    total += 0.5 * lam_q * float((Q * Q).sum())
    return total
