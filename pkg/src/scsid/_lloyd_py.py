"""Pure numpy Lloyd iterations (fallback for the compiled ``_lloyd``)."""
import numpy as np


def lloyd(X, init, max_iter, max_repairs):
    X = np.ascontiguousarray(X, dtype=np.float64)
    C = np.array(init, dtype=np.float64, order="C")
    n, dim = X.shape
    k = C.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    it = repairs = 0
    while it < max_iter:
        it += 1
        d2 = np.empty((n, k))
        for j in range(k):
            d2[:, j] = ((X - C[j]) ** 2).sum(axis=1)
        # argmin returns the first minimum: ties go to the lower index
        new = d2.argmin(axis=1)
        dist = d2[np.arange(n), new]
        counts = np.bincount(new, minlength=k)
        for j in range(k):
            if counts[j] != 0:
                continue
            if repairs >= max_repairs:
                return labels, C, 0.0, it, repairs, 1
            movable = counts[new] > 1
            if not movable.any():
                return labels, C, 0.0, it, repairs, 1
            far = int(np.argmax(np.where(movable, dist, -1.0)))
            counts[new[far]] -= 1
            new[far] = j
            counts[j] = 1
            dist[far] = 0.0
            repairs += 1
        changed = bool(np.any(new != labels))
        labels = new
        for d in range(dim):
            C[:, d] = np.bincount(labels, weights=X[:, d], minlength=k) / counts
        if not changed:
            break
    inertia = float(((X - C[labels]) ** 2).sum())
    return labels, C, inertia, it, repairs, 0
