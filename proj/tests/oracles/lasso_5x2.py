"""Proximal-gradient (FISTA) solution of the standardized lasso objective

    (1/2n) ||y - b0 - Z b||^2 + lam ||b||_1,   Z = (X - mean) / sd_n

for the 5x2 example, mapped back to raw column units.
"""
import json
import numpy as np

X = np.array([[1.0, 0.5], [2.0, -1.0], [3.0, 2.0], [4.0, 0.0], [5.0, 1.5]])
y = 2.0 * X[:, 0]
lam = 0.1


def fista(X, y, lam, tol=1e-14, iters=200000):
    n = X.shape[0]
    mu = X.mean(axis=0)
    sd = X.std(axis=0)  # 1/n variance
    Z = (X - mu) / sd
    yc = y - y.mean()
    L = np.linalg.eigvalsh(Z.T @ Z / n).max()
    b = np.zeros(X.shape[1])
    v = b.copy()
    t = 1.0
    for _ in range(iters):
        g = -Z.T @ (yc - Z @ v) / n
        u = v - g / L
        b_new = np.sign(u) * np.maximum(np.abs(u) - lam / L, 0.0)
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        v = b_new + (t - 1) / t_new * (b_new - b)
        if np.max(np.abs(b_new - b)) < tol:
            b = b_new
            break
        b, t = b_new, t_new
    raw = b / sd
    b0 = y.mean() - raw @ mu
    return b0, raw


b0, beta = fista(X, y, lam)
pred = b0 + beta @ np.array([1.0, 0.0])
print(json.dumps({"intercept": float(b0), "beta": [float(v) for v in beta], "predict_1_0": float(pred)}))
