import numpy as np


def flatten_params(p):
    return np.concatenate([a.ravel() for a in p.as_list()])


def unflatten_params(p, vec):
    arrays, i = [], 0
    for a in p.as_list():
        arrays.append(vec[i : i + a.size].reshape(a.shape))
        i += a.size
    return p.with_list(arrays)


def grads_to_vector(enc_g, dec_g):
    parts = []
    for dw, db in enc_g + dec_g:
        parts.extend([dw.ravel(), db.ravel()])
    return np.concatenate(parts)


def central_difference(f, vec, eps=1e-5):
    """Central finite-difference gradient of scalar f at vec."""
    grad = np.zeros_like(vec)
    for i in range(vec.size):
        up, down = vec.copy(), vec.copy()
        up[i] += eps
        down[i] -= eps
        grad[i] = (f(up) - f(down)) / (2.0 * eps)
    return grad


def relative_error(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12)
