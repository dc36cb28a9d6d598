import numpy as np


class FitError(RuntimeError):
    """A learner could not be trained."""


class ConvergenceError(FitError):
    """Optimisation diverged (non-finite loss)."""


def softmax(Z):
    Z = np.asarray(Z, dtype=float)
    E = np.exp(Z - Z.max(axis=1, keepdims=True))
    return E / E.sum(axis=1, keepdims=True)


def one_hot(y, n_classes):
    Y = np.zeros((len(y), n_classes))
    Y[np.arange(len(y)), np.asarray(y, dtype=np.int64)] = 1.0
    return Y


def log_loss(P, y):
    """Summed cross-entropy of probability rows ``P`` against labels ``y``."""
    p = P[np.arange(len(y)), y]
    return float(-np.sum(np.log(np.maximum(p, 1e-300))))


def resolve_max_features(spec, d):
    if spec is None or spec == "none" or spec == "all":
        return d
    if spec == "sqrt":
        return max(1, int(np.sqrt(d)))
    if spec == "log2":
        return max(1, int(np.log2(d)))
    if isinstance(spec, float):
        return max(1, int(spec * d))
    return max(1, min(int(spec), d))


def substreams(seed, n):
    """``n`` independent integer seeds derived from ``seed``."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]
