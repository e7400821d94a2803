import numpy as np
from sklearn.utils.validation import check_array, check_consistent_length

from ..exceptions import ValidationError


def as_1d(x, name: str) -> np.ndarray:
    try:
        arr = check_array(np.asarray(x, dtype=float).reshape(-1, 1), ensure_all_finite=True, ensure_min_samples=1)
    except ValueError as exc:
        raise ValidationError(f"{name}: {exc}") from exc
    return arr.ravel()


def check_xy(x, y, sigma=None):
    x = as_1d(x, "x")
    y = as_1d(y, "y")
    try:
        check_consistent_length(x, y)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    if sigma is None:
        s = np.ones_like(y)
    else:
        s = np.broadcast_to(as_1d(sigma, "sigma") if np.ndim(sigma) else np.asarray(float(sigma)), y.shape).copy()
        if np.any(s <= 0):
            raise ValidationError("sigma must be positive")
    return x, y, s
