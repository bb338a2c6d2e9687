"""
Component-wise 2-D DFT and periodic stencil filters for quaternion matrices.

Every filter used by the solvers has a real stencil, so it acts on the four
component planes independently and is diagonalised by the component-wise
DFT. Stencils are written in correlation form: out[y, x] is the sum of
coef * A[y + dy, x + dx] over the stencil offsets, indices wrapping.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Mapping, Tuple, Union

import numpy as np

from qivif.exceptions import UnknownFilterError
from qivif.quaternion.algebra import QuaternionMatrix

Stencil = Mapping[Tuple[int, int], float]

FILTERS = {
    "grad1_x": {(0, 0): -1.0, (0, 1): 1.0},
    "grad1_y": {(0, 0): -1.0, (1, 0): 1.0},
    "laplacian": {(0, 0): -4.0, (0, 1): 1.0, (0, -1): 1.0, (1, 0): 1.0, (-1, 0): 1.0},
    "cross": {(0, 0): 1.0, (0, 1): -1.0, (1, 0): -1.0, (1, 1): 1.0},
}

# Relative size of an imaginary residue that an inverse transform may drop.
REAL_TOL = 1e-9


def _stencil(order: Union[str, Stencil]) -> Stencil:
    if isinstance(order, str):
        try:
            return FILTERS[order]
        except KeyError:
            raise UnknownFilterError("unknown filter tag", order) from None
    return order


def qfft(A: QuaternionMatrix, inverse: bool = False) -> QuaternionMatrix:
    """
    Forward transform is unnormalised; the inverse carries 1/(H*W). An inverse
    whose imaginary residue is negligible comes back with real planes.
    """
    if not inverse:
        return QuaternionMatrix._wrap(np.fft.fft2(A.components, axes=(1, 2)))
    data = np.fft.ifft2(A.components, axes=(1, 2))
    scale = max(1.0, float(np.max(np.abs(data.real), initial=0.0)))
    if float(np.max(np.abs(data.imag), initial=0.0)) <= REAL_TOL * scale:
        data = data.real
    return QuaternionMatrix._wrap(np.ascontiguousarray(data))


def apply_filter(A: QuaternionMatrix, order: Union[str, Stencil]) -> QuaternionMatrix:
    out = np.zeros_like(A.components)
    for (dy, dx), coef in _stencil(order).items():
        out += coef * np.roll(A.components, shift=(-dy, -dx), axis=(1, 2))
    return QuaternionMatrix._wrap(out)


def _psf(stencil: Stencil, shape: tuple) -> np.ndarray:
    h, w = shape
    psf = np.zeros(shape)
    for (dy, dx), coef in stencil.items():
        psf[(-dy) % h, (-dx) % w] += coef
    return psf


@lru_cache(maxsize=64)
def _named_spectrum(order: str, shape: tuple) -> np.ndarray:
    spectrum = np.fft.fft2(_psf(FILTERS[order], shape))
    spectrum.setflags(write=False)
    return spectrum


def filter_spectrum(order: Union[str, Stencil], shape: tuple) -> np.ndarray:
    """Transfer function of a stencil: qfft(apply_filter(A)) = spectrum * qfft(A)."""
    if isinstance(order, str):
        _stencil(order)
        return _named_spectrum(order, tuple(shape))
    return np.fft.fft2(_psf(order, tuple(shape)))


def gradient(A: QuaternionMatrix) -> tuple:
    """Forward-difference gradient pair (x, y)."""
    return apply_filter(A, "grad1_x"), apply_filter(A, "grad1_y")


def gram_spectrum(shape: tuple) -> np.ndarray:
    """Spectrum of grad^T grad, which equals minus the periodic Laplacian."""
    fx = filter_spectrum("grad1_x", shape)
    fy = filter_spectrum("grad1_y", shape)
    return np.abs(fx) ** 2 + np.abs(fy) ** 2
