"""ReLU-family activation functions, their bipolar variants, and exact
elementwise derivatives.

A bipolar activation applies the base function f to even feature indices
and the point-reflected -f(-x) to odd feature indices. The pairing pulls
the layer mean toward zero: for an i.i.d. input vector the output mean is
0.5 E[x] for bipolar ReLU, and 0.5 E[x + z] with z bounded in
[-alpha, alpha] for bipolar ELU.

Tensors are laid out (features, samples): parity is taken over the row
index, restarting per sample column, so behavior does not depend on batch
composition.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .tensor import ensure_finite

# Scaled-ELU constants from the self-normalizing networks literature.
SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772

BASES = ("relu", "lrelu", "elu", "selu")


@dataclass(frozen=True)
class ActivationSpec:
    """Which base function to use, its parameters, and the bipolar flag.

    ``alpha`` is the negative-saturation parameter of ELU/SELU (defaults:
    1.0 for ELU, the SELU literature value for SELU). ``slope`` is the
    leaky slope in [0, 1]. ``lam`` is the SELU output scale.
    """

    base: str
    bipolar: bool = False
    slope: float = 0.01
    alpha: float = field(default=None)  # resolved per base in __post_init__
    lam: float = SELU_LAMBDA

    def __post_init__(self):
        if self.base not in BASES:
            raise ParameterError(f"unknown activation base {self.base!r}")
        if self.alpha is None:
            default = SELU_ALPHA if self.base == "selu" else 1.0
            object.__setattr__(self, "alpha", float(default))
        if not 0.0 <= self.slope <= 1.0:
            raise ParameterError(f"leaky slope must be in [0, 1], got {self.slope}")
        if self.alpha <= 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if self.lam <= 0:
            raise ParameterError(f"lambda must be positive, got {self.lam}")

    @property
    def name(self):
        """Short name such as 'relu' or 'belu' (b-prefix when bipolar)."""
        return ("b" + self.base) if self.bipolar else self.base

    def to_json(self):
        return {
            "base": self.base,
            "bipolar": self.bipolar,
            "alpha": self.alpha,
            "slope": self.slope,
            "lambda": self.lam,
        }

    @classmethod
    def from_json(cls, doc):
        from .config import check_keys  # local import avoids a cycle

        check_keys(doc, {"base", "bipolar", "alpha", "slope", "lambda"}, "activation")
        if "base" not in doc:
            raise ParameterError("activation config needs a 'base' key")
        kwargs = {"base": doc["base"], "bipolar": bool(doc.get("bipolar", False))}
        if "slope" in doc:
            kwargs["slope"] = float(doc["slope"])
        if "alpha" in doc:
            kwargs["alpha"] = float(doc["alpha"])
        if "lambda" in doc:
            kwargs["lam"] = float(doc["lambda"])
        return cls(**kwargs)


def spec_from_name(name):
    """Parse a short activation name: relu, brelu, lrelu, elu, belu, ..."""
    bipolar = name.startswith("b") and name != "relu"
    base = name[1:] if bipolar else name
    if base not in BASES:
        raise ParameterError(f"unknown activation name {name!r}")
    return ActivationSpec(base=base, bipolar=bipolar)


def _base_apply(spec, x):
    if spec.base == "relu":
        return np.maximum(x, 0.0)
    if spec.base == "lrelu":
        return np.where(x > 0, x, spec.slope * x)
    # expm1 on the clamped input: the positive branch never evaluates the
    # exponential, so large activations cannot overflow it.
    neg = spec.alpha * np.expm1(np.minimum(x, 0.0))
    y = np.where(x > 0, x, neg)
    return y if spec.base == "elu" else spec.lam * y


def _base_derivative(spec, x, kink_right):
    """df/dx with the x=0 value taken from the right or left branch."""
    mask = (x >= 0) if kink_right else (x > 0)
    if spec.base == "relu":
        return mask.astype(np.float64)
    if spec.base == "lrelu":
        return np.where(mask, 1.0, spec.slope)
    neg = spec.alpha * np.exp(np.minimum(x, 0.0))
    d = np.where(mask, 1.0, neg)
    return d if spec.base == "elu" else spec.lam * d


def apply(spec, x):
    """Evaluate the activation elementwise on a (features, samples) tensor.

    Bipolar mode computes f(x) on even rows and -f(-x) on odd rows.
    """
    ensure_finite(x, "activation input")
    if not spec.bipolar:
        return _base_apply(spec, x)
    y = np.empty_like(x, dtype=np.float64)
    y[0::2] = _base_apply(spec, x[0::2])
    y[1::2] = -_base_apply(spec, -x[1::2])
    return y


def derivative(spec, x):
    """Exact elementwise df/dx at x.

    The bipolar flip mirrors the derivative about zero:
    d/dx[-f(-x)] = f'(-x). At the kink x = 0 even rows use f'(0+) and odd
    rows use the mirrored left-side value, which keeps the bipolar
    structural identity exact.
    """
    ensure_finite(x, "activation input")
    if not spec.bipolar:
        return _base_derivative(spec, x, kink_right=True)
    d = np.empty_like(x, dtype=np.float64)
    d[0::2] = _base_derivative(spec, x[0::2], kink_right=True)
    d[1::2] = _base_derivative(spec, -x[1::2], kink_right=False)
    return d


def mean_shift_probe(spec, input_mean, n, rng):
    """Measure the output mean for an N(input_mean, 1) vector of width n.

    Used by the statistical property suite: for bipolar ReLU the result
    converges to 0.5 * input_mean; for bipolar ELU, 2 * result stays
    within alpha of input_mean.
    """
    if n < 2 or n % 2 != 0:
        raise ParameterError(f"probe width must be even and >= 2, got {n}")
    x = rng.normal(n, 1, mean=input_mean, std=1.0)
    y = apply(spec, x)
    return float(np.mean(y))
