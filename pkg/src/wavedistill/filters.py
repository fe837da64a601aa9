"""Filter pairs: the optimization variable of the whole package.

A :class:`FilterPair` holds an even-length lowpass filter ``h`` and the
highpass ``g`` derived from it by the quadrature-mirror relation
``g[n] = (-1)^n h[N-1-n]``. Only the lowpass is ever free; every operation
that mutates taps re-derives the highpass.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, InvalidFilterError, UnknownBankError

# Scaling-filter taps in natural index order, 24 significant digits
# (generated by scripts/make_filter_constants.py; db5 cross-checked against
# direct spectral factorization to < 1e-60).
_BANK_TAPS = {
    "haar": (
        "0.707106781186547524400844",
        "0.707106781186547524400844",
    ),
    "db5": (
        "0.160102397974192914480724",
        "0.603829269797189670540119",
        "0.724308528437772927728071",
        "0.138428145901320731505397",
        "-0.242294887066382031862571",
        "-0.0322448695846383746484798",
        "0.0775714938400457135231305",
        "-0.00624149021279827427419052",
        "-0.0125807519990819994685097",
        "0.00333572528547377127799818",
    ),
    "sym5": (
        "0.0273330683449987688184934",
        "0.0295194909257062612500338",
        "-0.0391342493023138436244261",
        "0.199397533976855596895065",
        "0.723407690404040792074113",
        "0.633978963456792063717485",
        "0.0166021057645108481334629",
        "-0.175328089908056224237493",
        "-0.021101834024689041000799",
        "0.0195388827352498267757536",
    ),
    "coif2": (
        "0.0163873364632036404274884",
        "-0.0414649367868717740097128",
        "-0.0673725547237255938045636",
        "0.386110066822762850419041",
        "0.812723635449413495344214",
        "0.41700518442323904804781",
        "-0.0764885990782807542776128",
        "-0.059434418646431087306855",
        "0.0236801719468477688059278",
        "0.00561143481936883424563495",
        "-0.00182320887091103209460983",
        "-0.000720549445520346995073756",
    ),
}

BANK_NAMES = tuple(_BANK_TAPS)


def derive_highpass(lowpass):
    """Quadrature-mirror highpass: g[n] = (-1)^n * h[N-1-n].

    Raises
    ------
    InvalidFilterError
        If the input has fewer than 2 taps.
    """
    h = np.asarray(lowpass, dtype=float)
    if h.ndim != 1 or h.size < 2:
        raise InvalidFilterError("lowpass filter needs at least 2 taps")
    signs = np.where(np.arange(h.size) % 2 == 0, 1.0, -1.0)
    return signs * h[::-1]


def highpass_adjoint(grad_g):
    """Pull a gradient w.r.t. the highpass taps back onto the lowpass.

    The quadrature-mirror map is linear; this is its transpose, used by
    every filter-gradient computation that chains g(h).
    """
    q = np.asarray(grad_g, dtype=float)
    n = q.size
    signs = np.where((n - 1 - np.arange(n)) % 2 == 0, 1.0, -1.0)
    return signs * q[::-1]


@dataclass(frozen=True)
class FilterPair:
    """Immutable lowpass/highpass pair. Construct via :func:`make_pair`,
    :func:`standard_bank`, or :func:`load_filter` so the invariants hold.
    """

    lowpass: np.ndarray
    highpass: np.ndarray
    name: str | None = field(default=None)

    def __post_init__(self):
        n = self.lowpass.size
        if n < 2 or n % 2 != 0:
            raise InvalidFilterError(
                f"filter support must be even and >= 2, got {n}"
            )
        if self.highpass.size != n:
            raise InvalidFilterError("lowpass/highpass length mismatch")
        self.lowpass.setflags(write=False)
        self.highpass.setflags(write=False)

    @property
    def support(self):
        return self.lowpass.size

    def with_lowpass(self, lowpass, name=None):
        """New pair from fresh lowpass taps; highpass re-derived."""
        h = np.array(lowpass, dtype=float)
        return FilterPair(h, derive_highpass(h), name)


def make_pair(lowpass, name=None):
    h = np.array(lowpass, dtype=float)
    return FilterPair(h, derive_highpass(h), name)


def standard_bank(name):
    """Return one of the named orthogonal banks: haar, db5, sym5, coif2."""
    try:
        taps = _BANK_TAPS[name]
    except KeyError:
        raise UnknownBankError(
            f"unknown filter bank {name!r}; available: {', '.join(_BANK_TAPS)}"
        ) from None
    return make_pair([float(t) for t in taps], name=name)


def perturb(pair, sigma, seed):
    """Add i.i.d. Gaussian noise of scale ``sigma`` to the lowpass taps.

    Deterministic for a given seed; the highpass is re-derived.
    """
    if sigma < 0:
        raise InvalidArgumentError(f"sigma must be >= 0, got {sigma}")
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, 1.0, size=pair.support) * sigma
    label = f"{pair.name}+noise" if pair.name else None
    return pair.with_lowpass(pair.lowpass + noise, name=label)


def save_filter(pair, path):
    """Write ``name`` and full-precision lowpass taps as JSON.

    The highpass is never serialized; it is re-derived on load.
    """
    doc = {"name": pair.name, "lowpass": [float(v) for v in pair.lowpass]}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_filter(path):
    with open(path) as fh:
        doc = json.load(fh)
    return make_pair([float(v) for v in doc["lowpass"]], name=doc.get("name"))
