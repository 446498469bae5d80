"""Severity calibration: bisect until roughly half the data is misclassified."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import CalibrationError
from ..gradfeat import predict_classes
from ..rng import stream_rng
from .attacks import bim, fgsm
from .noise import gaussian_noise, impulse_noise, shot_noise

log = logging.getLogger("gendetect")


@dataclass
class PerturbationFamily:
    """A calibratable one-parameter perturbation.

    ``lo``/``hi`` bound the severity search; ``log_scale`` bisects in log
    space (used for the shot factor whose useful range spans decades).
    """

    name: str
    lo: float
    hi: float
    log_scale: bool = False
    zero_severity: float = 0.0

    def apply(self, net, images, labels, severity, seed, tag):
        raise NotImplementedError


class _NoiseFamily(PerturbationFamily):
    _FN = {"gaussian": gaussian_noise, "shot": shot_noise, "impulse": impulse_noise}

    def apply(self, net, images, labels, severity, seed, tag):
        fn = self._FN[self.name]
        out = np.empty_like(images)
        for i in range(len(images)):
            out[i] = fn(images[i], severity, stream_rng(seed, tag, self.name, i))
        return out


class _AttackFamily(PerturbationFamily):
    def apply(self, net, images, labels, severity, seed, tag):
        if self.name == "fgsm":
            return fgsm(net, images, labels, severity)
        return bim(net, images, labels, severity)


def noise_family(kind):
    if kind == "gaussian":
        return _NoiseFamily("gaussian", lo=1e-4, hi=0.5)
    if kind == "shot":
        # lo=1 rather than 5: high-contrast desk images survive f=5 shot
        # noise too often for the 50% target to be reachable
        return _NoiseFamily("shot", lo=1.0, hi=5000.0, log_scale=True, zero_severity=5000.0)
    if kind == "impulse":
        return _NoiseFamily("impulse", lo=1e-4, hi=0.5)
    raise ValueError(f"unknown noise family: {kind!r}")


def attack_family(kind):
    if kind in ("fgsm", "bim"):
        return _AttackFamily(kind, lo=1e-5, hi=0.3)
    raise ValueError(f"no calibratable attack family: {kind!r}")


def get_family(kind):
    if kind in ("gaussian", "shot", "impulse"):
        return noise_family(kind)
    return attack_family(kind)


@dataclass
class CalibrationResult:
    severity: float
    achieved_rate: float
    iterations: int
    clean_rate: float
    history: list = field(default_factory=list)


def bisect_severity(rate_fn, lo, hi, target=0.5, tol=0.03, max_iter=25, log_scale=False):
    """Bisection on a (piecewise-constant, roughly monotone) rate function.

    Returns ``(severity, achieved_rate, iterations, history)``; raises with
    the bracketing rates when the target cannot lie between them.
    """
    r_lo = rate_fn(lo)
    r_hi = rate_fn(hi)
    history = [(lo, r_lo), (hi, r_hi)]
    if abs(r_lo - target) <= tol:
        return lo, r_lo, 0, history
    if abs(r_hi - target) <= tol:
        return hi, r_hi, 0, history
    increasing = r_hi >= r_lo
    if not (min(r_lo, r_hi) < target < max(r_lo, r_hi)):
        raise CalibrationError(
            f"target rate {target} not bracketed: rate({lo:g})={r_lo:.4f}, rate({hi:g})={r_hi:.4f}"
        )
    a, b = lo, hi
    for it in range(1, max_iter + 1):
        mid = math.exp((math.log(a) + math.log(b)) / 2.0) if log_scale else (a + b) / 2.0
        r = rate_fn(mid)
        history.append((mid, r))
        log.debug("bisection %2d: severity %.6g rate %.4f", it, mid, r)
        if abs(r - target) <= tol:
            return mid, r, it, history
        if (r < target) == increasing:
            a = mid
        else:
            b = mid
    raise CalibrationError(
        f"no severity within tolerance after {max_iter} iterations; last bracket "
        f"[{a:g}, {b:g}], rates {history[-1][1]:.4f}"
    )


def misclassification_rate(net, images, labels):
    return float(np.mean(predict_classes(net, images) != np.asarray(labels)))


def calibrate_severity(net, images, labels, family, target=0.5, tol=0.03,
                       max_iter=25, seed=0, tag="calibrate"):
    """Find the severity at which the family misclassifies ~``target`` of
    the given images; severity 0 is returned (with a warning) when the
    clean error rate already reaches the target."""
    labels = np.asarray(labels)
    clean_rate = misclassification_rate(net, images, labels)
    if clean_rate >= target:
        log.warning(
            "clean error rate %.3f already >= target %.3f; returning zero severity",
            clean_rate, target,
        )
        return CalibrationResult(
            severity=family.zero_severity, achieved_rate=clean_rate,
            iterations=0, clean_rate=clean_rate,
        )

    def rate_fn(severity):
        perturbed = family.apply(net, images, labels, severity, seed, tag)
        return misclassification_rate(net, perturbed, labels)

    severity, achieved, iterations, history = bisect_severity(
        rate_fn, family.lo, family.hi, target=target, tol=tol,
        max_iter=max_iter, log_scale=family.log_scale,
    )
    return CalibrationResult(
        severity=severity, achieved_rate=achieved, iterations=iterations,
        clean_rate=clean_rate, history=history,
    )
