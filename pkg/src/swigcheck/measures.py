"""Association scales shared by the graphical and numeric layers."""

from __future__ import annotations

from .errors import Error

RD = "rd"
RR = "rr"
OR = "or"
SCALES = (RD, RR, OR)

LONG_NAMES = {RD: "risk difference", RR: "risk ratio", OR: "odds ratio"}


class UndefinedMeasureError(Error):
    code = "undefined_measure"


def check_scale(scale: str) -> str:
    if scale not in SCALES:
        raise Error(f"unknown scale {scale!r}; expected one of {', '.join(SCALES)}")
    return scale


def odds(p: float) -> float:
    if p >= 1.0:
        raise UndefinedMeasureError(f"odds undefined at probability {p}")
    return p / (1.0 - p)


def from_risks(scale: str, r1: float, r0: float) -> float:
    """Measure value from the treated and untreated risks."""
    check_scale(scale)
    if scale == RD:
        return r1 - r0
    if scale == RR:
        if r0 == 0.0:
            raise UndefinedMeasureError("risk ratio undefined: untreated risk is 0")
        return r1 / r0
    if r0 == 0.0:
        raise UndefinedMeasureError("odds ratio undefined: untreated odds is 0")
    return odds(r1) / odds(r0)


def apply_effect(scale: str, r0: float, value: float) -> float:
    """Treated risk implied by an untreated risk and an effect size."""
    check_scale(scale)
    if scale == RD:
        r1 = r0 + value
    elif scale == RR:
        r1 = r0 * value
    else:
        o = odds(r0) * value
        r1 = o / (1.0 + o)
    if not 0.0 <= r1 <= 1.0:
        raise UndefinedMeasureError(
            f"effect {value} on scale {scale} takes risk {r0} outside [0, 1]"
        )
    return r1
