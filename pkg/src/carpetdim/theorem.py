"""Assembly of the exact dimension bounds and special-case formulas.

The central sandwich for the carpet attractor F reads

    max( bd piF + log(m b^s)/(-log a),  ad piF + H/(-log a) )
        <=  ad F  <=  ad piF + log(m b^s)/(-log a)

and collapses to an equality in three certifiable cases: the projection is
the full interval, the projection satisfies a separation property making
its box and Assouad dimensions agree, or s equals the minimal symbolic
local dimension (log m - H)/(-log b).  This module evaluates the bounds
from computed ingredients, decides which case (if any) is certified, and
produces the report object the CLI serializes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from .carpet import CarpetIFS, pu_carpet
from .errors import (
    ConflictingEvidence,
    MissingS,
    ParameterOutOfRange,
    PreconditionViolation,
)
from .numberfield import FieldElement, NumberField, scalar_to_json
from .overlap import equivalence_classes

_EPS = 1e-12


def assouad_bounds(m: int, alpha: float, beta: float, s: float, H: float,
                   bd_piF: float, ad_piF: float) -> tuple[float, float]:
    """Theorem sandwich (lower, upper) for ad F; validates the input chain and
    names the first failing inequality."""
    if not (0 < alpha < beta < 1):
        raise PreconditionViolation("0 < alpha < beta < 1")
    if not (-_EPS <= s <= min(bd_piF, 1.0) + _EPS):
        raise PreconditionViolation("s <= min(bd piF, 1)")
    if not (-_EPS <= H <= math.log(m) + _EPS):
        raise PreconditionViolation("0 <= H <= log m")
    if not (bd_piF <= ad_piF + _EPS and ad_piF <= 1.0 + _EPS):
        raise PreconditionViolation("bd piF <= ad piF <= 1")
    if H > math.log(m) + s * math.log(beta) + 1e-9:
        raise PreconditionViolation("H <= log(m beta^s)  (symbolic chain)")
    la = -math.log(alpha)
    composite = math.log(m * beta ** s) / la
    lower = max(bd_piF + composite, ad_piF + H / la)
    upper = ad_piF + composite
    if lower > upper + _EPS:
        raise PreconditionViolation("lower <= upper")
    return lower, upper


@dataclass(frozen=True)
class CaseClassification:
    case: int | None                  # 1 | 2 | 3 | None
    evidence: tuple[str, ...]
    family: str | None = None         # Garsia | Pisot | Salem | generic, when known

    @property
    def label(self) -> str:
        return "none" if self.case is None else str(self.case)


def projection_covers_interval(ifs: CarpetIFS, k_cap: int = 6,
                               word_cap: int = 4096) -> int | None:
    """Smallest k <= k_cap at which the depth-k projected cylinders exactly
    cover [0,1], or None.  Exact interval merging."""
    width = ifs.field.one
    for k in range(1, k_cap + 1):
        width = width * ifs.beta
        if ifs.m ** k > word_cap:
            return None
        table = equivalence_classes(ifs, k, budget=word_cap)
        endpoints = sorted(table.endpoint(key) for key in table.sizes)
        reach = ifs.field.zero
        ok = True
        for x in endpoints:
            if x > reach:
                ok = False
                break
            hi = x + width
            if reach < hi:
                reach = hi
        if ok and reach >= ifs.field.one:
            return k
    return None


def projection_osc(ifs: CarpetIFS) -> bool:
    """Exact certificate that the projected IFS has pairwise disjoint open
    first-level intervals (touching allowed)."""
    ts = sorted(pair[0] for pair in ifs.maps)
    for a, b in zip(ts, ts[1:]):
        if b < a + ifs.beta:
            return False
    return True


def classify_corollary(ifs: CarpetIFS, s: float | None = None,
                       h_lower: float | None = None, wsp: bool | None = None,
                       tolerance: float = 0.02, cover_cap: int = 6,
                       family: str | None = None) -> CaseClassification:
    """Decide which corollary case is certified; the lowest valid case id is
    reported with all gathered evidence.  A user flag contradicting an exact
    certificate raises ConflictingEvidence."""
    evidence = []
    cases = []
    cover_k = projection_covers_interval(ifs, k_cap=cover_cap)
    if cover_k is not None:
        cases.append(1)
        evidence.append(f"pi F = [0,1] certified at depth {cover_k}")
    osc = projection_osc(ifs)
    if osc and wsp is False:
        raise ConflictingEvidence("wsp=False contradicts the exact OSC certificate")
    if osc:
        cases.append(2)
        evidence.append("projection OSC certified exactly")
    elif wsp:
        cases.append(2)
        evidence.append("weak separation asserted by user flag")
    if s is not None and h_lower is not None:
        sym = (math.log(ifs.m) - h_lower) / (-math.log(ifs.beta_float))
        if abs(s - sym) <= tolerance:
            cases.append(3)
            evidence.append(f"s matches symbolic minimal dimension within {tolerance}")
    if not cases:
        return CaseClassification(case=None, evidence=(), family=family)
    return CaseClassification(case=min(cases), evidence=tuple(evidence), family=family)


@dataclass(frozen=True)
class DimensionReport:
    """All dimension quantities for one carpet, with the sandwich bounds."""

    m: int
    alpha: FieldElement
    beta: FieldElement
    s_value: float
    s_source: str                      # tau-fit | min-bin | convolution-bound | user | Hu-formula
    s_bracket: tuple[float, float] | None
    h_lower: float
    bd_piF: float
    ad_piF: float
    theorem_lower: float
    theorem_upper: float
    classification: CaseClassification
    bd_F: float | None
    ad_F_exact: float | None
    hd_F_lower: float | None
    degenerate: bool
    empirical: dict = dc_field(default_factory=dict)
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "inputs": {
                "m": self.m,
                "alpha": float(self.alpha),
                "beta": float(self.beta),
                "alpha_exact": scalar_to_json(self.alpha),
                "beta_exact": scalar_to_json(self.beta),
                "degenerate": self.degenerate,
            },
            "s": {
                "value": self.s_value,
                "source": self.s_source,
                "bracket": list(self.s_bracket) if self.s_bracket else None,
            },
            "H_lower": self.h_lower,
            "pi_F": {"bd": self.bd_piF, "ad": self.ad_piF},
            "bounds": {"lower": self.theorem_lower, "upper": self.theorem_upper},
            "case": self.classification.label,
            "case_evidence": list(self.classification.evidence),
            "family": self.classification.family,
            "bd_F": self.bd_F,
            "ad_F": self.ad_F_exact,
            "hd_F_lower": self.hd_F_lower,
            "empirical": self.empirical,
            "notes": list(self.notes),
        }


def build_report(ifs: CarpetIFS, s: float, s_source: str, h_lower: float,
                 s_bracket: tuple[float, float] | None = None,
                 wsp: bool | None = None, ad_piF_user: float | None = None,
                 bd_piF_user: float | None = None, bd_F: float | None = None,
                 dim_nu_beta: float | None = None, empirical: dict | None = None,
                 family: str | None = None, tolerance: float = 0.02,
                 notes: tuple[str, ...] = ()) -> DimensionReport:
    """Assemble the theorem bounds and case classification for any carpet.

    ad piF policy: equal to bd piF under OSC/WSP evidence, exactly 1 when the
    weak separation property is flagged false, else user-supplied.
    """
    m = ifs.m
    af, bf = ifs.alpha_float, ifs.beta_float
    la = -math.log(af)
    notes = tuple(notes)
    classification = classify_corollary(ifs, s=s, h_lower=h_lower, wsp=wsp,
                                        tolerance=tolerance, family=family)
    cover = any(e.startswith("pi F = [0,1]") for e in classification.evidence)
    osc_or_wsp = any("OSC" in e or "separation" in e for e in classification.evidence)

    if cover:
        bd_piF = 1.0
    elif projection_osc(ifs):
        bd_piF = min(math.log(m) / (-math.log(bf)), 1.0)
    elif bd_piF_user is not None:
        bd_piF = bd_piF_user
    else:
        raise ParameterOutOfRange("bd_piF required: no exact certificate applies")

    if cover and abs(bd_piF - 1.0) < _EPS:
        ad_piF = 1.0
    elif osc_or_wsp:
        ad_piF = bd_piF
    elif wsp is False:
        ad_piF = 1.0
    elif ad_piF_user is not None:
        ad_piF = ad_piF_user
    else:
        raise ParameterOutOfRange("ad_piF required: separation status unknown")

    if ifs.degenerate:
        s = 0.0
        notes = notes + ("degenerate single-map carpet: s = log m/(-log beta) = 0",)

    lower, upper = assouad_bounds(m, af, bf, s, h_lower, bd_piF, ad_piF)

    ad_exact = None
    if classification.case == 1:
        ad_exact = 1.0 + math.log(m * bf ** s) / la
    elif classification.case == 2:
        ad_exact = bd_piF + math.log(m * bf ** s) / la
    elif classification.case == 3:
        ad_exact = ad_piF + h_lower / la
        notes = notes + ("case-3 value uses the certified lower bound for H",)

    hd_lower = None
    if dim_nu_beta is not None:
        hd_lower = dim_nu_beta + math.log(m * bf) / la

    return DimensionReport(
        m=m, alpha=ifs.alpha, beta=ifs.beta, s_value=s, s_source=s_source,
        s_bracket=s_bracket, h_lower=h_lower, bd_piF=bd_piF, ad_piF=ad_piF,
        theorem_lower=lower, theorem_upper=upper, classification=classification,
        bd_F=bd_F, ad_F_exact=ad_exact, hd_F_lower=hd_lower,
        degenerate=ifs.degenerate, empirical=empirical or {}, notes=notes)


def pu_report(alpha, beta, s: float | None, s_source: str,
              dim_nu_beta: float | None = None,
              s_bracket: tuple[float, float] | None = None,
              h_lower: float = 0.0, empirical: dict | None = None,
              family: str | None = None,
              notes: tuple[str, ...] = ()) -> DimensionReport:
    """Report for the two-map family: pi F = [0,1] exactly (case 1), so
    bd F = 1 + log(2 beta)/(-log alpha) and ad F = 1 + log(2 beta^s)/(-log alpha)."""
    ifs = pu_carpet(alpha, beta)
    if s is None:
        raise MissingS("a value of s is required for the exact case-1 formula")
    af, bf = ifs.alpha_float, ifs.beta_float
    la = -math.log(af)
    bd_F = 1.0 + math.log(2 * bf) / la
    report = build_report(ifs, s=s, s_source=s_source, h_lower=h_lower,
                          s_bracket=s_bracket, bd_F=bd_F,
                          dim_nu_beta=dim_nu_beta, empirical=empirical,
                          family=family, notes=notes)
    ad_F = report.ad_F_exact
    if ad_F is None or report.classification.case != 1:
        raise PreconditionViolation("PU projection failed the unit-interval certificate")
    if abs(s - 1.0) <= 1e-9:
        if abs(ad_F - bd_F) > 1e-9:
            raise PreconditionViolation("s = 1 must give ad F = bd F")
    elif s < 1.0 and not ad_F > bd_F:
        raise PreconditionViolation("s < 1 must give bd F < ad F")
    return report


def hu_s_multinacci(k: int) -> tuple[FieldElement, float]:
    """The multinacci parameter beta_k (positive root of x + ... + x^k = 1 in
    (1/2, 1)) and the known infimal local dimension of its Bernoulli
    convolution: log(phi)/(k log beta_k) - log 2/log beta_k, phi the Golden
    Ratio."""
    if not 2 <= k <= 12:
        raise ParameterOutOfRange("k must lie in 2..12 (k = 1 degenerates)")
    minpoly = [-1] + [1] * k
    field = NumberField(minpoly, (Fraction(1, 2), Fraction(1)))
    beta = field.theta
    log_beta = math.log(float(beta))
    phi = (1 + math.sqrt(5)) / 2
    s = math.log(phi) / (k * log_beta) - math.log(2) / log_beta
    return beta, s


def alpha_half_inversion(ad_F_upper: float, beta: float) -> float:
    """With alpha = 1/2, a certified upper bound on ad F inverts to a lower
    bound on the infimal local dimension: (2 - ad F) log 2 / (-log beta)."""
    if not 1.0 - _EPS <= ad_F_upper <= 2.0 + _EPS:
        raise ParameterOutOfRange("ad_F_upper must lie in [1, 2]")
    bf = float(beta)
    if not 0 < bf < 1:
        raise ParameterOutOfRange("beta must lie in (0, 1)")
    return (2.0 - ad_F_upper) * math.log(2.0) / (-math.log(bf))
