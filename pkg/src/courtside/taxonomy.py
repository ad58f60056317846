"""Label vocabularies and legality rules for doubles-tennis shot annotation.

Everything in this module is pure and deterministic: no I/O, no state.
The rule tables encode which directions and formations may legally be
combined with each shot, given the hitter's handedness and court quadrant.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional


class CourtPosition(enum.Enum):
    FAR_DEUCE = "far_deuce"
    FAR_ADVANTAGE = "far_ad"
    NEAR_DEUCE = "near_deuce"
    NEAR_ADVANTAGE = "near_ad"

    @property
    def is_near(self) -> bool:
        return self in (CourtPosition.NEAR_DEUCE, CourtPosition.NEAR_ADVANTAGE)

    @property
    def is_deuce(self) -> bool:
        return self in (CourtPosition.NEAR_DEUCE, CourtPosition.FAR_DEUCE)


class ShotSide(enum.Enum):
    FOREHAND = "forehand"
    BACKHAND = "backhand"


class ShotType(enum.Enum):
    SERVE = "serve"
    SECOND_SERVE = "second-serve"
    RETURN = "return"
    VOLLEY = "volley"
    LOB = "lob"
    SMASH = "smash"
    SWING = "swing"

    @property
    def is_serve(self) -> bool:
        return self in (ShotType.SERVE, ShotType.SECOND_SERVE)


class ShotDirection(enum.Enum):
    T = "t"
    B = "b"
    W = "w"
    CC = "cc"
    DL = "dl"
    II = "ii"
    IO = "io"

    @property
    def is_serve_direction(self) -> bool:
        return self in (ShotDirection.T, ShotDirection.B, ShotDirection.W)

    @property
    def is_groundstroke_direction(self) -> bool:
        return not self.is_serve_direction


class Formation(enum.Enum):
    CONVENTIONAL = "conventional"
    I_FORMATION = "i-formation"
    AUSTRALIAN = "australian"
    NON_SERVE = "non-serve"


class Outcome(enum.Enum):
    IN = "in"
    WIN = "win"
    ERR = "err"


class Handedness(enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    UNKNOWN = "unknown"


class PlayerRole(enum.Enum):
    P1 = "p1"
    P2 = "p2"
    P3 = "p3"
    P4 = "p4"

    @property
    def is_near_team(self) -> bool:
        return self in (PlayerRole.P1, PlayerRole.P2)

    def same_team(self, other: "PlayerRole") -> bool:
        return self.is_near_team == other.is_near_team


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Finding:
    severity: Severity
    code: str
    message: str
    field: Optional[str] = None


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    def add_error(self, code: str, message: str, field: Optional[str] = None) -> None:
        self.findings.append(Finding(Severity.ERROR, code, message, field))

    def add_warning(self, code: str, message: str, field: Optional[str] = None) -> None:
        self.findings.append(Finding(Severity.WARNING, code, message, field))

    def extend(self, other: "ValidationReport") -> None:
        self.findings.extend(other.findings)

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity is Severity.ERROR]

    def valid(self) -> bool:
        return not self.errors

    def codes(self) -> set[str]:
        return {f.code for f in self.findings}

    def to_dict(self) -> dict:
        return {
            "valid": self.valid(),
            "findings": [
                {
                    "severity": f.severity.value,
                    "code": f.code,
                    "message": f.message,
                    "field": f.field,
                }
                for f in self.findings
            ],
        }


@dataclass(frozen=True)
class PlayerProfile:
    role: PlayerRole
    description: str
    handedness: Handedness = Handedness.UNKNOWN

    def __post_init__(self):
        if not self.description.strip():
            raise ValueError("player description must be non-empty")


@dataclass(frozen=True)
class ShotLabel:
    court: CourtPosition
    side: ShotSide
    shot_type: ShotType
    direction: ShotDirection
    formation: Formation
    outcome: Outcome
    hitter: Optional[PlayerRole] = None

    def to_dict(self) -> dict:
        d = {
            "court": self.court.value,
            "side": self.side.value,
            "shot_type": self.shot_type.value,
            "direction": self.direction.value,
            "formation": self.formation.value,
            "outcome": self.outcome.value,
        }
        if self.hitter is not None:
            d["hitter"] = self.hitter.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ShotLabel":
        return cls(
            court=CourtPosition(d["court"]),
            side=ShotSide(d["side"]),
            shot_type=ShotType(d["shot_type"]),
            direction=ShotDirection(d["direction"]),
            formation=Formation(d["formation"]),
            outcome=Outcome(d["outcome"]),
            hitter=PlayerRole(d["hitter"]) if d.get("hitter") else None,
        )


SERVE_DIRECTIONS = frozenset({ShotDirection.T, ShotDirection.B, ShotDirection.W})
GROUNDSTROKE_DIRECTIONS = frozenset(
    {ShotDirection.CC, ShotDirection.DL, ShotDirection.II, ShotDirection.IO}
)
SERVE_FORMATIONS = frozenset(
    {Formation.CONVENTIONAL, Formation.I_FORMATION, Formation.AUSTRALIAN}
)

# Handedness rule table: (handedness, deuce?, side) -> allowed rally directions.
# A right-hander's forehand covers the deuce court naturally (CC/DL) and plays
# inside-in/inside-out from the advantage court; left-handers mirror this.
_CC_DL = frozenset({ShotDirection.CC, ShotDirection.DL})
_II_IO = frozenset({ShotDirection.II, ShotDirection.IO})

_RALLY_DIRECTION_TABLE = {
    (Handedness.RIGHT, True, ShotSide.FOREHAND): _CC_DL,
    (Handedness.RIGHT, True, ShotSide.BACKHAND): _II_IO,
    (Handedness.RIGHT, False, ShotSide.FOREHAND): _II_IO,
    (Handedness.RIGHT, False, ShotSide.BACKHAND): _CC_DL,
    (Handedness.LEFT, True, ShotSide.FOREHAND): _II_IO,
    (Handedness.LEFT, True, ShotSide.BACKHAND): _CC_DL,
    (Handedness.LEFT, False, ShotSide.FOREHAND): _CC_DL,
    (Handedness.LEFT, False, ShotSide.BACKHAND): _II_IO,
}


def legal_directions(
    shot_type: ShotType,
    handedness: Handedness,
    court: CourtPosition,
    side: ShotSide,
) -> frozenset[ShotDirection]:
    """Directions a shot may legally be annotated with.

    Serves always use the service-box placements T/B/W. Rally strokes are
    constrained by the handedness rule table; unknown handedness relaxes to
    the union of both handed rule sets so review is never blocked.
    """
    if shot_type.is_serve:
        return SERVE_DIRECTIONS
    if handedness is Handedness.UNKNOWN:
        return GROUNDSTROKE_DIRECTIONS
    return _RALLY_DIRECTION_TABLE[(handedness, court.is_deuce, side)]


def legal_formations(shot_type: ShotType) -> frozenset[Formation]:
    if shot_type.is_serve:
        return SERVE_FORMATIONS
    return frozenset({Formation.NON_SERVE})


def validate_shot(
    label: ShotLabel,
    profile: PlayerProfile,
    shot_index: int,
    is_last_shot: bool,
) -> ValidationReport:
    """Check one shot label against the hitter profile and its rally position.

    All problems are reported as findings; the function never raises for an
    illegal label. shot_index is the 1-based ordinal within the rally.
    """
    if label.hitter is not None and profile.role is not label.hitter:
        raise ValueError(
            f"profile role {profile.role.value} does not match hitter {label.hitter.value}"
        )
    if shot_index < 1:
        raise ValueError("shot_index is 1-based")

    report = ValidationReport()

    allowed = legal_directions(label.shot_type, profile.handedness, label.court, label.side)
    if label.direction not in allowed:
        code = "serve-direction" if label.shot_type.is_serve else "handedness-direction"
        report.add_error(
            code,
            f"direction {label.direction.value} not legal for "
            f"{label.shot_type.value} ({profile.handedness.value}, "
            f"{label.court.value}, {label.side.value}); "
            f"allowed: {sorted(d.value for d in allowed)}",
            field="direction",
        )

    if label.formation not in legal_formations(label.shot_type):
        report.add_error(
            "formation",
            f"formation {label.formation.value} not legal for {label.shot_type.value}",
            field="formation",
        )

    if shot_index == 1 and not label.shot_type.is_serve:
        report.add_error(
            "first-shot-serve",
            f"first shot of a rally must be a serve, got {label.shot_type.value}",
            field="shot_type",
        )
    elif shot_index == 2 and label.shot_type is not ShotType.RETURN:
        report.add_error(
            "second-shot-return",
            f"second shot of a rally must be a return, got {label.shot_type.value}",
            field="shot_type",
        )
    elif shot_index >= 3 and (
        label.shot_type.is_serve or label.shot_type is ShotType.RETURN
    ):
        report.add_error(
            "rally-shot-type",
            f"shot {shot_index} cannot be a serve or return",
            field="shot_type",
        )

    if label.outcome in (Outcome.WIN, Outcome.ERR) and not is_last_shot:
        report.add_error(
            "outcome-not-last",
            f"outcome {label.outcome.value} only valid on the final shot",
            field="outcome",
        )
    if is_last_shot and label.outcome is Outcome.IN:
        report.add_warning(
            "truncated-rally",
            "final shot still in play; rally may be truncated",
            field="outcome",
        )

    return report


class TokenError(ValueError):
    """Malformed or semantically illegal event token."""

    def __init__(self, message: str, report: Optional[ValidationReport] = None):
        super().__init__(message)
        self.report = report


def _intrinsic_report(label: ShotLabel) -> ValidationReport:
    # Label-intrinsic legality only: direction family and formation must match
    # the shot type. Handedness/ordinal rules need rally context and are
    # checked by validate_shot.
    report = ValidationReport()
    if label.shot_type.is_serve:
        if not label.direction.is_serve_direction:
            report.add_error(
                "serve-direction",
                f"serve direction must be t/b/w, got {label.direction.value}",
                field="direction",
            )
    elif label.direction.is_serve_direction:
        report.add_error(
            "groundstroke-direction",
            f"non-serve direction must be cc/dl/ii/io, got {label.direction.value}",
            field="direction",
        )
    if label.formation not in legal_formations(label.shot_type):
        report.add_error(
            "formation",
            f"formation {label.formation.value} not legal for {label.shot_type.value}",
            field="formation",
        )
    return report


def format_event_token(label: ShotLabel) -> str:
    """Canonical underscore-separated token, e.g.

    near_ad_forehand_serve_b_i-formation_in
    """
    report = _intrinsic_report(label)
    if not report.valid():
        raise TokenError(
            "cannot format illegal label: " + "; ".join(f.message for f in report.errors),
            report,
        )
    return "_".join(
        [
            label.court.value,  # already near_deuce / far_ad style (one underscore)
            label.side.value,
            label.shot_type.value,
            label.direction.value,
            label.formation.value,
            label.outcome.value,
        ]
    )


_COURT_TOKENS = {c.value: c for c in CourtPosition}


def parse_event_token(token: str) -> ShotLabel:
    """Inverse of format_event_token. Raises TokenError on malformed or
    semantically illegal tokens."""
    parts = token.strip().lower().split("_")
    if len(parts) != 7:
        raise TokenError(f"expected 7 underscore-separated fields, got {len(parts)}: {token!r}")
    court_key = parts[0] + "_" + parts[1]
    if court_key not in _COURT_TOKENS:
        raise TokenError(f"unknown court position {court_key!r}")
    try:
        label = ShotLabel(
            court=_COURT_TOKENS[court_key],
            side=ShotSide(parts[2]),
            shot_type=ShotType(parts[3]),
            direction=ShotDirection(parts[4]),
            formation=Formation(parts[5]),
            outcome=Outcome(parts[6]),
        )
    except ValueError as exc:
        raise TokenError(f"unknown token value in {token!r}: {exc}") from exc
    report = _intrinsic_report(label)
    if not report.valid():
        raise TokenError(
            f"illegal label combination in {token!r}: "
            + "; ".join(f.message for f in report.errors),
            report,
        )
    return label
