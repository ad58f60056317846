import itertools

import pytest
from hypothesis import given, strategies as st

from courtside.taxonomy import (
    CourtPosition,
    Formation,
    Handedness,
    Outcome,
    PlayerProfile,
    PlayerRole,
    ShotDirection,
    ShotLabel,
    ShotSide,
    ShotType,
    TokenError,
    format_event_token,
    legal_directions,
    legal_formations,
    parse_event_token,
    validate_shot,
)

GROUND = {ShotDirection.CC, ShotDirection.DL, ShotDirection.II, ShotDirection.IO}
SERVES = {ShotDirection.T, ShotDirection.B, ShotDirection.W}


class TestLegalDirections:
    def test_volley_right_near_deuce_forehand(self):
        got = legal_directions(
            ShotType.VOLLEY, Handedness.RIGHT, CourtPosition.NEAR_DEUCE, ShotSide.FOREHAND
        )
        assert got == {ShotDirection.CC, ShotDirection.DL}

    def test_serve_ignores_handedness_and_side(self):
        got = legal_directions(
            ShotType.SERVE, Handedness.LEFT, CourtPosition.NEAR_ADVANTAGE, ShotSide.FOREHAND
        )
        assert got == SERVES

    def test_unknown_handedness_is_union(self):
        got = legal_directions(
            ShotType.SWING, Handedness.UNKNOWN, CourtPosition.FAR_DEUCE, ShotSide.BACKHAND
        )
        assert got == GROUND

    def test_left_advantage_forehand_mirrors_right_deuce_forehand(self):
        right = legal_directions(
            ShotType.SWING, Handedness.RIGHT, CourtPosition.NEAR_DEUCE, ShotSide.FOREHAND
        )
        left = legal_directions(
            ShotType.SWING, Handedness.LEFT, CourtPosition.NEAR_ADVANTAGE, ShotSide.FOREHAND
        )
        assert right == left == {ShotDirection.CC, ShotDirection.DL}

    @given(
        st.sampled_from(list(ShotType)),
        st.sampled_from(list(Handedness)),
        st.sampled_from(list(CourtPosition)),
        st.sampled_from(list(ShotSide)),
    )
    def test_never_mixes_vocabularies(self, shot_type, handedness, court, side):
        got = legal_directions(shot_type, handedness, court, side)
        assert got
        assert got <= SERVES or got <= GROUND


class TestLegalFormations:
    @pytest.mark.parametrize("shot_type", [ShotType.SERVE, ShotType.SECOND_SERVE])
    def test_serves(self, shot_type):
        assert legal_formations(shot_type) == {
            Formation.CONVENTIONAL,
            Formation.I_FORMATION,
            Formation.AUSTRALIAN,
        }

    @pytest.mark.parametrize(
        "shot_type",
        [ShotType.RETURN, ShotType.VOLLEY, ShotType.LOB, ShotType.SMASH, ShotType.SWING],
    )
    def test_non_serves(self, shot_type):
        assert legal_formations(shot_type) == {Formation.NON_SERVE}


def make_label(**overrides):
    base = dict(
        court=CourtPosition.NEAR_ADVANTAGE,
        side=ShotSide.FOREHAND,
        shot_type=ShotType.SERVE,
        direction=ShotDirection.T,
        formation=Formation.I_FORMATION,
        outcome=Outcome.IN,
        hitter=PlayerRole.P1,
    )
    base.update(overrides)
    return ShotLabel(**base)


PROFILE = PlayerProfile(PlayerRole.P1, "red shirt", Handedness.RIGHT)


class TestValidateShot:
    def test_legal_first_serve(self):
        report = validate_shot(make_label(), PROFILE, shot_index=1, is_last_shot=False)
        assert report.valid()

    def test_serve_with_rally_direction(self):
        report = validate_shot(
            make_label(direction=ShotDirection.CC, formation=Formation.CONVENTIONAL),
            PROFILE, 1, False,
        )
        assert "serve-direction" in report.codes()

    def test_handedness_direction(self):
        label = make_label(
            court=CourtPosition.NEAR_DEUCE,
            shot_type=ShotType.VOLLEY,
            direction=ShotDirection.II,
            formation=Formation.NON_SERVE,
        )
        report = validate_shot(label, PROFILE, 3, False)
        assert "handedness-direction" in report.codes()

    def test_ordinal_rules(self):
        volley = make_label(shot_type=ShotType.VOLLEY, direction=ShotDirection.CC,
                            formation=Formation.NON_SERVE)
        assert "first-shot-serve" in validate_shot(volley, PROFILE, 1, False).codes()
        assert "second-shot-return" in validate_shot(volley, PROFILE, 2, False).codes()
        serve = make_label()
        assert "rally-shot-type" in validate_shot(serve, PROFILE, 3, False).codes()

    def test_outcome_placement(self):
        win = make_label(outcome=Outcome.WIN)
        assert "outcome-not-last" in validate_shot(win, PROFILE, 1, False).codes()
        assert validate_shot(win, PROFILE, 1, True).valid()
        trunc = validate_shot(make_label(), PROFILE, 1, True)
        assert trunc.valid()
        assert "truncated-rally" in trunc.codes()

    def test_profile_mismatch_raises(self):
        with pytest.raises(ValueError):
            validate_shot(
                make_label(hitter=PlayerRole.P2), PROFILE, 1, False
            )


def all_valid_labels():
    for court, side, shot_type, direction, formation, outcome in itertools.product(
        CourtPosition, ShotSide, ShotType, ShotDirection, Formation, Outcome
    ):
        if shot_type.is_serve != direction.is_serve_direction:
            continue
        if formation not in legal_formations(shot_type):
            continue
        yield ShotLabel(court, side, shot_type, direction, formation, outcome)


class TestEventTokens:
    def test_reference_token(self):
        label = parse_event_token("near_ad_forehand_serve_b_i-formation_in")
        assert label == ShotLabel(
            CourtPosition.NEAR_ADVANTAGE,
            ShotSide.FOREHAND,
            ShotType.SERVE,
            ShotDirection.B,
            Formation.I_FORMATION,
            Outcome.IN,
        )
        assert format_event_token(label) == "near_ad_forehand_serve_b_i-formation_in"

    def test_far_deuce_volley(self):
        label = ShotLabel(
            CourtPosition.FAR_DEUCE,
            ShotSide.BACKHAND,
            ShotType.VOLLEY,
            ShotDirection.CC,
            Formation.NON_SERVE,
            Outcome.WIN,
        )
        assert format_event_token(label) == "far_deuce_backhand_volley_cc_non-serve_win"

    def test_round_trip_all_valid_labels(self):
        for label in all_valid_labels():
            assert parse_event_token(format_event_token(label)) == label

    def test_illegal_combination_rejected(self):
        with pytest.raises(TokenError):
            parse_event_token("near_ad_forehand_serve_cc_conventional_in")
        with pytest.raises(TokenError):
            format_event_token(make_label(direction=ShotDirection.CC, hitter=None))

    @pytest.mark.parametrize(
        "token",
        ["near_ad_forehand", "", "x_y_z_a_b_c_d", "near_ad_forehand_serve_b_i-formation_in_extra"],
    )
    def test_malformed_tokens(self, token):
        with pytest.raises(TokenError):
            parse_event_token(token)
