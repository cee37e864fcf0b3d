import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from channel_model import dbm
from exceptions import ScenarioError
from location_model import Position3D
from scenario import (
    Scenario,
    build_context,
    load_scenario,
    parse_scenario_text,
    resolve_seed,
    scenario_from_dict,
    seed_streams,
    with_overrides,
)

DESK_TEXT = """
# desk-scale reference scenario
profile = desk
upsilon_m = 2          # meters
target_rate_bps_hz = 4
user_true_pos_m = 20, 20, -20
seed = 12345678901234567
"""


class TestParse:

    def test_desk_profile(self):
        scen = parse_scenario_text(DESK_TEXT)
        assert (scen.bs_geom.size, scen.irs_geom.size) == (4, 16)
        assert scen.trials == 2000
        assert scen.upsilon_m == 2.0
        assert scen.user_true_pos == Position3D(20.0, 20.0, -20.0)
        assert scen.estimated_user == scen.user_true_pos
        assert scen.seed == 12345678901234567

    def test_defaults(self):
        scen = parse_scenario_text("")
        assert scen.profile == "desk"
        assert_allclose(dbm(scen.noise_power), -89.0)
        assert scen.eval_mode == "model"

    def test_unknown_key(self):
        with pytest.raises(ScenarioError) as info:
            parse_scenario_text("upsilon_m = 2\nradius = 3\n")
        assert (info.value.line, info.value.field) == (2, "radius")

    def test_duplicate_key(self):
        with pytest.raises(ScenarioError) as info:
            parse_scenario_text("seed = 1\nseed = 2\n")
        assert (info.value.line, info.value.field) == (2, "seed")

    def test_missing_equals(self):
        with pytest.raises(ScenarioError) as info:
            parse_scenario_text("# header\nupsilon_m 2\n")
        assert info.value.line == 2

    def test_unparsable_value(self):
        with pytest.raises(ScenarioError) as info:
            parse_scenario_text("trials = 10\nbs_pos_m = 1, 2\n")
        assert (info.value.line, info.value.field) == (2, "bs_pos_m")

    def test_non_integer_count(self):
        with pytest.raises(ScenarioError) as info:
            parse_scenario_text("trials = 2.5\n")
        assert info.value.field == "trials"

    def test_invalid_value_reports_line(self):
        with pytest.raises(ScenarioError) as info:
            parse_scenario_text("seed = 1\nupsilon_m = -1\n")
        assert (info.value.line, info.value.field) == (2, "upsilon_m")

    def test_invalid_geometry_reports_line(self):
        with pytest.raises(ScenarioError) as info:
            parse_scenario_text("irs_nz = 0\n")
        assert (info.value.line, info.value.field) == (1, "irs_nz")

    def test_coincident_positions(self):
        with pytest.raises(ScenarioError):
            parse_scenario_text("user_true_pos_m = 0, 0, 0\n")

    def test_paper_profile_needs_flag(self):
        with pytest.raises(ScenarioError) as info:
            parse_scenario_text("profile = paper\n")
        assert info.value.field == "profile"
        scen = parse_scenario_text("profile = paper\n", allow_paper=True)
        assert (scen.bs_geom.size, scen.irs_geom.size, scen.trials) == (16, 100, 10000)

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError):
            load_scenario(str(tmp_path / "missing.cfg"))

    def test_load_file(self, tmp_path):
        path = tmp_path / "desk.cfg"
        path.write_text(DESK_TEXT)
        assert load_scenario(str(path)) == parse_scenario_text(DESK_TEXT)


class TestScenario:

    def test_dict_form_rebuilds_scenario(self):
        scen = Scenario(upsilon_m=1.5, seed=4, user_est_pos=Position3D(21.0, 19.0, -20.0))
        assert scenario_from_dict(scen.to_dict()) == scen

    def test_overrides_skip_unset(self):
        scen = Scenario(seed=1)
        assert with_overrides(scen, seed=None, trials=None) is scen
        assert with_overrides(scen, seed=9).seed == 9

    def test_resolve_seed(self):
        assert resolve_seed(Scenario(seed=3)).seed == 3
        pinned = resolve_seed(Scenario())
        assert isinstance(pinned.seed, int)

    def test_seed_streams_are_reproducible(self):
        a = seed_streams(Scenario(seed=5))
        b = seed_streams(Scenario(seed=5))
        assert set(a) == {"channel", "optimizer", "evaluation"}
        for key in a:
            assert_array_equal(a[key].generate_state(4), b[key].generate_state(4))
        assert not np.array_equal(a["channel"].generate_state(4), a["evaluation"].generate_state(4))

    def test_build_context(self, desk_scenario):
        ctx, channels = build_context(desk_scenario)
        assert (ctx.bs_size, ctx.irs_size) == (4, 16)
        assert ctx.ball.radius == 2.0
        assert_allclose(ctx.sens.d_hat, 20 * np.sqrt(3))
        ctx2, channels2 = build_context(desk_scenario)
        assert_array_equal(channels.G.matrix, channels2.G.matrix)

    def test_optimizer_config(self, desk_scenario):
        cfg = desk_scenario.optimizer_config(rng_seed=3)
        assert cfg.target_rate_r == 4.0
        assert cfg.sdp_tol == desk_scenario.sdp_tol
        assert cfg.rng_seed == 3
