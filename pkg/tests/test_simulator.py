"""Trial ensemble, SER estimation and required-SNR readout."""

import math

import numpy as np
import pytest

from irsvlc import (RequiredSnr, Scenario, SnrGrid, TrialGains, nlos_gain,
                    q_function, required_snr, run_trials, ser_curve, trial_rng,
                    wall_patches)
from irsvlc.scene import OrientationModel, default_scene, sample_ue
from irsvlc.simulator import SER_TARGET, compute_trial


def flat_gains(n, h):
    return [TrialGains(i, h, 0.0, 0.0) for i in range(n)]


# -- per-trial randomness ------------------------------------------------------


def test_trial_rng_reproducible_and_decorrelated():
    assert trial_rng(1, 0).random() == trial_rng(1, 0).random()
    assert trial_rng(1, 0).random() != trial_rng(1, 1).random()
    assert trial_rng(1, 0).random() != trial_rng(2, 0).random()


def test_run_trials_deterministic():
    scene = default_scene(n_per_side=4, blocker_density=0.5)
    a = run_trials(scene, 20, seed=3)
    b = run_trials(scene, 20, seed=3)
    assert [(t.index, t.h_los, t.h_nlos, t.h_irs) for t in a] == \
           [(t.index, t.h_los, t.h_nlos, t.h_irs) for t in b]
    c = run_trials(scene, 20, seed=4)
    assert any(x.h_los != y.h_los for x, y in zip(a, c))


def test_run_trials_validation():
    scene = default_scene(n_per_side=4)
    with pytest.raises(ValueError):
        run_trials(scene, 0, seed=1)
    with pytest.raises(ValueError):
        run_trials(scene, 10, seed=-1)


def test_run_trials_threads_match_serial():
    scene = default_scene(n_per_side=4, blocker_density=1.0)
    serial = run_trials(scene, 24, seed=7)
    parallel = run_trials(scene, 24, seed=7, threads=2)
    assert [(t.index, t.h_los, t.h_nlos, t.h_irs) for t in serial] == \
           [(t.index, t.h_los, t.h_nlos, t.h_irs) for t in parallel]


def test_trial_components_nonnegative_and_indexed():
    scene = default_scene(n_per_side=4, blocker_density=1.0)
    out = run_trials(scene, 30, seed=11)
    assert [t.index for t in out] == list(range(30))
    for t in out:
        assert t.h_los >= 0.0 and t.h_nlos >= 0.0 and t.h_irs >= 0.0


def test_upright_receiver_with_wide_fov_always_sees_the_source():
    # tilt pinned near zero and a 90 degree FOV: the ceiling source is visible
    # from every floor position, so no trial loses the direct path
    scene = default_scene(n_per_side=4, irs="none", fov_deg=90.0,
                          orientation=OrientationModel(0.0, 0.01))
    out = run_trials(scene, 50, seed=2)
    assert all(t.h_los > 0.0 for t in out)
    assert all(t.h_irs == 0.0 for t in out)


def test_trial_nlos_matches_direct_evaluation():
    # the precomputed diffuse field must reproduce the reference gain exactly
    scene = default_scene(n_per_side=4)
    patches = wall_patches(scene.room, 0.25, scene.wall_reflectivity)
    out = run_trials(scene, 5, seed=9)
    for t in out:
        ue = sample_ue(trial_rng(9, t.index), scene)
        assert t.h_nlos == nlos_gain(scene.aps[0], ue, patches, (), order=2)


# -- scenarios -----------------------------------------------------------------


def test_scenario_gain_composition():
    t = TrialGains(0, 1.0, 0.25, 4.0)
    assert Scenario.LOS_ONLY.effective_gain(t) == 1.0
    assert Scenario.LOS_NLOS.effective_gain(t) == 1.25
    assert Scenario.LOS_NLOS_IRS.effective_gain(t) == 5.25


def test_scenario_from_name_round_trip():
    for s in Scenario:
        assert Scenario.from_name(s.value) is s
    with pytest.raises(ValueError):
        Scenario.from_name("los")


# -- Q function ----------------------------------------------------------------


def test_q_function_values():
    assert q_function(0.0) == 0.5
    assert q_function(1.0) == pytest.approx(0.15865525393145707, rel=1e-12)


def test_q_function_reflection_and_monotonicity():
    xs = np.linspace(-6.0, 6.0, 121)
    q = q_function(xs)
    assert isinstance(q, np.ndarray)
    assert np.all(np.diff(q) < 0.0)
    assert np.allclose(q + q_function(-xs), 1.0, atol=1e-12)


# -- SNR grid ------------------------------------------------------------------


def test_snr_grid_default_covers_0_to_40():
    v = SnrGrid().values()
    assert len(v) == 41
    assert v[0] == 0.0 and v[-1] == 40.0
    assert np.all(np.diff(v) == 1.0)


def test_snr_grid_validation():
    with pytest.raises(ValueError):
        SnrGrid(0.0, 40.0, 0.0)
    with pytest.raises(ValueError):
        SnrGrid(10.0, 0.0, 1.0)
    assert len(SnrGrid(5.0, 5.0, 1.0).values()) == 1


# -- SER curves ----------------------------------------------------------------


def test_ser_degenerate_ensemble_matches_closed_form():
    curve = ser_curve(flat_gains(8, 3.7e-5), Scenario.LOS_ONLY)
    want = q_function(np.sqrt(10.0 ** (curve.snr_db / 10.0)))
    assert np.max(np.abs(curve.ser - want)) <= 1e-12
    assert np.all(curve.stderr == 0.0)


def test_ser_all_zero_gains_flat_half():
    curve = ser_curve(flat_gains(10, 0.0), Scenario.LOS_NLOS_IRS)
    assert np.all(curve.ser == 0.5)


def test_ser_zero_gain_fraction_sets_error_floor():
    mix = flat_gains(25, 0.0) + [TrialGains(i, 2.0, 0.0, 0.0) for i in range(25, 100)]
    curve = ser_curve(mix, Scenario.LOS_ONLY, SnrGrid(60.0, 60.0, 1.0))
    # blocked quarter contributes Q(0) = 1/2 forever: floor = 0.25 / 2
    assert float(curve.ser[0]) == pytest.approx(0.125, abs=1e-9)
    assert float(curve.stderr[0]) == pytest.approx(0.02175970699446223, rel=1e-9)


def test_ser_monotone_for_mixed_ensemble():
    r = np.random.default_rng(5)
    gains = [TrialGains(i, float(h), 0.0, 0.0)
             for i, h in enumerate(r.lognormal(-9.0, 0.8, size=200))]
    curve = ser_curve(gains, Scenario.LOS_ONLY)
    assert np.all(np.diff(curve.ser) <= 1e-15)
    assert np.all((0.0 <= curve.ser) & (curve.ser <= 0.5))


def test_ser_mean_square_override_shifts_curve():
    gains = flat_gains(4, 1.0)
    boosted = ser_curve(gains, Scenario.LOS_ONLY, mean_square_gain=0.25)
    plain = ser_curve(gains, Scenario.LOS_ONLY)
    # normalizing by a smaller mean square quadruples per-trial SNR
    live = plain.ser > 0.0  # both underflow to exactly zero at the high end
    assert live[:20].all()
    assert np.all(boosted.ser[live] < plain.ser[live])


def test_ser_curve_empty_raises():
    with pytest.raises(ValueError):
        ser_curve([], Scenario.LOS_ONLY)


# -- required SNR --------------------------------------------------------------


def test_required_snr_of_closed_form_curve():
    got = required_snr(ser_curve(flat_gains(4, 1.0), Scenario.LOS_ONLY))
    assert got.reachable and not got.non_monotone
    assert got.snr_db == pytest.approx(8.501913106660373, rel=1e-12)


def test_required_snr_unreachable_curve():
    got = required_snr(ser_curve(flat_gains(10, 0.0), Scenario.LOS_ONLY))
    assert got == RequiredSnr(None, False)
    assert not got.reachable


def test_required_snr_met_at_grid_start():
    curve = ser_curve(flat_gains(4, 1.0), Scenario.LOS_ONLY, SnrGrid(30.0, 40.0, 1.0))
    got = required_snr(curve)
    assert got.snr_db == 30.0


def test_required_snr_flags_wiggles():
    base = ser_curve(flat_gains(4, 1.0), Scenario.LOS_ONLY)
    bumpy = np.array(base.ser)
    bumpy[3] = bumpy[2] * 1.5  # non-monotone blip before the crossing
    curve = type(base)(base.scenario, base.snr_db, bumpy, base.stderr, base.trials)
    assert required_snr(curve).non_monotone


def test_required_snr_target_validation():
    curve = ser_curve(flat_gains(4, 1.0), Scenario.LOS_ONLY)
    with pytest.raises(ValueError):
        required_snr(curve, target=0.0)
    assert SER_TARGET == 3.8e-3


def test_per_trial_scenario_ordering_transfers_to_ser():
    scene = default_scene(n_per_side=4, blocker_density=1.0)
    out = run_trials(scene, 40, seed=13)
    ms = float(np.mean([Scenario.LOS_NLOS_IRS.effective_gain(t) ** 2 for t in out]))
    curves = {s: ser_curve(out, s, mean_square_gain=ms) for s in Scenario}
    # against a common normalizer, adding propagation paths cannot hurt
    assert np.all(curves[Scenario.LOS_NLOS].ser <= curves[Scenario.LOS_ONLY].ser + 1e-15)
    assert np.all(curves[Scenario.LOS_NLOS_IRS].ser <= curves[Scenario.LOS_NLOS].ser + 1e-15)
