"""Configuration normalization, unit systems, file round trips."""

import math

import numpy as np
import pytest

from bornfield.charges import (
    ChargeConfiguration,
    PointCharge,
    UnitSystem,
    normalize,
    read_config_file,
    to_dimensionless,
    write_config_file,
)

FOUR_PI = 4.0 * math.pi


def config(*charges):
    return ChargeConfiguration(tuple(PointCharge(p, a) for p, a in charges))


def test_merge_coincident_sums_amplitudes():
    c = normalize(config(((0, 0, 0), 1.0), ((0, 0, 0), 2.0)))
    assert len(c) == 1
    assert c.charges[0].amplitude == 3.0


def test_merge_zero_total_drops_point():
    c = normalize(config(((0, 0, 0), 1.0), ((0, 0, 0), -1.0)))
    assert len(c) == 0


def test_distinct_points_unchanged():
    c = normalize(config(((0, 0, 0), 1.0), ((0, 0, 1), -1.0)))
    assert len(c) == 2
    assert c.min_pairwise_distance == pytest.approx(1.0)
    assert c.separation_radius == pytest.approx(0.5)


def test_normalize_idempotent_and_conserving():
    rng = np.random.default_rng(11)
    for _ in range(20):
        pts = rng.integers(0, 3, size=(8, 3)).astype(float)  # collisions likely
        amps = rng.standard_normal(8)
        amps[amps == 0] = 1.0
        c = config(*[(tuple(p), a) for p, a in zip(pts, amps)])
        n1 = normalize(c)
        n2 = normalize(n1)
        assert [ch.position for ch in n1.charges] == [ch.position for ch in n2.charges]
        assert [ch.amplitude for ch in n1.charges] == [ch.amplitude for ch in n2.charges]
        assert n1.total_amplitude == pytest.approx(c.total_amplitude, abs=1e-12)


def test_normalize_orders_lexicographically():
    c = normalize(config(((1, 0, 0), 1.0), ((-1, 0, 0), 2.0), ((0, 5, 0), 3.0)))
    assert [ch.position[0] for ch in c.charges] == [-1.0, 0.0, 1.0]


def test_invalid_charges_rejected():
    with pytest.raises(ValueError):
        PointCharge((0, 0, float("nan")), 1.0)
    with pytest.raises(ValueError):
        PointCharge((0, 0, 0), 0.0)
    with pytest.raises(ValueError):
        PointCharge((0, 0, float("inf")), 1.0)


def test_electrostatic_conversion():
    u = UnitSystem.electrostatic(beta=1.0)
    assert u.amplitude_from_raw(1) == 1.0
    u = UnitSystem.electrostatic(beta=0.5)
    assert u.amplitude_from_raw(-2) == pytest.approx(-0.5, rel=0)  # beta^2 z = 0.25 * -2


def test_geometric_conversion():
    u = UnitSystem.geometric()
    assert u.amplitude_from_raw(FOUR_PI / 3.0) == pytest.approx(1.0, rel=1e-15)
    assert u.amplitude_from_raw(-1.0) == pytest.approx(-3.0 / FOUR_PI, rel=1e-15)


def test_electrostatic_rejects_non_integer_and_zero():
    u = UnitSystem.electrostatic(beta=1.0)
    with pytest.raises(ValueError):
        u.amplitude_from_raw(0.5)
    with pytest.raises(ValueError):
        u.amplitude_from_raw(0)
    with pytest.raises(ValueError):
        UnitSystem.electrostatic(beta=0.0)


def test_roundtrip_exact_for_rational_beta():
    u = UnitSystem.electrostatic(beta=0.5)
    for z in (-3, 1, 7):
        a = u.amplitude_from_raw(z)
        assert u.raw_from_amplitude(a) == float(z)  # exact: beta^2 = 0.25


def test_roundtrip_real_beta():
    u = UnitSystem.electrostatic(beta=0.3)
    for z in (-5, 2, 11):
        a = u.amplitude_from_raw(z)
        assert u.raw_from_amplitude(a) == pytest.approx(z, rel=1e-15)


def test_geometric_roundtrip():
    u = UnitSystem.geometric()
    for mu in (-2.5, 0.7, FOUR_PI):
        a = u.amplitude_from_raw(mu)
        assert u.raw_from_amplitude(a) == pytest.approx(mu, rel=1e-15)


def test_to_dimensionless_merges():
    u = UnitSystem.electrostatic(beta=1.0)
    c = to_dimensionless([((0, 0, 0), 1), ((0, 0, 0), 1)], u)
    assert len(c) == 1 and c.charges[0].amplitude == 2.0


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "charges.cfg"
    path.write_text(
        "# dipole in electrostatic units\n"
        "units electrostatic 0.5 1.0\n"
        "0 0 1  1   # positive pole\n"
        "0 0 -1 -1\n"
    )
    c = read_config_file(path)
    assert len(c) == 2
    assert sorted(ch.amplitude for ch in c.charges) == [-0.25, 0.25]
    out = tmp_path / "echo.cfg"
    write_config_file(out, c)
    again = read_config_file(out)
    assert [ch.position for ch in again.charges] == [ch.position for ch in c.charges]
    assert [ch.amplitude for ch in again.charges] == [ch.amplitude for ch in c.charges]


def test_config_file_rejects_malformed(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("0 0 1\n")
    with pytest.raises(ValueError):
        read_config_file(path)
    path.write_text("0 0 0 1\nunits geometric\n")
    with pytest.raises(ValueError):
        read_config_file(path)


def test_empty_configuration_is_legal():
    c = normalize(ChargeConfiguration(()))
    assert len(c) == 0
    assert c.total_amplitude == 0.0
    assert math.isinf(c.min_pairwise_distance)
