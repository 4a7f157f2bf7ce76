import numpy as np
import pytest

from wradon import (DataError, GridSpec, attenuation_weight,
                    check_chang_symmetry, constant_weight, divergent_beam,
                    eval_w0, half_wave_weight, make_circle_grid, make_phantom,
                    make_sphere_grid, poly_theta_weight, sample_weight,
                    symmetrize, w0_field, w0_weight, weight_from_spec)

BALL_PROFILE = {"type": "ball", "radius": 0.35, "edge": 0.15}


def odd_weight(dim, coef=0.5):
    powers = (1,) + (0,) * (dim - 1)
    return poly_theta_weight(dim, 1.0, [(coef, powers, BALL_PROFILE)])


# ---------------------------------------------------------------------------
# direction averages

def test_w0_constant():
    circle = make_circle_grid(16)
    w = constant_weight(2.5 - 1.0j, 2)
    pts = np.array([[0.1, 0.2], [0.0, 0.0]])
    assert np.abs(eval_w0(w, pts, circle) - (2.5 - 1.0j)).max() < 1e-12


def test_w0_kills_odd_terms():
    # direction average of 1 + c*h(x)*theta_1 is exactly 1
    circle = make_circle_grid(60)
    pts = np.array([[0.0, 0.0], [0.2, -0.1], [0.9, 0.9]])
    assert np.abs(eval_w0(odd_weight(2), pts, circle) - 1.0).max() < 1e-12

    sphere = make_sphere_grid(8, 16)
    pts3 = np.array([[0.0, 0.0, 0.0], [0.1, 0.2, -0.3]])
    assert np.abs(eval_w0(odd_weight(3), pts3, sphere) - 1.0).max() < 1e-12


def test_w0_even_moment():
    # average of theta_1^2 is 1/2 on the circle, 1/3 on the sphere
    w2 = poly_theta_weight(2, 1.0, [(1.0, (2, 0), None)])
    circle = make_circle_grid(36)
    origin = np.zeros((1, 2))
    assert abs(eval_w0(w2, origin, circle)[0] - 1.5) < 1e-12

    w3 = poly_theta_weight(3, 1.0, [(1.0, (2, 0, 0), None)])
    sphere = make_sphere_grid(6, 12)
    assert abs(eval_w0(w3, np.zeros((1, 3)), sphere)[0] - 4.0 / 3.0) < 1e-12


def test_w0_half_wave():
    # average of max(theta_1, 0) over the circle is 1/pi
    circle = make_circle_grid(720)
    w = half_wave_weight(2, 0.8)
    got = eval_w0(w, np.zeros((1, 2)), circle)[0]
    assert abs(got - (1.0 + 0.8 / np.pi)) < 1e-4


def test_w0_weight_is_direction_blind():
    circle = make_circle_grid(32)
    w = half_wave_weight(2, 0.8, profile=BALL_PROFILE)
    avg = w0_weight(w, circle)
    pts = np.array([[0.0, 0.0], [0.3, 0.1]])
    a = avg.eval(pts, np.array([1.0, 0.0]))
    b = avg.eval(pts, np.array([0.0, -1.0]))
    assert np.abs(a - b).max() == 0.0


def test_w0_field_floor_rejection():
    # W = theta_1 has vanishing direction average everywhere
    circle = make_circle_grid(16)
    w = poly_theta_weight(2, 0.0, [(1.0, (1, 0), None)])
    spec = GridSpec.centered(2, 9, 2.0)
    with pytest.raises(DataError):
        w0_field(w, spec, circle)


def test_w0_field_attenuation_positive():
    spec = GridSpec.centered(2, 33, 2.2)
    a = make_phantom("ball", spec, radius=0.4, edge=0.1, amplitude=0.3)
    w = attenuation_weight(a)
    circle = make_circle_grid(16)
    w0 = w0_field(w, spec, circle)
    vals = w0.values.real
    assert vals.min() > 0.0
    assert vals.max() <= 1.0 + 1e-12


# ---------------------------------------------------------------------------
# symmetrization

def test_symmetrize_kills_odd_part():
    w = odd_weight(2)
    ws = symmetrize(w)
    pts = np.array([[0.1, 0.0], [0.0, 0.3]])
    theta = np.array([1.0, 0.0])
    assert np.abs(ws.eval(pts, theta) - 1.0).max() < 1e-15
    assert np.abs(ws.eval(pts, theta) - ws.eval(pts, -theta)).max() < 1e-15


def test_symmetrize_fixes_even_weights():
    w = poly_theta_weight(2, 1.0, [(0.7, (2, 0), BALL_PROFILE)])
    ws = symmetrize(w)
    pts = np.array([[0.0, 0.0], [0.25, -0.1]])
    for ang in (0.0, 0.7, 2.1):
        theta = np.array([np.cos(ang), np.sin(ang)])
        assert np.abs(ws.eval(pts, theta) - w.eval(pts, theta)).max() < 1e-15


def test_symmetrize_idempotent():
    w = half_wave_weight(2, 0.8, profile=BALL_PROFILE)
    ws = symmetrize(w)
    wss = symmetrize(ws)
    pts = np.array([[0.0, 0.0], [0.2, 0.2]])
    theta = np.array([0.6, 0.8])
    assert np.abs(wss.eval(pts, theta) - ws.eval(pts, theta)).max() < 1e-15


def test_w0_of_symmetrized_matches(rng):
    circle = make_circle_grid(24)
    w = half_wave_weight(2, 0.8, profile=BALL_PROFILE)
    pts = rng.uniform(-0.5, 0.5, size=(20, 2))
    a = eval_w0(w, pts, circle)
    b = eval_w0(symmetrize(w), pts, circle)
    assert np.abs(a - b).max() < 1e-13


# ---------------------------------------------------------------------------
# exactness-condition check

def test_symmetry_check_constant_and_odd():
    spec = GridSpec.centered(2, 17, 2.0)
    circle = make_circle_grid(24)
    rep = check_chang_symmetry(constant_weight(1.0 + 2.0j, 2), spec, circle)
    assert rep.max_violation < 1e-12
    assert rep.holds

    rep = check_chang_symmetry(odd_weight(2), spec, circle)
    assert rep.max_violation < 1e-12
    assert rep.holds

    sphere = make_sphere_grid(6, 12)
    spec3 = GridSpec.centered(3, 9, 2.0)
    rep = check_chang_symmetry(odd_weight(3), spec3, sphere)
    assert rep.max_violation < 1e-12


def test_symmetry_check_half_wave_violation():
    # even part of max(theta_1, 0) is |theta_1|/2, the average is 1/pi;
    # the gap over the circle peaks where theta_1 vanishes
    spec = GridSpec.centered(2, 33, 2.0)
    circle = make_circle_grid(360)
    w = half_wave_weight(2, 0.8, profile=BALL_PROFILE)
    rep = check_chang_symmetry(w, spec, circle)
    expect = 0.8 / np.pi
    assert abs(rep.max_violation - expect) < 1e-3
    assert rep.max_violation > 0.05
    assert not rep.holds
    assert rep.argmax


def test_symmetry_report_counts():
    spec = GridSpec.centered(2, 9, 2.0)
    circle = make_circle_grid(8)
    rep = check_chang_symmetry(constant_weight(1.0, 2), spec, circle)
    assert rep.x_count == 81
    assert rep.dir_count == 8


# ---------------------------------------------------------------------------
# attenuation

def test_divergent_beam_zero_map():
    spec = GridSpec.centered(2, 33, 2.0)
    a = make_phantom("ball", spec, radius=0.4, amplitude=0.0)
    out = divergent_beam(a, np.array([[0.0, 0.0]]), np.array([1.0, 0.0]))
    assert np.abs(out).max() == 0.0


def test_divergent_beam_center_chord():
    # from the center, the integral of c * indicator-with-edge is
    # c * (radius + edge/2) in any direction
    spec = GridSpec.centered(2, 129, 2.2)
    c, radius, edge = 0.3, 0.4, 0.1
    a = make_phantom("ball", spec, radius=radius, edge=edge, amplitude=c)
    expect = c * (radius + edge / 2)
    for ang in (0.0, 0.3, 1.1, 2.0):
        d = np.array([np.cos(ang), np.sin(ang)])
        got = divergent_beam(a, np.zeros((1, 2)), d)[0]
        assert abs(got - expect) < 0.01 * expect


def test_divergent_beam_full_chord_and_miss():
    spec = GridSpec.centered(2, 129, 2.2)
    c, radius, edge = 0.5, 0.4, 0.1
    a = make_phantom("ball", spec, radius=radius, edge=edge, amplitude=c)
    start = np.array([[-0.9, 0.0]])
    d = np.array([1.0, 0.0])
    expect = c * (2 * radius + edge)
    assert abs(divergent_beam(a, start, d)[0] - expect) < 0.01 * expect
    # pointing away from the support: nothing accumulates
    assert abs(divergent_beam(a, start, -d)[0]) < 1e-6


def test_attenuation_weight_matches_direct_beam():
    spec = GridSpec.centered(2, 65, 2.2)
    a = make_phantom("gaussian", spec, sigma=0.12, amplitude=0.4)
    w = attenuation_weight(a)
    theta = np.array([0.0, 1.0])
    pts = np.array([[0.0, 0.0], [0.2, -0.3], [-0.4, 0.1]])
    direct = np.exp(-divergent_beam(a, pts, w.ray_direction(theta)))
    assert np.abs(w.eval(pts, theta) - direct).max() < 1e-12


def test_attenuation_table_path_consistent(rng):
    # past the batch threshold the cached-table path takes over; it must
    # agree with the direct quadrature on a smooth map
    spec = GridSpec.centered(2, 65, 2.2)
    a = make_phantom("gaussian", spec, sigma=0.12, amplitude=0.5)
    w = attenuation_weight(a)
    theta = np.array([0.6, 0.8])
    theta /= np.sqrt(theta @ theta)
    pts = rng.uniform(-0.4, 0.4, size=(600, 2))
    table_vals = w.eval(pts, theta)
    direct = np.exp(-divergent_beam(a, pts, w.ray_direction(theta)))
    assert np.abs(table_vals - direct).max() < 2e-3


def test_attenuation_weight_is_asymmetric():
    spec = GridSpec.centered(2, 65, 2.2)
    a = make_phantom("ball", spec, radius=0.3, edge=0.1, amplitude=0.5,
                     center=[0.2, 0.0])
    w = attenuation_weight(a)
    pts = np.array([[0.0, 0.0]])
    theta = np.array([0.0, 1.0])
    fwd = w.eval(pts, theta)[0]
    bwd = w.eval(pts, -theta)[0]
    assert abs(fwd - bwd) > 1e-3


def test_attenuation_line_slab_matches_pointwise():
    spec = GridSpec.centered(2, 65, 2.2)
    a = make_phantom("gaussian", spec, sigma=0.12, amplitude=0.5)
    w = attenuation_weight(a)
    theta = np.array([1.0, 0.0])
    s_values = np.array([-0.2, 0.0, 0.3])
    t_values = np.linspace(-0.8, 0.8, 33)
    slab = w.eval_line_slab(theta, s_values, t_values)
    assert slab.shape == (3, 33)
    d = w.ray_direction(theta)
    for i, s in enumerate(s_values):
        pts = s * theta + t_values[:, None] * d
        assert np.abs(slab[i] - w.eval(pts, theta)).max() < 2e-3


def test_attenuation_map_validation():
    spec = GridSpec.centered(2, 17, 2.0)
    from wradon import ScalarField
    neg = ScalarField(spec, np.full((17, 17), -0.1, dtype=np.complex128))
    with pytest.raises(ValueError):
        attenuation_weight(neg)
    cplx = ScalarField(spec, np.full((17, 17), 0.1 + 0.1j))
    with pytest.raises(ValueError):
        attenuation_weight(cplx)


# ---------------------------------------------------------------------------
# bounds and construction from specs

def test_weight_bound_holds_on_samples(rng):
    spec = GridSpec.centered(2, 33, 2.0)
    circle = make_circle_grid(16)
    for w in (odd_weight(2), half_wave_weight(2, 0.8, profile=BALL_PROFILE)):
        table = sample_weight(w, spec, circle)
        assert np.abs(table).max() <= w.bound + 1e-12


def test_weight_from_spec_round_trip(rng):
    circle = make_circle_grid(12)
    pts = rng.uniform(-0.5, 0.5, size=(10, 2))
    for w in (constant_weight(1.5 - 0.5j, 2),
              odd_weight(2),
              half_wave_weight(2, 0.8, profile=BALL_PROFILE)):
        rebuilt = weight_from_spec(w.meta["spec"], 2)
        for j in range(circle.count):
            th = circle.nodes[j]
            assert np.abs(rebuilt.eval(pts, th) - w.eval(pts, th)).max() < 1e-15


def test_weight_from_spec_attenuation_inline():
    spec = GridSpec.centered(2, 33, 2.2)
    a = make_phantom("ball", spec, radius=0.3, edge=0.1, amplitude=0.3)
    w = weight_from_spec({"kind": "attenuation", "map": a}, 2)
    assert w.kind == "attenuation"
    with pytest.raises(ValueError):
        weight_from_spec({"kind": "attenuation", "map": "a.field"}, 2)
    with pytest.raises(ValueError):
        weight_from_spec({"kind": "nope"}, 2)


def test_weight_from_spec_attenuation_keeps_map_path(tmp_path):
    from wradon import load_field, save_field

    spec = GridSpec.centered(3, 17, 2.0)
    a = make_phantom("ball", spec, radius=0.3, edge=0.1, amplitude=0.3)
    path = str(tmp_path / "amap.npz")
    save_field(path, a)
    w = weight_from_spec({"kind": "attenuation", "map": path}, 3,
                         load_field=load_field)
    assert w.meta["spec"]["map"] == path
    rebuilt = weight_from_spec(w.meta["spec"], 3, load_field=load_field)
    pts = np.array([[0.1, 0.05, -0.1], [0.0, 0.2, 0.0]])
    th = np.array([0.0, 0.6, 0.8])
    assert np.abs(rebuilt.eval(pts, th) - w.eval(pts, th)).max() < 1e-12


def test_weight_from_spec_induced_plane_round_trip(rng):
    from wradon import InducedPlaneWeight

    ray_w = half_wave_weight(3, 0.6, axis=0, profile=BALL_PROFILE)
    induced = InducedPlaneWeight(ray_w, [0.0, 0.0, 1.0])
    rebuilt = weight_from_spec(induced.meta["spec"], 3)
    pts = rng.uniform(-0.5, 0.5, size=(8, 3))
    for th in ([0.6, 0.0, 0.8], [0.0, 1.0, 0.0], [-0.48, 0.6, 0.64]):
        th = np.asarray(th)
        assert np.abs(rebuilt.eval(pts, th) - induced.eval(pts, th)).max() < 1e-15
    with pytest.raises(ValueError, match="three dimensions"):
        weight_from_spec(induced.meta["spec"], 2)
