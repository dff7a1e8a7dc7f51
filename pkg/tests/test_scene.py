import numpy as np
import pytest

from mmw3d.scene import (MeshModel, Scene, load_mesh, place_scene,
                         positions_at, sample_surface, synth_scene)

CUBE_PLY = """ply
format ascii 1.0
element vertex 8
property float x
property float y
property float z
element face 12
property list uchar int vertex_indices
end_header
0 0 0
1 0 0
1 1 0
0 1 0
0 0 1
1 0 1
1 1 1
0 1 1
3 0 1 2
3 0 2 3
3 4 6 5
3 4 7 6
3 0 4 5
3 0 5 1
3 1 5 6
3 1 6 2
3 2 6 7
3 2 7 3
3 3 7 4
3 3 4 0
"""

QUAD_OBJ = """# unit square as two triangles
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
f 1 2 3
f 1 3 4
"""


@pytest.fixture
def cube_ply(tmp_path):
    p = tmp_path / "cube.ply"
    p.write_text(CUBE_PLY)
    return p


@pytest.fixture
def quad_obj(tmp_path):
    p = tmp_path / "quad.obj"
    p.write_text(QUAD_OBJ)
    return p


def test_load_unit_cube_ply(cube_ply):
    mesh = load_mesh(cube_ply)
    assert mesh.vertices.shape == (8, 3)
    assert mesh.triangles.shape == (12, 3)
    assert mesh.triangle_areas().sum() == pytest.approx(6.0)


def test_load_quad_obj(quad_obj):
    mesh = load_mesh(quad_obj)
    assert mesh.vertices.shape == (4, 3)
    assert mesh.triangles.shape == (2, 3)
    assert mesh.triangle_areas().sum() == pytest.approx(1.0)


def test_load_mesh_errors(tmp_path):
    bad = tmp_path / "bad.ply"
    bad.write_text("not a ply at all\n")
    with pytest.raises(ValueError):
        load_mesh(bad)
    with pytest.raises(FileNotFoundError):
        load_mesh(tmp_path / "absent.ply")
    quad = tmp_path / "quad.ply"
    quad.write_text(
        "ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\n"
        "property float y\nproperty float z\nelement face 1\n"
        "property list uchar int vertex_indices\nend_header\n"
        "0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n")
    with pytest.raises(ValueError, match="triangular"):
        load_mesh(quad)
    with pytest.raises(ValueError):
        MeshModel(vertices=np.zeros((3, 3)), triangles=[[0, 1, 5]])


def test_sample_surface_quadrant_uniformity(quad_obj):
    mesh = load_mesh(quad_obj)
    pts = sample_surface(mesh, 10_000, seed=42)
    assert pts.shape == (10_000, 3)
    assert np.all((pts[:, 0] >= 0) & (pts[:, 0] <= 1))
    for qx in (0, 1):
        for qy in (0, 1):
            count = np.count_nonzero(
                (pts[:, 0] >= 0.5 * qx) & (pts[:, 0] < 0.5 * (qx + 1))
                & (pts[:, 1] >= 0.5 * qy) & (pts[:, 1] < 0.5 * (qy + 1)))
            # binomial 3-sigma band around 2500
            assert abs(count - 2500) < 150


def test_sample_surface_single_triangle():
    mesh = MeshModel(vertices=[[0, 0, 0], [1, 0, 0], [0, 1, 0]], triangles=[[0, 1, 2]])
    p = sample_surface(mesh, 1, seed=0)
    assert p.shape == (1, 3)
    x, y, _ = p[0]
    assert x >= 0 and y >= 0 and x + y <= 1


def test_sample_surface_deterministic(cube_ply):
    mesh = load_mesh(cube_ply)
    a = sample_surface(mesh, 257, seed=9)
    b = sample_surface(mesh, 257, seed=9)
    np.testing.assert_array_equal(a, b)
    c = sample_surface(mesh, 257, seed=10)
    assert not np.array_equal(a, c)


def test_sample_surface_area_weighting():
    # two triangles with area ratio 4:1 -> counts follow the ratio
    mesh = MeshModel(
        vertices=[[0, 0, 0], [2, 0, 0], [0, 2, 0], [10, 0, 0], [11, 0, 0], [10, 1, 0]],
        triangles=[[0, 1, 2], [3, 4, 5]],
    )
    pts = sample_surface(mesh, 20_000, seed=3)
    big = np.count_nonzero(pts[:, 0] < 5)
    assert abs(big - 16_000) < 400  # ~3 sigma for p=0.8


def test_sample_zero_area_rejected():
    mesh = MeshModel(vertices=[[0, 0, 0], [1, 0, 0], [2, 0, 0]], triangles=[[0, 1, 2]])
    with pytest.raises(ValueError, match="area"):
        sample_surface(mesh, 10, seed=0)


def test_place_scene_centres_cloud():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(400, 3)) * [0.2, 0.1, 0.5] + [1.0, 5.0, 3.0]
    scene = place_scene(pts, 2.0, (0.0, 0.05, 0.0))
    assert scene.points[:, 1].mean() == pytest.approx(2.0)
    assert scene.points[:, 0].mean() == pytest.approx(0.0, abs=1e-12)
    zmid = 0.5 * (scene.points[:, 2].min() + scene.points[:, 2].max())
    assert zmid == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_array_equal(scene.velocity, [0.0, 0.05, 0.0])


def test_place_single_point():
    scene = place_scene(np.zeros((1, 3)), 3.0, (0, 0, 0))
    np.testing.assert_allclose(scene.points, [[0, 3, 0]])


def test_positions_at_motion():
    scene = Scene(points=[[0, 2, 0], [1, 2, 0]], velocity=[0, 1, 0])
    moved = positions_at(scene, 0.05)
    np.testing.assert_allclose(moved[:, 1], [2.05, 2.05])
    np.testing.assert_array_equal(positions_at(scene, 0.0), scene.points)
    with pytest.raises(ValueError):
        positions_at(scene, -1.0)


def test_baseline_displacement_is_2p5_mm():
    scene = Scene(points=[[0, 2, 0]], velocity=[0, 0.05, 0])
    disp = positions_at(scene, 0.05) - scene.points
    assert np.linalg.norm(disp) == pytest.approx(2.5e-3)


def test_rigid_motion_preserves_pairwise_distances():
    rng = np.random.default_rng(5)
    pts = rng.normal(size=(50, 3))
    scene = Scene(points=pts, velocity=rng.normal(size=3))
    before = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
    at = positions_at(scene, 1.7)
    after = np.linalg.norm(at[:, None] - at[None, :], axis=2)
    np.testing.assert_allclose(before, after, atol=1e-9)


def test_synth_single_and_pair():
    s = synth_scene("single", {"position": (0, 2, 0)})
    assert s.n_points == 1
    np.testing.assert_array_equal(s.points, [[0, 2, 0]])
    p = synth_scene("pair", {"separation": 0.5, "depth": 2.0, "axis": "x"})
    assert p.n_points == 2
    np.testing.assert_allclose(p.points[:, 0], [-0.25, 0.25])
    np.testing.assert_allclose(p.points[:, 1], [2.0, 2.0])


def test_synth_ellipsoid_shell():
    s = synth_scene("ellipsoid", {"size": (0.5, 0.3, 1.7), "points": 512}, seed=4)
    assert s.n_points == 512
    semi = np.array([0.25, 0.15, 0.85])
    radii = np.linalg.norm(s.points / semi, axis=1)
    np.testing.assert_allclose(radii, 1.0, atol=1e-9)
    again = synth_scene("ellipsoid", {"size": (0.5, 0.3, 1.7), "points": 512}, seed=4)
    np.testing.assert_array_equal(s.points, again.points)


def test_synth_grid_and_unknown():
    g = synth_scene("grid", {"counts": (3, 1, 2), "spacing": 0.5})
    assert g.n_points == 6
    with pytest.raises(ValueError, match="unknown scene generator"):
        synth_scene("torus", {})


def test_scene_validation():
    with pytest.raises(ValueError):
        Scene(points=np.zeros((0, 3)), velocity=[0, 0, 0])
    with pytest.raises(ValueError):
        Scene(points=[[0, 2, 0]], velocity=[0, 0, 0], reflectivity=[-1.0])
