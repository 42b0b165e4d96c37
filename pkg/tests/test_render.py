import numpy as np
import pytest
import torch

from silhoufit import (
    Camera,
    HandMesh,
    HandParams,
    pose_mesh,
    project,
    render_hard,
    render_soft,
)
from silhoufit.render import project_vertices


def tri_mesh(points, faces=((0, 1, 2),)):
    return HandMesh(
        vertices=torch.tensor(points, dtype=torch.float64),
        faces=torch.tensor(faces, dtype=torch.int64),
    )


def point_in_triangle(p, a, b, c):
    """Analytic inclusion test (edges inside), oracle for the rasterizers."""
    def cross(o, u, v):
        return (u[0] - o[0]) * (v[1] - o[1]) - (u[1] - o[1]) * (v[0] - o[0])

    s1, s2, s3 = cross(a, b, p), cross(b, c, p), cross(c, a, p)
    return (s1 >= 0 and s2 >= 0 and s3 >= 0) or (s1 <= 0 and s2 <= 0 and s3 <= 0)


# ---------------------------------------------------------------------------
# projection
# ---------------------------------------------------------------------------

def test_project_principal_point():
    cam = Camera(fx=100, fy=100, cx=64, cy=64, width=128, height=128)
    uv = project(cam, (0.0, 0.0, 1.0))
    assert torch.equal(uv, torch.tensor([64.0, 64.0]))


def test_project_linear_in_x_over_z():
    cam = Camera(fx=100, fy=100, cx=64, cy=64, width=128, height=128)
    uv = project(cam, (0.1, 0.0, 1.0))
    assert torch.allclose(uv, torch.tensor([74.0, 64.0]), atol=0.0)


def test_project_matches_homogeneous_matrix_oracle():
    cam = Camera(fx=123.0, fy=234.5, cx=31.25, cy=63.75, width=128, height=128)
    k = np.array(
        [[cam.fx, 0, cam.cx, 0], [0, cam.fy, cam.cy, 0], [0, 0, 1, 0]], dtype=float
    )
    rng = np.random.default_rng(21)
    for _ in range(100):
        p = rng.uniform(-1, 1, size=3)
        p[2] = rng.uniform(0.2, 3.0)
        hom = k @ np.append(p, 1.0)
        want = hom[:2] / hom[2]
        got = project(cam, torch.from_numpy(p)).numpy()
        assert np.abs(got - want).max() < 1e-12


def test_project_rejects_nonpositive_depth():
    cam = Camera(fx=100, fy=100, cx=64, cy=64, width=128, height=128)
    with pytest.raises(ValueError, match="depth"):
        project(cam, (0.0, 0.0, 0.0))
    verts = torch.tensor([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    with pytest.raises(ValueError, match="vertex 1"):
        project_vertices(cam, verts)


# ---------------------------------------------------------------------------
# render_soft
# ---------------------------------------------------------------------------

def test_soft_empty_mesh_all_zero():
    cam = Camera(fx=100, fy=100, cx=16, cy=16, width=32, height=32)
    mesh = HandMesh(
        vertices=torch.zeros(0, 3, dtype=torch.float64),
        faces=torch.zeros(0, 3, dtype=torch.int64),
    )
    img = render_soft(cam, mesh)
    assert img.kind == "soft"
    assert torch.equal(img.pixels, torch.zeros(32, 32))


def test_soft_full_frame_triangle_interior_near_one():
    cam = Camera(fx=100, fy=100, cx=16, cy=16, width=32, height=32)
    # triangle projecting far beyond the frame: u = 100*x/1 + 16
    mesh = tri_mesh([[-2.0, -2.0, 1.0], [2.0, -2.0, 1.0], [0.0, 3.0, 1.0]])
    img = render_soft(cam, mesh, sigma=0.05)
    a, b, c = (-184.0, -184.0), (216.0, -184.0), (16.0, 316.0)
    for r in range(32):
        for col in range(32):
            assert point_in_triangle((col, r), a, b, c)  # oracle: frame is interior
    assert float(img.pixels.min()) > 0.99


def test_soft_pixel_on_edge_contributes_half():
    cam = Camera(fx=100, fy=100, cx=16, cy=16, width=32, height=32)
    # vertical edge at u = 10: x = -0.06 at z = 1
    mesh = tri_mesh([[-0.06, -0.3, 1.0], [-0.06, 0.3, 1.0], [0.2, 0.0, 1.0]])
    img = render_soft(cam, mesh, sigma=1.0)
    # pixels (row, col=10) away from the corners lie exactly on the edge
    assert abs(float(img.pixels[16, 10]) - 0.5) < 1e-6


def test_soft_values_in_unit_interval(camera64, stylized):
    params = HandParams.zeros(stylized.n_pc)
    params.translation = torch.tensor([0.0, 0.0, 0.5])
    mesh, _ = pose_mesh(stylized, params)
    img = render_soft(camera64, mesh)
    assert float(img.pixels.min()) >= 0.0
    assert float(img.pixels.max()) < 1.0
    covered = img.pixels[img.pixels > 0]
    assert covered.numel() > 0


def test_soft_monotone_in_faces(camera64, stylized):
    rng = np.random.default_rng(22)
    verts = torch.from_numpy(
        np.c_[rng.uniform(-0.15, 0.15, (40, 2)), rng.uniform(0.4, 0.6, 40)]
    )
    faces = torch.from_numpy(rng.integers(0, 40, (12, 3)))
    base = HandMesh(vertices=verts, faces=faces[:8])
    more = HandMesh(vertices=verts, faces=faces)
    img_base = render_soft(camera64, base)
    img_more = render_soft(camera64, more)
    assert (img_more.pixels >= img_base.pixels - 1e-15).all()


def test_soft_gradient_matches_finite_differences():
    # 20 random single-triangle scenes; d(sum of pixels)/d(vertex coords).
    # The nearest-edge distance is piecewise smooth: a pixel on a corner's
    # Voronoi boundary gives the true function a derivative kink. Central
    # differences are only a valid slope estimate when forward and backward
    # slopes agree, so windows straddling a kink are excluded (and counted).
    cam = Camera(fx=60, fy=60, cx=15.5, cy=15.5, width=32, height=32)
    rng = np.random.default_rng(23)
    h = 1e-4
    checked = 0
    kinks = 0
    for _ in range(20):
        pts = np.c_[rng.uniform(-0.15, 0.15, (3, 2)), rng.uniform(0.8, 1.2, 3)]
        flat = torch.from_numpy(pts.flatten()).requires_grad_(True)
        faces = torch.tensor([[0, 1, 2]])

        def total(v):
            mesh = HandMesh(vertices=v.reshape(3, 3), faces=faces)
            return render_soft(cam, mesh, sigma=0.4).pixels.sum()

        total(flat).backward()
        grad = flat.grad.numpy()
        f0 = float(total(flat.detach()))
        for i in range(9):
            plus = flat.detach().clone()
            plus[i] += h
            minus = flat.detach().clone()
            minus[i] -= h
            f_plus, f_minus = float(total(plus)), float(total(minus))
            fwd = (f_plus - f0) / h
            bwd = (f0 - f_minus) / h
            num = (f_plus - f_minus) / (2 * h)
            if abs(grad[i]) < 1e-4 or abs(num) < 1e-4:
                continue
            if abs(fwd - bwd) > 0.01 * max(abs(fwd), abs(bwd)):
                kinks += 1
                continue
            assert abs(grad[i] - num) / max(abs(grad[i]), abs(num)) < 0.02
            checked += 1
    assert checked >= 140
    assert kinks <= 40  # kink windows must stay the minority


# ---------------------------------------------------------------------------
# render_hard
# ---------------------------------------------------------------------------

def test_hard_empty_mesh():
    cam = Camera(fx=100, fy=100, cx=16, cy=16, width=32, height=32)
    mesh = HandMesh(
        vertices=torch.zeros(0, 3, dtype=torch.float64),
        faces=torch.zeros(0, 3, dtype=torch.int64),
    )
    img = render_hard(cam, mesh)
    assert img.kind == "hard"
    assert torch.equal(img.pixels, torch.zeros(32, 32))


def test_hard_square_matches_analytic_extent():
    cam = Camera(fx=100, fy=100, cx=31.5, cy=31.5, width=64, height=64)
    # square x, y in [-0.1, 0.1] at z=1 -> u, v in [21.5, 41.5]
    quad = [
        [-0.1, -0.1, 1.0],
        [0.1, -0.1, 1.0],
        [0.1, 0.1, 1.0],
        [-0.1, 0.1, 1.0],
    ]
    mesh = tri_mesh(quad, faces=((0, 1, 2), (0, 2, 3)))
    img = render_hard(cam, mesh).pixels.numpy()
    rows = img.any(axis=1).nonzero()[0]
    cols = img.any(axis=0).nonzero()[0]
    # analytic extent: pixel centers 22..41
    assert abs(rows.min() - 22) <= 1 and abs(rows.max() - 41) <= 1
    assert abs(cols.min() - 22) <= 1 and abs(cols.max() - 41) <= 1
    interior = img[23:41, 23:41]
    assert interior.all()


def test_hard_matches_pointwise_oracle():
    cam = Camera(fx=80, fy=80, cx=15.5, cy=15.5, width=32, height=32)
    rng = np.random.default_rng(24)
    pts = np.c_[rng.uniform(-0.2, 0.2, (3, 2)), (1.0, 1.0, 1.0)]
    mesh = tri_mesh(pts.tolist())
    img = render_hard(cam, mesh).pixels.numpy()
    uv = [(80 * p[0] / p[2] + 15.5, 80 * p[1] / p[2] + 15.5) for p in pts]
    for r in range(32):
        for c in range(32):
            want = point_in_triangle((c, r), *uv)
            assert img[r, c] == float(want), (r, c)


def test_hard_agrees_with_sharp_soft(camera128, stylized):
    params = HandParams.zeros(stylized.n_pc)
    params.theta = torch.tensor([0.4, -0.2, 0.1, 0.3, 0.0, -0.1])[: stylized.n_pc]
    params.translation = torch.tensor([0.0, 0.0, 0.5])
    mesh, _ = pose_mesh(stylized, params)
    hard = render_hard(camera128, mesh).pixels
    soft = (render_soft(camera128, mesh, sigma=1e-4).pixels >= 0.5).to(torch.float64)
    agreement = float((hard == soft).to(torch.float64).mean())
    assert agreement >= 0.99


def test_hard_integer_pixel_shift():
    # flat-z mesh moved by an exact multiple of z/fx pixels shifts the mask
    # by exactly that many columns
    cam = Camera(fx=100, fy=100, cx=31.5, cy=31.5, width=64, height=64)
    pts = np.array(
        [[-0.063, -0.041, 1.0], [0.057, -0.033, 1.0], [0.011, 0.072, 1.0]]
    )
    mesh = tri_mesh(pts.tolist())
    base = render_hard(cam, mesh).pixels.numpy()
    shift_px = 7
    moved = pts.copy()
    moved[:, 0] += shift_px * 1.0 / 100.0  # dx * fx / z = 7 pixels
    img = render_hard(cam, tri_mesh(moved.tolist())).pixels.numpy()
    assert (img[:, shift_px:] == base[:, :-shift_px]).all()
    assert (img[:, :shift_px] == 0).all()


def test_degenerate_triangles_skipped():
    cam = Camera(fx=100, fy=100, cx=16, cy=16, width=32, height=32)
    mesh = tri_mesh(
        [[0.0, 0.0, 1.0], [0.05, 0.0, 1.0], [0.1, 0.0, 1.0]]  # collinear
    )
    assert float(render_hard(cam, mesh).pixels.sum()) == 0.0
    assert float(render_soft(cam, mesh).pixels.sum()) == 0.0


def test_faces_behind_camera_skipped():
    cam = Camera(fx=100, fy=100, cx=16, cy=16, width=32, height=32)
    verts = torch.tensor(
        [
            [-0.06, -0.06, 1.0],
            [0.06, -0.06, 1.0],
            [0.0, 0.06, 1.0],
            [0.0, 0.0, -1.0],
        ],
        dtype=torch.float64,
    )
    faces = torch.tensor([[0, 1, 2], [0, 1, 3]], dtype=torch.int64)
    front_only = render_hard(cam, HandMesh(vertices=verts, faces=faces[:1]))
    both = render_hard(cam, HandMesh(vertices=verts, faces=faces))
    assert torch.equal(front_only.pixels, both.pixels)
