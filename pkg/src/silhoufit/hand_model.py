"""Parametric skinned hand model.

A hand is reconstructed from low-dimensional parameters in four groups:
pose coefficients over a PCA basis of the 45 articulation axes, 10 shape
coefficients, a global axis-angle rotation and a translation. The mesh has
a fixed topology of 778 vertices; 21 joints (wrist plus proximal, middle,
distal and tip per finger, thumb through pinky) are regressed linearly
from the vertices.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .validation import (
    as_tensor,
    check_finite,
    check_nonnegative,
    check_parent_tree,
    check_rows_sum_to_one,
    check_shape,
)

NUM_VERTICES = 778
NUM_SKELETON_JOINTS = 16
NUM_JOINTS = 21
NUM_POSE_AXES = 45  # 15 articulated joints x 3 axis-angle components
NUM_SHAPE_COEFFS = 10

MODEL_FORMAT_VERSION = 1

_MODEL_ARRAY_FIELDS = (
    "template_vertices",
    "faces",
    "shape_basis",
    "pose_pca_basis",
    "pose_mean",
    "pose_corrective_basis",
    "skinning_weights",
    "kinematic_parents",
    "joint_regressor",
    "rest_joint_regressor",
)


@dataclass(frozen=True)
class HandModel:
    """Immutable model data; shareable across threads."""

    template_vertices: torch.Tensor  # (778, 3) meters, canonical pose
    faces: torch.Tensor  # (F, 3) int64 vertex indices
    shape_basis: torch.Tensor  # (778, 3, 10) displacement per unit shape coeff
    pose_pca_basis: torch.Tensor  # (45, n_pc)
    pose_mean: torch.Tensor  # (45,) axis-angle per articulated joint
    pose_corrective_basis: torch.Tensor  # (778, 3, 45), may be all-zero
    skinning_weights: torch.Tensor  # (778, 16) rows sum to 1
    kinematic_parents: tuple  # 16 ints, root = -1 at index 0
    joint_regressor: torch.Tensor  # (21, 778) rows sum to 1
    rest_joint_regressor: torch.Tensor  # (16, 778)
    _dtype_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_pc(self) -> int:
        return int(self.pose_pca_basis.shape[1])

    @property
    def num_faces(self) -> int:
        return int(self.faces.shape[0])

    def cast(self, dtype: torch.dtype) -> "HandModel":
        """Return a copy with float fields in `dtype` (cached per dtype)."""
        if dtype == self.template_vertices.dtype:
            return self
        cached = self._dtype_cache.get(dtype)
        if cached is None:
            cached = HandModel(
                template_vertices=self.template_vertices.to(dtype),
                faces=self.faces,
                shape_basis=self.shape_basis.to(dtype),
                pose_pca_basis=self.pose_pca_basis.to(dtype),
                pose_mean=self.pose_mean.to(dtype),
                pose_corrective_basis=self.pose_corrective_basis.to(dtype),
                skinning_weights=self.skinning_weights.to(dtype),
                kinematic_parents=self.kinematic_parents,
                joint_regressor=self.joint_regressor.to(dtype),
                rest_joint_regressor=self.rest_joint_regressor.to(dtype),
            )
            self._dtype_cache[dtype] = cached
        return cached

    def to_json_dict(self) -> dict:
        d = {"format_version": MODEL_FORMAT_VERSION, "n_pc": self.n_pc}
        for name in _MODEL_ARRAY_FIELDS:
            value = getattr(self, name)
            if name == "kinematic_parents":
                d[name] = list(value)
            else:
                d[name] = value.cpu().numpy().tolist()
        return d

    def canonical_bytes(self) -> bytes:
        """Deterministic serialization, used for content hashing."""
        return json.dumps(self.to_json_dict(), sort_keys=True).encode()

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()


@dataclass
class HandParams:
    """Optimization variables: pose PCs, shape, global rotation, translation."""

    theta: torch.Tensor  # (n_pc,)
    beta: torch.Tensor  # (10,)
    rotation: torch.Tensor  # (3,) axis-angle, radians
    translation: torch.Tensor  # (3,) meters, camera space

    @classmethod
    def zeros(cls, n_pc: int, dtype: torch.dtype = torch.float64) -> "HandParams":
        return cls(
            theta=torch.zeros(n_pc, dtype=dtype),
            beta=torch.zeros(NUM_SHAPE_COEFFS, dtype=dtype),
            rotation=torch.zeros(3, dtype=dtype),
            translation=torch.zeros(3, dtype=dtype),
        )

    @classmethod
    def from_dict(cls, d: dict, dtype: torch.dtype = torch.float64) -> "HandParams":
        p = cls(
            theta=as_tensor(d["theta"], dtype=dtype, field="theta"),
            beta=as_tensor(d["beta"], dtype=dtype, field="beta"),
            rotation=as_tensor(d["rotation"], dtype=dtype, field="rotation"),
            translation=as_tensor(d["translation"], dtype=dtype, field="translation"),
        )
        p.validate()
        return p

    def to_dict(self) -> dict:
        return {
            "theta": self.theta.detach().cpu().numpy().tolist(),
            "beta": self.beta.detach().cpu().numpy().tolist(),
            "rotation": self.rotation.detach().cpu().numpy().tolist(),
            "translation": self.translation.detach().cpu().numpy().tolist(),
        }

    def validate(self, n_pc: int | None = None) -> "HandParams":
        check_finite(self.theta, "theta")
        check_finite(self.beta, "beta")
        check_shape(self.beta, (NUM_SHAPE_COEFFS,), "beta")
        check_finite(check_shape(self.rotation, (3,), "rotation"), "rotation")
        check_finite(check_shape(self.translation, (3,), "translation"), "translation")
        if n_pc is not None and self.theta.shape != (n_pc,):
            raise ValueError(f"theta: expected {n_pc} coefficients, got {tuple(self.theta.shape)}")
        return self

    def detached_clone(self) -> "HandParams":
        return HandParams(
            theta=self.theta.detach().clone(),
            beta=self.beta.detach().clone(),
            rotation=self.rotation.detach().clone(),
            translation=self.translation.detach().clone(),
        )

    @property
    def dtype(self) -> torch.dtype:
        return self.theta.dtype


@dataclass
class HandMesh:
    vertices: torch.Tensor  # (778, 3) meters, camera space
    faces: torch.Tensor  # shared with the model


@dataclass
class Joints:
    positions: torch.Tensor  # (21, 3) meters, camera space


def validate_model(model: HandModel) -> HandModel:
    """Check all structural invariants; raise ValueError naming the field."""
    v = check_shape(model.template_vertices, (NUM_VERTICES, 3), "template_vertices")
    check_finite(v, "template_vertices")
    faces = check_shape(model.faces, (None, 3), "faces")
    if faces.numel() and (faces.min() < 0 or faces.max() >= NUM_VERTICES):
        raise ValueError(
            f"faces: vertex index out of range [0, {NUM_VERTICES}) "
            f"(min {int(faces.min())}, max {int(faces.max())})"
        )
    check_finite(
        check_shape(model.shape_basis, (NUM_VERTICES, 3, NUM_SHAPE_COEFFS), "shape_basis"),
        "shape_basis",
    )
    basis = check_shape(model.pose_pca_basis, (NUM_POSE_AXES, None), "pose_pca_basis")
    if model.n_pc not in (6, NUM_POSE_AXES):
        raise ValueError(f"pose_pca_basis: n_pc must be 6 or 45, got {basis.shape[1]}")
    check_finite(basis, "pose_pca_basis")
    check_finite(check_shape(model.pose_mean, (NUM_POSE_AXES,), "pose_mean"), "pose_mean")
    check_finite(
        check_shape(
            model.pose_corrective_basis,
            (NUM_VERTICES, 3, NUM_POSE_AXES),
            "pose_corrective_basis",
        ),
        "pose_corrective_basis",
    )
    w = check_shape(model.skinning_weights, (NUM_VERTICES, NUM_SKELETON_JOINTS), "skinning_weights")
    check_nonnegative(w, "skinning_weights")
    check_rows_sum_to_one(w, "skinning_weights")
    if len(model.kinematic_parents) != NUM_SKELETON_JOINTS:
        raise ValueError(
            f"kinematic_parents: expected {NUM_SKELETON_JOINTS} entries, "
            f"got {len(model.kinematic_parents)}"
        )
    check_parent_tree(model.kinematic_parents, "kinematic_parents")
    jr = check_shape(model.joint_regressor, (NUM_JOINTS, NUM_VERTICES), "joint_regressor")
    check_rows_sum_to_one(jr, "joint_regressor")
    check_finite(jr, "joint_regressor")
    rr = check_shape(
        model.rest_joint_regressor, (NUM_SKELETON_JOINTS, NUM_VERTICES), "rest_joint_regressor"
    )
    check_finite(rr, "rest_joint_regressor")
    return model


def load_model(path) -> HandModel:
    """Load and validate a model from the JSON format (format_version 1)."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"model file {path}: cannot parse ({exc})") from exc
    if not isinstance(raw, dict):
        raise ValueError(f"model file {path}: top level must be an object")
    version = raw.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(
            f"format_version: unsupported value {version!r} (expected {MODEL_FORMAT_VERSION})"
        )
    missing = [k for k in _MODEL_ARRAY_FIELDS if k not in raw]
    if missing:
        raise ValueError(f"model file {path}: missing fields {missing}")

    def arr(name, dtype=torch.float64):
        return as_tensor(raw[name], dtype=dtype, field=name)

    model = HandModel(
        template_vertices=arr("template_vertices"),
        faces=arr("faces", dtype=torch.int64),
        shape_basis=arr("shape_basis"),
        pose_pca_basis=arr("pose_pca_basis"),
        pose_mean=arr("pose_mean"),
        pose_corrective_basis=arr("pose_corrective_basis"),
        skinning_weights=arr("skinning_weights"),
        kinematic_parents=tuple(int(p) for p in raw["kinematic_parents"]),
        joint_regressor=arr("joint_regressor"),
        rest_joint_regressor=arr("rest_joint_regressor"),
    )
    validate_model(model)
    n_pc = raw.get("n_pc")
    if n_pc != model.n_pc:
        raise ValueError(f"n_pc: declared {n_pc} but pose_pca_basis has {model.n_pc} columns")
    return model


def save_model(model: HandModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_json_dict(), sort_keys=True))


def rodrigues(axis_angle: torch.Tensor) -> torch.Tensor:
    """Axis-angle (3,) to a proper rotation matrix (3, 3).

    Uses R = I + a*K + b*K^2 on the unnormalized skew matrix K, with the
    sin/cos factors switched to their Taylor series near zero so the map
    stays smooth and gradient-safe at the identity.
    """
    w = axis_angle
    if w.shape != (3,):
        raise ValueError(f"axis_angle: expected shape 3, got {tuple(w.shape)}")
    return _rodrigues_batch(w.unsqueeze(0))[0]


def _rodrigues_batch(w: torch.Tensor) -> torch.Tensor:
    """(N, 3) axis-angle vectors to (N, 3, 3) rotation matrices."""
    dtype = w.dtype
    n = w.shape[0]
    theta2 = (w * w).sum(dim=1)
    # series cutoff: tighter for float64, looser where 1-cos loses bits
    eps = 1e-8 if dtype == torch.float64 else 1e-4
    small = theta2 < eps * eps
    # keep zero out of the sqrt so its infinite slope never meets the
    # masked-out branch (0 * inf = nan in the chain rule)
    theta2_safe = torch.where(small, torch.ones_like(theta2), theta2)
    theta = torch.sqrt(theta2_safe)
    a = torch.where(small, 1.0 - theta2 / 6.0, torch.sin(theta) / theta)
    b = torch.where(small, 0.5 - theta2 / 24.0, (1.0 - torch.cos(theta)) / theta2_safe)
    zeros = torch.zeros(n, dtype=dtype)
    k = torch.stack(
        [
            torch.stack([zeros, -w[:, 2], w[:, 1]], dim=1),
            torch.stack([w[:, 2], zeros, -w[:, 0]], dim=1),
            torch.stack([-w[:, 1], w[:, 0], zeros], dim=1),
        ],
        dim=1,
    )
    eye = torch.eye(3, dtype=dtype).expand(n, 3, 3)
    return eye + a.view(n, 1, 1) * k + b.view(n, 1, 1) * (k @ k)


def axis_angle_from_matrix(r: torch.Tensor) -> torch.Tensor:
    """Inverse of rodrigues for proper rotations, robust near angle pi."""
    tr = float(r[0, 0] + r[1, 1] + r[2, 2])
    cos_t = max(-1.0, min(1.0, (tr - 1.0) / 2.0))
    angle = math.acos(cos_t)
    if angle < 1e-12:
        return torch.zeros(3, dtype=r.dtype)
    if angle < math.pi - 1e-3:
        axis = torch.stack([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
        axis = axis / (2.0 * math.sin(angle))
        return axis * angle
    # near pi the skew part vanishes; use the symmetric part instead, where
    # (R + R^T)/2 = cos*I + (1-cos) a a^T fixes |a_i| and the relative signs
    s = (r + r.T) / 2.0
    one_minus_cos = 1.0 - math.cos(angle)
    diag = torch.stack([s[0, 0], s[1, 1], s[2, 2]])
    comp = torch.sqrt(((diag - math.cos(angle)) / one_minus_cos).clamp(min=0.0))
    i = int(torch.argmax(comp))
    j, k = (i + 1) % 3, (i + 2) % 3
    axis = torch.zeros(3, dtype=r.dtype)
    axis[i] = comp[i]
    axis[j] = comp[j] if float(s[i, j]) >= 0 else -comp[j]
    axis[k] = comp[k] if float(s[i, k]) >= 0 else -comp[k]
    axis = axis / axis.norm().clamp(min=1e-30)
    # overall sign is ambiguous only at exactly pi; take it from the skew part
    skew = torch.stack([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    if float(skew.abs().max()) > 1e-12 and float((skew * axis).sum()) < 0:
        axis = -axis
    return axis * angle


def full_pose(theta: torch.Tensor, model: HandModel) -> torch.Tensor:
    """Decode pose PCs to the 45 articulation axis-angles."""
    basis = model.pose_pca_basis.to(theta.dtype)
    if theta.shape != (basis.shape[1],):
        raise ValueError(
            f"theta: expected {basis.shape[1]} coefficients, got {tuple(theta.shape)}"
        )
    return model.pose_mean.to(theta.dtype) + basis @ theta


def pose_mesh(model: HandModel, params: HandParams) -> tuple[HandMesh, Joints]:
    """Reconstruct the posed mesh and joints from parameters.

    Shape coefficients deform the template, the articulation chain is posed
    with per-joint rotations via forward kinematics, vertices follow by
    linear blend skinning, and the global rotation (pivoted at the wrist)
    plus translation place the hand in camera space. Differentiable in all
    parameter entries.
    """
    dtype = params.dtype
    m = model.cast(dtype)
    params.validate(n_pc=m.n_pc)

    shaped = m.template_vertices + torch.einsum("vcs,s->vc", m.shape_basis, params.beta)
    rest_joints = m.rest_joint_regressor @ shaped  # (16, 3)

    pose = full_pose(params.theta, m)  # (45,)
    shaped = shaped + torch.einsum("vca,a->vc", m.pose_corrective_basis, pose)

    rots = _rodrigues_batch(pose.view(15, 3))  # joints 1..15
    # forward kinematics over the parent chain; joint 0 stays at rest
    world_r: list[torch.Tensor] = [torch.eye(3, dtype=dtype)]
    world_t: list[torch.Tensor] = [rest_joints[0]]
    for j in range(1, NUM_SKELETON_JOINTS):
        p = m.kinematic_parents[j]
        r = world_r[p] @ rots[j - 1]
        t = world_r[p] @ (rest_joints[j] - rest_joints[p]) + world_t[p]
        world_r.append(r)
        world_t.append(t)
    rot_stack = torch.stack(world_r)  # (16, 3, 3)
    trans_stack = torch.stack(world_t)  # (16, 3)
    # skinning transform maps a rest-space point: x -> R_j (x - j_rest) + t_j
    skin_t = trans_stack - torch.einsum("jab,jb->ja", rot_stack, rest_joints)

    vert_r = torch.einsum("vj,jab->vab", m.skinning_weights, rot_stack)
    vert_t = m.skinning_weights @ skin_t
    skinned = torch.einsum("vab,vb->va", vert_r, shaped) + vert_t

    global_r = rodrigues(params.rotation)
    pivot = rest_joints[0]
    vertices = (skinned - pivot) @ global_r.T + pivot + params.translation

    mesh = HandMesh(vertices=vertices, faces=m.faces)
    return mesh, regress_joints(m, mesh)


def regress_joints(model: HandModel, mesh: HandMesh) -> Joints:
    """Linear joint regression from mesh vertices."""
    verts = mesh.vertices
    if verts.shape != (NUM_VERTICES, 3):
        raise ValueError(f"mesh: expected {NUM_VERTICES}x3 vertices, got {tuple(verts.shape)}")
    return Joints(positions=model.joint_regressor.to(verts.dtype) @ verts)


# ---------------------------------------------------------------------------
# Built-in stylized test hand
# ---------------------------------------------------------------------------

_FINGER_X = {"index": 0.0345, "middle": 0.0115, "ring": -0.0115, "pinky": -0.0345}
_FINGER_LENGTHS = {
    "thumb": (0.028, 0.022, 0.018),
    "index": (0.030, 0.020, 0.016),
    "middle": (0.033, 0.022, 0.017),
    "ring": (0.030, 0.020, 0.016),
    "pinky": (0.024, 0.016, 0.013),
}
_RING_HALF_WIDTHS = (0.0065, 0.0060, 0.0055, 0.0045)
_PALM_TOP_Y = -0.030
_PALM_BOTTOM_Y = 0.045
_WRIST = (0.0, 0.045, 0.0)
_TIP_EXTENT = 0.006


def make_stylized_hand(n_pc: int = 6) -> HandModel:
    """Procedurally build a license-free low-poly hand with the full schema.

    Palm box plus five articulated fingers; real vertex count is padded to
    778 with duplicates that are not referenced by any face. Deterministic:
    two calls produce bit-identical models.
    """
    if n_pc not in (6, NUM_POSE_AXES):
        raise ValueError(f"n_pc must be 6 or 45, got {n_pc}")

    verts: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    weights = []  # parallel list of {joint: weight}
    joint_pos: list[tuple[float, float, float]] = [_WRIST]
    # rows of vertex indices whose mean recovers each joint
    joint_vert_groups: list[list[int]] = []

    def add_vert(p, w):
        verts.append((float(p[0]), float(p[1]), float(p[2])))
        weights.append(w)
        return len(verts) - 1

    # palm box
    palm = []
    for y in (_PALM_TOP_Y, _PALM_BOTTOM_Y):
        for x, z in ((-0.042, -0.012), (0.042, -0.012), (0.042, 0.012), (-0.042, 0.012)):
            palm.append(add_vert((x, y, z), {0: 1.0}))
    top, bottom = palm[:4], palm[4:]
    quads = [
        (top[0], top[1], top[2], top[3]),  # top face (finger side)
        (bottom[3], bottom[2], bottom[1], bottom[0]),  # bottom face
        (top[0], top[3], bottom[3], bottom[0]),
        (top[1], top[0], bottom[0], bottom[1]),
        (top[2], top[1], bottom[1], bottom[2]),
        (top[3], top[2], bottom[2], bottom[3]),
    ]
    for a, b, c, d in quads:
        faces.append((a, b, c))
        faces.append((a, c, d))
    joint_vert_groups.append(list(bottom))  # wrist = mean of bottom corners

    def ring_dirs(direction):
        d = np.asarray(direction, dtype=np.float64)
        d = d / np.linalg.norm(d)
        n1 = np.array([-d[1], d[0], 0.0])
        n1 = n1 / np.linalg.norm(n1)
        n2 = np.array([0.0, 0.0, 1.0])
        return d, n1, n2

    fingers = [
        ("thumb", (0.042, 0.010, 0.0), (0.5736, -0.8192, 0.0)),
        ("index", (_FINGER_X["index"], _PALM_TOP_Y, 0.0), (0.0, -1.0, 0.0)),
        ("middle", (_FINGER_X["middle"], _PALM_TOP_Y, 0.0), (0.0, -1.0, 0.0)),
        ("ring", (_FINGER_X["ring"], _PALM_TOP_Y, 0.0), (0.0, -1.0, 0.0)),
        ("pinky", (_FINGER_X["pinky"], _PALM_TOP_Y, 0.0), (0.0, -1.0, 0.0)),
    ]

    for fi, (name, base, direction) in enumerate(fingers):
        d, n1, n2 = ring_dirs(direction)
        lengths = _FINGER_LENGTHS[name]
        base = np.asarray(base)
        centers = [base]
        for length in lengths:
            centers.append(centers[-1] + d * length)
        # skeleton joints: proximal, middle, distal knuckles
        j_ids = []
        for c in centers[:3]:
            joint_pos.append((float(c[0]), float(c[1]), float(c[2])))
            j_ids.append(len(joint_pos) - 1)
        j1, j2, j3 = j_ids
        ring_weights = [
            {0: 0.5, j1: 0.5},
            {j1: 0.5, j2: 0.5},
            {j2: 0.5, j3: 0.5},
            {j3: 1.0},
        ]
        rings = []
        for ci, (c, w_half, wmap) in enumerate(zip(centers, _RING_HALF_WIDTHS, ring_weights)):
            ring = [
                add_vert(c + n1 * w_half, wmap),
                add_vert(c + n2 * w_half, wmap),
                add_vert(c - n1 * w_half, wmap),
                add_vert(c - n2 * w_half, wmap),
            ]
            rings.append(ring)
        apex = add_vert(centers[3] + d * _TIP_EXTENT, {j3: 1.0})
        for ra, rb in zip(rings[:-1], rings[1:]):
            for k in range(4):
                a, b = ra[k], ra[(k + 1) % 4]
                c2, d2 = rb[k], rb[(k + 1) % 4]
                faces.append((a, b, c2))
                faces.append((b, d2, c2))
        last = rings[3]
        for k in range(4):
            faces.append((last[k], last[(k + 1) % 4], apex))
        # regressor groups: knuckle rings and the fingertip apex
        joint_vert_groups.extend([rings[0], rings[1], rings[2], [apex]])

    n_real = len(verts)
    template = np.zeros((NUM_VERTICES, 3))
    template[:n_real] = np.asarray(verts)
    weight_rows = np.zeros((NUM_VERTICES, NUM_SKELETON_JOINTS))
    for i, wmap in enumerate(weights):
        for j, w in wmap.items():
            weight_rows[i, j] = w
    # pad with duplicates cycling over the real vertices
    for i in range(n_real, NUM_VERTICES):
        src = i % n_real
        template[i] = template[src]
        weight_rows[i] = weight_rows[src]

    parents = [-1]
    for f in range(5):
        base_j = 1 + 3 * f
        parents.extend([0, base_j, base_j + 1])

    # 21-joint regressor: wrist, then (proximal, middle, distal, tip) per finger
    jreg = np.zeros((NUM_JOINTS, NUM_VERTICES))
    order = [0]
    for f in range(5):
        order.extend([1 + 4 * f + k for k in range(4)])
    group_for_report = [joint_vert_groups[0]]
    for f in range(5):
        group_for_report.extend(joint_vert_groups[1 + 4 * f : 5 + 4 * f])
    for row, group in enumerate(group_for_report):
        for vi in group:
            jreg[row, vi] = 1.0 / len(group)

    rreg = np.zeros((NUM_SKELETON_JOINTS, NUM_VERTICES))
    rreg[0] = jreg[0]
    for f in range(5):
        for k in range(3):  # proximal, middle, distal knuckles
            rreg[1 + 3 * f + k] = jreg[1 + 4 * f + k]

    shape_basis = np.zeros((NUM_VERTICES, 3, NUM_SHAPE_COEFFS))
    wrist = np.asarray(_WRIST)
    shape_basis[:, :, 0] = (template - wrist) * 0.6  # overall size
    above = template[:, 1] < _PALM_TOP_Y
    shape_basis[above, 1, 1] = (template[above, 1] - _PALM_TOP_Y) * 0.4  # finger length

    pca = np.zeros((NUM_POSE_AXES, n_pc))
    for i in range(n_pc):
        pca[i, i] = 1.0

    model = HandModel(
        template_vertices=torch.from_numpy(template),
        faces=torch.tensor(faces, dtype=torch.int64),
        shape_basis=torch.from_numpy(shape_basis),
        pose_pca_basis=torch.from_numpy(pca),
        pose_mean=torch.zeros(NUM_POSE_AXES, dtype=torch.float64),
        pose_corrective_basis=torch.zeros(
            NUM_VERTICES, 3, NUM_POSE_AXES, dtype=torch.float64
        ),
        skinning_weights=torch.from_numpy(weight_rows),
        kinematic_parents=tuple(parents),
        joint_regressor=torch.from_numpy(jreg),
        rest_joint_regressor=torch.from_numpy(rreg),
    )
    return validate_model(model)
