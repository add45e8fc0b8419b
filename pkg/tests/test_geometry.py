import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualvt.errors import ConfigError, InvalidCount
from dualvt.geometry import (
    BevGridSpec,
    CameraRig,
    Projection,
    back_project,
    bev_cell_centers,
    make_height_samples,
    project_point,
)

K = np.array([[100.0, 0.0, 22.0], [0.0, 100.0, 8.0], [0.0, 0.0, 1.0]])
IDENTITY_RIG = CameraRig(intrinsics=K, extrinsics=np.eye(4), feat_w=44, feat_h=16)


class TestProjectPoint:
    def test_principal_point(self):
        p = project_point((0.0, 0.0, 10.0), IDENTITY_RIG)
        assert (p.u, p.v, p.d) == (22.0, 8.0, 10.0)

    def test_pinhole_offset(self):
        p = project_point((1.0, 0.0, 10.0), IDENTITY_RIG)
        assert (p.u, p.v, p.d) == (32.0, 8.0, 10.0)

    def test_behind_camera(self):
        assert project_point((0.0, 0.0, -1.0), IDENTITY_RIG) is None

    def test_image_plane_epsilon(self):
        assert project_point((0.0, 0.0, 0.0), IDENTITY_RIG) is None

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(-50, 50), st.floats(-50, 50), st.floats(0.1, 100),
        st.floats(1.5, 10),
    )
    def test_scale_consistency(self, x, y, z, lam):
        p = project_point((x, y, z), IDENTITY_RIG)
        q = project_point((lam * x, lam * y, lam * z), IDENTITY_RIG)
        assert q.u == pytest.approx(p.u, abs=1e-4)
        assert q.v == pytest.approx(p.v, abs=1e-4)
        assert q.d == pytest.approx(lam * p.d, rel=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-50, 50), st.floats(-50, 50), st.floats(0.1, 100))
    def test_back_projection_roundtrip(self, x, y, z):
        p = project_point((x, y, z), IDENTITY_RIG)
        recovered = back_project(p, IDENTITY_RIG)
        assert np.allclose(recovered, [x, y, z], atol=1e-4)


class TestRigValidation:
    def test_bad_intrinsics_last_row(self):
        bad = K.copy()
        bad[2, 2] = 2.0
        with pytest.raises(ConfigError):
            CameraRig(intrinsics=bad, extrinsics=np.eye(4), feat_w=4, feat_h=4)

    def test_non_orthonormal_rotation(self):
        T = np.eye(4)
        T[0, 0] = 2.0
        with pytest.raises(ConfigError):
            CameraRig(intrinsics=K, extrinsics=T, feat_w=4, feat_h=4)


class TestHeightSamples:
    def test_multires_exact_values(self):
        hs = make_height_samples("multires")
        assert hs.z_values == (
            -5.0, -4.0, -3.0, -2.0, -1.5, -1.0, -0.5,
            0.0, 0.5, 1.0, 1.5, 2.0, 3.0,
        )

    def test_multires_has_13_strictly_increasing(self):
        z = make_height_samples("multires").z_values
        assert len(z) == 13
        assert all(b > a for a, b in zip(z, z[1:]))

    def test_uniform_four(self):
        z = make_height_samples("uniform", n=4).z_values
        assert z == pytest.approx([-5.0, -7.0 / 3.0, 1.0 / 3.0, 3.0])

    def test_uniform_endpoints(self):
        assert make_height_samples("uniform", n=2).z_values == (-5.0, 3.0)

    def test_uniform_too_few(self):
        with pytest.raises(InvalidCount):
            make_height_samples("uniform", n=1)


class TestBevGrid:
    def test_two_by_two_centers(self):
        spec = BevGridSpec(x_min=-1, x_max=1, y_min=-1, y_max=1, nx=2, ny=2)
        centers = bev_cell_centers(spec)
        assert centers[0, 0].tolist() == [-0.5, -0.5]
        assert centers[0, 1].tolist() == [0.5, -0.5]
        assert centers[1, 0].tolist() == [-0.5, 0.5]
        assert centers[1, 1].tolist() == [0.5, 0.5]

    def test_single_cell_center_is_origin(self):
        spec = BevGridSpec(nx=1, ny=1)
        assert bev_cell_centers(spec)[0, 0].tolist() == [0.0, 0.0]

    def test_default_grid_cell_size(self):
        spec = BevGridSpec()
        assert spec.cell_w == pytest.approx(0.8)
        centers = bev_cell_centers(spec)
        # origin sits at the shared corner of the four central cells
        assert centers[63, 63].tolist() == pytest.approx([-0.4, -0.4])
        assert centers[64, 64].tolist() == pytest.approx([0.4, 0.4])

    def test_invalid_extents(self):
        with pytest.raises(ConfigError):
            BevGridSpec(x_min=1.0, x_max=-1.0)
