import math

import numpy as np
import pytest

from raceoverlay.errors import BehindCamera, InvalidBinCount, ZeroVector
from raceoverlay.geometry import CameraModel, CuboidHull, EulerAngles, Pose3, wrap_angle
from raceoverlay.priors import (
    FACE_REGIONS,
    PriorAssignment,
    assign_face_regions,
    assign_priors,
    make_prior_set,
    reconstruct_angle,
)


def circular_distance(a: float, b: float) -> float:
    return abs(wrap_angle(a - b))


def brute_force_support(centers, angle):
    """The 6 nearest bins by circular distance, ties toward lower index."""
    order = sorted(range(len(centers)), key=lambda k: (circular_distance(angle, centers[k]), k))
    return order[:6]


GRID = [wrap_angle(-math.pi + k * math.radians(0.5)) for k in range(720)]


class TestMakePriorSet:
    def test_default_18_bins_at_20_degrees(self):
        prior_set = make_prior_set(18)
        assert prior_set.bin_count == 18
        expected = [wrap_angle(math.radians(20.0 * k)) for k in range(18)]
        assert prior_set.centers == pytest.approx(expected, abs=1e-12)

    def test_six_bins(self):
        prior_set = make_prior_set(6)
        assert prior_set.centers == pytest.approx(
            [wrap_angle(math.radians(60.0 * k)) for k in range(6)], abs=1e-12
        )

    def test_rejects_five(self):
        with pytest.raises(InvalidBinCount):
            make_prior_set(5)


class TestAssignPriors:
    def test_symmetric_weights_at_zero(self):
        prior_set = make_prior_set(18)
        assignment = assign_priors(prior_set, 0.0)
        assert assignment.nearest_index == 0
        weights = dict(assignment.support)
        # raw weights 1, 2/3, 2/3, 1/3, 1/3, 0 renormalize by 3
        assert weights[0] == pytest.approx(1 / 3, abs=1e-12)
        assert weights[1] == pytest.approx(2 / 9, abs=1e-12)
        assert weights[17] == pytest.approx(2 / 9, abs=1e-12)
        assert weights[2] == pytest.approx(1 / 9, abs=1e-12)
        assert weights[16] == pytest.approx(1 / 9, abs=1e-12)
        assert weights[3] == pytest.approx(0.0, abs=1e-12)
        # the sixth bin is the 60-degree tie, broken toward the lower index
        assert [index for index, _ in assignment.support] == [0, 1, 17, 2, 16, 3]

    def test_support_at_25_degrees(self):
        prior_set = make_prior_set(18)
        assignment = assign_priors(prior_set, math.radians(25.0))
        assert assignment.nearest_index == 1
        assert [index for index, _ in assignment.support] == [1, 2, 0, 3, 17, 4]

    def test_raw_weights_at_7_degrees(self):
        prior_set = make_prior_set(18)
        assignment = assign_priors(prior_set, math.radians(7.0))
        weights = dict(assignment.support)
        expected = {0: 53.0, 1: 47.0, 17: 33.0, 2: 27.0, 16: 13.0, 3: 7.0}
        total = sum(expected.values())
        for index, raw in expected.items():
            assert weights[index] == pytest.approx(raw / total, abs=1e-12)
        # the weighted mean of support centers lands back on 7 degrees
        mean = sum(w * math.degrees(wrap_angle(prior_set.centers[i])) for i, w in assignment.support)
        assert mean == pytest.approx(7.0, abs=1e-9)

    def test_matches_brute_force_on_grid(self):
        prior_set = make_prior_set(18)
        for angle in GRID:
            assignment = assign_priors(prior_set, angle)
            expected = brute_force_support(prior_set.centers, angle)
            assert [index for index, _ in assignment.support] == expected
            assert sum(w for _, w in assignment.support) == pytest.approx(1.0, abs=1e-12)
            assert all(w >= 0.0 for _, w in assignment.support)

    def test_rotational_equivariance(self):
        prior_set = make_prior_set(18)
        for angle in GRID[::7]:
            base = assign_priors(prior_set, angle)
            shifted = assign_priors(prior_set, wrap_angle(angle + prior_set.spacing))
            expected = {(i + 1) % 18: w for i, w in base.support}
            got = dict(shifted.support)
            assert set(got) == set(expected)
            for index, weight in expected.items():
                assert got[index] == pytest.approx(weight, abs=1e-12)


class TestReconstructAngle:
    def test_zero_roundtrip(self):
        prior_set = make_prior_set(18)
        assert reconstruct_angle(prior_set, assign_priors(prior_set, 0.0)) == pytest.approx(0.0, abs=1e-15)

    def test_point_three_roundtrip(self):
        prior_set = make_prior_set(18)
        value = reconstruct_angle(prior_set, assign_priors(prior_set, 0.3))
        assert value == pytest.approx(0.3, abs=1e-9)

    def test_grid_roundtrip(self):
        prior_set = make_prior_set(18)
        worst = 0.0
        for angle in GRID:
            value = reconstruct_angle(prior_set, assign_priors(prior_set, angle))
            worst = max(worst, abs(wrap_angle(value - angle)))
        assert worst <= 1e-9

    def test_uniform_half_circle_about_pi_half(self):
        prior_set = make_prior_set(18)
        # bins 2..7: centers 40..140 degrees, symmetric about 90
        support = tuple((i, 1.0 / 6.0) for i in (2, 3, 4, 5, 6, 7))
        assignment = PriorAssignment(nearest_index=4, support=support)
        assert reconstruct_angle(prior_set, assignment) == pytest.approx(math.pi / 2, abs=1e-12)

    def test_opposed_weights_raise_zero_vector(self):
        prior_set = make_prior_set(18)
        support = ((0, 0.5), (9, 0.5), (1, 0.0), (2, 0.0), (3, 0.0), (4, 0.0))
        assignment = PriorAssignment(nearest_index=0, support=support)
        with pytest.raises(ZeroVector):
            reconstruct_angle(prior_set, assignment)


def make_head_on_setup(observation_yaw_deg: float):
    """Camera at origin looking +x; hull straight ahead with the given
    observation yaw (bearing is zero, so pose yaw equals observation yaw)."""
    camera = CameraModel(
        pose=Pose3(position=(0.0, 0.0, 0.0)),
        focal_length=1000.0,
        principal_point=(640.0, 360.0),
        image_size=(1280, 720),
    )
    hull = CuboidHull(
        4.5,
        1.8,
        1.2,
        Pose3(position=(30.0, 0.0, 0.0), orientation=EulerAngles(yaw=math.radians(observation_yaw_deg))),
    )
    return camera, hull


class TestFaceRegions:
    def test_head_on_front_halves_map_to_prior_zero(self):
        prior_set = make_prior_set(18)
        camera, hull = make_head_on_setup(0.0)
        assignment = assign_priors(prior_set, 0.0)
        region_map = assign_face_regions(prior_set, assignment, hull, camera)
        assert region_map.regions["front_left"] == 0
        assert region_map.regions["front_right"] == 0
        assert region_map.regions["front"] == 0

    def test_matches_brute_force_at_25_degrees(self):
        prior_set = make_prior_set(18)
        obs = math.radians(25.0)
        camera, hull = make_head_on_setup(25.0)
        assignment = assign_priors(prior_set, obs)
        region_map = assign_face_regions(prior_set, assignment, hull, camera)
        for region_id, normal_angle in FACE_REGIONS:
            dots = {
                index: math.cos(wrap_angle(obs + normal_angle) - prior_set.centers[index])
                for index, _ in assignment.support
            }
            best = max(sorted(dots), key=lambda i: (dots[i], -i))
            assert region_map.regions[region_id] == best, region_id

    def test_region_values_come_from_support(self):
        prior_set = make_prior_set(18)
        rng = np.random.default_rng(3)
        for _ in range(50):
            obs_deg = float(rng.uniform(-179.0, 179.0))
            camera, hull = make_head_on_setup(obs_deg)
            assignment = assign_priors(prior_set, math.radians(obs_deg))
            region_map = assign_face_regions(prior_set, assignment, hull, camera)
            support_indices = {index for index, _ in assignment.support}
            assert set(region_map.regions.values()) <= support_indices
            assert len(region_map.regions) == 8

    def test_dominated_prior_never_selected(self):
        prior_set = make_prior_set(18)
        camera, hull = make_head_on_setup(0.0)
        # hand-built support with a winner near every region normal
        # (0, 80, 180, -100 degrees); bins 1 and 3 are dominated everywhere
        support = tuple((i, 1.0 / 6.0) for i in (0, 4, 9, 13, 1, 3))
        assignment = PriorAssignment(nearest_index=0, support=support)
        region_map = assign_face_regions(prior_set, assignment, hull, camera)
        selected = set(region_map.regions.values())
        assert 1 not in selected
        assert 3 not in selected

    def test_behind_camera_propagates(self):
        prior_set = make_prior_set(18)
        camera, hull = make_head_on_setup(0.0)
        behind = CuboidHull(4.5, 1.8, 1.2, Pose3(position=(-30.0, 0.0, 0.0)))
        assignment = assign_priors(prior_set, 0.0)
        with pytest.raises(BehindCamera):
            assign_face_regions(prior_set, assignment, behind, camera)
