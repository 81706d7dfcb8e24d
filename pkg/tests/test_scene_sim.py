#!/usr/bin/env python3
"""
장면 시뮬레이터 테스트
"""

import os
import sys
import unittest

import numpy as np

# 상위 디렉토리의 모듈 import
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
import scene_sim as ss

NOISE_FREE = ss.SensorConfig(range_noise_sigma=0.0, velocity_noise_sigma=0.0)


class TestSensorConfig(unittest.TestCase):
    """센서 격자 테스트"""

    def test_default_grid(self):
        """120°×30° / 0.2° → 150×600"""
        sensor = ss.SensorConfig()
        self.assertEqual((sensor.rows, sensor.cols), (150, 600))
        self.assertEqual(sensor.ray_grid.shape, (150, 600, 3))
        self.assertAlmostEqual(sensor.angular_res_rad, np.deg2rad(0.2))

    def test_grid_orientation(self):
        """0번 열은 왼쪽(+y), 0번 행은 위쪽(+z)"""
        grid = ss.SensorConfig().ray_grid
        self.assertGreater(grid[75, 0, 1], 0.0)
        self.assertLess(grid[75, -1, 1], 0.0)
        self.assertGreater(grid[0, 300, 2], 0.0)
        self.assertLess(grid[-1, 300, 2], 0.0)
        np.testing.assert_allclose(np.linalg.norm(grid, axis=-1), 1.0)

    def test_non_integral_grid(self):
        """시야/분해능이 정수가 아니면 거부"""
        with self.assertRaises(ValueError):
            ss.SensorConfig(azimuth_fov=120.0, azimuth_res=0.7)
        with self.assertRaises(ValueError):
            ss.SensorConfig(velocity_noise_sigma=-0.1)

    def test_dict_round_trip(self):
        """to_dict / from_dict"""
        sensor = ss.SensorConfig(azimuth_fov=60.0, elevation_fov=20.0)
        self.assertEqual(ss.SensorConfig.from_dict(sensor.to_dict()), sensor)
        with self.assertRaises(ValueError):
            ss.SensorConfig.from_dict({'fov': 1.0})


class TestGeometry(unittest.TestCase):
    """광선/도플러 기하 테스트"""

    def test_ray_direction(self):
        """정면 광선은 +x"""
        np.testing.assert_allclose(ss.ray_direction(0.0, 0.0), [1.0, 0.0, 0.0])
        np.testing.assert_allclose(ss.ray_direction(np.pi / 2, 0.0), [0.0, 1.0, 0.0], atol=1e-15)

    def test_doppler_sign(self):
        """멀어지면 양수, 정지 배경에 다가가면 음수"""
        e = np.array([1.0, 0.0, 0.0])
        self.assertAlmostEqual(ss.doppler_velocity(e, [2.0, 0.0, 0.0], np.zeros(3), np.eye(3)), 2.0)
        self.assertAlmostEqual(ss.doppler_velocity(e, np.zeros(3), [10.0, 0.0, 0.0], np.eye(3)), -10.0)

    def test_doppler_rotated_sensor(self):
        """센서 좌표계로 회전한 상대 속도를 사용"""
        R = ss.rotation_from_yaw(np.pi / 2)
        np.testing.assert_allclose(R @ [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], atol=1e-15)
        e = np.array([1.0, 0.0, 0.0])
        self.assertAlmostEqual(ss.doppler_velocity(e, [0.0, 3.0, 0.0], np.zeros(3), R), 3.0)

    def test_invalid_rotation(self):
        """SO(3) 가 아닌 회전 거부"""
        with self.assertRaises(ValueError):
            ss.Pose(position=[0, 0, 0], rotation=np.diag([1.0, 1.0, -1.0]))


class TestCastFrame(unittest.TestCase):
    """레이캐스팅 테스트"""

    def test_empty_scene(self):
        """기하가 없으면 모든 셀이 비어 있음"""
        scene = ss.SceneSpec(objects=[], ground_height=None)
        frame = ss.cast_frame(scene, ss.SensorConfig(), rng_seed=0)
        self.assertEqual(frame.num_valid, 0)
        self.assertFalse(frame.points.any())
        self.assertIsNone(frame.cell(0, 0))

    def test_ground_only(self):
        """지면만 있으면 아래쪽 행만 유효하고 도플러는 0"""
        frame = ss.cast_frame(ss.SceneSpec(), NOISE_FREE, rng_seed=0)
        self.assertFalse(frame.valid[0].any())
        self.assertTrue(frame.valid[-1].all())
        np.testing.assert_allclose(frame.dopplers[frame.valid], 0.0, atol=1e-12)
        np.testing.assert_allclose(frame.points[-1, :, 2], -1.8, atol=1e-9)
        self.assertFalse(frame.truth_is_moving.any())

    def test_moving_box(self):
        """정면의 이동 박스: 정답 도플러 = e·v"""
        car = ss.RigidObject(id=1, center=[20.0, 0.0, 0.75], half_extents=ss.CAR_HALF,
                             velocity_world=[5.0, 0.0, 0.0])
        scene = ss.SceneSpec(objects=[car], ground_height=None)
        frame = ss.cast_frame(scene, NOISE_FREE, rng_seed=0)

        self.assertGreater(frame.num_valid, 100)
        valid = frame.valid
        self.assertTrue((frame.truth_object_id[valid] == 1).all())
        self.assertTrue(frame.truth_is_moving[valid].all())
        directions = ss.SensorConfig().ray_grid[valid]
        np.testing.assert_allclose(frame.dopplers[valid], directions @ [5.0, 0.0, 0.0], atol=1e-12)
        self.assertTrue((frame.points[valid][:, 0] >= 17.75 - 1e-9).all())
        self.assertTrue((frame.points[valid][:, 0] <= 22.25 + 1e-9).all())
        np.testing.assert_allclose(frame.truth_velocity[valid], [[5.0, 0.0, 0.0]] * int(valid.sum()))

    def test_moving_sensor_ground(self):
        """이동 센서에서 정지 지면 도플러 = −e·v_lidar"""
        scene = ss.SceneSpec(sensor_velocity_world=[12.0, 0.0, 0.0])
        frame = ss.cast_frame(scene, NOISE_FREE, rng_seed=0)
        directions = ss.SensorConfig().ray_grid[frame.valid]
        np.testing.assert_allclose(frame.dopplers[frame.valid], -directions @ [12.0, 0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(frame.truth_ego_velocity, [12.0, 0.0, 0.0])

    def test_seed_determinism(self):
        """같은 seed 는 같은 프레임, 다른 seed 는 다른 잡음"""
        scene = ss.scene_preset('intersection')
        a = ss.cast_frame(scene, ss.SensorConfig(), rng_seed=3)
        b = ss.cast_frame(scene, ss.SensorConfig(), rng_seed=3)
        c = ss.cast_frame(scene, ss.SensorConfig(), rng_seed=4)
        np.testing.assert_array_equal(a.points, b.points)
        np.testing.assert_array_equal(a.valid, b.valid)
        self.assertFalse(np.array_equal(a.points, c.points))

    def test_noise_magnitude(self):
        """도플러 잡음 표준편차 ≈ 0.031"""
        frame = ss.cast_frame(ss.SceneSpec(), ss.SensorConfig(), rng_seed=11)
        noise = frame.dopplers[frame.valid]
        self.assertAlmostEqual(float(np.std(noise)), 0.031, delta=0.002)

    def test_range_limit_uses_noisy_distance(self):
        """max_range 근처 벽: 잡음이 더해진 거리로 유효 여부를 판정"""
        wall = ss.RigidObject(id=1, center=[151.0, 0.0, 5.0], half_extents=[1.03, 10.0, 5.0])
        sensor = ss.SensorConfig(azimuth_fov=4.0, elevation_fov=2.0, range_noise_sigma=0.05)
        frame = ss.cast_frame(ss.SceneSpec(objects=[wall], ground_height=None), sensor, rng_seed=0)
        self.assertGreater(frame.num_valid, 0)
        norms = np.linalg.norm(frame.points[frame.valid][:, :3], axis=1)
        self.assertTrue((norms <= sensor.max_range).all())
        self.assertTrue((norms > 0).all())
        self.assertFalse(frame.points[~frame.valid].any())

    def test_occlusion_nearest_box_wins(self):
        """같은 광선 위 두 박스 중 가까운 박스의 id 가 기록됨"""
        near = ss.RigidObject(id=1, center=[10.0, 0.0, 1.8], half_extents=[0.5, 1.0, 1.0])
        far = ss.RigidObject(id=2, center=[20.0, 0.0, 1.8], half_extents=[0.5, 3.0, 3.0],
                             velocity_world=[0.0, 2.0, 0.0])
        frame = ss.cast_frame(ss.SceneSpec(objects=[far, near], ground_height=None), NOISE_FREE, rng_seed=0)
        forward = np.unravel_index(np.argmax(NOISE_FREE.ray_grid[..., 0]), frame.valid.shape)
        self.assertEqual(frame.truth_object_id[forward], 1)
        self.assertAlmostEqual(frame.points[forward][0], 9.5, places=6)
        self.assertFalse(frame.truth_is_moving[forward])

        ids = frame.truth_object_id[frame.valid]
        xs = frame.points[frame.valid][:, 0]
        self.assertEqual(set(np.unique(ids)), {1, 2})
        self.assertTrue((xs[ids == 1] <= 10.5 + 1e-9).all())
        self.assertTrue((xs[ids == 2] >= 19.5 - 1e-9).all())


class TestScenes(unittest.TestCase):
    """장면/프리셋 테스트"""

    def test_presets(self):
        """프리셋 네 가지 (정지 센서 2, 이동 센서 2)"""
        for name in ss.PRESET_NAMES:
            scene = ss.scene_preset(name)
            self.assertEqual(scene.name, name)
            self.assertGreater(len(scene.moving_objects), 0)
        self.assertFalse(ss.scene_preset('intersection').truth_ego_velocity.any())
        self.assertFalse(ss.scene_preset('t_intersection').truth_ego_velocity.any())
        self.assertTrue(ss.scene_preset('straight_road').truth_ego_velocity.any())
        self.assertGreater(ss.scene_preset('turn_straight_road').sensor_yaw_rate, 0.0)

    def test_presets_static_dominates(self):
        """프리셋 전 구간(이동 센서 100, 정지 센서 50 프레임): 이동 객체 ≥ 1, 정지 점 ≥ 10 × 이동 점"""
        for name in ss.PRESET_NAMES:
            scene = ss.scene_preset(name)
            frames = 100 if scene.truth_ego_velocity.any() else 50
            for frame in ss.simulate_sequence(scene, ss.SensorConfig(), frames, seed=0):
                moving = int(np.count_nonzero(frame.truth_is_moving & frame.valid))
                static = frame.num_valid - moving
                self.assertGreater(moving, 0, msg=f"{name} #{frame.frame_index}")
                self.assertGreaterEqual(static, 10 * moving, msg=f"{name} #{frame.frame_index}")

    def test_straight_road_motion_parallel(self):
        """straight_road: 센서는 움직이고 모든 이동 객체는 센서 x 축과 평행"""
        scene = ss.scene_preset('straight_road')
        self.assertGreater(np.linalg.norm(scene.sensor_velocity_world), 0.0)
        x_axis = scene.sensor_pose.rotation.T @ [1.0, 0.0, 0.0]
        for obj in scene.moving_objects:
            np.testing.assert_allclose(np.cross(obj.velocity_world, x_axis), 0.0, atol=1e-9)

    def test_unknown_preset(self):
        """알 수 없는 프리셋"""
        with self.assertRaises(ss.UnknownPresetError):
            ss.scene_preset('roundabout')

    def test_advance_turning_sensor(self):
        """회전하며 전진하는 센서의 자기 속도는 센서 좌표계에서 일정"""
        scene = ss.scene_preset('turn_straight_road')
        later = scene
        for _ in range(20):
            later = later.advance(0.1)
        np.testing.assert_allclose(later.truth_ego_velocity, scene.truth_ego_velocity, atol=1e-9)
        self.assertFalse(np.allclose(later.sensor_pose.rotation, scene.sensor_pose.rotation))
        self.assertGreater(np.linalg.norm(later.sensor_pose.position - scene.sensor_pose.position), 10.0)

    def test_advance_moves_objects(self):
        """객체는 등속 이동"""
        scene = ss.scene_preset('intersection')
        later = scene.advance(0.5)
        for before, after in zip(scene.objects, later.objects):
            np.testing.assert_allclose(after.center, before.center + before.velocity_world * 0.5)

    def test_scene_dict_round_trip(self):
        """to_dict / from_dict"""
        scene = ss.scene_preset('turn_straight_road').advance(0.3)
        self.assertEqual(ss.SceneSpec.from_dict(scene.to_dict()).to_dict(), scene.to_dict())

    def test_duplicate_ids(self):
        """중복 객체 id 거부"""
        box = ss.RigidObject(id=1, center=[10, 0, 1], half_extents=[1, 1, 1])
        with self.assertRaises(ValueError):
            ss.SceneSpec(objects=[box, box])

    def test_simulate_sequence(self):
        """프레임 번호와 seed 가 차례로 붙음"""
        sensor = ss.SensorConfig(azimuth_fov=60.0, elevation_fov=20.0)
        frames = list(ss.simulate_sequence(ss.scene_preset('straight_road'), sensor, 3, seed=5))
        self.assertEqual([f.frame_index for f in frames], [0, 1, 2])
        self.assertEqual([f.seed for f in frames], [ss.frame_seed(5, i) for i in range(3)])
        self.assertEqual(len({f.seed for f in frames}), 3)


if __name__ == '__main__':
    unittest.main(verbosity=2)
