#!/usr/bin/env python3
"""
실행 설정 테스트
"""

import json
import os
import sys
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

import numpy as np

# 상위 디렉토리의 모듈 import
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
import pipeline_config as pc
from scene_sim import SensorConfig


class TestRunConfig(unittest.TestCase):
    """RunConfig 검증/저장 테스트"""

    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmpdir.name, 'run.json')

    def tearDown(self):
        self.tmpdir.cleanup()

    def _write(self, data):
        with open(self.path, 'w') as f:
            json.dump(data, f)

    def test_defaults_are_valid(self):
        """기본 설정은 유효하고 v_th 는 임계값 파라미터에서 계산"""
        config = pc.validate_config(pc.RunConfig())
        self.assertEqual((config.num_th_s, config.num_th_m), (1000, 200))
        self.assertAlmostEqual(config.effective_v_th, 0.17 + 3 * 2 ** 0.5 * 0.031)

    def test_save_load_round_trip(self):
        """save_config / load_config"""
        config = pc.RunConfig(sensor=SensorConfig(azimuth_fov=60.0), preset='t_intersection', seed=7, v_th=0.25)
        pc.save_config(config, self.path)
        with open(self.path) as f:
            self.assertEqual(json.load(f)['schema'], pc.CONFIG_SCHEMA)
        self.assertEqual(pc.load_config(self.path).to_dict(), config.to_dict())

    def test_cap_below_three(self):
        """다운샘플 상한 < 3 → num_th_s 항목 오류"""
        self._write({'schema': pc.CONFIG_SCHEMA, 'num_th_s': 2})
        with self.assertRaises(pc.InvalidConfigError) as ctx:
            pc.load_config(self.path)
        self.assertEqual(ctx.exception.field, 'num_th_s')

    def test_unknown_field(self):
        """알 수 없는 항목"""
        self._write({'schema': pc.CONFIG_SCHEMA, 'colour': 'red'})
        with self.assertRaises(pc.InvalidConfigError) as ctx:
            pc.load_config(self.path)
        self.assertEqual(ctx.exception.field, 'colour')

    def test_wrong_schema(self):
        """schema 불일치"""
        self._write({'schema': 'doppler-run-config/9'})
        with self.assertRaises(pc.InvalidConfigError) as ctx:
            pc.load_config(self.path)
        self.assertEqual(ctx.exception.field, 'schema')

    def test_bad_nested_sensor(self):
        """잘못된 센서 설정은 sensor 항목 오류"""
        self._write({'sensor': {'azimuth_fov': 120.0, 'azimuth_res': 0.7}})
        with self.assertRaises(pc.InvalidConfigError) as ctx:
            pc.load_config(self.path)
        self.assertEqual(ctx.exception.field, 'sensor')

    def test_non_integer_frames(self):
        """정수 항목에 실수"""
        self._write({'frames': 2.5})
        with self.assertRaises(pc.InvalidConfigError) as ctx:
            pc.load_config(self.path)
        self.assertEqual(ctx.exception.field, 'frames')

    def test_missing_scene_file(self):
        """장면 파일 경로가 없으면 scene_file 항목 오류"""
        with self.assertRaises(pc.InvalidConfigError) as ctx:
            pc.validate_config(pc.RunConfig(scene_file=os.path.join(self.tmpdir.name, 'none.json')))
        self.assertEqual(ctx.exception.field, 'scene_file')

    def test_unknown_preset(self):
        """알 수 없는 프리셋"""
        with self.assertRaises(pc.InvalidConfigError) as ctx:
            pc.RunConfig().with_overrides(preset='roundabout')
        self.assertEqual(ctx.exception.field, 'preset')

    def test_missing_config_file(self):
        """설정 파일이 없음"""
        with self.assertRaises(pc.InvalidConfigError) as ctx:
            pc.load_config(os.path.join(self.tmpdir.name, 'none.json'))
        self.assertEqual(ctx.exception.field, 'config')

    def test_overrides_skip_none(self):
        """None 은 덮어쓰지 않음"""
        config = pc.RunConfig(seed=3).with_overrides(seed=None, frames=10)
        self.assertEqual((config.seed, config.frames), (3, 10))

    def test_threshold_derived_from_sensor(self):
        """θ 가 없으면 센서 각해상도에서 유도"""
        self._write({'sensor': {'azimuth_res': 0.1, 'elevation_res': 0.1}, 'threshold': {'max_object_speed': 30.0}})
        config = pc.load_config(self.path)
        self.assertAlmostEqual(config.threshold.angular_res_theta, np.deg2rad(0.1))
        self.assertAlmostEqual(config.threshold.noise_sigma, config.sensor.velocity_noise_sigma)
        self.assertEqual(config.threshold.max_object_speed, 30.0)

    def test_default_theta_kept_for_default_sensor(self):
        """기본 센서(0.2°)에서는 기본 θ = 0.0034 유지"""
        self._write({'seed': 1})
        self.assertEqual(pc.load_config(self.path).threshold.angular_res_theta, 0.0034)

    def test_threshold_mismatch(self):
        """센서와 맞지 않는 θ → threshold 항목 오류"""
        self._write({'sensor': {'azimuth_res': 0.1, 'elevation_res': 0.1},
                     'threshold': {'angular_res_theta': 0.0034}})
        with self.assertRaises(pc.InvalidConfigError) as ctx:
            pc.load_config(self.path)
        self.assertEqual(ctx.exception.field, 'threshold')

        coarse = SensorConfig(azimuth_res=0.4, elevation_res=0.4)
        with self.assertRaises(pc.InvalidConfigError) as ctx:
            pc.validate_config(pc.RunConfig(sensor=coarse))
        self.assertEqual(ctx.exception.field, 'threshold')
        pc.validate_config(pc.RunConfig(sensor=coarse, v_th=0.3))


class TestOutputDir(unittest.TestCase):
    """출력 디렉토리 결정 테스트"""

    def test_cli_flag_wins(self):
        """--out 이 가장 우선"""
        with patch.dict(os.environ, {pc.OUTPUT_DIR_ENV: '/tmp/env'}):
            self.assertEqual(pc.resolve_output_dir(pc.RunConfig(), 'cli'), Path('cli'))

    def test_env_override(self):
        """--out 이 없으면 DOPPLER_OUTPUT_DIR"""
        with patch.dict(os.environ, {pc.OUTPUT_DIR_ENV: '/tmp/env'}):
            self.assertEqual(pc.resolve_output_dir(pc.RunConfig()), Path('/tmp/env'))

    def test_config_value(self):
        """둘 다 없으면 설정 값"""
        with patch.dict(os.environ, {}, clear=True):
            self.assertEqual(pc.resolve_output_dir(pc.RunConfig(output_dir='runs')), Path('runs'))


if __name__ == '__main__':
    unittest.main(verbosity=2)
