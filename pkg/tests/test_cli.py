#!/usr/bin/env python3
"""
명령줄 도구 테스트
"""

import io
import json
import os
import sys
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path
from unittest.mock import patch

# 상위 디렉토리의 모듈 import
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
import doppler_pipeline as dp
from frame_io import save_scene
from pipeline_config import RunConfig, save_config
from scene_sim import SceneSpec, SensorConfig


class TestCli(unittest.TestCase):
    """서브커맨드 테스트"""

    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.root = Path(self.tmpdir.name)
        self.small_config = self.root / 'small.json'
        save_config(RunConfig(sensor=SensorConfig(azimuth_fov=60.0, elevation_fov=20.0)), self.small_config)

    def tearDown(self):
        self.tmpdir.cleanup()

    def _run(self, *argv):
        stdout, stderr = io.StringIO(), io.StringIO()
        with redirect_stdout(stdout), redirect_stderr(stderr):
            code = dp.run(list(argv))
        return code, stdout.getvalue(), stderr.getvalue()

    def test_simulate_default_grid(self):
        """straight_road 2 프레임 → 파일 2개 + 매니페스트, 격자 150×600"""
        out = self.root / 'sim'
        code, stdout, _ = self._run('simulate', '--preset', 'straight_road', '--frames', '2',
                                    '--out', str(out), '--json', '-q')
        self.assertEqual(code, dp.EXIT_OK)
        manifest = json.loads(stdout)
        self.assertEqual((manifest['rows'], manifest['cols']), (150, 600))
        self.assertEqual(len(manifest['frames']), 2)
        for entry in manifest['frames']:
            self.assertTrue((out / entry['file']).exists())
        self.assertTrue((out / dp.MANIFEST_NAME).exists())

    def test_simulate_is_byte_identical(self):
        """같은 설정 두 번 → 모든 파일이 바이트 단위로 같음"""
        dirs = []
        for name in ('a', 'b'):
            out = self.root / name
            code, _, _ = self._run('simulate', '--config', str(self.small_config), '--preset', 'intersection',
                                   '--frames', '3', '--seed', '11', '--out', str(out), '-q')
            self.assertEqual(code, dp.EXIT_OK)
            dirs.append(out)
        files = sorted(p.relative_to(dirs[0]) for p in dirs[0].rglob('*') if p.is_file())
        self.assertEqual(len(files), 4)
        for rel in files:
            self.assertEqual((dirs[0] / rel).read_bytes(), (dirs[1] / rel).read_bytes(), msg=str(rel))

    def test_pipeline_json(self):
        """pipeline --json 은 보고서를 JSON 으로 출력하고 CSV 저장"""
        out = self.root / 'pipe'
        code, stdout, _ = self._run('pipeline', '--config', str(self.small_config), '--preset', 'intersection',
                                    '--frames', '4', '--out', str(out), '--json', '-q')
        self.assertEqual(code, dp.EXIT_OK)
        report = json.loads(stdout)
        self.assertEqual(report['frames'], 4)
        self.assertIn('accuracy', report)
        self.assertTrue((out / 'clustering_performance.csv').exists())
        self.assertTrue((out / 'report.json').exists())

    def test_pipeline_empty_scene(self):
        """빈 장면 → 프레임마다 EmptyFrame, 종료 코드 0"""
        scene_path = self.root / 'empty.json'
        save_scene(SceneSpec(objects=[], ground_height=None, name='empty'), scene_path)
        code, stdout, _ = self._run('pipeline', '--config', str(self.small_config), '--scene', str(scene_path),
                                    '--frames', '2', '--out', str(self.root / 'empty'), '--json', '-q')
        self.assertEqual(code, dp.EXIT_OK)
        report = json.loads(stdout)
        self.assertEqual(sorted(report['failures']), ['0', '1'])
        self.assertTrue(all(v.startswith('EmptyFrame') for v in report['failures'].values()))

    def test_saved_frames_flow(self):
        """simulate → segment / estimate / pipeline --input / export-csv"""
        sim = self.root / 'sim'
        self._run('simulate', '--config', str(self.small_config), '--preset', 't_intersection',
                  '--frames', '2', '--out', str(sim), '-q')

        code, stdout, _ = self._run('segment', '--input', str(sim), '--out', str(self.root / 'seg'), '--json', '-q')
        self.assertEqual(code, dp.EXIT_OK)
        self.assertEqual(len(json.loads(stdout)['frames']), 2)
        self.assertTrue((self.root / 'seg' / 'segment_0000.csv').exists())

        code, stdout, _ = self._run('estimate', '--input', str(sim), '--out', str(self.root / 'est'), '--json', '-q')
        self.assertEqual(code, dp.EXIT_OK)
        self.assertIn('ego', json.loads(stdout)['frames'][0])

        code, stdout, _ = self._run('pipeline', '--input', str(sim), '--out', str(self.root / 'rep'), '--json', '-q')
        self.assertEqual(code, dp.EXIT_OK)
        self.assertEqual(json.loads(stdout)['frames'], 2)

        frame_file = sim / 'frames' / 'frame_0000.fdv'
        csv_path = self.root / 'frame.csv'
        code, _, _ = self._run('export-csv', '--input', str(frame_file), '--csv', str(csv_path), '-q')
        self.assertEqual(code, dp.EXIT_OK)
        self.assertTrue(csv_path.exists())

    def test_config_error_exit_code(self):
        """알 수 없는 프리셋 → 종료 코드 1, 표준 오류에 JSON"""
        code, _, stderr = self._run('simulate', '--preset', 'roundabout', '--out', str(self.root / 'x'), '-q')
        self.assertEqual(code, dp.EXIT_CONFIG_ERROR)
        error = json.loads(stderr.strip().splitlines()[-1])
        self.assertEqual(error['error'], 'InvalidConfig')
        self.assertEqual(error['field'], 'preset')

    def test_bad_argument_exit_code(self):
        """잘못된 인자 → 종료 코드 1"""
        with self.assertRaises(SystemExit) as ctx:
            self._run('simulate', '--frames', 'many')
        self.assertEqual(ctx.exception.code, dp.EXIT_CONFIG_ERROR)

    def test_runtime_error_exit_code(self):
        """없는 입력 파일 → 종료 코드 2"""
        code, _, stderr = self._run('export-csv', '--input', str(self.root / 'none.fdv'),
                                    '--out', str(self.root), '-q')
        self.assertEqual(code, dp.EXIT_RUNTIME_ERROR)
        self.assertEqual(json.loads(stderr.strip().splitlines()[-1])['error'], 'FileNotFound')

    def test_corrupt_frame_exit_code(self):
        """형식이 잘못된 프레임 파일 → 종료 코드 2"""
        bad = self.root / 'bad.fdv'
        bad.write_bytes(b'FDV0' + bytes(200))
        code, _, stderr = self._run('export-csv', '--input', str(bad), '--out', str(self.root), '-q')
        self.assertEqual(code, dp.EXIT_RUNTIME_ERROR)
        self.assertEqual(json.loads(stderr.strip().splitlines()[-1])['error'], 'FrameFormat')

    def test_output_dir_env(self):
        """--out 이 없으면 DOPPLER_OUTPUT_DIR 사용"""
        env_out = self.root / 'env'
        with patch.dict(os.environ, {'DOPPLER_OUTPUT_DIR': str(env_out)}):
            code, _, _ = self._run('simulate', '--config', str(self.small_config), '--frames', '1', '-q')
        self.assertEqual(code, dp.EXIT_OK)
        self.assertTrue((env_out / dp.MANIFEST_NAME).exists())

    def test_bench(self):
        """bench: cells/s, ms/frame, 0개 객체 절편, 프레임 크기 2배 시간 비"""
        out = self.root / 'bench'
        code, stdout, _ = self._run('bench', '--preset', 'straight_road', '--out', str(out), '--json', '-q')
        self.assertEqual(code, dp.EXIT_OK)
        result = json.loads(stdout)
        self.assertGreaterEqual(result['frames_measured'], 100)
        self.assertEqual(result['grid'], [150, 600])
        self.assertGreater(result['segment_cells_per_second'], 0.0)
        self.assertGreater(result['ego_only_ms'], 0.0)
        self.assertGreaterEqual(result['frame_size_scaling_ratio'], 1.4)
        self.assertLessEqual(result['frame_size_scaling_ratio'], 2.6)
        self.assertTrue((out / 'bench.json').exists())
        self.assertTrue((out / 'estimation_scaling.csv').exists())
        self.assertTrue((out / 'downsample_sweep.csv').exists())
        errors = result['downsample_err_mean']
        self.assertLess(errors['200'], errors['10'])


if __name__ == '__main__':
    unittest.main(verbosity=2)
