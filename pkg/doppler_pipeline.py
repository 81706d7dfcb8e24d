#!/usr/bin/env python3
"""
Doppler LiDAR Pipeline CLI
프레임 생성 → 도플러 분할 → 속도 추정 → 평가/벤치마크를 실행하는 명령줄 도구

사용 예:
    python doppler_pipeline.py simulate --preset straight_road --frames 10 --out run1
    python doppler_pipeline.py pipeline --preset intersection --seed 1 --json
    python doppler_pipeline.py bench --out bench
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from doppler_clustering import segment
from evaluation import downsample_sweep, estimation_scaling, fit_estimation_time, run_experiment, write_report
from fmcw_waveform import max_point_rate, range_resolution, velocity_resolution
from frame_io import (
    FrameFormatError, FrameIOError, export_frame_csv, load_scene, read_frame, write_frame
)
from pipeline_config import (
    InvalidConfigError, RunConfig, config_summary, load_config, resolve_output_dir, validate_config
)
from scene_sim import FrameGrid, SceneSpec, UnknownPresetError, scene_preset, simulate_sequence
from velocity_estimation import estimate_velocities

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'
MANIFEST_SCHEMA = 'doppler-manifest/1'
FRAME_PATTERN = 'frame_{:04d}.fdv'
BENCH_MIN_FRAMES = 100
BENCH_POOL_SIZE = 10

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_ERROR = 2

CONFIG_ERRORS = (InvalidConfigError, UnknownPresetError)


class _ArgumentParser(argparse.ArgumentParser):
    """인자 오류를 설정 오류(종료 코드 1)로 보고"""

    def error(self, message):
        _emit_error('InvalidArgument', message, None)
        sys.exit(EXIT_CONFIG_ERROR)


def _emit_error(kind: str, message: str, field_name: Optional[str]) -> None:
    payload = {'error': kind, 'message': message, 'field': field_name}
    print(json.dumps(payload, ensure_ascii=False), file=sys.stderr)


def _dump_json(data: Dict[str, Any], filepath: Path) -> None:
    with open(filepath, 'w') as f:
        json.dump(data, f, indent=2, ensure_ascii=False)
    logger.debug(f"JSON 저장: {filepath}")


def _load_scene(config: RunConfig) -> SceneSpec:
    if config.scene_file is not None:
        try:
            return load_scene(config.scene_file)
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidConfigError('scene_file', str(e)) from e
    return scene_preset(config.preset)


def _input_frames(path: Path) -> Iterator[FrameGrid]:
    """프레임 파일 하나, 또는 매니페스트/프레임 파일이 있는 디렉토리"""
    if path.is_dir():
        manifest_path = path / MANIFEST_NAME
        if manifest_path.exists():
            with open(manifest_path, 'r') as f:
                manifest = json.load(f)
            files = [path / entry['file'] for entry in manifest['frames']]
        else:
            files = sorted(path.glob('*.fdv'))
        if not files:
            raise FrameIOError(f"프레임 파일이 없습니다: {path}")
        for filepath in files:
            yield read_frame(filepath)
    else:
        yield read_frame(path)


def cli_simulate(config: RunConfig, out_dir: Path, quiet: bool = False) -> Dict[str, Any]:
    """
    설정대로 프레임을 생성하여 FDV1 파일과 매니페스트 저장

    매니페스트에는 시각 정보가 없으므로 같은 설정이면 출력이 바이트 단위로 같다.

    Returns:
        매니페스트 딕셔너리
    """
    scene = _load_scene(config)
    frames_dir = out_dir / 'frames'
    entries = []

    sequence = simulate_sequence(scene, config.sensor, config.frames, config.seed)
    for frame in tqdm(sequence, total=config.frames, desc="프레임 생성", disable=quiet):
        filename = FRAME_PATTERN.format(frame.frame_index)
        write_frame(frame, frames_dir / filename)
        entries.append({
            'file': f"frames/{filename}",
            'frame_index': frame.frame_index,
            'seed': frame.seed,
            'n_valid': frame.num_valid
        })

    manifest = {
        'schema': MANIFEST_SCHEMA,
        'scene': scene.name,
        'rows': config.sensor.rows,
        'cols': config.sensor.cols,
        'config': config_summary(config),
        'frames': entries
    }
    _dump_json(manifest, out_dir / MANIFEST_NAME)
    logger.info(f"프레임 생성 완료: {len(entries)}개 → {out_dir}")
    return manifest


def cli_segment(config: RunConfig, input_path: Path, out_dir: Path) -> Dict[str, Any]:
    """프레임별 분할 결과 저장 (유효 셀의 클러스터 번호 CSV)"""
    out_dir.mkdir(parents=True, exist_ok=True)
    summaries = []
    for frame in _input_frames(input_path):
        seg = segment(frame, config.effective_v_th, config.min_cluster_size)
        rows, cols = np.nonzero(frame.valid)
        pd.DataFrame({
            'row': rows,
            'col': cols,
            'cluster': seg.labels[rows, cols],
            'moving': seg.motion_mask[rows, cols].astype(np.uint8)
        }).to_csv(out_dir / f"segment_{frame.frame_index:04d}.csv", index=False)
        summaries.append({
            'frame_index': frame.frame_index,
            'num_clusters': seg.num_clusters,
            'static_id': seg.static_id,
            'static_size': int(seg.cluster_sizes[seg.static_id]),
            'moving_sizes': [int(seg.cluster_sizes[k]) for k in seg.moving_ids],
            'small_clusters': seg.small_cluster_ids
        })
    result = {'v_th': config.effective_v_th, 'frames': summaries}
    _dump_json(result, out_dir / 'segments.json')
    logger.info(f"분할 완료: 프레임 {len(summaries)}개")
    return result


def cli_estimate(config: RunConfig, input_path: Path, out_dir: Path) -> Dict[str, Any]:
    """프레임별 자기 속도와 이동 클러스터 속도 추정 결과 저장"""
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    summaries = []
    for frame in _input_frames(input_path):
        seg = segment(frame, config.effective_v_th, config.min_cluster_size)
        velocities = estimate_velocities(
            frame, seg, config.num_th_s, config.num_th_m, rng_seed=frame.seed, max_workers=config.max_workers
        )
        rows.append({'frame': frame.frame_index, 'cluster': seg.static_id, 'kind': 'ego',
                     **_estimate_columns(velocities.ego)})
        for cluster_id, estimate in velocities.objects.items():
            rows.append({'frame': frame.frame_index, 'cluster': cluster_id, 'kind': 'object',
                         **_estimate_columns(estimate)})
        summaries.append({
            'frame_index': frame.frame_index,
            'ego': velocities.ego.to_dict(),
            'objects': {str(k): v.to_dict() for k, v in velocities.objects.items()},
            'failures': {str(k): v for k, v in velocities.failures.items()}
        })
    pd.DataFrame(rows).to_csv(out_dir / 'estimates.csv', index=False)
    result = {'frames': summaries}
    _dump_json(result, out_dir / 'estimates.json')
    logger.info(f"속도 추정 완료: 프레임 {len(summaries)}개")
    return result


def _estimate_columns(estimate) -> Dict[str, Any]:
    return {
        'vx': estimate.velocity[0],
        'vy': estimate.velocity[1],
        'vz': estimate.velocity[2],
        'residual_rms': estimate.residual_rms,
        'sample_count': estimate.sample_count,
        'condition': estimate.condition_flag
    }


def cli_pipeline(config: RunConfig, out_dir: Path, input_path: Optional[Path] = None,
                 quiet: bool = False) -> Dict[str, Any]:
    """
    run_experiment 실행 후 보고서와 그림용 데이터 저장

    input_path 가 있으면 저장된 프레임을, 없으면 장면을 시뮬레이션한다.
    """
    common = dict(
        seed=config.seed,
        sensor=config.sensor,
        v_th=config.effective_v_th,
        num_th_s=config.num_th_s,
        num_th_m=config.num_th_m,
        min_cluster_size=config.min_cluster_size,
        warmup_frames=config.warmup_frames,
        progress=not quiet
    )
    if input_path is not None:
        report = run_experiment(preset=input_path.name, frame_source=_input_frames(input_path), **common)
    elif config.scene_file is not None:
        report = run_experiment(scene=_load_scene(config), frames=config.frames, **common)
    else:
        report = run_experiment(preset=config.preset, frames=config.frames, **common)

    write_report(report, out_dir)
    if report.failures:
        logger.warning(f"실패한 프레임 {len(report.failures)}개 (status 열 참고)")
    return report.to_dict()


def _time_segment(frame: FrameGrid, v_th: float, repeats: int) -> float:
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        segment(frame, v_th)
        samples.append(time.perf_counter() - start)
    return float(np.median(samples))


def _double_width(frame: FrameGrid) -> FrameGrid:
    """같은 프레임을 좌우로 이어 붙여 셀 수를 두 배로"""
    def _tile(a):
        return np.concatenate([a, a], axis=1)

    return FrameGrid(
        valid=_tile(frame.valid),
        points=_tile(frame.points),
        truth_object_id=_tile(frame.truth_object_id),
        truth_velocity=_tile(frame.truth_velocity),
        truth_is_moving=_tile(frame.truth_is_moving),
        truth_ego_velocity=frame.truth_ego_velocity
    )


def cli_bench(config: RunConfig, out_dir: Path, quiet: bool = False) -> Dict[str, Any]:
    """
    처리량 측정: 분할 cells/s 와 ms/frame, 추정 objects/s, 자기 속도만의 시간(절편),
    프레임 크기를 두 배로 했을 때의 분할 시간 비, 이동 객체 표본 상한별 오차

    미리 만든 프레임을 돌려 쓰며 최소 100개 프레임을 측정한다 (워밍업 제외).
    """
    scene = _load_scene(config)
    v_th = config.effective_v_th
    measured = max(config.frames, BENCH_MIN_FRAMES)
    pool = list(simulate_sequence(scene, config.sensor, min(measured, BENCH_POOL_SIZE), config.seed))

    cells, cluster_times, estimate_times, objects = 0, [], [], 0
    total = config.warmup_frames + measured
    for i in tqdm(range(total), desc="벤치마크", disable=quiet):
        frame = pool[i % len(pool)]
        start = time.perf_counter()
        seg = segment(frame, v_th, config.min_cluster_size)
        cluster_elapsed = time.perf_counter() - start

        start = time.perf_counter()
        velocities = estimate_velocities(frame, seg, config.num_th_s, config.num_th_m, rng_seed=frame.seed)
        estimate_elapsed = time.perf_counter() - start

        if i >= config.warmup_frames:
            cells += frame.num_valid
            cluster_times.append(cluster_elapsed)
            estimate_times.append(estimate_elapsed)
            objects += len(velocities.objects)

    scaling = estimation_scaling(seed=config.seed, num_th_s=config.num_th_s, num_th_m=config.num_th_m)
    fit = fit_estimation_time(scaling['n_objects'], scaling['estimate_ms'])
    sweep = downsample_sweep(seed=config.seed)

    base = pool[0]
    single = _time_segment(base, v_th, repeats=10)
    double = _time_segment(_double_width(base), v_th, repeats=10)

    cluster_total = float(np.sum(cluster_times))
    estimate_total = float(np.sum(estimate_times))
    result = {
        'scene': scene.name,
        'frames_measured': measured,
        'warmup_frames': config.warmup_frames,
        'grid': [base.rows, base.cols],
        'segment_cells_per_second': cells / cluster_total if cluster_total > 0 else 0.0,
        'segment_ms_per_frame': float(np.mean(cluster_times)) * 1e3,
        'segment_ms_median': float(np.median(cluster_times)) * 1e3,
        'estimate_ms_per_frame': float(np.mean(estimate_times)) * 1e3,
        'estimate_objects_per_second': objects / estimate_total if estimate_total > 0 else 0.0,
        'ego_only_ms': fit['intercept'],
        'ms_per_object': fit['slope'],
        'estimation_r_squared': fit['r_squared'],
        'downsample_err_mean': {str(int(cap)): float(err) for cap, err in zip(sweep['num_th_m'], sweep['err_mean'])},
        'frame_size_scaling_ratio': double / single if single > 0 else None,
        'sensor_point_rate_limit': max_point_rate(config.waveform),
        'range_resolution': range_resolution(config.waveform),
        'velocity_resolution': velocity_resolution(config.waveform)
    }

    out_dir.mkdir(parents=True, exist_ok=True)
    scaling.to_csv(out_dir / 'estimation_scaling.csv', index=False)
    sweep.to_csv(out_dir / 'downsample_sweep.csv', index=False)
    _dump_json(result, out_dir / 'bench.json')
    logger.info(
        f"벤치마크 완료: {result['segment_cells_per_second'] / 1e6:.2f} M cells/s, "
        f"{result['segment_ms_per_frame']:.2f} ms/frame"
    )
    return result


def _print_summary(command: str, result: Dict[str, Any]) -> None:
    print("\n" + "=" * 50)
    if command == 'simulate':
        print(f"✅ 프레임 {len(result['frames'])}개 생성 ({result['rows']}×{result['cols']})")
    elif command == 'pipeline':
        print(f"✅ {result['preset']}: 프레임 {result['frames']}개")
        for key in ('precision', 'recall', 'accuracy'):
            value = result[key]
            print(f"  {key:10s}: {value:.4f}" if value is not None else f"  {key:10s}: 정의되지 않음")
        print(f"  분할 시간   : {result['clustering_time'] * 1e3:.2f} ms/프레임")
        print(f"  처리량      : {result['points_per_second'] / 1e6:.2f} M points/s")
        if result['failures']:
            print(f"⚠️  실패한 프레임: {len(result['failures'])}개")
    elif command == 'bench':
        print(f"✅ 분할: {result['segment_cells_per_second'] / 1e6:.2f} M cells/s, "
              f"{result['segment_ms_per_frame']:.2f} ms/frame")
        print(f"  추정: {result['estimate_objects_per_second']:.0f} objects/s, "
              f"자기 속도만 {result['ego_only_ms']:.3f} ms")
        print(f"  프레임 크기 2배 시 분할 시간 비: {result['frame_size_scaling_ratio']:.2f}")
    else:
        print(f"✅ {command} 완료: 프레임 {len(result['frames'])}개")
    print("=" * 50)


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, help='실행 설정 JSON 파일')
    common.add_argument('--seed', type=int, help='루트 seed (설정 파일보다 우선)')
    common.add_argument('--out', type=str, help='출력 디렉토리 (기본: $DOPPLER_OUTPUT_DIR 또는 설정 값)')
    common.add_argument('--json', action='store_true', help='결과를 JSON 으로 표준 출력에 기록')
    common.add_argument('--preset', type=str, help='장면 프리셋 이름')
    common.add_argument('--scene', type=str, help='장면 JSON 파일 (프리셋 대신)')
    common.add_argument('--frames', type=int, help='프레임 수')
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='디버그 로그 출력')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='경고 이상만 출력')

    parser = _ArgumentParser(description='FMCW LiDAR 도플러 기반 이동 객체 분할/속도 추정 파이프라인')
    subparsers = parser.add_subparsers(dest='command', required=True)

    subparsers.add_parser('simulate', parents=[common], help='프레임 생성')
    for name, help_text in (('segment', '저장된 프레임 분할'), ('estimate', '저장된 프레임 속도 추정')):
        sub = subparsers.add_parser(name, parents=[common], help=help_text)
        sub.add_argument('--input', type=str, required=True, help='프레임 파일 또는 디렉토리')
    pipeline = subparsers.add_parser('pipeline', parents=[common], help='분할 + 추정 + 평가')
    pipeline.add_argument('--input', type=str, help='저장된 프레임 디렉토리 (없으면 시뮬레이션)')
    subparsers.add_parser('bench', parents=[common], help='처리량 측정')
    export = subparsers.add_parser('export-csv', parents=[common], help='프레임 파일을 CSV 로 내보내기')
    export.add_argument('--input', type=str, required=True, help='프레임 파일')
    export.add_argument('--csv', type=str, help='CSV 경로 (기본: 출력 디렉토리/<파일이름>.csv)')
    export.add_argument('--valid-only', action='store_true', help='유효 셀만 기록')
    return parser


def _configure_logging(args) -> None:
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    else:
        level = logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")


def run(argv: Optional[List[str]] = None) -> int:
    """CLI 실행 후 종료 코드 반환 (0 성공, 1 설정 오류, 2 실행 오류)"""
    args = build_parser().parse_args(argv)
    _configure_logging(args)

    try:
        config = load_config(args.config) if args.config else RunConfig()
        config = validate_config(config.with_overrides(
            seed=args.seed, preset=args.preset, frames=args.frames, scene_file=args.scene
        ))
        out_dir = resolve_output_dir(config, args.out)

        if args.command == 'simulate':
            result = cli_simulate(config, out_dir, quiet=args.quiet)
        elif args.command == 'segment':
            result = cli_segment(config, Path(args.input), out_dir)
        elif args.command == 'estimate':
            result = cli_estimate(config, Path(args.input), out_dir)
        elif args.command == 'pipeline':
            input_path = Path(args.input) if args.input else None
            result = cli_pipeline(config, out_dir, input_path, quiet=args.quiet)
        elif args.command == 'bench':
            result = cli_bench(config, out_dir, quiet=args.quiet)
        else:
            input_path = Path(args.input)
            csv_path = Path(args.csv) if args.csv else out_dir / f"{input_path.stem}.csv"
            export_frame_csv(read_frame(input_path), csv_path, valid_only=args.valid_only)
            result = {'frames': [str(csv_path)]}
    except CONFIG_ERRORS as e:
        _emit_error(type(e).__name__.replace('Error', ''), str(e), getattr(e, 'field', None))
        return EXIT_CONFIG_ERROR
    except (FrameIOError, FrameFormatError, OSError) as e:
        _emit_error(type(e).__name__.replace('Error', ''), str(e), None)
        return EXIT_RUNTIME_ERROR
    except Exception as e:
        logger.debug("처리되지 않은 예외", exc_info=True)
        _emit_error(type(e).__name__.replace('Error', ''), str(e), None)
        return EXIT_RUNTIME_ERROR

    if args.json:
        print(json.dumps(result, indent=2, ensure_ascii=False, default=str))
    elif not args.quiet:
        _print_summary(args.command, result)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
