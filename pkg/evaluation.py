#!/usr/bin/env python3
"""
Doppler Pipeline Evaluation
분류 지표, 속도 추정 오차, 처리 시간/처리량 측정 및 그림용 데이터 생성
"""

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats
from tqdm import tqdm

from doppler_clustering import (
    DEFAULT_MIN_CLUSTER_SIZE, EmptyFrameError, Segmentation, ThresholdParams,
    derive_threshold, in_blind_zone, motion_labels, segment
)
from scene_sim import FrameGrid, SceneSpec, SensorConfig, scene_preset, simulate_sequence
from velocity_estimation import (
    DEFAULT_NUM_TH_M, DEFAULT_NUM_TH_S, FrameVelocities, ObservationSet,
    estimate_lidar_velocity, estimate_object_velocity, estimate_velocities
)

logger = logging.getLogger(__name__)

# 정답 이동 판정 속력 [m/s]
MOVING_SPEED_THRESHOLD = 0.05
WARMUP_FRAMES = 3
# 사각지대 판정의 도플러 잡음 여유 배수
BLIND_ZONE_NOISE_K = 3.0
# 표본 상한 스윕 기본값
DOWNSAMPLE_CAPS = (10, 25, 50, 100, 200, 400)

FRAME_COLUMNS = [
    'frame', 'tp', 'tn', 'fp', 'fn', 'precision', 'recall', 'accuracy',
    'ego_err_x', 'ego_err_y', 'ego_err_z', 'cluster_ms', 'estimate_ms',
    'n_valid', 'n_moving_clusters', 'blind_zone_objects', 'status'
]
OBJECT_COLUMNS = [
    'frame', 'cluster_id', 'truth_object_id', 'cluster_size', 'sample_count',
    'est_x', 'est_y', 'est_z', 'err_x', 'err_y', 'err_z', 'err_norm', 'condition'
]


class LengthMismatchError(ValueError):
    """예측과 정답의 길이가 다른 경우"""


@dataclass(frozen=True)
class ConfusionCounts:
    """이동 = 양성 클래스"""
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: 'ConfusionCounts') -> 'ConfusionCounts':
        return ConfusionCounts(self.tp + other.tp, self.tn + other.tn, self.fp + other.fp, self.fn + other.fn)


@dataclass(frozen=True)
class Metrics:
    """분모가 0인 지표는 None (0과 구분)"""
    precision: Optional[float]
    recall: Optional[float]
    accuracy: Optional[float]


@dataclass(eq=False)
class EvalReport:
    """실험 결과 요약과 프레임/객체별 표"""
    preset: str
    frames: int
    seed: int
    precision: Optional[float]
    recall: Optional[float]
    accuracy: Optional[float]
    ego_error_rms: List[float]
    ego_error_norm_mean: Optional[float]
    per_object_errors: List[Tuple[int, float]]
    clustering_time: float
    estimation_time: float
    points_per_second: float
    objects_per_second: float
    objects_per_scan: float
    frame_table: pd.DataFrame = field(repr=False)
    object_table: pd.DataFrame = field(repr=False)
    failures: Dict[int, str] = field(default_factory=dict)

    def to_dict(self, include_timing: bool = True) -> Dict[str, Any]:
        result = {
            'preset': self.preset,
            'frames': self.frames,
            'seed': self.seed,
            'precision': self.precision,
            'recall': self.recall,
            'accuracy': self.accuracy,
            'ego_error_rms': self.ego_error_rms,
            'ego_error_norm_mean': self.ego_error_norm_mean,
            'per_object_errors': [[int(n), float(e)] for n, e in self.per_object_errors],
            'failures': {str(k): v for k, v in self.failures.items()}
        }
        if include_timing:
            result.update({
                'clustering_time': self.clustering_time,
                'estimation_time': self.estimation_time,
                'points_per_second': self.points_per_second,
                'objects_per_second': self.objects_per_second,
                'objects_per_scan': self.objects_per_scan
            })
        return result


def confusion(pred, truth) -> ConfusionCounts:
    """
    이동/정지 예측과 정답으로부터 혼동 행렬 계산 (유효 셀만 전달)

    Raises:
        LengthMismatchError: 길이가 다른 경우

    Example:
        >>> confusion([True, False, False], [True, True, False])
        ConfusionCounts(tp=1, tn=1, fp=0, fn=1)
    """
    pred = np.asarray(pred, dtype=bool).ravel()
    truth = np.asarray(truth, dtype=bool).ravel()
    if len(pred) != len(truth):
        raise LengthMismatchError(f"예측({len(pred)})과 정답({len(truth)})의 길이가 다릅니다")
    return ConfusionCounts(
        tp=int(np.count_nonzero(pred & truth)),
        tn=int(np.count_nonzero(~pred & ~truth)),
        fp=int(np.count_nonzero(pred & ~truth)),
        fn=int(np.count_nonzero(~pred & truth))
    )


def metrics(c: ConfusionCounts) -> Metrics:
    """
    Precision = TP/(TP+FP), Recall = TP/(TP+FN), Accuracy = (TP+TN)/전체

    Example:
        >>> metrics(ConfusionCounts(tp=99, tn=899, fp=1, fn=1))
        Metrics(precision=0.99, recall=0.99, accuracy=0.998)
    """
    def _ratio(num, den):
        return num / den if den > 0 else None

    return Metrics(
        precision=_ratio(c.tp, c.tp + c.fp),
        recall=_ratio(c.tp, c.tp + c.fn),
        accuracy=_ratio(c.tp + c.tn, c.total)
    )


def truth_motion(frame: FrameGrid, speed_threshold: float = MOVING_SPEED_THRESHOLD) -> np.ndarray:
    """유효 셀의 정답 이동 여부 (행 우선)"""
    speed = np.linalg.norm(frame.truth_velocity, axis=-1)
    return (speed > speed_threshold).ravel()[frame.valid.ravel()]


def count_blind_zone_objects(frame: FrameGrid, v_th: float, noise_k: float = BLIND_ZONE_NOISE_K) -> int:
    """
    일부 셀이라도 사각지대에 들어간 이동 객체 수

    v_th 에 두 가지 여유를 더한다.
    - 센서 이동: 인접 셀 사이 배경 도플러가 ‖v_lidar‖·θ·√2 까지 달라진다
    - 도플러 잡음: 인접 두 셀 차이의 표준편차 √2·σ_v 의 noise_k 배

    Parameters:
        frame: 정답 필드가 있는 프레임
        v_th: 임계값 [m/s]
        noise_k: 잡음 여유 배수 (0 이면 잡음 여유 없음)
    """
    if frame.sensor is not None:
        theta = frame.sensor.angular_res_rad
        sigma = frame.sensor.velocity_noise_sigma
    else:
        theta = 0.0
        sigma = 0.0
    margin = float(np.linalg.norm(frame.truth_ego_velocity)) * theta * np.sqrt(2.0)
    margin += noise_k * np.sqrt(2.0) * sigma

    ids = frame.truth_object_id.ravel()
    moving = frame.truth_is_moving.ravel() & frame.valid.ravel()
    points = frame.points.reshape(-1, 4)
    velocities = frame.truth_velocity.reshape(-1, 3)

    count = 0
    for obj_id in np.unique(ids[moving]):
        cells = np.flatnonzero(moving & (ids == obj_id))
        directions = points[cells, :3] / np.linalg.norm(points[cells, :3], axis=1, keepdims=True)
        if in_blind_zone(directions, velocities[cells[0]], v_th, margin).any():
            count += 1
    return count


def _object_rows(frame: FrameGrid, seg: Segmentation, velocities: FrameVelocities) -> List[Dict[str, Any]]:
    """이동 클러스터를 다수결로 정답 객체에 대응시키고 속도 오차 계산"""
    rows = []
    ids = frame.truth_object_id.ravel()
    moving = frame.truth_is_moving.ravel()
    truth_velocity = frame.truth_velocity.reshape(-1, 3)

    for cluster_id, estimate in velocities.objects.items():
        cells = seg.cluster_cells(cluster_id)
        majority = int(np.bincount(ids[cells]).argmax())
        matched = cells[(ids[cells] == majority) & moving[cells]]
        row = {
            'frame': frame.frame_index,
            'cluster_id': cluster_id,
            'truth_object_id': majority,
            'cluster_size': len(cells),
            'sample_count': estimate.sample_count,
            'est_x': estimate.velocity[0],
            'est_y': estimate.velocity[1],
            'est_z': estimate.velocity[2],
            'condition': estimate.condition_flag
        }
        if len(matched) > 0:
            error = estimate.velocity - truth_velocity[matched[0]]
            row.update({
                'err_x': error[0], 'err_y': error[1], 'err_z': error[2],
                'err_norm': float(np.linalg.norm(error))
            })
        else:
            # 정지 배경 조각이 떨어져 나온 클러스터
            row.update({'err_x': np.nan, 'err_y': np.nan, 'err_z': np.nan, 'err_norm': np.nan})
        rows.append(row)
    return rows


def _frame_source(preset, scene, frames, seed, sensor):
    if scene is None:
        scene = scene_preset(preset)
    return simulate_sequence(scene, sensor, frames, seed)


def run_experiment(
    preset: Optional[str] = None,
    frames: int = 50,
    seed: int = 0,
    sensor: Optional[SensorConfig] = None,
    threshold: Optional[ThresholdParams] = None,
    v_th: Optional[float] = None,
    num_th_s: int = DEFAULT_NUM_TH_S,
    num_th_m: int = DEFAULT_NUM_TH_M,
    min_cluster_size: int = DEFAULT_MIN_CLUSTER_SIZE,
    warmup_frames: int = WARMUP_FRAMES,
    scene: Optional[SceneSpec] = None,
    frame_source: Optional[Iterable[FrameGrid]] = None,
    progress: bool = False
) -> EvalReport:
    """
    프레임 생성 → 분할 → 속도 추정을 반복하며 지표/오차/시간 측정

    분할 시간은 segment() 호출만, 추정 시간은 estimate_velocities() 호출만
    측정한다 (시뮬레이션과 입출력 제외). 처음 warmup_frames 개 프레임은 시간
    통계에서 제외한다. 프레임 하나가 실패해도 status 에 기록하고 계속 진행한다.

    Parameters:
        preset: 장면 프리셋 이름 (scene 또는 frame_source 가 없을 때)
        frames: 생성할 프레임 수
        seed: 루트 seed
        sensor: 센서 설정 (기본 SensorConfig())
        threshold: 임계값 파라미터 (v_th 가 없을 때 사용)
        v_th: 직접 지정한 임계값
        num_th_s, num_th_m: 다운샘플 상한
        min_cluster_size: 작은 클러스터 표시 기준
        warmup_frames: 시간 통계에서 제외할 앞 프레임 수
        scene: 직접 지정한 장면
        frame_source: 미리 만든 프레임 목록
        progress: tqdm 진행 표시

    Returns:
        EvalReport

    Example:
        >>> report = run_experiment('straight_road', frames=50, seed=1)
        >>> report.accuracy
    """
    sensor = sensor or SensorConfig()
    if v_th is None:
        v_th = derive_threshold(threshold or ThresholdParams())
    if frame_source is None:
        frame_source = _frame_source(preset, scene, frames, seed, sensor)
        total = frames
    else:
        total = None
    name = preset or (scene.name if scene is not None else 'frames')

    frame_rows, object_rows = [], []
    failures: Dict[int, str] = {}
    timed_cells, cluster_times, estimate_times, timed_objects = 0, [], [], 0

    iterator = tqdm(frame_source, total=total, desc=f"실험 {name}", disable=not progress)
    for position, frame in enumerate(iterator):
        row = {col: np.nan for col in FRAME_COLUMNS}
        row.update({'frame': frame.frame_index, 'n_valid': frame.num_valid, 'status': 'ok'})

        try:
            start = time.perf_counter()
            seg = segment(frame, v_th, min_cluster_size)
            cluster_elapsed = time.perf_counter() - start

            start = time.perf_counter()
            velocities = estimate_velocities(frame, seg, num_th_s, num_th_m, rng_seed=frame.seed)
            estimate_elapsed = time.perf_counter() - start
        except (EmptyFrameError, ValueError) as e:
            kind = type(e).__name__.replace('Error', '')
            failures[frame.frame_index] = f"{kind}: {e}"
            row['status'] = kind
            frame_rows.append(row)
            logger.warning(f"프레임 {frame.frame_index} 실패: {kind} ({e})")
            continue

        counts = confusion(motion_labels(seg, frame.valid), truth_motion(frame))
        scores = metrics(counts)
        ego_error = velocities.ego.velocity - frame.truth_ego_velocity
        row.update({
            'n_moving_clusters': len(seg.moving_ids),
            'blind_zone_objects': count_blind_zone_objects(frame, v_th),
            'tp': counts.tp, 'tn': counts.tn, 'fp': counts.fp, 'fn': counts.fn,
            'precision': scores.precision, 'recall': scores.recall, 'accuracy': scores.accuracy,
            'ego_err_x': ego_error[0], 'ego_err_y': ego_error[1], 'ego_err_z': ego_error[2],
            'cluster_ms': cluster_elapsed * 1e3,
            'estimate_ms': estimate_elapsed * 1e3
        })
        frame_rows.append(row)
        object_rows.extend(_object_rows(frame, seg, velocities))

        if position >= warmup_frames:
            timed_cells += frame.num_valid
            cluster_times.append(cluster_elapsed)
            estimate_times.append(estimate_elapsed)
            timed_objects += len(velocities.objects)

    frame_table = pd.DataFrame(frame_rows, columns=FRAME_COLUMNS)
    object_table = pd.DataFrame(object_rows, columns=OBJECT_COLUMNS)
    ok = frame_table[frame_table['status'] == 'ok']

    def _mean(column) -> Optional[float]:
        values = pd.to_numeric(ok[column], errors='coerce').dropna()
        return float(values.mean()) if len(values) else None

    if len(ok):
        ego = ok[['ego_err_x', 'ego_err_y', 'ego_err_z']].to_numpy(dtype=float)
        ego_rms = [float(a) for a in np.sqrt(np.mean(ego ** 2, axis=0))]
        ego_norm = float(np.mean(np.linalg.norm(ego, axis=1)))
    else:
        ego_rms, ego_norm = [None, None, None], None

    matched = object_table.dropna(subset=['err_norm'])
    cluster_total = float(np.sum(cluster_times))
    estimate_total = float(np.sum(estimate_times))
    objects_per_second = timed_objects / estimate_total if estimate_total > 0 else 0.0

    report = EvalReport(
        preset=name,
        frames=len(frame_table),
        seed=seed,
        precision=_mean('precision'),
        recall=_mean('recall'),
        accuracy=_mean('accuracy'),
        ego_error_rms=ego_rms,
        ego_error_norm_mean=ego_norm,
        per_object_errors=list(zip(matched['cluster_size'].astype(int), matched['err_norm'].astype(float))),
        clustering_time=float(np.mean(cluster_times)) if cluster_times else 0.0,
        estimation_time=float(np.mean(estimate_times)) if estimate_times else 0.0,
        points_per_second=timed_cells / cluster_total if cluster_total > 0 else 0.0,
        objects_per_second=objects_per_second,
        objects_per_scan=objects_per_second / sensor.frame_rate,
        frame_table=frame_table,
        object_table=object_table,
        failures=failures
    )
    logger.info(
        f"실험 완료: {name}, 프레임 {report.frames}개, 정확도 {report.accuracy}, "
        f"분할 {report.clustering_time * 1e3:.2f} ms/프레임"
    )
    return report


def fit_estimation_time(object_counts, times) -> Dict[str, float]:
    """
    이동 객체 수 대비 추정 시간의 선형 추세 (절편 = 자기 속도 추정 시간)

    Returns:
        slope, intercept, r_squared 딕셔너리

    Example:
        >>> fit = fit_estimation_time([1, 2, 3], [1.1, 2.0, 3.1])
    """
    x = np.asarray(object_counts, dtype=float)
    y = np.asarray(times, dtype=float)
    if len(x) < 3:
        raise ValueError("추세 계산을 위해 최소 3개의 데이터가 필요합니다.")
    slope, intercept, r_value, p_value, std_err = stats.linregress(x, y)
    return {
        'slope': float(slope),
        'intercept': float(intercept),
        'r_squared': float(r_value ** 2),
        'p_value': float(p_value),
        'std_error': float(std_err)
    }


def _random_observations(rng, n: int, velocity, v_self, sigma: float, spread: float) -> ObservationSet:
    az = rng.uniform(-spread, spread, n)
    el = rng.uniform(-spread / 4, spread / 4, n)
    directions = np.stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)], axis=1)
    dopplers = directions @ (np.asarray(velocity) - np.asarray(v_self)) + rng.normal(0.0, sigma, n)
    return ObservationSet(directions, dopplers)


def estimation_scaling(
    object_counts: Iterable[int] = range(0, 16),
    repeats: int = 20,
    seed: int = 0,
    static_points: int = 5000,
    object_points: int = 400,
    num_th_s: int = DEFAULT_NUM_TH_S,
    num_th_m: int = DEFAULT_NUM_TH_M,
    sigma: float = 0.031
) -> pd.DataFrame:
    """
    이동 객체 수별 추정 시간 측정 (반복 중 중앙값, ms)

    Returns:
        n_objects, estimate_ms 열의 DataFrame
    """
    object_counts = list(object_counts)
    rng = np.random.default_rng(seed)
    v_self = np.array([10.0, 0.0, 0.0])
    static = _random_observations(rng, static_points, np.zeros(3), v_self, sigma, np.pi / 3)
    max_count = max(object_counts)
    objects = [
        _random_observations(rng, object_points, rng.uniform(-15, 15, 3) * [1, 1, 0], v_self, sigma, 0.3)
        for _ in range(max_count)
    ]

    rows = []
    for count in object_counts:
        samples = []
        for repeat in range(repeats):
            start = time.perf_counter()
            ego = estimate_lidar_velocity(static, num_th_s, rng_seed=repeat)
            for k in range(count):
                estimate_object_velocity(objects[k], ego.velocity, num_th_m, rng_seed=repeat + k)
            samples.append(time.perf_counter() - start)
        rows.append({'n_objects': count, 'estimate_ms': float(np.median(samples)) * 1e3})
    return pd.DataFrame(rows)


def downsample_sweep(
    caps: Iterable[int] = DOWNSAMPLE_CAPS,
    trials: int = 50,
    seed: int = 0,
    object_points: int = 1000,
    sigma: float = 0.031,
    spread: float = 0.3
) -> pd.DataFrame:
    """
    이동 객체 표본 상한(num_th_m)별 속도 오차와 추정 시간

    시행마다 같은 합성 객체(수평 속도, 방위각 ±spread, 고도각 ±spread/4)를
    상한만 바꿔 추정하므로 상한 사이의 차이는 표본 수에서만 온다.

    Returns:
        num_th_m, err_mean, err_median, err_x, err_y, err_z, estimate_ms 열의 DataFrame
        (err_* 는 시행 평균 절대 오차, estimate_ms 는 중앙값)

    Example:
        >>> table = downsample_sweep(caps=(10, 200), trials=20)
    """
    caps = list(caps)
    rng = np.random.default_rng(seed)
    v_self = np.array([10.0, 0.0, 0.0])
    cases = []
    for _ in range(trials):
        velocity = rng.uniform(-15, 15, 3) * [1, 1, 0]
        cases.append((velocity, _random_observations(rng, object_points, velocity, v_self, sigma, spread)))

    rows = []
    for cap in caps:
        errors, samples = [], []
        for k, (velocity, observations) in enumerate(cases):
            start = time.perf_counter()
            estimate = estimate_object_velocity(observations, v_self, cap, rng_seed=k)
            samples.append(time.perf_counter() - start)
            errors.append(np.abs(estimate.velocity - velocity))
        errors = np.asarray(errors)
        norms = np.linalg.norm(errors, axis=1)
        rows.append({
            'num_th_m': cap,
            'err_mean': float(np.mean(norms)),
            'err_median': float(np.median(norms)),
            'err_x': float(np.mean(errors[:, 0])),
            'err_y': float(np.mean(errors[:, 1])),
            'err_z': float(np.mean(errors[:, 2])),
            'estimate_ms': float(np.median(samples)) * 1e3
        })
    logger.debug(f"표본 상한 스윕 완료: {caps}")
    return pd.DataFrame(rows)


def plot_tables(report: EvalReport) -> Dict[str, pd.DataFrame]:
    """
    그림 재현용 데이터 표 (어떤 플로팅 도구로도 읽을 수 있는 CSV 용)

    Returns:
        파일 이름 → DataFrame
    """
    frames = report.frame_table
    ok = frames[frames['status'] == 'ok']
    estimation = ok[['frame', 'n_moving_clusters', 'estimate_ms']].rename(columns={'n_moving_clusters': 'n_objects'})
    if estimation['n_objects'].nunique() >= 2 and len(estimation) >= 3:
        fit = fit_estimation_time(estimation['n_objects'], estimation['estimate_ms'])
        estimation = estimation.assign(trend_ms=fit['slope'] * estimation['n_objects'] + fit['intercept'])
    return {
        'clustering_performance.csv': ok[['frame', 'precision', 'recall', 'accuracy', 'blind_zone_objects']],
        'clustering_time.csv': ok[['frame', 'n_valid', 'cluster_ms']],
        'ego_velocity_error.csv': ok[['frame', 'ego_err_x', 'ego_err_y', 'ego_err_z']],
        'object_velocity_error.csv': report.object_table.dropna(subset=['err_norm'])[
            ['frame', 'truth_object_id', 'cluster_size', 'err_x', 'err_y', 'err_z', 'err_norm']
        ],
        'estimation_time.csv': estimation
    }


def write_report(report: EvalReport, out_dir: Union[str, Path]) -> List[Path]:
    """
    보고서 JSON, 프레임별/객체별 CSV, 그림용 데이터 CSV 저장

    Returns:
        저장한 파일 경로 목록
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    frames_path = out_dir / 'frames.csv'
    report.frame_table.to_csv(frames_path, index=False)
    written.append(frames_path)

    objects_path = out_dir / 'objects.csv'
    report.object_table.to_csv(objects_path, index=False)
    written.append(objects_path)

    for filename, table in plot_tables(report).items():
        path = out_dir / filename
        table.to_csv(path, index=False)
        written.append(path)

    report_path = out_dir / 'report.json'
    with open(report_path, 'w') as f:
        json.dump(report.to_dict(), f, indent=2, default=_json_default)
    written.append(report_path)

    logger.info(f"보고서 저장: {out_dir} ({len(written)}개 파일)")
    return written


def _json_default(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return str(value)
