#!/usr/bin/env python3
"""
Doppler Velocity Estimation
정지 배경으로 센서 자기 속도를, 이동 클러스터로 객체 속도를 최소제곱 추정
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, NamedTuple, Optional, Sequence

import numpy as np
from scipy import linalg

from doppler_clustering import Segmentation
from scene_sim import FrameGrid

logger = logging.getLogger(__name__)

WELL_CONDITIONED = 'well_conditioned'
RANK_DEFICIENT = 'rank_deficient'

RANK_TOLERANCE = 1e-10
MIN_SAMPLES = 3
DEFAULT_NUM_TH_S = 1000
DEFAULT_NUM_TH_M = 200


class InsufficientPointsError(ValueError):
    """3차원 속도를 풀기에 점이 부족한 경우 (n < 3)"""


@dataclass(eq=False)
class ObservationSet:
    """
    관측 쌍 (A, V)

    Parameters:
        directions_A: n×3 단위 광선 행렬 (행 e_i)
        dopplers_V: n 개의 도플러 측정값
    """
    directions_A: np.ndarray
    dopplers_V: np.ndarray

    def __post_init__(self):
        self.directions_A = np.asarray(self.directions_A, dtype=np.float64).reshape(-1, 3)
        self.dopplers_V = np.asarray(self.dopplers_V, dtype=np.float64).reshape(-1)
        if len(self.directions_A) != len(self.dopplers_V):
            raise ValueError(
                f"광선 수({len(self.directions_A)})와 도플러 수({len(self.dopplers_V)})가 다릅니다"
            )
        if len(self.dopplers_V) < 1:
            raise InsufficientPointsError("관측이 하나도 없습니다")
        norms = np.linalg.norm(self.directions_A, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ValueError("directions_A의 각 행은 단위 벡터여야 합니다")

    def __len__(self) -> int:
        return len(self.dopplers_V)

    @classmethod
    def from_points(cls, points) -> 'ObservationSet':
        """
        (n, 4) [x, y, z, v] 점 배열에서 생성 (원점의 점은 제외)

        Example:
            >>> obs = ObservationSet.from_points([[10, 0, 0, -1.0], [0, 5, 0, 0.0], [0, 0, 2, 0.0]])
        """
        points = np.asarray(points, dtype=np.float64).reshape(-1, 4)
        norms = np.linalg.norm(points[:, :3], axis=1)
        keep = norms > 0
        if not keep.all():
            logger.debug(f"원점 위치의 점 {int((~keep).sum())}개 제외")
        return cls(points[keep, :3] / norms[keep, None], points[keep, 3])

    @classmethod
    def from_frame(cls, frame: FrameGrid, cells: Sequence[int]) -> 'ObservationSet':
        """프레임의 행 우선 셀 인덱스로부터 생성"""
        flat = frame.points.reshape(-1, 4)
        return cls.from_points(flat[np.asarray(cells, dtype=np.int64)])

    def subset(self, indices) -> 'ObservationSet':
        indices = np.asarray(indices, dtype=np.int64)
        return ObservationSet(self.directions_A[indices], self.dopplers_V[indices])


@dataclass(eq=False)
class VelocityEstimate:
    """속도 추정 결과 (센서 좌표계)"""
    velocity: np.ndarray
    residual_rms: float
    sample_count: int
    condition_flag: str = WELL_CONDITIONED

    @property
    def well_conditioned(self) -> bool:
        return self.condition_flag == WELL_CONDITIONED

    def to_dict(self) -> dict:
        return {
            'velocity': [float(a) for a in self.velocity],
            'residual_rms': float(self.residual_rms),
            'sample_count': int(self.sample_count),
            'condition_flag': self.condition_flag
        }


class LeastSquaresSolution(NamedTuple):
    x: np.ndarray
    residual_rms: float
    condition_flag: str
    rank: int
    singular_values: np.ndarray


@dataclass(eq=False)
class FrameVelocities:
    """
    한 프레임의 속도 추정 결과

    objects 는 클러스터 번호 → 추정값, failures 는 클러스터 번호 → 실패 사유
    """
    ego: Optional[VelocityEstimate]
    objects: Dict[int, VelocityEstimate] = field(default_factory=dict)
    failures: Dict[int, str] = field(default_factory=dict)


def downsample(cells, max_n: int, rng_seed: int = 0) -> np.ndarray:
    """
    최대 max_n 개를 비복원 무작위 추출 (seed 고정 시 항상 같은 결과)

    Parameters:
        cells: 셀 인덱스 (또는 임의 원소) 목록
        max_n: 최대 개수, 1 이상
        rng_seed: 난수 seed

    Returns:
        len(cells) ≤ max_n 이면 입력 그대로, 아니면 원래 순서를 유지한 부분집합

    Example:
        >>> picked = downsample(np.arange(1000), 200, rng_seed=7)
    """
    if max_n < 1:
        raise ValueError(f"max_n은 1 이상이어야 합니다: {max_n}")
    cells = np.asarray(cells)
    if len(cells) <= max_n:
        return cells
    rng = np.random.default_rng(rng_seed)
    picked = np.sort(rng.choice(len(cells), size=max_n, replace=False))
    return cells[picked]


def solve_linear_ls(A, b) -> LeastSquaresSolution:
    """
    ‖Ax − b‖₂ 최소화 (SVD 기반 gelsd, 정규방정식 사용 안 함)

    최대 특이값 대비 1e-10 미만인 특이값은 0으로 보고, 수치 rank 가 3 미만이면
    최소 노름 해와 함께 rank_deficient 를 표시한다.

    Parameters:
        A: n×3 행렬
        b: n 벡터

    Returns:
        LeastSquaresSolution(x, residual_rms, condition_flag, rank, singular_values)

    Example:
        >>> solve_linear_ls(np.eye(3), [-1.0, 0.0, 0.0]).x
        array([-1.,  0.,  0.])
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if A.ndim != 2 or A.shape[0] != len(b):
        raise ValueError(f"A {A.shape}와 b {b.shape}의 크기가 맞지 않습니다")
    if len(b) < 1:
        raise InsufficientPointsError("관측이 하나도 없습니다")

    x, _, rank, singular_values = linalg.lstsq(A, b, cond=RANK_TOLERANCE, lapack_driver='gelsd')
    residual = A @ x - b
    residual_rms = float(np.linalg.norm(residual) / np.sqrt(len(b)))
    flag = WELL_CONDITIONED if rank >= A.shape[1] else RANK_DEFICIENT
    return LeastSquaresSolution(x, residual_rms, flag, int(rank), singular_values)


def _prepare(observations: ObservationSet, max_n: int, rng_seed: int) -> ObservationSet:
    if len(observations) < MIN_SAMPLES:
        raise InsufficientPointsError(f"점이 {len(observations)}개뿐입니다 (최소 {MIN_SAMPLES}개 필요)")
    if max_n < MIN_SAMPLES:
        raise ValueError(f"max_n은 {MIN_SAMPLES} 이상이어야 합니다: {max_n}")
    picked = downsample(np.arange(len(observations)), max_n, rng_seed)
    return observations.subset(picked)


def estimate_lidar_velocity(
    static_cells: ObservationSet,
    max_n: int = DEFAULT_NUM_TH_S,
    rng_seed: int = 0
) -> VelocityEstimate:
    """
    정지 배경의 도플러로 센서 자기 속도 V_self 추정

    정지점은 V = −A·V_self 를 만족하므로 ‖V + A·V_self‖ 를 최소화한다.

    Parameters:
        static_cells: 정지 클러스터 관측
        max_n: 다운샘플 상한 (num_th_s)
        rng_seed: 다운샘플 seed

    Returns:
        VelocityEstimate

    Raises:
        InsufficientPointsError: 점이 3개 미만

    Example:
        >>> obs = ObservationSet(np.eye(3), [-1.0, 0.0, 0.0])
        >>> estimate_lidar_velocity(obs).velocity
        array([1., 0., 0.])
    """
    obs = _prepare(static_cells, max_n, rng_seed)
    solution = solve_linear_ls(obs.directions_A, -obs.dopplers_V)
    if solution.condition_flag == RANK_DEFICIENT:
        logger.warning(f"자기 속도 추정이 rank 부족입니다 (rank={solution.rank})")
    return VelocityEstimate(
        velocity=solution.x,
        residual_rms=solution.residual_rms,
        sample_count=len(obs),
        condition_flag=solution.condition_flag
    )


def estimate_object_velocity(
    cluster_cells: ObservationSet,
    v_self,
    max_n: int = DEFAULT_NUM_TH_M,
    rng_seed: int = 0
) -> VelocityEstimate:
    """
    이동 클러스터의 도플러와 고정된 V_self 로 객체 속도 V_model 추정

    ‖V + A·V_self − A·V_model‖ 을 최소화한다.

    Parameters:
        cluster_cells: 이동 클러스터 관측
        v_self: 추정된 센서 속도 (센서 좌표계)
        max_n: 다운샘플 상한 (num_th_m)
        rng_seed: 다운샘플 seed

    Returns:
        VelocityEstimate (센서 좌표계의 절대 속도)
    """
    v_self = np.asarray(v_self, dtype=np.float64).reshape(3)
    obs = _prepare(cluster_cells, max_n, rng_seed)
    A = obs.directions_A
    solution = solve_linear_ls(A, obs.dopplers_V + A @ v_self)
    return VelocityEstimate(
        velocity=solution.x,
        residual_rms=solution.residual_rms,
        sample_count=len(obs),
        condition_flag=solution.condition_flag
    )


def cluster_seed(rng_seed: int, cluster_id: int) -> int:
    """루트 seed 와 클러스터 번호로부터 클러스터별 seed 유도"""
    return int(np.random.SeedSequence([int(rng_seed), int(cluster_id)]).generate_state(1)[0])


def estimate_velocities(
    frame: FrameGrid,
    segmentation: Segmentation,
    num_th_s: int = DEFAULT_NUM_TH_S,
    num_th_m: int = DEFAULT_NUM_TH_M,
    rng_seed: int = 0,
    max_workers: int = 1
) -> FrameVelocities:
    """
    프레임 전체 속도 추정: 자기 속도 → 각 이동 클러스터 속도

    클러스터별 seed 를 (rng_seed, 클러스터 번호)로 정하므로 max_workers 와
    무관하게 같은 결과가 나온다.

    Parameters:
        frame: 프레임
        segmentation: segment() 결과
        num_th_s: 정지 배경 다운샘플 상한
        num_th_m: 이동 클러스터 다운샘플 상한
        rng_seed: 루트 seed
        max_workers: 1 보다 크면 ThreadPoolExecutor 로 클러스터 병렬 처리

    Returns:
        FrameVelocities

    Raises:
        InsufficientPointsError: 정지 배경 점이 3개 미만
    """
    static_obs = ObservationSet.from_frame(frame, segmentation.static_cluster)
    ego = estimate_lidar_velocity(static_obs, num_th_s, cluster_seed(rng_seed, segmentation.static_id))
    result = FrameVelocities(ego=ego)

    moving_ids = segmentation.moving_ids
    clusters = segmentation.moving_clusters

    def _estimate(cluster_id, cells):
        if len(cells) < MIN_SAMPLES:
            return cluster_id, None, f"InsufficientPoints: {len(cells)}셀"
        obs = ObservationSet.from_frame(frame, cells)
        estimate = estimate_object_velocity(obs, ego.velocity, num_th_m, cluster_seed(rng_seed, cluster_id))
        return cluster_id, estimate, None

    if max_workers > 1 and len(clusters) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            outcomes = list(executor.map(_estimate, moving_ids, clusters))
    else:
        outcomes = [_estimate(k, cells) for k, cells in zip(moving_ids, clusters)]

    for cluster_id, estimate, failure in outcomes:
        if estimate is not None:
            result.objects[cluster_id] = estimate
        else:
            result.failures[cluster_id] = failure

    logger.debug(f"속도 추정 완료: 객체 {len(result.objects)}개, 건너뜀 {len(result.failures)}개")
    return result
