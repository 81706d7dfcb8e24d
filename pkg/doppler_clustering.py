#!/usr/bin/env python3
"""
Doppler Velocity Clustering
도플러 속도 연속성 기반 영역 성장(region growing)으로 정지 배경과 이동 객체를 분리
"""

import logging
from collections import deque
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from scene_sim import FrameGrid, SensorConfig

logger = logging.getLogger(__name__)

DEFAULT_MIN_CLUSTER_SIZE = 5

# 8-연결 이웃 중 (아래, 오른쪽) 방향 절반. 나머지 절반은 대칭
_FORWARD_OFFSETS = ((0, 1), (1, -1), (1, 0), (1, 1))
_ALL_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


class EmptyFrameError(ValueError):
    """유효한 셀이 하나도 없는 프레임"""


class NoBlindZoneError(ValueError):
    """임계값이 목표 속도 이상이라 모든 방향이 사각지대인 경우"""


@dataclass(frozen=True)
class ThresholdParams:
    """
    같은 객체 위 인접 점의 도플러 차이 상한을 구하기 위한 파라미터

    Parameters:
        max_object_speed: 가정한 객체 최대 속력 [m/s]
        max_lidar_speed: 센서 최대 속력 [m/s]
        angular_res_theta: 인접 빔 간 각도 θ_res [rad]
        noise_sigma: 도플러 측정 잡음 σ_v [m/s]
        noise_k: 잡음 여유 배수
    """
    max_object_speed: float = 25.0
    max_lidar_speed: float = 25.0
    angular_res_theta: float = 0.0034
    noise_sigma: float = 0.031
    noise_k: float = 3.0

    def __post_init__(self):
        for name in ('max_object_speed', 'max_lidar_speed', 'angular_res_theta', 'noise_sigma', 'noise_k'):
            if getattr(self, name) < 0:
                raise ValueError(f"{name}는 음수일 수 없습니다: {getattr(self, name)}")

    @classmethod
    def from_sensor(cls, sensor: SensorConfig, **overrides) -> 'ThresholdParams':
        params = {
            'angular_res_theta': sensor.angular_res_rad,
            'noise_sigma': sensor.velocity_noise_sigma
        }
        params.update(overrides)
        return cls(**params)

    def to_dict(self) -> dict:
        return {
            'max_object_speed': self.max_object_speed,
            'max_lidar_speed': self.max_lidar_speed,
            'angular_res_theta': self.angular_res_theta,
            'noise_sigma': self.noise_sigma,
            'noise_k': self.noise_k
        }


@dataclass(frozen=True)
class BlindZone:
    """모션 방향 대비 광선 각도 φ 의 사각지대 구간 [deg]"""
    half_width_deg: float
    intervals: Tuple[Tuple[float, float], ...]


@dataclass(eq=False)
class Segmentation:
    """
    프레임 분할 결과 P = {P_s, P_m}

    labels 는 프레임과 같은 크기이며 빈 셀은 -1. 클러스터 번호는
    포함한 가장 작은 셀 인덱스 순으로 0부터 매긴다.
    """
    labels: np.ndarray
    static_id: int
    cluster_sizes: np.ndarray
    min_cluster_size: int = DEFAULT_MIN_CLUSTER_SIZE

    @property
    def num_clusters(self) -> int:
        return len(self.cluster_sizes)

    @property
    def moving_ids(self) -> List[int]:
        return [k for k in range(self.num_clusters) if k != self.static_id]

    def cluster_cells(self, cluster_id: int) -> np.ndarray:
        """클러스터에 속한 행 우선 셀 인덱스"""
        return np.flatnonzero(self.labels.ravel() == cluster_id)

    @property
    def static_cluster(self) -> np.ndarray:
        return self.cluster_cells(self.static_id)

    @property
    def moving_clusters(self) -> List[np.ndarray]:
        flat = self.labels.ravel()
        order = np.argsort(flat, kind='stable')
        bounds = np.searchsorted(flat[order], np.arange(self.num_clusters + 1))
        return [order[bounds[k]:bounds[k + 1]] for k in self.moving_ids]

    @property
    def small_cluster_ids(self) -> List[int]:
        """속도 추정이 불안정한 작은 이동 클러스터"""
        return [k for k in self.moving_ids if self.cluster_sizes[k] < self.min_cluster_size]

    @property
    def motion_mask(self) -> np.ndarray:
        """이동 클러스터에 속한 셀 (빈 셀과 정지 클러스터는 False)"""
        return (self.labels >= 0) & (self.labels != self.static_id)


def derive_threshold(p: ThresholdParams) -> float:
    """
    도플러 연속성 임계값 v_th = (‖v_model‖ + ‖v_lidar‖)·θ_res + k·√2·σ_v

    √2 는 서로 독립인 두 잡음 측정값의 차이를 반영한다.

    Example:
        >>> derive_threshold(ThresholdParams(25, 25, 0.0034, 0.0, 0.0))
        0.17
    """
    geometric = (p.max_object_speed + p.max_lidar_speed) * p.angular_res_theta
    return geometric + p.noise_k * np.sqrt(2.0) * p.noise_sigma


DEFAULT_V_TH = derive_threshold(ThresholdParams())


def blind_zone(target_speed: float, v_th: float) -> BlindZone:
    """
    target_speed 로 움직이는 객체가 정지 배경과 구분되지 않는 광선 각도 구간

    {φ : target_speed·|cos φ| < v_th} = [90°−δ, 90°+δ] ∪ [−90°−δ, −90°+δ]

    Parameters:
        target_speed: 객체 속력 [m/s]
        v_th: 임계값 [m/s]

    Returns:
        BlindZone (v_th = 0 이면 빈 구간)

    Raises:
        NoBlindZoneError: v_th ≥ target_speed (전 방향 사각지대)

    Example:
        >>> blind_zone(5.0, 0.17).intervals
        ((-91.95..., -88.05...), (88.05..., 91.95...))
    """
    if target_speed <= 0:
        raise ValueError(f"target_speed는 양수여야 합니다: {target_speed}")
    if v_th < 0:
        raise ValueError(f"v_th는 음수일 수 없습니다: {v_th}")
    if v_th >= target_speed:
        raise NoBlindZoneError(
            f"임계값 {v_th} m/s가 목표 속도 {target_speed} m/s 이상이라 모든 방향이 사각지대입니다"
        )
    delta = 90.0 - float(np.degrees(np.arccos(v_th / target_speed)))
    if delta <= 0:
        return BlindZone(half_width_deg=0.0, intervals=())
    return BlindZone(
        half_width_deg=delta,
        intervals=((-90.0 - delta, -90.0 + delta), (90.0 - delta, 90.0 + delta))
    )


def in_blind_zone(directions, velocity, v_th: float, margin: float = 0.0) -> np.ndarray:
    """
    광선 방향에서 객체의 도플러 대비 |e·v| 가 v_th + margin 보다 작은지

    Parameters:
        directions: 센서 좌표계 단위 광선 (N, 3)
        velocity: 객체의 절대 속도 (센서 좌표계)
        v_th: 임계값 [m/s]
        margin: 추가 여유 (센서 이동에 따른 인접 셀 차이 등)
    """
    contrast = np.abs(np.asarray(directions, dtype=np.float64) @ np.asarray(velocity, dtype=np.float64))
    return contrast < v_th + margin


def _edge_list(frame: FrameGrid, v_th: float) -> Tuple[np.ndarray, np.ndarray]:
    """|Δv| < v_th 인 8-연결 이웃 쌍 (행 우선 인덱스)"""
    rows, cols = frame.rows, frame.cols
    index = np.arange(rows * cols).reshape(rows, cols)
    v = frame.dopplers
    valid = frame.valid
    heads, tails = [], []

    for dr, dc in _FORWARD_OFFSETS:
        r0, r1 = 0, rows - dr
        c0, c1 = max(0, -dc), cols - max(0, dc)
        if r1 <= r0 or c1 <= c0:
            continue
        a = (slice(r0, r1), slice(c0, c1))
        b = (slice(r0 + dr, r1 + dr), slice(c0 + dc, c1 + dc))
        joined = valid[a] & valid[b] & (np.abs(v[a] - v[b]) < v_th)
        heads.append(index[a][joined])
        tails.append(index[b][joined])

    return np.concatenate(heads) if heads else np.empty(0, int), np.concatenate(tails) if tails else np.empty(0, int)


def _canonical_segmentation(raw_labels: np.ndarray, valid: np.ndarray, min_cluster_size: int) -> Segmentation:
    """임의 번호의 연결 요소를 가장 작은 셀 인덱스 순서로 다시 번호 매김"""
    flat_valid = valid.ravel()
    valid_idx = np.flatnonzero(flat_valid)
    comp = raw_labels.ravel()[valid_idx]

    # np.unique 의 return_index 는 각 요소가 처음 나타나는 (가장 작은) 셀 위치
    uniq, first_pos, inverse = np.unique(comp, return_index=True, return_inverse=True)
    order = np.argsort(first_pos, kind='stable')
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    canonical = rank[inverse]

    labels = np.full(flat_valid.shape, -1, dtype=np.int64)
    labels[valid_idx] = canonical
    sizes = np.bincount(canonical, minlength=len(uniq))

    # 크기가 같으면 번호(=가장 작은 셀 인덱스)가 작은 쪽이 정지 클러스터
    static_id = int(np.argmax(sizes))
    return Segmentation(
        labels=labels.reshape(valid.shape),
        static_id=static_id,
        cluster_sizes=sizes,
        min_cluster_size=min_cluster_size
    )


def segment(frame: FrameGrid, v_th: float = DEFAULT_V_TH, min_cluster_size: int = DEFAULT_MIN_CLUSTER_SIZE) -> Segmentation:
    """
    도플러 연속성 기반 영역 성장

    인접한(8-연결) 두 유효 셀은 |v_a − v_b| < v_th 일 때 같은 클러스터가 된다.
    가장 큰 클러스터가 정지 배경, 나머지가 이동 객체이다. 임계값 그래프의
    연결 요소를 한 번의 순회로 구하므로 분할 결과는 순회 순서와 무관하다.

    Parameters:
        frame: 정렬 프레임
        v_th: 임계값 [m/s], 양수
        min_cluster_size: 이보다 작은 이동 클러스터는 small_cluster_ids 로 표시

    Returns:
        Segmentation

    Raises:
        EmptyFrameError: 유효 셀이 없는 경우

    Example:
        >>> seg = segment(FrameGrid.from_dopplers([[0.0, 0.01, 0.02, 5.0, 5.01]]), v_th=0.2)
        >>> seg.static_cluster, seg.moving_clusters
        (array([0, 1, 2]), [array([3, 4])])
    """
    if not v_th > 0:
        raise ValueError(f"v_th는 양수여야 합니다: {v_th}")
    if frame.num_valid == 0:
        raise EmptyFrameError("유효한 셀이 없는 프레임입니다")

    n_cells = frame.rows * frame.cols
    heads, tails = _edge_list(frame, v_th)
    graph = sparse.coo_matrix(
        (np.ones(len(heads), dtype=np.int8), (heads, tails)),
        shape=(n_cells, n_cells)
    ).tocsr()
    _, raw_labels = connected_components(graph, directed=False)

    seg = _canonical_segmentation(raw_labels, frame.valid, min_cluster_size)
    logger.debug(
        f"분할 완료: 유효 셀 {frame.num_valid}, 클러스터 {seg.num_clusters}개, "
        f"정지 배경 {seg.cluster_sizes[seg.static_id]}셀"
    )
    return seg


def grow_regions(frame: FrameGrid, v_th: float = DEFAULT_V_TH, min_cluster_size: int = DEFAULT_MIN_CLUSTER_SIZE) -> Segmentation:
    """
    큐 기반 영역 성장을 그대로 따라가는 참조 구현 (작은 격자용)

    첫 번째 유효 셀에서 시작해 성장이 멈추면 처리되지 않은 다음 유효 셀에서
    새 클러스터를 시작한다. segment() 와 같은 분할을 돌려준다.
    """
    if not v_th > 0:
        raise ValueError(f"v_th는 양수여야 합니다: {v_th}")
    if frame.num_valid == 0:
        raise EmptyFrameError("유효한 셀이 없는 프레임입니다")

    rows, cols = frame.rows, frame.cols
    v = frame.dopplers
    valid = frame.valid
    labels = np.full((rows, cols), -1, dtype=np.int64)
    k = -1

    for seed_r in range(rows):
        for seed_c in range(cols):
            if not valid[seed_r, seed_c] or labels[seed_r, seed_c] >= 0:
                continue
            k += 1
            labels[seed_r, seed_c] = k
            queue = deque([(seed_r, seed_c)])
            while queue:
                r, c = queue.popleft()
                for dr, dc in _ALL_OFFSETS:
                    nr, nc = r + dr, c + dc
                    if not (0 <= nr < rows and 0 <= nc < cols):
                        continue
                    if valid[nr, nc] and labels[nr, nc] < 0 and abs(v[nr, nc] - v[r, c]) < v_th:
                        labels[nr, nc] = k
                        queue.append((nr, nc))

    return _canonical_segmentation(labels, valid, min_cluster_size)


def motion_labels(seg: Segmentation, valid: Optional[np.ndarray] = None) -> np.ndarray:
    """유효 셀에 대한 이동(True)/정지(False) 예측 (행 우선)"""
    mask = seg.motion_mask.ravel()
    if valid is None:
        valid = seg.labels >= 0
    return mask[np.asarray(valid).ravel()]
