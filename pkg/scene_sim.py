#!/usr/bin/env python3
"""
FMCW LiDAR Scene Simulator
선언적 장면을 레이캐스팅하여 도플러 속도가 포함된 정렬(organized) 프레임을 생성
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterator, List, Optional

import numpy as np

logger = logging.getLogger(__name__)

PRESET_NAMES = ('intersection', 't_intersection', 'straight_road', 'turn_straight_road')

# 차량/보행자 반치수 [m]
CAR_HALF = (2.25, 0.9, 0.75)
TRUCK_HALF = (6.0, 1.25, 1.75)
PEDESTRIAN_HALF = (0.25, 0.25, 0.9)


class UnknownPresetError(ValueError):
    """등록되지 않은 장면 프리셋 이름"""


def rotation_from_yaw(yaw: float) -> np.ndarray:
    """
    센서 진행 방향(yaw)으로부터 world→sensor 회전 행렬 생성

    Parameters:
        yaw: 월드 z축 기준 센서 x축의 방위각 [rad]

    Returns:
        3×3 회전 행렬 R (v_sensor = R · v_world)
    """
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def _vec3(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name}는 3차원 벡터여야 합니다: {value}")
    return arr


@dataclass(frozen=True)
class SensorConfig:
    """
    FMCW LiDAR 센서 모델 파라미터 (각도는 degree)

    기본값: 120°×30° 시야, 0.2°×0.2° 분해능, 150 m, 10 Hz, 오차 0.025 m / 0.031 m/s
    """
    azimuth_fov: float = 120.0
    elevation_fov: float = 30.0
    azimuth_res: float = 0.2
    elevation_res: float = 0.2
    max_range: float = 150.0
    frame_rate: float = 10.0
    range_noise_sigma: float = 0.025
    velocity_noise_sigma: float = 0.031

    def __post_init__(self):
        for name in ('azimuth_fov', 'elevation_fov', 'azimuth_res', 'elevation_res',
                     'max_range', 'frame_rate'):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name}는 양수여야 합니다: {getattr(self, name)}")
        for name in ('range_noise_sigma', 'velocity_noise_sigma'):
            if getattr(self, name) < 0:
                raise ValueError(f"{name}는 음수일 수 없습니다: {getattr(self, name)}")
        for fov, res in (('azimuth_fov', 'azimuth_res'), ('elevation_fov', 'elevation_res')):
            bins = getattr(self, fov) / getattr(self, res)
            if abs(bins - round(bins)) > 1e-6 or round(bins) < 1:
                raise ValueError(f"{fov}/{res}가 정수 격자를 만들지 않습니다: {bins}")

    @property
    def rows(self) -> int:
        return int(round(self.elevation_fov / self.elevation_res))

    @property
    def cols(self) -> int:
        return int(round(self.azimuth_fov / self.azimuth_res))

    @property
    def angular_res_rad(self) -> float:
        """인접 빔 사이 최대 각도 [rad]"""
        return float(np.deg2rad(max(self.azimuth_res, self.elevation_res)))

    @cached_property
    def azimuths(self) -> np.ndarray:
        # 0번 열이 가장 왼쪽(+y 방향)
        return np.deg2rad(self.azimuth_fov / 2 - (np.arange(self.cols) + 0.5) * self.azimuth_res)

    @cached_property
    def elevations(self) -> np.ndarray:
        # 0번 행이 가장 위쪽
        return np.deg2rad(self.elevation_fov / 2 - (np.arange(self.rows) + 0.5) * self.elevation_res)

    @cached_property
    def ray_grid(self) -> np.ndarray:
        """(rows, cols, 3) 센서 좌표계 단위 광선 벡터"""
        az, el = np.meshgrid(self.azimuths, self.elevations)
        return ray_direction(az, el)

    def to_dict(self) -> Dict[str, float]:
        return {name: float(getattr(self, name)) for name in SENSOR_FIELDS}

    @classmethod
    def from_dict(cls, data: Dict) -> 'SensorConfig':
        unknown = set(data) - set(SENSOR_FIELDS)
        if unknown:
            raise ValueError(f"알 수 없는 센서 설정 항목: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


SENSOR_FIELDS = (
    'azimuth_fov', 'elevation_fov', 'azimuth_res', 'elevation_res',
    'max_range', 'frame_rate', 'range_noise_sigma', 'velocity_noise_sigma'
)


@dataclass(eq=False)
class Pose:
    """센서 위치(월드)와 world→sensor 회전 행렬"""
    position: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        self.position = _vec3(self.position, 'position')
        self.rotation = np.asarray(self.rotation, dtype=np.float64)
        if self.rotation.shape != (3, 3):
            raise ValueError(f"rotation은 3×3 행렬이어야 합니다: {self.rotation.shape}")
        if (not np.allclose(self.rotation @ self.rotation.T, np.eye(3), atol=1e-9)
                or abs(np.linalg.det(self.rotation) - 1.0) > 1e-9):
            raise ValueError("rotation은 SO(3)에 속해야 합니다 (직교, det=+1)")


@dataclass(eq=False)
class RigidObject:
    """
    yaw 회전을 갖는 박스 형태의 강체

    Parameters:
        id: 장면 내 고유 번호 (1 이상, 0은 정지 배경/지면)
        center: 박스 중심 [m]
        half_extents: 반치수 [m]
        yaw: 박스 yaw [rad]
        velocity_world: 월드 좌표계 속도 [m/s], 프레임 내 일정
    """
    id: int
    center: np.ndarray
    half_extents: np.ndarray
    yaw: float = 0.0
    velocity_world: np.ndarray = field(default_factory=lambda: np.zeros(3))
    label: str = ''

    def __post_init__(self):
        self.id = int(self.id)
        if self.id < 1:
            raise ValueError(f"객체 id는 1 이상이어야 합니다: {self.id}")
        self.center = _vec3(self.center, 'center')
        self.half_extents = _vec3(self.half_extents, 'half_extents')
        self.velocity_world = _vec3(self.velocity_world, 'velocity_world')
        self.yaw = float(self.yaw)
        if np.any(self.half_extents <= 0):
            raise ValueError(f"half_extents는 양수여야 합니다: {self.half_extents}")

    @property
    def is_moving(self) -> bool:
        return bool(np.linalg.norm(self.velocity_world) > 0)

    def to_dict(self) -> Dict:
        return {
            'id': self.id,
            'center': self.center.tolist(),
            'half_extents': self.half_extents.tolist(),
            'yaw': self.yaw,
            'velocity_world': self.velocity_world.tolist(),
            'label': self.label
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'RigidObject':
        return cls(
            id=data['id'],
            center=data['center'],
            half_extents=data['half_extents'],
            yaw=data.get('yaw', 0.0),
            velocity_world=data.get('velocity_world', [0.0, 0.0, 0.0]),
            label=data.get('label', '')
        )


@dataclass(eq=False)
class SceneSpec:
    """
    선언적 장면: 강체 목록, 지면, 센서 자세/속도/궤적

    ground_height 가 None 이면 지면이 없다.
    """
    objects: List[RigidObject] = field(default_factory=list)
    ground_height: Optional[float] = 0.0
    sensor_pose: Pose = field(default_factory=lambda: Pose(position=[0.0, 0.0, 1.8]))
    sensor_velocity_world: np.ndarray = field(default_factory=lambda: np.zeros(3))
    sensor_yaw_rate: float = 0.0
    name: str = ''

    def __post_init__(self):
        self.sensor_velocity_world = _vec3(self.sensor_velocity_world, 'sensor_velocity_world')
        ids = [obj.id for obj in self.objects]
        if len(ids) != len(set(ids)):
            raise ValueError(f"객체 id가 중복되었습니다: {ids}")

    @property
    def moving_objects(self) -> List[RigidObject]:
        return [obj for obj in self.objects if obj.is_moving]

    @property
    def truth_ego_velocity(self) -> np.ndarray:
        """센서 좌표계에서 본 센서 속도"""
        return self.sensor_pose.rotation @ self.sensor_velocity_world

    def advance(self, dt: float) -> 'SceneSpec':
        """
        dt 초 뒤의 장면 (등속 이동, 센서는 yaw_rate 로 회전)

        Example:
            >>> next_scene = scene.advance(0.1)
        """
        objects = [
            RigidObject(
                id=obj.id,
                center=obj.center + obj.velocity_world * dt,
                half_extents=obj.half_extents,
                yaw=obj.yaw,
                velocity_world=obj.velocity_world,
                label=obj.label
            )
            for obj in self.objects
        ]
        turn = self.sensor_yaw_rate * dt
        turn_world = rotation_from_yaw(turn).T
        rotation = self.sensor_pose.rotation @ turn_world.T
        return SceneSpec(
            objects=objects,
            ground_height=self.ground_height,
            sensor_pose=Pose(
                position=self.sensor_pose.position + self.sensor_velocity_world * dt,
                rotation=rotation
            ),
            sensor_velocity_world=turn_world @ self.sensor_velocity_world,
            sensor_yaw_rate=self.sensor_yaw_rate,
            name=self.name
        )

    def to_dict(self) -> Dict:
        return {
            'name': self.name,
            'ground_height': self.ground_height,
            'sensor_position': self.sensor_pose.position.tolist(),
            'sensor_rotation': self.sensor_pose.rotation.tolist(),
            'sensor_velocity_world': self.sensor_velocity_world.tolist(),
            'sensor_yaw_rate': self.sensor_yaw_rate,
            'objects': [obj.to_dict() for obj in self.objects]
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'SceneSpec':
        return cls(
            objects=[RigidObject.from_dict(o) for o in data.get('objects', [])],
            ground_height=data.get('ground_height', 0.0),
            sensor_pose=Pose(
                position=data.get('sensor_position', [0.0, 0.0, 1.8]),
                rotation=data.get('sensor_rotation', np.eye(3).tolist())
            ),
            sensor_velocity_world=data.get('sensor_velocity_world', [0.0, 0.0, 0.0]),
            sensor_yaw_rate=float(data.get('sensor_yaw_rate', 0.0)),
            name=data.get('name', '')
        )


@dataclass(frozen=True)
class DopplerPoint:
    """센서 좌표계 위치 [m]와 도플러 속도 [m/s]"""
    x: float
    y: float
    z: float
    v: float


@dataclass(frozen=True)
class CellRecord:
    """프레임 격자의 한 셀 (측정값 + 정답)"""
    point: DopplerPoint
    truth_object_id: int
    truth_velocity_sensor_frame: tuple
    truth_is_moving: bool


@dataclass(eq=False)
class FrameGrid:
    """
    (elevation × azimuth) 정렬 프레임

    빈 셀(반사 없음)의 값은 모두 0 으로 채워진다.
    """
    valid: np.ndarray
    points: np.ndarray
    truth_object_id: np.ndarray
    truth_velocity: np.ndarray
    truth_is_moving: np.ndarray
    truth_ego_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    sensor: Optional[SensorConfig] = None
    seed: int = 0
    frame_index: int = 0

    def __post_init__(self):
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.valid.ndim != 2:
            raise ValueError(f"valid는 2차원 격자여야 합니다: {self.valid.shape}")
        rows, cols = self.valid.shape
        expected = {
            'points': (rows, cols, 4),
            'truth_object_id': (rows, cols),
            'truth_velocity': (rows, cols, 3),
            'truth_is_moving': (rows, cols)
        }
        for name, shape in expected.items():
            if np.shape(getattr(self, name)) != shape:
                raise ValueError(f"{name} 크기 {np.shape(getattr(self, name))} != {shape}")
        self.points = np.asarray(self.points, dtype=np.float64)
        self.truth_object_id = np.asarray(self.truth_object_id, dtype=np.int32)
        self.truth_velocity = np.asarray(self.truth_velocity, dtype=np.float64)
        self.truth_is_moving = np.asarray(self.truth_is_moving, dtype=bool)
        self.truth_ego_velocity = _vec3(self.truth_ego_velocity, 'truth_ego_velocity')
        if self.sensor is not None and (self.sensor.rows, self.sensor.cols) != (rows, cols):
            raise ValueError(f"센서 격자 {self.sensor.rows}×{self.sensor.cols}와 프레임 {rows}×{cols}가 다릅니다")

    @classmethod
    def empty(cls, sensor: SensorConfig, seed: int = 0, frame_index: int = 0) -> 'FrameGrid':
        rows, cols = sensor.rows, sensor.cols
        return cls(
            valid=np.zeros((rows, cols), dtype=bool),
            points=np.zeros((rows, cols, 4)),
            truth_object_id=np.zeros((rows, cols), dtype=np.int32),
            truth_velocity=np.zeros((rows, cols, 3)),
            truth_is_moving=np.zeros((rows, cols), dtype=bool),
            sensor=sensor,
            seed=seed,
            frame_index=frame_index
        )

    @classmethod
    def from_dopplers(cls, dopplers, valid=None) -> 'FrameGrid':
        """
        도플러 값 격자만으로 프레임 생성 (위치는 0)

        Example:
            >>> frame = FrameGrid.from_dopplers([[0.0, 0.01, 0.02, 5.0, 5.01]])
        """
        dopplers = np.atleast_2d(np.asarray(dopplers, dtype=np.float64))
        if valid is None:
            valid = np.ones(dopplers.shape, dtype=bool)
        valid = np.asarray(valid, dtype=bool)
        rows, cols = dopplers.shape
        points = np.zeros((rows, cols, 4))
        points[..., 3] = np.where(valid, dopplers, 0.0)
        return cls(
            valid=valid,
            points=points,
            truth_object_id=np.zeros((rows, cols), dtype=np.int32),
            truth_velocity=np.zeros((rows, cols, 3)),
            truth_is_moving=np.zeros((rows, cols), dtype=bool)
        )

    @property
    def rows(self) -> int:
        return self.valid.shape[0]

    @property
    def cols(self) -> int:
        return self.valid.shape[1]

    @property
    def num_valid(self) -> int:
        return int(np.count_nonzero(self.valid))

    @property
    def dopplers(self) -> np.ndarray:
        return self.points[..., 3]

    def cell(self, row: int, col: int) -> Optional[CellRecord]:
        if not self.valid[row, col]:
            return None
        x, y, z, v = (float(a) for a in self.points[row, col])
        return CellRecord(
            point=DopplerPoint(x, y, z, v),
            truth_object_id=int(self.truth_object_id[row, col]),
            truth_velocity_sensor_frame=tuple(float(a) for a in self.truth_velocity[row, col]),
            truth_is_moving=bool(self.truth_is_moving[row, col])
        )

    @property
    def cells(self) -> List[Optional[CellRecord]]:
        """행 우선 순서의 셀 목록"""
        return [self.cell(r, c) for r in range(self.rows) for c in range(self.cols)]


def ray_direction(azimuth, elevation) -> np.ndarray:
    """
    방위각/고각으로부터 센서 좌표계 단위 광선 벡터 (ISO: x 전방, y 좌측, z 상방)

    Parameters:
        azimuth: 방위각 [rad], +y 방향이 양수 (배열 가능)
        elevation: 고각 [rad], +z 방향이 양수 (배열 가능)

    Returns:
        (..., 3) 단위 벡터

    Example:
        >>> ray_direction(0.0, 0.0)
        array([1., 0., 0.])
    """
    azimuth = np.asarray(azimuth, dtype=np.float64)
    elevation = np.asarray(elevation, dtype=np.float64)
    cos_el = np.cos(elevation)
    return np.stack([cos_el * np.cos(azimuth), cos_el * np.sin(azimuth), np.sin(elevation)], axis=-1)


def doppler_velocity(e, v_point_world, v_lidar_world, R):
    """
    도플러 속도 v = e · R(V_point^W − V_lidar^W), 멀어지면 양수

    Parameters:
        e: 센서 좌표계 단위 광선 벡터 (3,) 또는 (N, 3)
        v_point_world: 점의 월드 속도 (3,) 또는 (N, 3)
        v_lidar_world: 센서의 월드 속도 (3,)
        R: world→sensor 회전 행렬

    Returns:
        도플러 속도 [m/s] (스칼라 또는 (N,))
    """
    e = np.asarray(e, dtype=np.float64)
    relative = np.asarray(v_point_world, dtype=np.float64) - np.asarray(v_lidar_world, dtype=np.float64)
    relative_sensor = relative @ np.asarray(R, dtype=np.float64).T
    result = np.sum(e * relative_sensor, axis=-1)
    return float(result) if np.ndim(result) == 0 else result


def _ray_box_distance(origin: np.ndarray, directions: np.ndarray, obj: RigidObject) -> np.ndarray:
    """slab 방식 광선-박스 교차 거리 (교차 없으면 inf)"""
    c, s = np.cos(obj.yaw), np.sin(obj.yaw)
    to_local = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    p_local = to_local @ (origin - obj.center)
    d_local = directions @ to_local.T
    h = obj.half_extents

    with np.errstate(divide='ignore', invalid='ignore'):
        inv = 1.0 / d_local
        t1 = (-h - p_local) * inv
        t2 = (h - p_local) * inv
    t_min = np.minimum(t1, t2)
    t_max = np.maximum(t1, t2)
    # 슬랩 경계에 정확히 놓인 축은 0*inf=nan
    t_min = np.where(np.isnan(t_min), -np.inf, t_min)
    t_max = np.where(np.isnan(t_max), np.inf, t_max)

    t_near = t_min.max(axis=1)
    t_far = t_max.min(axis=1)
    hit = (t_near <= t_far) & (t_near > 0)
    return np.where(hit, t_near, np.inf)


def cast_frame(scene: SceneSpec, sensor: SensorConfig, rng_seed: int, frame_index: int = 0) -> FrameGrid:
    """
    장면을 레이캐스팅하여 도플러 프레임 생성

    각 셀은 max_range 이내에서 가장 가까운 박스/지면 교차점을 가진다.
    거리 잡음은 광선 방향으로, 도플러 잡음은 가산 가우시안으로 넣고
    정답 필드는 잡음 없이 채운다. 잡음은 PCG64 (numpy default_rng)에서
    행 우선 셀 순서로 한 번씩 뽑으므로 같은 seed 는 같은 프레임을 만든다.

    Parameters:
        scene: 장면
        sensor: 센서 설정
        rng_seed: 잡음 seed
        frame_index: 프레임 번호 (기록용)

    Returns:
        FrameGrid (기하가 없으면 모든 셀이 빈 격자)

    Example:
        >>> frame = cast_frame(scene_preset('straight_road'), SensorConfig(), rng_seed=0)
    """
    rows, cols = sensor.rows, sensor.cols
    n_cells = rows * cols
    R = scene.sensor_pose.rotation
    origin = scene.sensor_pose.position

    directions = sensor.ray_grid.reshape(-1, 3)
    directions_world = directions @ R

    best_t = np.full(n_cells, np.inf)
    best_id = np.zeros(n_cells, dtype=np.int32)
    best_velocity = np.zeros((n_cells, 3))

    if scene.ground_height is not None:
        dz = directions_world[:, 2]
        with np.errstate(divide='ignore', invalid='ignore'):
            t_ground = (scene.ground_height - origin[2]) / dz
        best_t = np.where(np.isfinite(t_ground) & (t_ground > 0), t_ground, np.inf)

    for obj in scene.objects:
        t_obj = _ray_box_distance(origin, directions_world, obj)
        closer = t_obj < best_t
        best_t = np.where(closer, t_obj, best_t)
        best_id[closer] = obj.id
        best_velocity[closer] = obj.velocity_world

    rng = np.random.default_rng(rng_seed)
    range_noise = rng.normal(0.0, sensor.range_noise_sigma, n_cells)
    doppler_noise = rng.normal(0.0, sensor.velocity_noise_sigma, n_cells)

    # 유효 여부는 잡음이 더해진 거리로 판정 (0 < |p| <= max_range)
    noisy_t = best_t + range_noise
    valid = np.isfinite(best_t) & (noisy_t > 0) & (noisy_t <= sensor.max_range)
    distance = np.where(valid, noisy_t, 0.0)
    truth_doppler = doppler_velocity(directions, best_velocity, scene.sensor_velocity_world, R)

    points = np.zeros((n_cells, 4))
    points[:, :3] = directions * distance[:, None]
    points[:, 3] = np.where(valid, truth_doppler + doppler_noise, 0.0)

    truth_velocity = np.where(valid[:, None], best_velocity @ R.T, 0.0)
    truth_is_moving = valid & (np.linalg.norm(best_velocity, axis=1) > 0)
    truth_object_id = np.where(valid, best_id, 0).astype(np.int32)

    if not valid.any():
        logger.warning(f"빈 프레임 생성: 장면 '{scene.name}'에 시야 내 기하가 없습니다")

    frame = FrameGrid(
        valid=valid.reshape(rows, cols),
        points=points.reshape(rows, cols, 4),
        truth_object_id=truth_object_id.reshape(rows, cols),
        truth_velocity=truth_velocity.reshape(rows, cols, 3),
        truth_is_moving=truth_is_moving.reshape(rows, cols),
        truth_ego_velocity=scene.truth_ego_velocity,
        sensor=sensor,
        seed=int(rng_seed),
        frame_index=int(frame_index)
    )
    logger.debug(f"프레임 {frame_index} 생성 완료: 유효 셀 {frame.num_valid}/{n_cells}")
    return frame


def frame_seed(seed: int, frame_index: int) -> int:
    """루트 seed 와 프레임 번호로부터 프레임별 seed 유도"""
    return int(np.random.SeedSequence([int(seed), int(frame_index)]).generate_state(1)[0])


def simulate_sequence(
    scene: SceneSpec,
    sensor: SensorConfig,
    frames: int,
    seed: int = 0
) -> Iterator[FrameGrid]:
    """
    1/frame_rate 간격으로 장면을 진행시키며 프레임을 차례로 생성

    Example:
        >>> for frame in simulate_sequence(scene_preset('intersection'), SensorConfig(), 10, seed=1):
        ...     print(frame.num_valid)
    """
    dt = 1.0 / sensor.frame_rate
    current = scene
    for index in range(frames):
        yield cast_frame(current, sensor, frame_seed(seed, index), frame_index=index)
        current = current.advance(dt)


# 프리셋 장면

def _box(obj_id, x, y, half, yaw=0.0, speed=0.0, heading=None, label=''):
    heading = yaw if heading is None else heading
    velocity = [speed * np.cos(heading), speed * np.sin(heading), 0.0]
    return RigidObject(
        id=obj_id,
        center=[x, y, half[2]],
        half_extents=half,
        yaw=yaw,
        velocity_world=velocity,
        label=label
    )


def _building(obj_id, x, y, half_x, half_y, height):
    return _box(obj_id, x, y, (half_x, half_y, height / 2.0), label='building')


def _intersection() -> SceneSpec:
    # 교차 도로(x 18~45 m) 위 차량은 센서에서 멀어지는 방향으로만 움직인다
    objects = [
        _box(1, 18.0, -1.75, CAR_HALF, speed=8.0, label='car'),
        _box(2, 60.0, 1.75, CAR_HALF, yaw=np.pi, speed=7.0, label='car'),
        _box(3, 32.0, 12.0, CAR_HALF, yaw=np.pi / 2, speed=5.0, label='car'),
        _box(5, 36.0, -12.0, CAR_HALF, yaw=-np.pi / 2, speed=6.0, label='car'),
        _box(4, 12.0, 6.0, PEDESTRIAN_HALF, yaw=np.arctan2(6.0, 12.0), speed=1.4, label='pedestrian'),
        _building(10, 10.0, 22.0, 8.0, 6.0, 12.0),
        _building(11, 10.0, -22.0, 8.0, 6.0, 12.0),
        _building(12, 55.0, 22.0, 10.0, 6.0, 16.0),
        _building(13, 55.0, -22.0, 10.0, 6.0, 16.0),
        _building(14, 100.0, 0.0, 1.0, 40.0, 10.0),
    ]
    return SceneSpec(objects=objects, name='intersection')


def _t_intersection() -> SceneSpec:
    # 차량 1, 2 는 정면(방위각 0°)을 가로질러 사각지대를 지난다
    objects = [
        _box(1, 30.0, 14.0, CAR_HALF, yaw=-np.pi / 2, speed=8.0, label='car'),
        _box(2, 33.5, -26.0, CAR_HALF, yaw=np.pi / 2, speed=6.0, label='car'),
        _box(3, 30.0, 40.0, TRUCK_HALF, yaw=-np.pi / 2, speed=5.0, label='truck'),
        _building(10, 45.0, 0.0, 3.0, 45.0, 14.0),
        _building(11, 12.0, 14.0, 9.0, 4.0, 9.0),
        _building(12, 12.0, -14.0, 9.0, 4.0, 9.0),
    ]
    return SceneSpec(objects=objects, name='t_intersection')


def _straight_road() -> SceneSpec:
    # 모든 차량은 x 축과 평행하게 움직이고 10 초 안에 센서 옆을 지나지 않는다
    objects = [
        _box(1, 25.0, 0.0, CAR_HALF, speed=13.0, label='car'),
        _box(2, 40.0, 3.5, CAR_HALF, speed=11.0, label='car'),
        _box(3, 55.0, -3.5, TRUCK_HALF, speed=10.0, label='truck'),
        _box(4, 320.0, 7.0, CAR_HALF, yaw=np.pi, speed=12.0, label='car'),
    ]
    obj_id = 10
    for x in np.arange(20.0, 260.0, 40.0):
        for side in (1.0, -1.0):
            objects.append(_building(obj_id, float(x), side * 15.0, 15.0, 2.0, 8.0))
            obj_id += 1
    return SceneSpec(
        objects=objects,
        sensor_velocity_world=[12.0, 0.0, 0.0],
        name='straight_road'
    )


def _turn_straight_road() -> SceneSpec:
    # 센서는 반경 약 80 m 로 좌회전한다. 차량은 그 궤적 바깥쪽으로 멀어진다
    objects = [
        _box(1, 20.0, 2.0, CAR_HALF, yaw=0.5, speed=9.0, label='car'),
        _box(2, 30.0, -4.0, CAR_HALF, yaw=0.3, speed=9.0, label='car'),
        _box(4, 120.0, -32.0, TRUCK_HALF, yaw=np.pi, speed=8.0, label='truck'),
    ]
    obj_id = 10
    for x, y, hx, hy, height in ((15.0, 18.0, 10.0, 4.0, 10.0), (15.0, -25.0, 10.0, 4.0, 12.0),
                                 (45.0, 30.0, 8.0, 6.0, 14.0), (80.0, -10.0, 6.0, 15.0, 9.0),
                                 (60.0, 60.0, 12.0, 6.0, 15.0), (135.0, 20.0, 4.0, 30.0, 12.0)):
        objects.append(_building(obj_id, x, y, hx, hy, height))
        obj_id += 1
    return SceneSpec(
        objects=objects,
        sensor_velocity_world=[8.0, 0.0, 0.0],
        sensor_yaw_rate=0.1,
        name='turn_straight_road'
    )


_PRESETS = {
    'intersection': _intersection,
    't_intersection': _t_intersection,
    'straight_road': _straight_road,
    'turn_straight_road': _turn_straight_road,
}


def scene_preset(name: str) -> SceneSpec:
    """
    도로 유형별 합성 장면

    intersection / t_intersection 은 정지 센서, straight_road / turn_straight_road 는 이동 센서.

    Raises:
        UnknownPresetError: 알 수 없는 이름

    Example:
        >>> scene = scene_preset('t_intersection')
    """
    if name not in _PRESETS:
        raise UnknownPresetError(f"알 수 없는 프리셋: {name} (사용 가능: {', '.join(PRESET_NAMES)})")
    return _PRESETS[name]()
