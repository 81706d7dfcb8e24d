#!/usr/bin/env python3
"""
Frame and Scene File I/O
정렬 프레임 바이너리 파일(FDV1), 장면 JSON, 무손실 CSV 내보내기
"""

import json
import logging
import os
import struct
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from scene_sim import SENSOR_FIELDS, FrameGrid, SceneSpec, SensorConfig

logger = logging.getLogger(__name__)

MAGIC = b'FDV1'
SCENE_SCHEMA = 'doppler-scene/1'

# magic, rows, cols, frame_index, seed
HEADER_STRUCT = struct.Struct('<4sIIIQ')
SENSOR_STRUCT = struct.Struct('<' + 'd' * len(SENSOR_FIELDS))
EGO_STRUCT = struct.Struct('<3d')
HEADER_SIZE = HEADER_STRUCT.size + SENSOR_STRUCT.size + EGO_STRUCT.size

RECORD_DTYPE = np.dtype([
    ('valid', '<u1'),
    ('x', '<f8'),
    ('y', '<f8'),
    ('z', '<f8'),
    ('v', '<f8'),
    ('object_id', '<i4'),
    ('truth_vx', '<f8'),
    ('truth_vy', '<f8'),
    ('truth_vz', '<f8'),
    ('moving', '<u1'),
])
RECORD_SIZE = RECORD_DTYPE.itemsize  # 62

CSV_COLUMNS = ['row', 'col', 'valid', 'x', 'y', 'z', 'v', 'object_id',
               'truth_vx', 'truth_vy', 'truth_vz', 'moving']

PathLike = Union[str, Path]


class FrameFormatError(RuntimeError):
    """프레임 파일의 magic, 크기, 헤더가 올바르지 않은 경우"""


class FrameIOError(RuntimeError):
    """파일을 읽거나 쓸 수 없는 경우"""


def frame_to_bytes(frame: FrameGrid) -> bytes:
    """
    프레임을 FDV1 바이트열로 직렬화 (모든 실수는 리틀엔디언 float64)

    Raises:
        ValueError: 센서 설정이 없거나 seed 가 음수인 경우
    """
    if frame.sensor is None:
        raise ValueError("센서 설정이 없는 프레임은 저장할 수 없습니다")
    if frame.seed < 0 or frame.frame_index < 0:
        raise ValueError(f"seed/frame_index 는 음수일 수 없습니다: {frame.seed}, {frame.frame_index}")

    header = HEADER_STRUCT.pack(MAGIC, frame.rows, frame.cols, frame.frame_index, frame.seed)
    sensor = SENSOR_STRUCT.pack(*(getattr(frame.sensor, name) for name in SENSOR_FIELDS))
    ego = EGO_STRUCT.pack(*frame.truth_ego_velocity)

    records = np.zeros(frame.rows * frame.cols, dtype=RECORD_DTYPE)
    points = frame.points.reshape(-1, 4)
    truth = frame.truth_velocity.reshape(-1, 3)
    records['valid'] = frame.valid.ravel()
    for k, name in enumerate(('x', 'y', 'z', 'v')):
        records[name] = points[:, k]
    records['object_id'] = frame.truth_object_id.ravel()
    for k, name in enumerate(('truth_vx', 'truth_vy', 'truth_vz')):
        records[name] = truth[:, k]
    records['moving'] = frame.truth_is_moving.ravel()

    return header + sensor + ego + records.tobytes()


def frame_from_bytes(data: bytes) -> FrameGrid:
    """
    FDV1 바이트열을 프레임으로 역직렬화

    Raises:
        FrameFormatError: magic 불일치, 크기 불일치, 잘못된 헤더
    """
    if len(data) < HEADER_SIZE:
        raise FrameFormatError(f"헤더보다 짧은 파일입니다: {len(data)} < {HEADER_SIZE} bytes")

    magic, rows, cols, frame_index, seed = HEADER_STRUCT.unpack_from(data, 0)
    if magic != MAGIC:
        raise FrameFormatError(f"magic 불일치: {magic!r} (기대값 {MAGIC!r})")
    if rows <= 0 or cols <= 0:
        raise FrameFormatError(f"헤더의 격자 크기가 잘못되었습니다: {rows}×{cols}")

    expected = HEADER_SIZE + rows * cols * RECORD_SIZE
    if len(data) != expected:
        raise FrameFormatError(f"파일 크기 {len(data)} bytes != 기대값 {expected} bytes ({rows}×{cols})")

    sensor_values = SENSOR_STRUCT.unpack_from(data, HEADER_STRUCT.size)
    ego = EGO_STRUCT.unpack_from(data, HEADER_STRUCT.size + SENSOR_STRUCT.size)
    records = np.frombuffer(data, dtype=RECORD_DTYPE, offset=HEADER_SIZE)

    try:
        sensor = SensorConfig(**dict(zip(SENSOR_FIELDS, sensor_values)))
        return FrameGrid(
            valid=records['valid'].reshape(rows, cols).astype(bool),
            points=np.stack([records[name] for name in ('x', 'y', 'z', 'v')], axis=-1).reshape(rows, cols, 4),
            truth_object_id=records['object_id'].reshape(rows, cols),
            truth_velocity=np.stack(
                [records[name] for name in ('truth_vx', 'truth_vy', 'truth_vz')], axis=-1
            ).reshape(rows, cols, 3),
            truth_is_moving=records['moving'].reshape(rows, cols).astype(bool),
            truth_ego_velocity=np.array(ego),
            sensor=sensor,
            seed=int(seed),
            frame_index=int(frame_index)
        )
    except ValueError as e:
        raise FrameFormatError(f"헤더의 센서 설정이 프레임과 맞지 않습니다: {e}") from e


def write_frame(frame: FrameGrid, filepath: PathLike) -> Path:
    """
    프레임을 FDV1 파일로 저장

    Example:
        >>> write_frame(frame, 'frames/frame_0000.fdv')
    """
    filepath = Path(filepath)
    payload = frame_to_bytes(frame)
    try:
        filepath.parent.mkdir(parents=True, exist_ok=True)
        with open(filepath, 'wb') as f:
            f.write(payload)
    except OSError as e:
        raise FrameIOError(f"프레임 저장 실패: {filepath} ({e})") from e
    logger.debug(f"프레임 저장: {filepath} ({len(payload)} bytes)")
    return filepath


def read_frame(filepath: PathLike) -> FrameGrid:
    """
    FDV1 파일에서 프레임 로드

    Raises:
        FileNotFoundError: 파일이 없는 경우
        FrameFormatError: 형식이 맞지 않는 경우
        FrameIOError: 읽기 실패
    """
    if not os.path.exists(filepath):
        raise FileNotFoundError(f"파일을 찾을 수 없습니다: {filepath}")
    try:
        with open(filepath, 'rb') as f:
            data = f.read()
    except OSError as e:
        raise FrameIOError(f"프레임 읽기 실패: {filepath} ({e})") from e
    return frame_from_bytes(data)


def save_scene(scene: SceneSpec, filepath: PathLike) -> Path:
    """장면을 버전 표시가 있는 JSON 으로 저장"""
    filepath = Path(filepath)
    data = {'schema': SCENE_SCHEMA}
    data.update(scene.to_dict())
    try:
        filepath.parent.mkdir(parents=True, exist_ok=True)
        with open(filepath, 'w') as f:
            json.dump(data, f, indent=2)
    except OSError as e:
        raise FrameIOError(f"장면 저장 실패: {filepath} ({e})") from e
    logger.info(f"장면 저장: {filepath}")
    return filepath


def load_scene(filepath: PathLike) -> SceneSpec:
    """
    장면 JSON 로드

    Raises:
        FileNotFoundError: 파일이 없는 경우
        ValueError: schema 가 없거나 다른 경우, 내용이 잘못된 경우
    """
    if not os.path.exists(filepath):
        raise FileNotFoundError(f"파일을 찾을 수 없습니다: {filepath}")
    with open(filepath, 'r') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"장면 파일을 해석할 수 없습니다: {filepath} ({e})") from e

    schema = data.pop('schema', None)
    if schema != SCENE_SCHEMA:
        raise ValueError(f"지원하지 않는 장면 schema: {schema} (기대값 {SCENE_SCHEMA})")
    scene = SceneSpec.from_dict(data)
    logger.info(f"장면 로드: {filepath} (객체 {len(scene.objects)}개)")
    return scene


def frame_to_dataframe(frame: FrameGrid) -> pd.DataFrame:
    """셀 하나를 한 행으로 하는 표 (행 우선 순서)"""
    rows, cols = np.divmod(np.arange(frame.rows * frame.cols), frame.cols)
    points = frame.points.reshape(-1, 4)
    truth = frame.truth_velocity.reshape(-1, 3)
    return pd.DataFrame({
        'row': rows,
        'col': cols,
        'valid': frame.valid.ravel().astype(np.uint8),
        'x': points[:, 0],
        'y': points[:, 1],
        'z': points[:, 2],
        'v': points[:, 3],
        'object_id': frame.truth_object_id.ravel(),
        'truth_vx': truth[:, 0],
        'truth_vy': truth[:, 1],
        'truth_vz': truth[:, 2],
        'moving': frame.truth_is_moving.ravel().astype(np.uint8),
    }, columns=CSV_COLUMNS)


def export_frame_csv(frame: FrameGrid, filepath: PathLike, valid_only: bool = False) -> Path:
    """
    디버깅용 CSV 내보내기 (%.17g 로 float64 를 손실 없이 기록)

    Example:
        >>> export_frame_csv(read_frame('frame_0000.fdv'), 'frame_0000.csv', valid_only=True)
    """
    filepath = Path(filepath)
    df = frame_to_dataframe(frame)
    if valid_only:
        df = df[df['valid'] == 1]
    try:
        filepath.parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(filepath, index=False, float_format='%.17g')
    except OSError as e:
        raise FrameIOError(f"CSV 저장 실패: {filepath} ({e})") from e
    logger.info(f"CSV 저장: {filepath} ({len(df)}행)")
    return filepath
