#!/usr/bin/env python3
"""
Pipeline Run Configuration
실행 설정(RunConfig) 저장/로드/검증
"""

import json
import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union

from doppler_clustering import DEFAULT_MIN_CLUSTER_SIZE, ThresholdParams, derive_threshold
from fmcw_waveform import WaveformParams
from scene_sim import PRESET_NAMES, SensorConfig
from velocity_estimation import DEFAULT_NUM_TH_M, DEFAULT_NUM_TH_S, MIN_SAMPLES

logger = logging.getLogger(__name__)

CONFIG_SCHEMA = 'doppler-run-config/1'
OUTPUT_DIR_ENV = 'DOPPLER_OUTPUT_DIR'
# 임계값 θ 와 센서 각해상도의 허용 상대 차이 (0.0034 rad 와 0.2° 는 같은 값으로 본다)
THETA_TOLERANCE = 0.05


class InvalidConfigError(ValueError):
    """설정 값이 잘못된 경우 (field 에 첫 번째 문제 항목 이름)"""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class RunConfig:
    """
    파이프라인 실행 설정

    scene_file 이 있으면 preset 대신 사용한다. v_th 가 None 이면
    threshold 로부터 계산한다.
    """
    sensor: SensorConfig = field(default_factory=SensorConfig)
    threshold: ThresholdParams = field(default_factory=ThresholdParams)
    waveform: WaveformParams = field(default_factory=WaveformParams)
    v_th: Optional[float] = None
    num_th_s: int = DEFAULT_NUM_TH_S
    num_th_m: int = DEFAULT_NUM_TH_M
    min_cluster_size: int = DEFAULT_MIN_CLUSTER_SIZE
    seed: int = 0
    preset: str = 'intersection'
    scene_file: Optional[str] = None
    frames: int = 50
    warmup_frames: int = 3
    max_workers: int = 1
    output_dir: str = 'output'

    @property
    def effective_v_th(self) -> float:
        return self.v_th if self.v_th is not None else derive_threshold(self.threshold)

    def to_dict(self) -> Dict[str, Any]:
        data = {'schema': CONFIG_SCHEMA}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in ('sensor', 'threshold', 'waveform'):
                value = value.to_dict()
            data[f.name] = value
        return data

    def with_overrides(self, **overrides) -> 'RunConfig':
        """None 이 아닌 값만 덮어쓴 새 설정"""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return validate_config(replace(self, **changes)) if changes else self


_SCALAR_FIELDS = {f.name for f in fields(RunConfig)} - {'sensor', 'threshold', 'waveform'}


def _theta_matches(theta: float, sensor: SensorConfig) -> bool:
    resolution = sensor.angular_res_rad
    return abs(theta - resolution) <= THETA_TOLERANCE * resolution


def threshold_for_sensor(sensor: SensorConfig, data: Optional[Dict[str, Any]] = None) -> ThresholdParams:
    """
    센서에 맞는 임계값 파라미터

    angular_res_theta 가 주어지지 않았고 기본값이 센서 각해상도와 맞지 않으면
    θ 와 σ_v 를 센서에서 가져온다.

    Example:
        >>> threshold_for_sensor(SensorConfig(azimuth_res=0.1, elevation_res=0.1)).angular_res_theta
        0.0017453292519943296
    """
    params = dict(data or {})
    if 'angular_res_theta' in params or _theta_matches(ThresholdParams.angular_res_theta, sensor):
        return ThresholdParams(**params)
    logger.debug(f"임계값 θ 를 센서 각해상도에서 유도: {sensor.angular_res_rad:.6f} rad")
    return ThresholdParams.from_sensor(sensor, **params)


def validate_config(config: RunConfig) -> RunConfig:
    """
    설정 검증 (첫 번째 문제 항목을 InvalidConfigError.field 로 보고)

    Raises:
        InvalidConfigError
    """
    if config.num_th_s < MIN_SAMPLES:
        raise InvalidConfigError('num_th_s', f"{MIN_SAMPLES} 이상이어야 합니다: {config.num_th_s}")
    if config.num_th_m < MIN_SAMPLES:
        raise InvalidConfigError('num_th_m', f"{MIN_SAMPLES} 이상이어야 합니다: {config.num_th_m}")
    if config.min_cluster_size < 1:
        raise InvalidConfigError('min_cluster_size', f"1 이상이어야 합니다: {config.min_cluster_size}")
    if config.seed < 0:
        raise InvalidConfigError('seed', f"음수일 수 없습니다: {config.seed}")
    if config.frames < 1:
        raise InvalidConfigError('frames', f"1 이상이어야 합니다: {config.frames}")
    if config.warmup_frames < 0:
        raise InvalidConfigError('warmup_frames', f"음수일 수 없습니다: {config.warmup_frames}")
    if config.max_workers < 1:
        raise InvalidConfigError('max_workers', f"1 이상이어야 합니다: {config.max_workers}")
    if config.v_th is not None and not config.v_th > 0:
        raise InvalidConfigError('v_th', f"양수여야 합니다: {config.v_th}")
    if config.v_th is None and not _theta_matches(config.threshold.angular_res_theta, config.sensor):
        raise InvalidConfigError(
            'threshold',
            f"angular_res_theta {config.threshold.angular_res_theta}가 센서 각해상도 "
            f"{config.sensor.angular_res_rad:.6f} rad 와 맞지 않습니다"
        )
    if config.scene_file is not None:
        if not os.path.exists(config.scene_file):
            raise InvalidConfigError('scene_file', f"파일을 찾을 수 없습니다: {config.scene_file}")
    elif config.preset not in PRESET_NAMES:
        raise InvalidConfigError('preset', f"알 수 없는 프리셋: {config.preset} (사용 가능: {', '.join(PRESET_NAMES)})")
    return config


def config_from_dict(data: Dict[str, Any]) -> RunConfig:
    """
    딕셔너리에서 설정 생성

    Raises:
        InvalidConfigError: schema 불일치, 알 수 없는 항목, 잘못된 값
    """
    data = dict(data)
    schema = data.pop('schema', CONFIG_SCHEMA)
    if schema != CONFIG_SCHEMA:
        raise InvalidConfigError('schema', f"지원하지 않는 schema: {schema} (기대값 {CONFIG_SCHEMA})")

    kwargs: Dict[str, Any] = {}
    nested = {
        'sensor': SensorConfig.from_dict,
        'waveform': WaveformParams.from_dict,
    }
    for name, value in data.items():
        if name in nested:
            if not isinstance(value, dict):
                raise InvalidConfigError(name, f"객체여야 합니다: {value!r}")
            try:
                kwargs[name] = nested[name](value)
            except (TypeError, ValueError) as e:
                raise InvalidConfigError(name, str(e)) from e
        elif name == 'threshold':
            continue
        elif name in _SCALAR_FIELDS:
            kwargs[name] = value
        else:
            raise InvalidConfigError(name, "알 수 없는 설정 항목입니다")

    threshold = data.get('threshold', {})
    if not isinstance(threshold, dict):
        raise InvalidConfigError('threshold', f"객체여야 합니다: {threshold!r}")
    try:
        kwargs['threshold'] = threshold_for_sensor(kwargs.get('sensor', SensorConfig()), threshold)
    except (TypeError, ValueError) as e:
        raise InvalidConfigError('threshold', str(e)) from e

    for name in ('num_th_s', 'num_th_m', 'min_cluster_size', 'seed', 'frames', 'warmup_frames', 'max_workers'):
        if name in kwargs and (isinstance(kwargs[name], bool) or not isinstance(kwargs[name], int)):
            raise InvalidConfigError(name, f"정수여야 합니다: {kwargs[name]!r}")

    return validate_config(RunConfig(**kwargs))


def save_config(config: RunConfig, filepath: Union[str, Path]) -> None:
    """실행 설정 저장"""
    with open(filepath, 'w') as f:
        json.dump(config.to_dict(), f, indent=2)
    logger.info(f"설정 저장: {filepath}")


def load_config(filepath: Union[str, Path]) -> RunConfig:
    """
    실행 설정 로드

    Raises:
        InvalidConfigError: 파일이 없거나 JSON 이 아니거나 값이 잘못된 경우

    Example:
        >>> config = load_config('run.json')
        >>> config.num_th_s
        1000
    """
    if not os.path.exists(filepath):
        raise InvalidConfigError('config', f"파일을 찾을 수 없습니다: {filepath}")
    with open(filepath, 'r') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidConfigError('config', f"JSON 해석 실패: {e}") from e
    if not isinstance(data, dict):
        raise InvalidConfigError('config', "최상위가 객체여야 합니다")
    config = config_from_dict(data)
    logger.info(f"설정 로드: {filepath}")
    return config


def resolve_output_dir(config: RunConfig, cli_out: Optional[str] = None) -> Path:
    """출력 디렉토리: --out > DOPPLER_OUTPUT_DIR > 설정 파일"""
    if cli_out:
        return Path(cli_out)
    env_value = os.environ.get(OUTPUT_DIR_ENV)
    if env_value:
        logger.debug(f"{OUTPUT_DIR_ENV} 사용: {env_value}")
        return Path(env_value)
    return Path(config.output_dir)


def config_summary(config: RunConfig) -> Dict[str, Any]:
    """매니페스트 기록용 설정 (정확히 재현 가능한 값만)"""
    summary = config.to_dict()
    summary['effective_v_th'] = config.effective_v_th
    return summary
