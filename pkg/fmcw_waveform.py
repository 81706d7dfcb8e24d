#!/usr/bin/env python3
"""
FMCW Waveform Utilities
삼각파 처프 FMCW LiDAR의 비트 주파수 ↔ 거리/속도 변환 함수 모음
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

from scipy import constants

logger = logging.getLogger(__name__)

# 해상도 0.025 m, 0.031 m/s 와 맞추기 위한 반올림 광속
LIGHT_SPEED_NOMINAL = 3.0e8
LIGHT_SPEED_EXACT = constants.c

DEFAULT_WAVELENGTH = 1550e-9


class NegativeBeatError(ValueError):
    """도플러 편이가 거리 비트보다 커서 비트 주파수가 음수가 되는 경우"""


@dataclass(frozen=True)
class WaveformParams:
    """
    삼각파 처프 파라미터

    Parameters:
        period_T: 변조 주기 T [s]
        bandwidth_B: 변조 대역폭 B [Hz] (8~14 GHz 스윕이면 6 GHz)
        center_frequency_f: 광 반송파 중심 주파수 f [Hz] (None 이면 light_speed_c / 1550 nm)
        initial_frequency_f0: 원 신호의 시작 주파수 f₀ [Hz] (기록용, 계산에 쓰지 않음)
        light_speed_c: 광속 c [m/s]

    wavelength_lambda 는 c/f 로 계산되어 저장된다.
    """
    period_T: float = 50e-6
    bandwidth_B: float = 6e9
    center_frequency_f: Optional[float] = None
    initial_frequency_f0: float = 8e9
    light_speed_c: float = LIGHT_SPEED_NOMINAL
    wavelength_lambda: float = field(init=False)

    def __post_init__(self):
        if self.center_frequency_f is None and self.light_speed_c > 0:
            object.__setattr__(self, 'center_frequency_f', self.light_speed_c / DEFAULT_WAVELENGTH)
        for name in ('period_T', 'bandwidth_B', 'light_speed_c', 'center_frequency_f'):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name}는 양수여야 합니다: {value}")
        object.__setattr__(self, 'wavelength_lambda', self.light_speed_c / self.center_frequency_f)

    @classmethod
    def from_wavelength(
        cls,
        wavelength: float = DEFAULT_WAVELENGTH,
        period_T: float = 50e-6,
        bandwidth_B: float = 6e9,
        initial_frequency_f0: float = 8e9,
        light_speed_c: float = LIGHT_SPEED_NOMINAL
    ) -> 'WaveformParams':
        """
        파장으로부터 파라미터 생성

        Example:
            >>> params = WaveformParams.from_wavelength(1550e-9, light_speed_c=LIGHT_SPEED_EXACT)
        """
        if not wavelength > 0:
            raise ValueError(f"wavelength는 양수여야 합니다: {wavelength}")
        return cls(
            period_T=period_T,
            bandwidth_B=bandwidth_B,
            center_frequency_f=light_speed_c / wavelength,
            initial_frequency_f0=initial_frequency_f0,
            light_speed_c=light_speed_c
        )

    def to_dict(self) -> dict:
        return {
            'period_T': self.period_T,
            'bandwidth_B': self.bandwidth_B,
            'wavelength_lambda': self.wavelength_lambda,
            'initial_frequency_f0': self.initial_frequency_f0,
            'light_speed_c': self.light_speed_c
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'WaveformParams':
        defaults = cls()
        return cls.from_wavelength(
            wavelength=data.get('wavelength_lambda', DEFAULT_WAVELENGTH),
            period_T=data.get('period_T', defaults.period_T),
            bandwidth_B=data.get('bandwidth_B', defaults.bandwidth_B),
            initial_frequency_f0=data.get('initial_frequency_f0', defaults.initial_frequency_f0),
            light_speed_c=data.get('light_speed_c', defaults.light_speed_c)
        )


@dataclass(frozen=True)
class BeatPair:
    """상승 구간(f_bu)과 하강 구간(f_bd) 비트 주파수 [Hz]"""
    f_bu: float
    f_bd: float

    def __post_init__(self):
        if self.f_bu < 0 or self.f_bd < 0:
            raise ValueError(f"비트 주파수는 음수일 수 없습니다: f_bu={self.f_bu}, f_bd={self.f_bd}")


def beat_to_range(params: WaveformParams, beats: BeatPair) -> float:
    """
    비트 주파수로부터 거리 계산: D = cT(f_bd + f_bu) / 8B

    Parameters:
        params: 처프 파라미터
        beats: 비트 주파수 쌍

    Returns:
        거리 [m]

    Example:
        >>> beat_to_range(WaveformParams(), BeatPair(160e6, 160e6))
        100.0
    """
    return params.light_speed_c * params.period_T * (beats.f_bd + beats.f_bu) / (8.0 * params.bandwidth_B)


def beat_to_velocity(params: WaveformParams, beats: BeatPair) -> float:
    """
    비트 주파수로부터 도플러(시선) 속도 계산: v = λ(f_bd − f_bu) / 4

    f_bd > f_bu 이면 양수 (멀어지는 방향).

    Returns:
        시선 속도 [m/s]
    """
    return params.wavelength_lambda * (beats.f_bd - beats.f_bu) / 4.0


def range_resolution(params: WaveformParams) -> float:
    """거리 분해능 ΔD = c / 2B [m]"""
    return params.light_speed_c / (2.0 * params.bandwidth_B)


def velocity_resolution(params: WaveformParams) -> float:
    """속도 분해능 Δv = λ / T [m/s]"""
    return params.wavelength_lambda / params.period_T


def range_velocity_to_beats(params: WaveformParams, distance: float, radial_speed: float) -> BeatPair:
    """
    거리/시선 속도를 비트 주파수 쌍으로 역변환

    Parameters:
        params: 처프 파라미터
        distance: 거리 [m], 0 이상
        radial_speed: 시선 속도 [m/s]

    Returns:
        BeatPair

    Raises:
        NegativeBeatError: 도플러 편이가 거리 비트를 넘어서는 경우

    Example:
        >>> range_velocity_to_beats(WaveformParams(), 100.0, 0.0)
        BeatPair(f_bu=160000000.0, f_bd=160000000.0)
    """
    if distance < 0:
        raise ValueError(f"거리는 음수일 수 없습니다: {distance}")

    beat_sum = 8.0 * params.bandwidth_B * distance / (params.light_speed_c * params.period_T)
    beat_diff = 4.0 * radial_speed / params.wavelength_lambda

    f_bd = (beat_sum + beat_diff) / 2.0
    f_bu = (beat_sum - beat_diff) / 2.0
    if f_bu < 0 or f_bd < 0:
        raise NegativeBeatError(
            f"도플러 편이({abs(beat_diff) / 2.0:.3e} Hz)가 거리 비트({beat_sum / 2.0:.3e} Hz)보다 큽니다: "
            f"D={distance} m, v={radial_speed} m/s"
        )
    return BeatPair(f_bu=f_bu, f_bd=f_bd)


def max_point_rate(params: WaveformParams) -> float:
    """레이저 한 채널이 초당 측정할 수 있는 최대 점 수 (처프 주기당 1점)"""
    return 1.0 / params.period_T


def sensor_defaults(params: WaveformParams) -> Tuple[float, float]:
    """
    분해능과 같은 크기의 측정 오차 (거리 σ, 속도 σ)

    Example:
        >>> range_sigma, velocity_sigma = sensor_defaults(WaveformParams())
    """
    range_sigma = range_resolution(params)
    velocity_sigma = velocity_resolution(params)
    logger.debug(f"센서 오차 설정: 거리 {range_sigma:.4f} m, 속도 {velocity_sigma:.4f} m/s")
    return range_sigma, velocity_sigma
