"""
Services package initialization
Exports the shared domain types and the error base class
"""
from .domain import GrayImage, MeasurementModel, SamplingPlan, VoltageTrace
from .errors import SpiError

__all__ = ['GrayImage', 'MeasurementModel', 'SamplingPlan', 'VoltageTrace', 'SpiError']
