"""
Storage package initialization
Exports file readers and writers for matrices, traces, images and reports
"""
from .formats import read_matrix, read_trace, write_matrix, write_trace
from .images import load_image, save_image, save_mask, save_rgb
from .reports import read_report, write_report, write_sidecar

__all__ = [
    'read_matrix', 'read_trace', 'write_matrix', 'write_trace',
    'load_image', 'save_image', 'save_mask', 'save_rgb',
    'read_report', 'write_report', 'write_sidecar',
]
