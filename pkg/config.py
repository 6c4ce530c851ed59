"""
Configuration file for spi-kit
Loads environment variables and sets application constants
"""
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


class Config:
    """Application configuration class"""

    # Run settings
    SEED = int(os.getenv('SPI_SEED', '0'))
    OUTPUT_DIR = os.getenv('SPI_OUTPUT_DIR', 'output')
    LOG_LEVEL = os.getenv('SPI_LOG_LEVEL', 'INFO').upper()

    # Report settings
    REPORT_SCHEMA = 'spi-kit-report/1'

    # Acquisition hardware
    DMD_FRAME_RATE_HZ = float(os.getenv('DMD_FRAME_RATE_HZ', '22727'))
    ACQUISITION_OVERHEAD = float(os.getenv('ACQUISITION_OVERHEAD', '1.0'))
    ADC_BITS = int(os.getenv('ADC_BITS', '14'))
    ADC_HEADROOM = 1.05         # full scale = headroom x largest ideal sample

    # Named random sub-streams derived from the run seed
    RNG_STREAMS = {
        'noise': 1,
        'fixtures': 2,
    }

    # Image quality metrics
    PSNR_CAP_DB = 99.0
    SSIM_WINDOW = 11
    SSIM_SIGMA = 1.5
    SSIM_K1 = 0.01
    SSIM_K2 = 0.03

    # Edge extraction
    OTSU_BINS = 256
    OTSU_SCALE = 0.7

    # Detector aperture optics (micrometres / millimetres)
    DEFAULT_OPTICS = {
        'detector_side_um': 170.0,
        'wavelength_um': 0.565,     # green LED
        'focal_mm': 4.0,            # 50x objective modelled as a thin lens
        'object_extent_mm': 4.8,
    }
    CONTRAST_CRITERION = 0.1        # Michelson contrast for a resolved 3-bar element

    # Multispectral fusion
    LED_WAVELENGTHS_NM = (780.0, 565.0, 450.0)
    LED_FWHM_NM = float(os.getenv('LED_FWHM_NM', '25'))
    GAMMA = float(os.getenv('SPI_GAMMA', '2.2'))

    # Fixtures
    FIXTURE_SIZE = 768
