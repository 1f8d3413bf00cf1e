"""confab: conformal antenna fabrication pipeline.

Design a planar antenna, project it onto a curved substrate, plan planar and
multi-axis deposition, emit and verify 5-axis G-code, and predict the patch
S11 response for comparison against measurements.
"""

__version__ = "0.1.0"
