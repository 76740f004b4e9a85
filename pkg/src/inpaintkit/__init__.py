"""Single-image inpainting toolkit.

Library layout:

- ``image``       raster type, PNG I/O, resizing, channel composition
- ``masking``     occlusion-mask construction and mask file I/O
- ``variational`` total-variation and fluid-diffusion inpainting solvers
- ``patchmatch``  randomized nearest-neighbor-field patch synthesis
- ``neural``      from-scratch differentiable hourglass network and the
                  per-image training loops built on it
- ``metrics``     SSIM / NRMSE / MSE / PSNR and report assembly
- ``methods``     uniform method registry shared by the CLI and service
- ``cli``         command-line front end
- ``service``     HTTP facade with asynchronous jobs and progress streaming
"""

from inpaintkit.image import Image
from inpaintkit.masking import Mask

__all__ = ["Image", "Mask"]
__version__ = "0.1.0"
