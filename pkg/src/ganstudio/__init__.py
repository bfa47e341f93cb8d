"""ganstudio: feature-space surgery for a deterministic style-based generator.

The generator exposes capture/injection hooks at every synthesis layer;
everything else builds on them: spatial padding and resizing of intermediate
features, alpha-mask feature interpolation within and across generators,
shift-blend recomposition of a single image, constrained panorama knitting,
Gaussian-prior inversion in coefficient space, frozen-layer finetuning, and
pose-aligned attribute transfer. A FastAPI job service and a CLI expose the
pipelines; see README.md.
"""

from .blending import (AlphaMask, BlendSpec, ShiftSpec, interpolate_features,
                       make_box_mask, make_linear_mask,
                       render_cross_generator_blend, render_two_image_blend,
                       shift_blend)
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import (CheckpointError, CheckpointIntegrityError, ConfigurationError,
                     DomainError, InjectionError, InversionDiverged, KnittingError,
                     StudioError)
from .generator import (FeatureMap, Generator, GeneratorConfig, HookSet,
                        StyleCoeffs, StyleStack, expand_to_stack, init_generator,
                        swap_weights)
from .inversion import (InversionConfig, InversionResult, invert, mse_loss,
                        pyramid_loss)
from .latents import (SigmaGaussian, fit_sigma_gaussian, gaussian_prior_loss,
                      pose_align, smooth_latents)
from .panorama import (PanoramaPlan, SpanPlan, build_span, default_panorama_plan,
                       generate_panorama, knit_panorama, wide_render)
from .spatial import PadSpec, ResizeSpec, pad_features, resize_features
from .transfer import (FreezeSpec, RecipeStep, TransferRequest,
                       continuous_translation_sweep, finetune_frozen,
                       single_image_variations, transfer_attributes)

__version__ = "0.1.0"
