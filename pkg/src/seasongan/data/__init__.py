"""Image ingestion, split protocol, synthetic paired domains and edge extraction."""

from .canny import canny_edges, canny_mask, to_gray
from .io import decode_image, list_images, load_image_dir, resize_bilinear, save_image, to_uint8
from .records import ImageRecord, frame_indices, stack_pixels
from .split import DatasetSplit, batch_iterator, epoch_order, split_bounds, split_dataset
from .synth import domain_palettes, synthesize_paired_domains

__all__ = [
    "DatasetSplit", "ImageRecord", "batch_iterator", "canny_edges", "canny_mask", "decode_image",
    "domain_palettes", "epoch_order", "frame_indices", "list_images", "load_image_dir",
    "resize_bilinear", "save_image", "split_bounds", "split_dataset", "stack_pixels",
    "synthesize_paired_domains", "to_gray", "to_uint8",
]
