# Per-channel standardization and flattening stages.
import numpy as np

from app.core.errors import ShapeMismatchError


def channel_stats(images):
    """Mean and std of each channel over a batch of N x H x W x C images."""
    images = np.asarray(images)
    if images.ndim != 4:
        raise ShapeMismatchError(f"expected N x H x W x C images, got shape {images.shape}")
    mean = images.mean(axis=(0, 1, 2), dtype=np.float64)
    std = images.std(axis=(0, 1, 2), dtype=np.float64)
    std[std == 0] = 1.0
    return mean.astype(np.float32), std.astype(np.float32)


def channel_standardizer(mean, std):
    mean = np.asarray(mean, dtype=np.float32)
    std = np.asarray(std, dtype=np.float32)

    def standardize_channels(images):
        if images.shape[-1] != mean.size:
            raise ShapeMismatchError(f"{images.shape[-1]} channels, stats for {mean.size}")
        return ((images - mean) / std).astype(np.float32)

    return standardize_channels


def flatten(images):
    """N x H x W x C -> N x (H*W*C), height-major then width then channel."""
    images = np.asarray(images)
    return images.reshape(len(images), -1)
