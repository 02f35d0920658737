"""Imports every model family so each registers its codec."""
from app import bonsai, directconv, fastgrnn, protonn  # noqa: F401

FAMILY_PACKAGES = {
    "directconv": directconv,
    "protonn": protonn,
    "bonsai": bonsai,
    "fastgrnn": fastgrnn,
}
