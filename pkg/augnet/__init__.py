"""augnet - Attributed network embedding through augmented node/attribute-category graphs."""

__version__ = "0.1.0"
