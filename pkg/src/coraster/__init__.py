"""coraster: real-time collaborative raster image editing.

A session server sequences and broadcasts document changes first-come,
first-serve; headless and browser clients mirror the document through a
non-optimistic synchronization loop; a deterministic CPU renderer turns
documents into pixels; a discrete-event simulator proves multi-client
convergence.
"""

__version__ = "0.1.0"
