"""Streaming proactive-agent runtime and evaluation harness.

The runtime watches a 1 FPS stream, routes user utterances between reactive
answers, standing monitoring tasks, and task management, and stabilizes
autonomous triggering with a dual-threshold gate over embedding-similarity
changes. The harness replays scripted benchmark instances against it and
scores trigger timing, answer quality, and multi-turn coordination.
"""

__version__ = "0.1.0"

from ._kernels import IMPLEMENTATION as KERNEL_IMPLEMENTATION  # noqa: F401
