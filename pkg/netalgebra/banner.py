# src/netalgebra/banner.py

import math
from typing import Optional, Sequence, Tuple

from rich.console import Console
from rich.text import Text

RGB = Tuple[int, int, int]

LOGO = r"""
             _          _            _
  _ __   ___| |_  __ _ | | __ _  ___| |__  _ __ __ _
 | '_ \ / _ \ __|/ _` || |/ _` |/ _ \ '_ \| '__/ _` |
 | | | |  __/ |_| (_| || | (_| |  __/ |_) | | | (_| |
 |_| |_|\___|\__|\__,_||_|\__, |\___|_.__/|_|  \__,_|
                          |___/
""".strip("\n").split("\n")

TAGLINE = "Kron-reduced network dynamics, checked against a full branch-state model."

PALETTES: Sequence[Sequence[RGB]] = (
    ((0x2E, 0x7B, 0xEA), (0x6C, 0x5B, 0xD8), (0xB6, 0x6D, 0xB9), (0xFF, 0xB6, 0xC1)),
    ((0x33, 0xE0, 0xA1), (0x19, 0xB6, 0xD8), (0x15, 0x90, 0xD3), (0x0D, 0x75, 0xB4)),
    ((0x3A, 0x0C, 0xF0), (0x98, 0x2D, 0xFF), (0xF2, 0x36, 0xA3), (0xFF, 0x73, 0x3F)),
)


def lerp(a: float, b: float, t: float) -> float:
    return a + (b - a) * t


def blend(c1: RGB, c2: RGB, t: float) -> str:
    # gamma + slight wave shaping
    t = t**1.47
    t = 0.82 * t + 0.08 * math.sin(3.2 * t)
    r = int(lerp(c1[0], c2[0], t))
    g = int(lerp(c1[1], c2[1], t))
    b = int(lerp(c1[2], c2[2], t))
    return f"#{r:02x}{g:02x}{b:02x}"


def gradient_line(line: str, row: int, height: int, palette: Sequence[RGB]) -> Text:
    text = Text()
    width = max(len(line), 1)
    for j, ch in enumerate(line):
        t = (row * 0.72 + j * 0.44) / (height * 0.72 + width * 0.44)
        seg = t * (len(palette) - 1)
        idx = min(int(seg), len(palette) - 2)
        text.append(ch, style=blend(palette[idx], palette[idx + 1], seg - idx))
    return text


def print_logo(console: Optional[Console] = None, palette: int = 0) -> None:
    """Print the gradient logo; goes to stderr so stdout stays machine-readable."""
    console = console or Console(stderr=True)
    colors = PALETTES[palette % len(PALETTES)]
    for i, line in enumerate(LOGO):
        console.print(gradient_line(line, i, len(LOGO), colors))
    console.print(f"[dim]{TAGLINE}[/dim]\n")
