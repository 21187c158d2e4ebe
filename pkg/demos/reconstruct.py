"""Round trip a synthetic floor plan through its own constraints.

A layout is reduced to what the generative models would emit: quantized
(type, width, height) per room plus the horizontal and vertical adjacency
edges. The LP then rebuilds a layout from that description alone. Both
versions are written as SVG next to this script.

    python demos/reconstruct.py [seed]
"""
import sys
from pathlib import Path

import numpy as np

from laygen.layout import validate_layout
from laygen.optimize import ConstraintSet, optimize, perimeter
from laygen.render import save_svg
from laygen.synth import GenConfig, generate_floorplan

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 4
out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

layout = generate_floorplan(GenConfig(min_elements=6, max_elements=8), np.random.default_rng(seed))
print(f"generated {len(layout.elements)} rooms, {len(layout.edges)} edges")

cs = ConstraintSet.from_layout(layout)
print(f"constraints: {len(cs.hadj)} horizontal and {len(cs.vadj)} vertical adjacencies, eps {cs.eps}")

rebuilt = optimize(cs)
print(f"perimeter {perimeter(layout):.2f} -> {perimeter(rebuilt):.2f}")
for k, (a, b) in enumerate(zip(layout.elements, rebuilt.elements)):
    name = layout.types[a.t]
    print(f"  {k:2d} {name:<9} {a.w:5.1f} x {a.h:<5.1f} -> {b.w:5.2f} x {b.h:<5.2f}")
print("violations after rebuild:", [v.kind for v in validate_layout(rebuilt)] or "none")

save_svg(out_dir / "original.svg", layout)
save_svg(out_dir / "rebuilt.svg", rebuilt)
print(f"wrote {out_dir / 'original.svg'} and {out_dir / 'rebuilt.svg'}")
