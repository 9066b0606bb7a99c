"""Pinwheel graph on a 600x600 window, embedded into the grid; binned stretch."""
from gridmetric.grid import Rect
from gridmetric.pinwheel import (audit_embedding, build_pinwheel_graph, embed_into_grid,
                                 measure_stretch, stretch_pairs)

win = Rect(0, 0, 599, 599)
g = build_pinwheel_graph(win, 25)
print(f"{len(g.triangles)} triangles, {len(g.vertices)} vertices, {len(g.edges)} edges")

emb = embed_into_grid(g)
audit = audit_embedding(emb)
print("audit ok:", audit["ok"], "| max subpath error", round(audit["max_subpath_error"], 3))

rep = measure_stretch(emb.weights, stretch_pairs(win, sources=6, per_source=25, seed=2))
print("d_lo      d_hi      max      mean     count")
for lo, hi, mx, mean, cnt in rep.table():
    print(f"{lo:8.1f}  {hi:8.1f}  {mx:7.3f}  {mean:7.3f}  {cnt}")
print("bin inversions:", rep.inversions())
