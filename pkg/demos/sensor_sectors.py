"""Walk through the rangefinder suite: rays, sector layout and pooling.

A vessel at the origin heading north sees a round rock to starboard and a
small ship coming down from ahead. We print the sector layout, the raw ray
distances that hit something, and what each pooling rule makes of them.
"""
import numpy as np

from shipcolav.dynamics import VesselState
from shipcolav.sensing import SensorConfig, circle, sense, vessel_hull

cfg = SensorConfig()
widths = np.bincount(cfg.sectors, minlength=cfg.n_sectors)
print("rays per sector (stern to bow to stern):", widths.tolist())
print("sector centres [deg]:", np.round(np.degrees(cfg.sector_centers), 1).tolist())

pose = VesselState(0.0, 0.0, 0.0)
rock = circle("rock", (120.0, 60.0), 25.0)
ship = vessel_hull("ship", (400.0, -10.0), np.pi, 40.0, 10.0, velocity=(-3.0, 0.0))
frame = sense(pose, [rock, ship], cfg, width=10.0)

hits = frame.hit >= 0
print(f"\n{hits.sum()} of {cfg.n_sensors} rays hit something")
for name, idx in (("rock", 0), ("ship", 1)):
    sel = frame.hit == idx
    if sel.any():
        ang = np.degrees(frame.angles[sel])
        print(f"  {name}: rays {ang.min():+.0f}..{ang.max():+.0f} deg, nearest {frame.distances[sel].min():.1f} m")

print("\nsector  feasibility  min      closeness  v_x    v_y")
by_min = sense(pose, [rock, ship], SensorConfig(pooling="min"), 10.0).pooled
for k in range(cfg.n_sectors):
    vx, vy = frame.sector_velocity[k]
    print(f"{k:>6}  {frame.pooled[k]:>11.1f}  {by_min[k]:>7.1f}  {frame.closeness[k]:>9.3f}  {vx:+.2f}  {vy:+.2f}")

# Feasibility pooling reports how far the vessel could travel straight
# through a sector, so a thin gap it cannot fit through does not count.
