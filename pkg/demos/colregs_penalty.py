"""How the dynamic-obstacle penalty weighs port against starboard.

First the raw penalty for a target seen dead ahead, just to port and just to
starboard, across a range of approach speeds. Then a scripted head-on run
where the own ship swerves one way or the other and we add up the reward.
"""
import math

import numpy as np

from shipcolav.dynamics import wrap_angle
from shipcolav.env import EnvConfig, VesselEnv, head_on_scenario
from shipcolav.rewards import RewardConfig, dynamic_penalty, lambda_i

cfg = RewardConfig()
DEG = math.pi / 180

print("penalty at 200 m for a target 10 deg off the bow")
print("v_y [m/s]   starboard    port")
for vy in (0.0, 0.5, 0.667, 1.0, 2.0):
    stb = dynamic_penalty(200.0, 10 * DEG, vy, cfg)
    port = dynamic_penalty(200.0, -10 * DEG, vy, cfg)
    print(f"{vy:>8.3f}   {float(stb):>9.4f}  {float(port):>7.4f}")

print("\ntrade-off weight lambda: approaching vs receding")
for x in (0.0, 500.0, 1000.0, 1500.0):
    print(f"  x={x:>6.0f} m  approaching {float(lambda_i(x, 1.0, cfg)):.3f}  receding {float(lambda_i(x, -1.0, cfg)):.3f}")


def scripted(theta_deg, sign, target_speed):
    env = VesselEnv(head_on_scenario(theta_deg, target_speed=target_speed, own_speed=2.0, dt=0.5),
                    EnvConfig(dt=0.5, delta_la=30.0))
    env.reset()
    total = 0.0
    for k in range(400):
        t = k * 0.5
        psi_d = sign * 35 * DEG if 20.0 <= t < 80.0 else 0.0
        s = env.state
        yaw = float(np.clip(2.0 * wrap_angle(psi_d - s.psi) - 2.0 * s.r, -1.0, 1.0))
        res = env.step((1.0, yaw))
        total += res.reward
        if res.done:
            break
    return total, res.cause


print("\nscripted head-on encounter, summed reward")
for v_t in (1.0, 0.5):
    for th in (-5.0, 0.0, 5.0):
        stb, cs = scripted(th, +1, v_t)
        port, cp = scripted(th, -1, v_t)
        print(f"  target {v_t} m/s, offset {th:+.0f} deg: starboard {stb:9.1f} ({cs})  port {port:9.1f} ({cp})")

# With these weights a fast-approaching target on the port side costs more
# than one on starboard, so turning to starboard is not always the cheaper
# manoeuvre when the closing speed is high.
