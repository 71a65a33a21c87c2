"""
Guiding a root trajectory toward waypoints
==========================================

A straight 40-frame clip is nudged onto a parallel line half a metre away by a
few gradient steps on keyframe, heading and continuity losses.
"""

import numpy as np

from vgagent.motion import (
    GuidanceConfig, guidance_loss, initial_trajectory, keyframes, make_waypoints, optimize_trajectory,
    reference_headings,
)

cfg = GuidanceConfig()
target = make_waypoints((0.0, 0.5), (6.0, 0.5), 40)
phi = reference_headings(target)
clip = initial_trajectory(make_waypoints((0.0, 0.0), (6.0, 0.0), 40), heading=0.0)

history = []
out = optimize_trajectory(clip, target, phi, target[0], cfg, history=history)
print("loss per iteration:", np.round(history, 4))

k = keyframes(40, cfg.keyframe_stride)
err = np.linalg.norm(out.translation[k, :2] - target[k], axis=1)
print(f"keyframes {k.tolist()}")
print(f"max keyframe error {err.max():.2e} m after {cfg.n_iter} steps")
print(f"final loss {guidance_loss(out, target, phi, target[0], cfg)[0]:.2e}")
