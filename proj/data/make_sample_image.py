# Copyright 2026 The NMFC Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates data/sample.pgm, a 192x256 synthetic grayscale scene.

The scene is a sky gradient, rolling hills, a sun disk and soft shading:
smooth, mostly low-rank structure with a few sharp edges.
"""
import numpy as np

scale = 2
h, w = 96 * scale, 128 * scale
y, x = np.mgrid[0:h, 0:w].astype(float) / scale
img = 0.55 + 0.35 * (1 - y / 96)                          # sky gradient
hill = 60 + 10 * np.sin(x / 17.0) + 6 * np.cos(x / 7.0)  # horizon line
img = np.where(y > hill, 0.25 + 0.2 * np.sin(x / 11.0) * np.exp(-(y - hill) / 40), img)
sun = (x - 95) ** 2 + (y - 22) ** 2 < 11 ** 2
img[sun] = 0.95
img += 0.08 * np.exp(-((x - 30) ** 2 + (y - 30) ** 2) / 300.0)
img = np.clip(img, 0, 1)
pix = np.round(img * 255).astype(np.uint8)
with open("sample.pgm", "wb") as f:
    f.write(b"P5\n%d %d\n255\n" % (w, h))
    f.write(pix.tobytes())
