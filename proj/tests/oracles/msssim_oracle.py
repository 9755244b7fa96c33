# Copyright 2026 The OBIC Authors
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
"""Reference MS-SSIM values for the fixture pairs used by the C++ tests.

Uses TensorFlow's tf.image.ssim_multiscale, an implementation independent of
this repository. The pair formula must stay in sync with fixture_pair() in
tests/common/fixtures.hpp. Run once; paste the printed values into the tests.
"""
import numpy as np
import tensorflow as tf

WEIGHTS = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333]


def fixture_pair(size):
    c, y, x = np.meshgrid(np.arange(3), np.arange(size), np.arange(size), indexing="ij")
    a = 0.5 + 0.3 * np.sin(0.37 * x + 0.23 * y + c) + 0.15 * np.cos(0.05 * x * y / 3.0 + 0.5 * c)
    b = a + 0.12 * np.sin(1.3 * x - 0.7 * y + 2.0 * c) + 0.05 * np.cos(0.9 * y + 0.4 * x * c)
    return np.clip(a, 0.0, 1.0), np.clip(b, 0.0, 1.0)


def reference(a, b):
    size = min(a.shape[1], a.shape[2])
    weights = WEIGHTS if size >= 176 else [w / sum(WEIGHTS[:3]) for w in WEIGHTS[:3]]
    ta = tf.constant(np.transpose(a, (1, 2, 0))[None], dtype=tf.float64)
    tb = tf.constant(np.transpose(b, (1, 2, 0))[None], dtype=tf.float64)
    v = tf.image.ssim_multiscale(ta, tb, max_val=1.0, power_factors=weights,
                                 filter_size=11, filter_sigma=1.5, k1=0.01, k2=0.03)
    return float(v.numpy()[0])


if __name__ == "__main__":
    for size in (64, 192):
        a, b = fixture_pair(size)
        print(f"size {size}: {reference(a, b):.10f}")
