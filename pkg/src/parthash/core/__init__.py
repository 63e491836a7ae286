# SPDX-License-Identifier: EUPL-1.2
#
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert
#
"""
PartHash core.

The numeric pipeline, bottom-up:

- `netcore`: the hash network (conv / fully connected / relu / max-pool
  layers and a sigmoid hash head), backpropagation, SGD and checkpoints.
- `triplet`: triplet sampling, the relaxed triplet hinge loss and the
  training loop.
- `parts`: horizontal partition schemes, per-part banks of networks and
  code concatenation.
- `hamcode`: packed binary codes, Hamming distance, counting-sort ranking,
  code files and the search benchmark.
- `evalkit`: CMC and mAP under the cross-camera protocol, multiple-query
  pooling.
- `dataio`: Market-style directories, P6 rasters, bilinear resizing and the
  synthetic pedestrian generator.
"""
