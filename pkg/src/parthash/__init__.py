# SPDX-License-Identifier: EUPL-1.2
#
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert
#
"""
PartHash: part-based triplet deep hashing for person re-identification.

Trains one hash network per horizontal image strip with a relaxed triplet
loss, concatenates the per-part binary codes and retrieves with packed
Hamming distances ranked by counting sort.
"""
