#
# SPDX-License-Identifier: EUPL-1.2
#
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""
PartHash CLI Module.

CLI Commands:

    - `synth`: Writes a synthetic Market-style dataset directory.
    - `train`: Trains a part bank and writes its checkpoints and loss history.
    - `encode`: Encodes the query and gallery sets into code files.
    - `eval`: Scores code files with CMC and mAP (single or pooled queries).
    - `bench`: Times Hamming retrieval against a float Euclidean baseline.

Dependencies:

    - `typer`: For the command-line interface (CLI).
    - `rich`: For the console tables and error lines.
    - `parthash.core`: For the numeric pipeline.
    - `parthash.config`: For settings, logging and run configurations.
    - `parthash.reports.report_manager`: For the report files.
"""
