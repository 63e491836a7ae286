# SPDX-License-Identifier: EUPL-1.2
#
# SPDX-FileCopyrightText: © 2025-present Jürgen Mülbert

"""PartHash reports: evaluation, training loss and benchmark artefacts."""
